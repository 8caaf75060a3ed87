#include "limitset/report_json.hpp"

#include <cmath>

namespace limitset {

namespace {

// Non-finite numbers have no JSON literal; they are written as null.
json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json verdict(Verdict v) { return to_string(v); }

json violation_json(const std::optional<Violation>& v) {
    if (!v) return nullptr;
    return json{{"initial", to_json(v->initial)},
                {"time", num(v->time)},
                {"state", to_json(v->state)},
                {"excess", num(v->excess)}};
}

const json& require(const json& j, const char* key, const std::string& path) {
    if (!j.is_object() || !j.contains(key)) throw SpecError(path + "." + key, "missing required field");
    return j.at(key);
}

double number_at(const json& j, const std::string& path) {
    if (!j.is_number()) throw SpecError(path, "expected a number");
    return j.get<double>();
}

Expression expression_at(const json& j, int dimension, const std::string& path) {
    if (!j.is_string()) throw SpecError(path, "expected an expression string");
    try {
        return parse(j.get<std::string>(), dimension);
    } catch (const ParseError& e) {
        throw SpecError(path, e.what());
    }
}

State state_at(const json& j, int dimension, const std::string& path) {
    if (!j.is_array() || static_cast<int>(j.size()) != dimension) {
        throw SpecError(path, "expected an array of " + std::to_string(dimension) + " numbers");
    }
    State x;
    for (std::size_t i = 0; i < j.size(); ++i) x.push_back(number_at(j[i], path + "[" + std::to_string(i) + "]"));
    return x;
}

}  // namespace

SpecError::SpecError(const std::string& path, const std::string& message)
    : std::runtime_error(path + ": " + message), path_(path) {}

json to_json(const State& x) {
    json arr = json::array();
    for (double v : x) arr.push_back(num(v));
    return arr;
}

json to_json(const std::vector<State>& xs) {
    json arr = json::array();
    for (const auto& x : xs) arr.push_back(to_json(x));
    return arr;
}

json to_json(const Box& box) {
    json arr = json::array();
    for (const auto& iv : box) arr.push_back(json::array({num(iv.lo), num(iv.hi)}));
    return arr;
}

json to_json(const Region& region) {
    json j{{"kind", to_string(region.kind())}};
    switch (region.kind()) {
    case RegionKind::zero_set:
    case RegionKind::sublevel:
        j["g"] = print(region.g());
        j["tol"] = region.tol();
        break;
    case RegionKind::point_set:
        j["points"] = to_json(region.points());
        j["tol"] = region.tol();
        break;
    case RegionKind::whole_space:
        break;
    }
    if (region.has_box()) j["box"] = to_json(region.box());
    if (region.clipped()) j["clip"] = true;
    return j;
}

json to_json(const IntegratorConfig& cfg) {
    return json{{"rel_tol", cfg.rel_tol},         {"abs_tol", cfg.abs_tol},   {"initial_step", cfg.initial_step},
                {"max_step", cfg.max_step},       {"min_step", cfg.min_step}, {"t_end", cfg.t_end},
                {"blowup_norm", cfg.blowup_norm}, {"max_steps", cfg.max_steps}};
}

json to_json(const OmegaParams& p) {
    return json{{"tail_fraction", p.tail_fraction}, {"sample_count", p.sample_count}, {"cluster_eps", p.cluster_eps}};
}

json to_json(const OmegaEstimate& est) {
    return json{{"representatives", to_json(est.representatives)},
                {"radii", to_json(State(est.radii))},
                {"cluster_sizes", est.cluster_sizes},
                {"window", json::array({num(est.window_start), num(est.window_end)})},
                {"settled", est.settled},
                {"gap", num(est.gap)},
                {"parameters", to_json(est.params)}};
}

json to_json(const InvarianceReport& rep) {
    json j{{"mode", rep.mode},
           {"verdict", verdict(rep.verdict)},
           {"failure_kind", rep.failure_kind},
           {"counts",
            {{"samples", rep.samples_tested},
             {"violations", rep.violations},
             {"blowups", rep.blowups},
             {"integration_failures", rep.integration_failures}}},
           {rep.mode == "negative" ? "first_entry" : "worst_violator", violation_json(rep.worst)}};
    json params{{"region_tol", num(rep.region_tol)},
                {rep.mode == "negative" ? "entry_tol" : "escape_tol", num(rep.tolerance)},
                {"horizon", num(rep.horizon)},
                {"sample_count", rep.sample_count},
                {"resolution", rep.resolution},
                {"probe_count", rep.probe_count},
                {"box", to_json(rep.box)}};
    if (rep.mode == "negative") params["margin"] = num(rep.margin);
    j["parameters"] = params;
    j["note"] = "verdict is relative to the sampling box and the finite horizon";
    return j;
}

json to_json(const SampleCloud& cloud) {
    return json{{"count", cloud.points.size()},
                {"resolution", cloud.resolution},
                {"grid_nodes", cloud.grid_nodes},
                {"source", to_string(cloud.source)},
                {"points", to_json(cloud.points)}};
}

json to_json(const Theorem1Report& rep) {
    const auto& c1 = rep.condition_i;
    json per_x0 = json::array();
    for (const auto& inc : rep.per_x0) {
        per_x0.push_back(json{{"x0", to_json(inc.x0)},
                              {"verdict", verdict(inc.verdict)},
                              {"termination", inc.termination},
                              {"representatives", to_json(inc.representatives)},
                              {"settled", inc.settled},
                              {"gap", num(inc.gap)},
                              {"max_dist_to_m_hat", num(inc.max_dist_to_m_hat)}});
    }
    const auto& p = rep.params;
    return json{
        {"report", "theorem1"},
        {"overall", verdict(rep.overall)},
        {"lie_derivative", rep.lie_expression},
        {"omega_samples", rep.omega_samples},
        {"omega_positive_invariance", to_json(rep.omega_invariance)},
        {"condition_i",
         {{"verdict", verdict(c1.verdict)},
          {"delta", num(c1.delta)},
          {"samples_total", c1.samples_total},
          {"samples_considered", c1.samples_considered},
          {"min_abs_lie", num(c1.min_abs_lie)},
          {"scale", num(c1.scale)},
          {"normalized_min", num(c1.normalized_min)},
          {"argmin", c1.argmin ? to_json(*c1.argmin) : json(nullptr)}}},
        {"condition_ii", to_json(rep.condition_ii)},
        {"m_hat",
         {{"container_size", rep.container_size},
          {"count", rep.m_hat.size()},
          {"points", to_json(rep.m_hat)},
          {"note", "box-relative, finite-horizon estimate"}}},
        {"conclusion",
         {{"verdict", verdict(rep.conclusion)}, {"max_dist_to_m_hat", num(rep.max_dist_to_m_hat)}, {"per_x0", per_x0}}},
        {"parameters",
         {{"resolution", p.resolution},
          {"delta", num(c1.delta)},
          {"epsilon_margin", p.epsilon_margin},
          {"incl_tol", p.incl_tol},
          {"x0_count", p.x0_count},
          {"integrator", to_json(p.integrator)},
          {"omega", to_json(p.omega)},
          {"omega_invariance_horizon", p.omega_invariance.horizon},
          {"a_invariance_horizon", p.a_invariance.horizon},
          {"m_hat_resolution", p.m_hat.resolution},
          {"m_hat_horizon", p.m_hat.horizon}}},
    };
}

json to_json(const Theorem2Report& rep) {
    json points = json::array();
    for (const auto& pt : rep.points) {
        points.push_back(json{{"x0", to_json(pt.x0)},
                              {"verdict", verdict(pt.verdict)},
                              {"bounded", verdict(pt.bounded)},
                              {"termination", pt.termination},
                              {"max_norm", num(pt.max_norm)},
                              {"representatives", to_json(pt.representatives)},
                              {"settled", pt.settled},
                              {"gap", num(pt.gap)},
                              {"min_abs_lie", num(pt.min_abs_lie)},
                              {"scale", num(pt.scale)},
                              {"normalized_min", num(pt.normalized_min)},
                              {"distance_to_s", pt.distance_to_s ? num(*pt.distance_to_s) : json(nullptr)},
                              {"max_dist_to_m_hat", pt.max_dist_to_m_hat ? num(*pt.max_dist_to_m_hat) : json(nullptr)},
                              {"note", pt.note}});
    }
    json reach = nullptr;
    if (rep.m_hat_checked) {
        json flags = json::array();
        for (char c : rep.reaches_s) flags.push_back(c != 0);
        reach = json{{"grid", to_json(rep.reach_grid)},
                     {"reaches_s", flags},
                     {"m_hat", to_json(rep.m_hat)},
                     {"m_hat_inclusion", verdict(rep.m_hat_inclusion)},
                     {"note", "box-relative, finite-horizon estimate"}};
    }
    const auto& p = rep.params;
    return json{{"report", "theorem2"},
                {"overall", verdict(rep.overall)},
                {"s", {{"lie_derivative", rep.lie_expression}, {"description", "{x : grad V(x) . f(x) = 0}"}}},
                {"points", points},
                {"reachability", reach},
                {"parameters",
                 {{"s_tol", p.s_tol},
                  {"bound", p.bound},
                  {"box", to_json(p.box)},
                  {"probe_count", p.probe_count},
                  {"incl_tol", p.incl_tol},
                  {"integrator", to_json(p.integrator)},
                  {"omega", to_json(p.omega)}}}};
}

json to_json(const LieSignal& sig) {
    json samples = json::array();
    for (const auto& [t, p] : sig.samples) samples.push_back(json::array({num(t), num(p)}));
    return json{{"threshold", sig.threshold},
                {"sign_changes", sig.sign_changes},
                {"min_abs", num(sig.min_abs)},
                {"zero_crossing", sig.has_zero_crossing},
                {"samples", samples}};
}

json to_json(const SweepSummary& s) {
    json failures = json::array();
    for (const auto& f : s.failures) failures.push_back(json{{"x0", to_json(f.x0)}, {"reason", f.reason}});
    return json{{"report", "weak_attractor_sweep"},
                {"total", s.total},
                {"evaluated", s.evaluated},
                {"passed", s.passed},
                {"blowups", s.blowups},
                {"fraction", num(s.fraction)},
                {"worst_min_abs_lie", num(s.worst_min_abs_lie)},
                {"worst_normalized", num(s.worst_normalized)},
                {"failures", failures}};
}

Box box_from_json(const json& j, int dimension, const std::string& path) {
    if (!j.is_array() || static_cast<int>(j.size()) != dimension) {
        throw SpecError(path, "expected " + std::to_string(dimension) + " [lo, hi] intervals");
    }
    Box box;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string p = path + "[" + std::to_string(i) + "]";
        if (!j[i].is_array() || j[i].size() != 2) throw SpecError(p, "expected [lo, hi]");
        Interval iv{number_at(j[i][0], p + "[0]"), number_at(j[i][1], p + "[1]")};
        if (!(iv.lo <= iv.hi)) throw SpecError(p, "lo must not exceed hi");
        box.push_back(iv);
    }
    return box;
}

Region region_from_json(const json& j, int dimension, const std::string& path, const Box& fallback_box) {
    if (!j.is_object()) throw SpecError(path, "expected a region object");
    const json& kind_j = require(j, "kind", path);
    if (!kind_j.is_string()) throw SpecError(path + ".kind", "expected a string");
    const std::string kind = kind_j.get<std::string>();

    double tol = Region::kDefaultTol;
    if (j.contains("tol")) {
        tol = number_at(j.at("tol"), path + ".tol");
        if (!(tol >= 0.0)) throw SpecError(path + ".tol", "must be >= 0");
    }
    Box box = j.contains("box") ? box_from_json(j.at("box"), dimension, path + ".box") : fallback_box;
    bool clip = false;
    if (j.contains("clip")) {
        if (!j.at("clip").is_boolean()) throw SpecError(path + ".clip", "expected a boolean");
        clip = j.at("clip").get<bool>();
    }

    try {
        if (kind == "zero_set" || kind == "sublevel") {
            Expression g = expression_at(require(j, "g", path), dimension, path + ".g");
            if (clip && box.empty()) throw SpecError(path + ".clip", "clipping needs a box");
            return kind == "zero_set" ? Region::zero_set(g, dimension, tol, box, clip)
                                      : Region::sublevel(g, dimension, tol, box, clip);
        }
        if (kind == "point_set") {
            const json& pts = require(j, "points", path);
            if (!pts.is_array() || pts.empty()) throw SpecError(path + ".points", "expected a non-empty array");
            std::vector<State> points;
            for (std::size_t i = 0; i < pts.size(); ++i) {
                points.push_back(state_at(pts[i], dimension, path + ".points[" + std::to_string(i) + "]"));
            }
            return Region::point_set(std::move(points), tol);
        }
        if (kind == "whole_space") return Region::whole_space(dimension, box);
    } catch (const SpecError&) {
        throw;
    } catch (const std::exception& e) {
        throw SpecError(path, e.what());
    }
    throw SpecError(path + ".kind", "unknown region kind '" + kind + "'");
}

IntegratorConfig integrator_from_json(const json& j, IntegratorConfig cfg, const std::string& path) {
    if (!j.is_object()) throw SpecError(path, "expected an object");
    for (const auto& [key, value] : j.items()) {
        const std::string p = path + "." + key;
        if (key == "rel_tol") {
            cfg.rel_tol = number_at(value, p);
        } else if (key == "abs_tol") {
            cfg.abs_tol = number_at(value, p);
        } else if (key == "initial_step") {
            cfg.initial_step = number_at(value, p);
        } else if (key == "max_step") {
            cfg.max_step = number_at(value, p);
        } else if (key == "min_step") {
            cfg.min_step = number_at(value, p);
        } else if (key == "t_end") {
            cfg.t_end = number_at(value, p);
        } else if (key == "blowup_norm") {
            cfg.blowup_norm = number_at(value, p);
        } else if (key == "max_steps") {
            if (!value.is_number_unsigned()) throw SpecError(p, "expected a positive integer");
            cfg.max_steps = value.get<std::size_t>();
        } else {
            throw SpecError(p, "unknown integrator setting");
        }
    }
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw SpecError(path, e.what());
    }
    return cfg;
}

}  // namespace limitset
