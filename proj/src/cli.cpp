#include "limitset/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <optional>
#include <ostream>
#include <sstream>

#include "limitset/certify.hpp"
#include "limitset/invariance.hpp"
#include "limitset/omega.hpp"
#include "limitset/report_json.hpp"
#include "limitset/system_spec.hpp"

namespace limitset::cli {

namespace {

// Bad values inside otherwise well-formed arguments (exit 1).
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    return s.substr(b, s.find_last_not_of(" \t") - b + 1);
}

double to_double(const std::string& text, const std::string& what) {
    const std::string s = trim(text);
    double v = 0.0;
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (s.empty() || ec != std::errc() || ptr != end || !std::isfinite(v)) {
        throw InputError("invalid number '" + text + "' in " + what);
    }
    return v;
}

State parse_state(const std::string& text, int dimension) {
    State x;
    for (const auto& part : split(text, ',')) x.push_back(to_double(part, "--x0"));
    if (static_cast<int>(x.size()) != dimension) {
        throw InputError("--x0 '" + text + "' has " + std::to_string(x.size()) + " components, system dimension is " +
                         std::to_string(dimension));
    }
    return x;
}

std::vector<State> parse_states(const std::vector<std::string>& values, int dimension) {
    std::vector<State> out;
    for (const auto& v : values) {
        for (const auto& part : split(v, ';')) {
            if (!trim(part).empty()) out.push_back(parse_state(part, dimension));
        }
    }
    if (out.empty()) throw InputError("at least one --x0 is required");
    return out;
}

// "lo:hi:n" for every axis, or one such spec per axis separated by commas.
std::pair<Box, std::vector<std::size_t>> parse_grid(const std::string& text, int dimension) {
    auto axes = split(text, ',');
    if (axes.size() == 1) axes.assign(static_cast<std::size_t>(dimension), axes.front());
    if (static_cast<int>(axes.size()) != dimension) throw InputError("--grid needs one lo:hi:n spec per axis");
    Box box;
    std::vector<std::size_t> counts;
    for (const auto& a : axes) {
        const auto parts = split(a, ':');
        if (parts.size() != 3) throw InputError("--grid axis '" + a + "' is not lo:hi:n");
        const double lo = to_double(parts[0], "--grid");
        const double hi = to_double(parts[1], "--grid");
        const double n = to_double(parts[2], "--grid");
        if (!(lo <= hi) || n < 1 || n != std::floor(n)) throw InputError("--grid axis '" + a + "' is invalid");
        box.push_back({lo, hi});
        counts.push_back(static_cast<std::size_t>(n));
    }
    return {box, counts};
}

struct Common {
    std::string system;
    std::optional<double> t_end, rel_tol, abs_tol, max_step, min_step, blowup_norm;
    std::uint64_t seed = 0;
    double jitter = 0.0;

    void add_to(CLI::App* app, bool with_sampling) {
        app->add_option("--system", system, "built-in system name or spec file")->required();
        app->add_option("--t-end", t_end, "integration horizon");
        app->add_option("--rel-tol", rel_tol, "relative error tolerance");
        app->add_option("--abs-tol", abs_tol, "absolute error tolerance");
        app->add_option("--max-step", max_step, "largest step (0 = unbounded)");
        app->add_option("--min-step", min_step, "step underflow threshold");
        app->add_option("--blowup-norm", blowup_norm, "norm treated as finite escape");
        if (with_sampling) {
            app->add_option("--seed", seed, "seed for jittered sampling")->capture_default_str();
            app->add_option("--jitter", jitter, "grid jitter as a fraction of the spacing")->capture_default_str();
        }
    }

    IntegratorConfig integrator(const SystemSpec& spec) const {
        IntegratorConfig cfg = spec.integrator;
        if (t_end) cfg.t_end = *t_end;
        if (rel_tol) cfg.rel_tol = *rel_tol;
        if (abs_tol) cfg.abs_tol = *abs_tol;
        if (max_step) cfg.max_step = *max_step;
        if (min_step) cfg.min_step = *min_step;
        if (blowup_norm) cfg.blowup_norm = *blowup_norm;
        try {
            cfg.validate();
        } catch (const std::invalid_argument& e) {
            throw InputError(e.what());
        }
        return cfg;
    }

    SamplingOptions sampling() const {
        if (!(jitter >= 0.0 && jitter < 1.0)) throw InputError("--jitter must lie in [0, 1)");
        return {jitter, seed};
    }
};

struct OmegaFlags {
    std::optional<double> tail_fraction, cluster_eps;
    std::optional<std::size_t> samples;

    void add_to(CLI::App* app) {
        app->add_option("--tail-fraction", tail_fraction, "fraction of the horizon used as the tail window");
        app->add_option("--omega-samples", samples, "samples drawn from the tail window");
        app->add_option("--cluster-eps", cluster_eps, "clustering radius");
    }

    OmegaParams params() const {
        OmegaParams p;
        if (tail_fraction) p.tail_fraction = *tail_fraction;
        if (samples) p.sample_count = *samples;
        if (cluster_eps) p.cluster_eps = *cluster_eps;
        try {
            p.validate();
        } catch (const std::invalid_argument& e) {
            throw InputError(e.what());
        }
        return p;
    }
};

Expression resolve_v(const SystemSpec& spec, const std::optional<std::string>& override_text) {
    if (override_text) {
        try {
            return parse(*override_text, spec.dimension);
        } catch (const ParseError& e) {
            throw SpecError("--V", e.what());
        }
    }
    if (!spec.v) throw InputError("system '" + spec.name + "' declares no V; pass --V");
    return *spec.v;
}

int verdict_exit(Verdict v) {
    switch (v) {
    case Verdict::pass:
        return ok;
    case Verdict::fail:
        return verdict_fail;
    case Verdict::inconclusive:
        return verdict_inconclusive;
    }
    return verdict_inconclusive;
}

json header(const std::string& command, const SystemSpec& spec) {
    return json{{"command", command}, {"system", spec.name}, {"dimension", spec.dimension}};
}

void merge(json& into, const json& from) {
    for (const auto& [k, v] : from.items()) into[k] = v;
}

// Puts the header keys first.
json with_header(json head, const json& body) {
    merge(head, body);
    return head;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

struct Outcome {
    std::string text;
    int code = ok;
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Omega-limit set estimation and Lyapunov-type certificates for autonomous ODEs", "limitset"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "expanded help");

    Outcome result;
    std::function<Outcome()> action;

    // simulate
    Common sim_common;
    std::string sim_x0;
    bool sim_backward = false;
    auto* sim = app.add_subcommand("simulate", "integrate one trajectory and print it as CSV");
    sim_common.add_to(sim, false);
    sim->add_option("--x0", sim_x0, "initial state, comma separated")->required();
    sim->add_flag("--backward", sim_backward, "integrate the reversed field");
    sim->callback([&] {
        action = [&] {
            const SystemSpec spec = resolve_system(sim_common.system);
            const State x0 = parse_state(sim_x0, spec.dimension);
            const IntegratorConfig cfg = sim_common.integrator(spec);
            Trajectory traj = sim_backward ? integrate_backward(spec.field, x0, cfg) : integrate(spec.field, x0, cfg);
            std::ostringstream csv;
            write_csv(csv, traj);
            if (traj.termination() != Termination::horizon) {
                err << "termination: " << to_string(traj.termination()) << " at t = " << traj.end_time() << "\n";
            }
            return Outcome{csv.str(), ok};
        };
    });

    // omega
    Common om_common;
    OmegaFlags om_flags;
    std::string om_x0;
    auto* om = app.add_subcommand("omega", "estimate the omega-limit set of one initial state");
    om_common.add_to(om, false);
    om_flags.add_to(om);
    om->add_option("--x0", om_x0, "initial state, comma separated")->required();
    om->callback([&] {
        action = [&] {
            const SystemSpec spec = resolve_system(om_common.system);
            const State x0 = parse_state(om_x0, spec.dimension);
            const IntegratorConfig cfg = om_common.integrator(spec);
            const OmegaParams params = om_flags.params();
            Trajectory traj = integrate(spec.field, x0, cfg);
            json body{{"x0", to_json(x0)},
                      {"termination", to_string(traj.termination())},
                      {"end_time", traj.end_time()}};
            int code = ok;
            if (traj.termination() == Termination::horizon) {
                OmegaEstimate est = estimate_omega(traj, params);
                merge(body, to_json(est));
                if (!est.settled) code = verdict_inconclusive;
            } else {
                body["representatives"] = json::array();
                body["settled"] = false;
                body["parameters"] = to_json(params);
                body["note"] = "trajectory did not reach the horizon; no estimate";
                code = verdict_inconclusive;
            }
            body["integrator"] = to_json(cfg);
            return Outcome{dump(with_header(header("omega", spec), body)), code};
        };
    });

    // invariance
    Common inv_common;
    std::string inv_region, inv_mode = "positive";
    std::optional<std::size_t> inv_samples, inv_resolution, inv_probes;
    std::optional<double> inv_horizon, inv_tol, inv_margin;
    auto* inv = app.add_subcommand("invariance", "test positive or negative invariance of a named region");
    inv_common.add_to(inv, true);
    inv->add_option("--region", inv_region, "region name")->required();
    inv->add_option("--mode", inv_mode, "positive or negative")
        ->check(CLI::IsMember({"positive", "negative"}))
        ->capture_default_str();
    inv->add_option("--samples", inv_samples, "number of initial states");
    inv->add_option("--resolution", inv_resolution, "grid nodes per axis");
    inv->add_option("--horizon", inv_horizon, "integration horizon per sample");
    inv->add_option("--tol", inv_tol, "escape tolerance (positive) or entry tolerance (negative)");
    inv->add_option("--margin", inv_margin, "core margin for negative mode");
    inv->add_option("--probes", inv_probes, "dense-output probes per trajectory");
    inv->callback([&] {
        action = [&] {
            const SystemSpec spec = resolve_system(inv_common.system);
            const Region& region = spec.region(inv_region);
            const IntegratorConfig cfg = inv_common.integrator(spec);
            InvarianceReport rep;
            try {
                if (inv_mode == "positive") {
                    PositiveInvarianceParams p;
                    p.integrator = cfg;
                    p.sampling = inv_common.sampling();
                    if (inv_samples) p.sample_count = *inv_samples;
                    if (inv_resolution) p.resolution = *inv_resolution;
                    if (inv_horizon) p.horizon = *inv_horizon;
                    if (inv_tol) p.escape_tol = *inv_tol;
                    if (inv_probes) p.probe_count = *inv_probes;
                    rep = test_positive_invariance(region, spec.field, p);
                } else {
                    NegativeInvarianceParams p;
                    p.integrator = cfg;
                    p.sampling = inv_common.sampling();
                    p.box = spec.box;
                    if (inv_samples) p.sample_count = *inv_samples;
                    if (inv_resolution) p.resolution = *inv_resolution;
                    if (inv_horizon) p.horizon = *inv_horizon;
                    if (inv_tol) p.entry_tol = *inv_tol;
                    if (inv_margin) p.margin = *inv_margin;
                    if (inv_probes) p.probe_count = *inv_probes;
                    rep = test_negative_invariance(region, spec.field, p);
                }
            } catch (const std::invalid_argument& e) {
                throw InputError(e.what());
            }
            json body{{"region_name", inv_region}, {"region", to_json(region)}};
            merge(body, to_json(rep));
            body["parameters"]["integrator"] = to_json(cfg);
            body["parameters"]["seed"] = inv_common.seed;
            body["parameters"]["jitter"] = inv_common.jitter;
            return Outcome{dump(with_header(header("invariance", spec), body)), verdict_exit(rep.verdict)};
        };
    });

    // largest-invariant
    Common li_common;
    std::string li_region;
    LargestInvariantParams li_params;
    std::optional<double> li_tol;
    auto* li = app.add_subcommand("largest-invariant", "estimate the largest invariant set inside a region");
    li_common.add_to(li, true);
    li->add_option("--region", li_region, "container region name")->required();
    li->add_option("--resolution", li_params.resolution, "grid nodes per axis")->capture_default_str();
    li->add_option("--horizon", li_params.horizon, "forward and backward horizon")->capture_default_str();
    li->add_option("--tol", li_tol, "escape tolerance");
    li->add_option("--probes", li_params.probe_count, "dense-output probes per trajectory")->capture_default_str();
    li->callback([&] {
        action = [&] {
            const SystemSpec spec = resolve_system(li_common.system);
            const Region& region = spec.region(li_region);
            LargestInvariantParams p = li_params;
            p.integrator = li_common.integrator(spec);
            p.sampling = li_common.sampling();
            if (li_tol) p.escape_tol = *li_tol;
            SampleCloud cloud;
            try {
                cloud = estimate_largest_invariant_set(region, spec.field, p);
            } catch (const std::invalid_argument& e) {
                throw InputError(e.what());
            }
            json body{{"region_name", li_region}, {"region", to_json(region)}, {"m_hat", to_json(cloud)}};
            body["parameters"] = {{"resolution", p.resolution},
                                  {"horizon", p.horizon},
                                  {"escape_tol", std::isnan(p.escape_tol) ? default_escape_tol(region) : p.escape_tol},
                                  {"probe_count", p.probe_count},
                                  {"seed", p.sampling.seed},
                                  {"jitter", p.sampling.jitter},
                                  {"integrator", to_json(p.integrator)}};
            body["note"] = "box-relative, finite-horizon estimate";
            return Outcome{dump(with_header(header("largest-invariant", spec), body)), ok};
        };
    });

    // check-thm1
    Common t1_common;
    OmegaFlags t1_omega;
    std::string t1_omega_region, t1_a_region;
    std::optional<std::string> t1_v;
    Theorem1Params t1_params;
    std::optional<double> t1_delta;
    auto* t1 = app.add_subcommand("check-thm1", "certify omega(x0) inside the largest invariant set of closure(A)");
    t1_common.add_to(t1, false);
    t1_omega.add_to(t1);
    t1->add_option("--omega-region", t1_omega_region, "positively invariant compact region")->required();
    t1->add_option("--a-region", t1_a_region, "negatively invariant region A")->required();
    t1->add_option("--V", t1_v, "override the system's V");
    t1->add_option("--resolution", t1_params.resolution, "grid nodes per axis on Omega")->capture_default_str();
    t1->add_option("--delta", t1_delta, "exclusion distance from A (default 10 * A.tol)");
    t1->add_option("--epsilon-margin", t1_params.epsilon_margin, "normalised |grad V . f| floor")
        ->capture_default_str();
    t1->add_option("--incl-tol", t1_params.incl_tol, "inclusion tolerance for omega in M-hat")->capture_default_str();
    t1->add_option("--x0-count", t1_params.x0_count, "initial states sampled from Omega")->capture_default_str();
    t1->callback([&] {
        action = [&] {
            const SystemSpec spec = resolve_system(t1_common.system);
            const Region& omega_region = spec.region(t1_omega_region);
            const Region& a_region = spec.region(t1_a_region);
            const Expression v = resolve_v(spec, t1_v);
            Theorem1Params p = t1_params;
            p.integrator = t1_common.integrator(spec);
            p.omega = t1_omega.params();
            if (t1_delta) p.delta = *t1_delta;
            p.omega_invariance.integrator = p.integrator;
            p.a_invariance.integrator = p.integrator;
            p.m_hat.integrator = p.integrator;
            Theorem1Report rep;
            try {
                rep = check_theorem1(spec.field, omega_region, a_region, v, p);
            } catch (const std::invalid_argument& e) {
                throw InputError(e.what());
            }
            json body{{"V", print(v)},
                      {"omega_region", {{"name", t1_omega_region}, {"region", to_json(omega_region)}}},
                      {"a_region", {{"name", t1_a_region}, {"region", to_json(a_region)}}}};
            merge(body, to_json(rep));
            return Outcome{dump(with_header(header("check-thm1", spec), body)), verdict_exit(rep.overall)};
        };
    });

    // check-thm2
    Common t2_common;
    OmegaFlags t2_omega;
    std::vector<std::string> t2_x0;
    std::optional<std::string> t2_v, t2_reach;
    Theorem2Params t2_params;
    bool t2_no_box = false;
    auto* t2 = app.add_subcommand("check-thm2", "certify that omega(x0) meets S = {grad V . f = 0}");
    t2_common.add_to(t2, false);
    t2_omega.add_to(t2);
    t2->add_option("--x0", t2_x0, "initial states; repeat the flag or separate with ';'")->required();
    t2->add_option("--V", t2_v, "override the system's V");
    t2->add_option("--s-tol", t2_params.s_tol, "normalised |grad V . f| accepted as S")->capture_default_str();
    t2->add_option("--bound", t2_params.bound, "boundedness threshold on |x|")->capture_default_str();
    t2->add_option("--probes", t2_params.probe_count, "lie-signal probes for reachability")->capture_default_str();
    t2->add_option("--incl-tol", t2_params.incl_tol, "inclusion tolerance for omega in M-hat")->capture_default_str();
    t2->add_option("--reach-grid", t2_reach, "lo:hi:n grid for the reachability set of S");
    t2->add_flag("--no-distance", t2_no_box, "skip the geometric distance to S");
    t2->callback([&] {
        action = [&] {
            const SystemSpec spec = resolve_system(t2_common.system);
            const Expression v = resolve_v(spec, t2_v);
            const std::vector<State> x0s = parse_states(t2_x0, spec.dimension);
            Theorem2Params p = t2_params;
            p.integrator = t2_common.integrator(spec);
            p.omega = t2_omega.params();
            p.m_hat.integrator = p.integrator;
            if (!t2_no_box) p.box = spec.box;
            if (t2_reach) {
                auto [box, counts] = parse_grid(*t2_reach, spec.dimension);
                p.reach_grid = make_grid(box, counts);
            }
            Theorem2Report rep;
            try {
                rep = check_theorem2(spec.field, v, x0s, p);
            } catch (const std::invalid_argument& e) {
                throw InputError(e.what());
            }
            json body{{"V", print(v)}};
            merge(body, to_json(rep));
            return Outcome{dump(with_header(header("check-thm2", spec), body)), verdict_exit(rep.overall)};
        };
    });

    // lie-signal
    Common ls_common;
    std::string ls_x0;
    std::optional<std::string> ls_v;
    std::size_t ls_probes = 1000;
    double ls_threshold = 1e-9;
    auto* ls = app.add_subcommand("lie-signal", "sample p(t) = grad V . f along one trajectory");
    ls_common.add_to(ls, false);
    ls->add_option("--x0", ls_x0, "initial state, comma separated")->required();
    ls->add_option("--V", ls_v, "override the system's V");
    ls->add_option("--probes", ls_probes, "equispaced probe times")->capture_default_str();
    ls->add_option("--threshold", ls_threshold, "values with |p| below this carry no sign")->capture_default_str();
    ls->callback([&] {
        action = [&] {
            const SystemSpec spec = resolve_system(ls_common.system);
            const Expression v = resolve_v(spec, ls_v);
            const State x0 = parse_state(ls_x0, spec.dimension);
            const IntegratorConfig cfg = ls_common.integrator(spec);
            Trajectory traj = integrate(spec.field, x0, cfg);
            const LieSignal sig = lie_signal(traj, v, spec.field, ls_probes, ls_threshold);
            json body{{"V", print(v)},
                      {"lie_derivative", print(LieDerivative(v, spec.field).expression())},
                      {"x0", to_json(x0)},
                      {"termination", to_string(traj.termination())}};
            merge(body, to_json(sig));
            body["parameters"] = {{"probe_count", ls_probes}, {"threshold", ls_threshold}, {"integrator", to_json(cfg)}};
            return Outcome{dump(with_header(header("lie-signal", spec), body)), ok};
        };
    });

    // sweep-weak-attractor
    Common sw_common;
    OmegaFlags sw_omega;
    std::string sw_grid;
    std::optional<std::string> sw_v;
    Theorem2Params sw_params;
    auto* sw = app.add_subcommand("sweep-weak-attractor", "check omega(x0) meets S for every node of a grid");
    sw_common.add_to(sw, false);
    sw_omega.add_to(sw);
    sw->add_option("--grid", sw_grid, "lo:hi:n for all axes, or one per axis separated by ','")->required();
    sw->add_option("--V", sw_v, "override the system's V");
    sw->add_option("--s-tol", sw_params.s_tol, "normalised |grad V . f| accepted as S")->capture_default_str();
    sw->add_option("--bound", sw_params.bound, "boundedness threshold on |x|")->capture_default_str();
    sw->callback([&] {
        action = [&] {
            const SystemSpec spec = resolve_system(sw_common.system);
            const Expression v = resolve_v(spec, sw_v);
            auto [box, counts] = parse_grid(sw_grid, spec.dimension);
            Theorem2Params p = sw_params;
            p.integrator = sw_common.integrator(spec);
            p.omega = sw_omega.params();
            SweepSummary s;
            try {
                s = weak_attractor_sweep(spec.field, v, make_grid(box, counts), p);
            } catch (const std::invalid_argument& e) {
                throw InputError(e.what());
            }
            json body{{"V", print(v)}};
            merge(body, to_json(s));
            json counts_j = json::array();
            for (auto c : counts) counts_j.push_back(c);
            body["parameters"] = {{"grid_box", to_json(box)},
                                  {"grid_counts", counts_j},
                                  {"s_tol", p.s_tol},
                                  {"bound", p.bound},
                                  {"integrator", to_json(p.integrator)},
                                  {"omega", to_json(p.omega)}};
            const int code = s.evaluated > 0 && s.passed == s.evaluated ? ok : verdict_fail;
            return Outcome{dump(with_header(header("sweep-weak-attractor", spec), body)), code};
        };
    });

    // examples
    std::optional<std::string> ex_show;
    auto* ex = app.add_subcommand("examples", "list the built-in systems");
    ex->add_option("--show", ex_show, "print the spec of one built-in system");
    ex->callback([&] {
        action = [&] {
            std::ostringstream s;
            if (ex_show) {
                for (const auto& b : builtin_systems()) {
                    if (b.name == *ex_show) return Outcome{std::string(b.json_text) + "\n", ok};
                }
                throw InputError("no built-in system named '" + *ex_show + "'");
            }
            for (const auto& b : builtin_systems()) s << b.name << "\t" << b.description << "\n";
            return Outcome{s.str(), ok};
        };
    });

    if (!args.empty() && !args[0].empty() && args[0][0] != '-' && !app.get_subcommand_no_throw(args[0])) {
        err << "unknown subcommand '" << args[0] << "'\n" << app.help();
        return usage_error;
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::Success& e) {
        std::ostringstream help;
        app.exit(e, help, err);
        out << help.str();
        return ok;
    } catch (const CLI::ParseError& e) {
        std::ostringstream msg;
        app.exit(e, msg, msg);
        err << msg.str();
        return usage_error;
    }

    try {
        result = action();
    } catch (const SpecError& e) {
        err << "error: " << e.what() << "\n";
        return input_error;
    } catch (const InputError& e) {
        err << "error: " << e.what() << "\n";
        return input_error;
    } catch (const ParseError& e) {
        err << "error: " << e.what() << "\n";
        return input_error;
    } catch (const DimensionError& e) {
        err << "error: " << e.what() << "\n";
        return input_error;
    } catch (const DomainError& e) {
        err << "error: " << e.what() << "\n";
        return input_error;
    } catch (const OmegaRefused& e) {
        err << "error: " << e.what() << "\n";
        return input_error;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return input_error;
    }
    out << result.text;
    return result.code;
}

}  // namespace limitset::cli
