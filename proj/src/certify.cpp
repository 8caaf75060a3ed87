#include "limitset/certify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "limitset/parallel.hpp"

namespace limitset {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double resolve(double value, double fallback) { return std::isnan(value) ? fallback : value; }

double max_distance_to(const std::vector<State>& reps, const std::vector<State>& set) {
    double worst = 0.0;
    for (const auto& r : reps) worst = std::max(worst, distance_to_points(r, set));
    return worst;
}

std::vector<State> dedupe(const std::vector<State>& points) {
    std::set<State> seen;
    std::vector<State> out;
    for (const auto& p : points) {
        if (seen.insert(p).second) out.push_back(p);
    }
    return out;
}

Region fallback_box(const Region& r, const Box& box) {
    if (r.has_box() || r.kind() == RegionKind::point_set || box.empty()) return r;
    return r.with_box(box);
}

// The omega / S-proximity part of the Theorem-2 check for one initial state.
Theorem2Point check_point(const VectorField& field, const LieDerivative& lie, const State& x0,
                          const Theorem2Params& params, const Region* s_region, const SampleCloud* s_cloud) {
    Theorem2Point pt;
    pt.x0 = x0;
    Trajectory traj = integrate(field, x0, params.integrator);
    pt.termination = to_string(traj.termination());
    pt.max_norm = traj.max_norm();

    if (traj.termination() == Termination::blowup || pt.max_norm >= params.bound) {
        pt.bounded = Verdict::fail;
        pt.verdict = Verdict::fail;
        pt.note = "positive orbit not bounded";
        return pt;
    }
    if (traj.termination() != Termination::horizon) {
        pt.bounded = Verdict::inconclusive;
        pt.verdict = Verdict::inconclusive;
        pt.note = "integration stopped early";
        return pt;
    }
    pt.bounded = Verdict::pass;

    OmegaEstimate est = estimate_omega(traj, params.omega);
    pt.representatives = est.representatives;
    pt.settled = est.settled;
    pt.gap = est.gap;
    pt.scale = lie_scale(lie, traj.states());

    pt.min_abs_lie = kInf;
    for (const auto& r : est.representatives) pt.min_abs_lie = std::min(pt.min_abs_lie, std::fabs(lie.value(r)));
    pt.normalized_min = normalized(pt.min_abs_lie, pt.scale);

    if (s_region && s_cloud) {
        try {
            double best = kInf;
            for (const auto& r : est.representatives) best = std::min(best, distance_estimate(r, *s_region, *s_cloud));
            pt.distance_to_s = best;
        } catch (const UndefinedDistance&) {
            pt.note = "S has no samples in the box";
        }
    }

    if (!est.settled) {
        pt.verdict = Verdict::inconclusive;
        pt.note = "omega estimate not settled";
    } else {
        pt.verdict = pt.normalized_min <= params.s_tol ? Verdict::pass : Verdict::fail;
    }
    return pt;
}

}  // namespace

// ---------------------------------------------------------------------------

LieDerivative::LieDerivative(const Expression& v, const VectorField& field)
    : terms_(lie_terms(v, field.components())) {
    sum_ = Expression::constant(0.0);
    for (const auto& t : terms_) sum_ = fold(sum_ + t);
    if (field.is_reversed()) {
        throw std::invalid_argument("Lie derivatives are taken along the forward field");
    }
}

double LieDerivative::value(std::span<const double> x) const { return evaluate(sum_, x); }

double LieDerivative::absolute_terms(std::span<const double> x) const {
    double s = 0.0;
    for (const auto& t : terms_) s += std::fabs(evaluate(t, x));
    return s;
}

double lie_scale(const LieDerivative& lie, std::span<const State> points) {
    double scale = 0.0;
    for (const auto& p : points) {
        try {
            scale = std::max(scale, lie.absolute_terms(p));
        } catch (const DomainError&) {
        }
    }
    return scale;
}

// ---------------------------------------------------------------------------

Theorem1Report check_theorem1(const VectorField& field, const Region& omega_region, const Region& a_region,
                              const Expression& v, const Theorem1Params& params) {
    const int n = static_cast<int>(field.dimension());
    if (omega_region.dimension() != n || a_region.dimension() != n) {
        throw DimensionError("regions and field have different dimensions");
    }
    if (!omega_region.has_box() && omega_region.kind() != RegionKind::point_set) {
        throw std::invalid_argument("Omega needs a bounding box");
    }

    Theorem1Report rep;
    rep.params = params;
    const LieDerivative lie(v, field);
    rep.lie_expression = print(lie.expression());

    const Region a = fallback_box(a_region, omega_region.box());
    const std::vector<State> omega_samples = sample_region(omega_region, params.resolution).points;
    rep.omega_samples = omega_samples.size();

    // (a) Omega must be positively invariant.
    rep.omega_invariance = test_positive_invariance(omega_region, field, params.omega_invariance);

    // (b) grad V . f bounded away from zero on Omega \ A.
    ConditionOne& c1 = rep.condition_i;
    c1.delta = resolve(params.delta, 10.0 * a.tol());
    c1.samples_total = omega_samples.size();
    std::optional<SampleCloud> a_cloud;
    if (a.kind() == RegionKind::zero_set || a.kind() == RegionKind::sublevel) {
        a_cloud = sample_region(a, DistanceOptions{}.resolution);
    }
    auto dist_to_a = [&](const State& x) {
        if (a_cloud) {
            try {
                return distance_estimate(x, a, *a_cloud);
            } catch (const UndefinedDistance&) {
                return kInf;
            }
        }
        return distance_estimate(x, a);
    };
    bool domain_trouble = false;
    c1.scale = lie_scale(lie, omega_samples);
    c1.min_abs_lie = kInf;
    for (const auto& x : omega_samples) {
        if (dist_to_a(x) < c1.delta) continue;
        ++c1.samples_considered;
        try {
            const double val = std::fabs(lie.value(x));
            if (val < c1.min_abs_lie) {
                c1.min_abs_lie = val;
                c1.argmin = x;
            }
        } catch (const DomainError&) {
            domain_trouble = true;
        }
    }
    if (omega_samples.empty()) {
        c1.verdict = Verdict::inconclusive;
        c1.min_abs_lie = 0.0;
    } else if (c1.samples_considered == 0) {
        // Omega \ A is (numerically) empty: the conclusion holds trivially.
        c1.verdict = Verdict::pass;
        c1.min_abs_lie = 0.0;
    } else {
        c1.normalized_min = normalized(c1.min_abs_lie, c1.scale);
        if (c1.normalized_min <= params.epsilon_margin) {
            c1.verdict = Verdict::fail;
        } else {
            c1.verdict = domain_trouble ? Verdict::inconclusive : Verdict::pass;
        }
    }

    // (c) A negatively invariant.
    NegativeInvarianceParams neg = params.a_invariance;
    if (neg.box.empty() && !a.has_box()) neg.box = omega_region.box();
    rep.condition_ii = test_negative_invariance(a, field, neg);

    // (d) M-hat: largest invariant set in the part of Omega lying in closure(A).
    std::vector<State> container;
    for (const auto& x : omega_samples) {
        bool in_a = false;
        try {
            in_a = member(a, x, a.tol());
        } catch (const DomainError&) {
        }
        if (in_a) container.push_back(x);
    }
    container = dedupe(container);
    rep.container_size = container.size();
    if (!container.empty()) {
        const Region container_region = Region::point_set(container, a.tol());
        rep.m_hat = estimate_largest_invariant_set(container_region, field, params.m_hat).points;
    }

    // (e) omega(x0) within incl_tol of M-hat for a deterministic sample of Omega.
    const std::vector<State> x0s = subsample(omega_samples, params.x0_count);
    rep.per_x0 = parallel_map<OmegaInclusion>(x0s.size(), [&](std::size_t i) {
        OmegaInclusion inc;
        inc.x0 = x0s[i];
        Trajectory traj = integrate(field, x0s[i], params.integrator);
        inc.termination = to_string(traj.termination());
        if (traj.termination() != Termination::horizon) {
            inc.verdict = Verdict::inconclusive;
            return inc;
        }
        OmegaEstimate est = estimate_omega(traj, params.omega);
        inc.representatives = est.representatives;
        inc.settled = est.settled;
        inc.gap = est.gap;
        inc.max_dist_to_m_hat = rep.m_hat.empty() ? kInf : max_distance_to(est.representatives, rep.m_hat);
        if (!est.settled || rep.m_hat.empty()) {
            inc.verdict = Verdict::inconclusive;
        } else {
            inc.verdict = inc.max_dist_to_m_hat <= params.incl_tol ? Verdict::pass : Verdict::fail;
        }
        return inc;
    });

    rep.conclusion = x0s.empty() ? Verdict::inconclusive : Verdict::pass;
    rep.max_dist_to_m_hat = 0.0;
    for (const auto& inc : rep.per_x0) {
        rep.conclusion = combine({rep.conclusion, inc.verdict});
        rep.max_dist_to_m_hat = std::max(rep.max_dist_to_m_hat, inc.max_dist_to_m_hat);
    }

    rep.overall = combine({rep.omega_invariance.verdict, c1.verdict, rep.condition_ii.verdict, rep.conclusion});
    return rep;
}

// ---------------------------------------------------------------------------

Theorem2Report check_theorem2(const VectorField& field, const Expression& v, const std::vector<State>& x0s,
                              const Theorem2Params& params) {
    if (x0s.empty()) throw std::invalid_argument("check_theorem2 needs at least one initial state");
    for (const auto& x0 : x0s) {
        if (x0.size() != field.dimension()) throw DimensionError("initial state dimension does not match the field");
    }
    Theorem2Report rep;
    rep.params = params;
    const LieDerivative lie(v, field);
    rep.lie_expression = print(lie.expression());
    const int n = static_cast<int>(field.dimension());

    std::optional<Region> s_region;
    std::optional<SampleCloud> s_cloud;
    if (!params.box.empty()) {
        s_region = Region::zero_set(lie.expression(), n, params.s_tol, params.box);
        s_cloud = sample_region(*s_region, DistanceOptions{}.resolution);
    }

    rep.points = parallel_map<Theorem2Point>(x0s.size(), [&](std::size_t i) {
        return check_point(field, lie, x0s[i], params, s_region ? &*s_region : nullptr, s_cloud ? &*s_cloud : nullptr);
    });

    rep.overall = Verdict::pass;
    for (const auto& p : rep.points) rep.overall = combine({rep.overall, p.verdict});

    // Reachability set A = {x : phi(t, x) in S for some t >= 0}, on the grid.
    if (!params.reach_grid.empty()) {
        rep.reach_grid = params.reach_grid;
        rep.reaches_s = parallel_map<char>(rep.reach_grid.size(), [&](std::size_t i) -> char {
            Trajectory traj = integrate(field, rep.reach_grid[i], params.integrator);
            LieSignal sig = lie_signal(traj, v, field, params.probe_count, 0.0);
            const double scale = lie_scale(lie, traj.states());
            return sig.has_zero_crossing || normalized(sig.min_abs, scale) <= params.s_tol;
        });
        std::vector<State> container;
        for (std::size_t i = 0; i < rep.reach_grid.size(); ++i) {
            if (rep.reaches_s[i]) container.push_back(rep.reach_grid[i]);
        }
        container = dedupe(container);
        if (!container.empty()) {
            rep.m_hat = estimate_largest_invariant_set(Region::point_set(container), field, params.m_hat).points;
        }
        rep.m_hat_checked = true;
        rep.m_hat_inclusion = Verdict::pass;
        for (auto& p : rep.points) {
            if (p.representatives.empty() || rep.m_hat.empty()) {
                rep.m_hat_inclusion = combine({rep.m_hat_inclusion, Verdict::inconclusive});
                continue;
            }
            p.max_dist_to_m_hat = max_distance_to(p.representatives, rep.m_hat);
            rep.m_hat_inclusion =
                combine({rep.m_hat_inclusion, *p.max_dist_to_m_hat <= params.incl_tol ? Verdict::pass : Verdict::fail});
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------

LieSignal lie_signal(const Trajectory& traj, const Expression& v, const VectorField& field, std::size_t probe_count,
                     double threshold) {
    const LieDerivative lie(v, field);
    LieSignal sig;
    sig.threshold = threshold;
    sig.min_abs = kInf;
    if (probe_count == 0) return sig;

    const double t0 = traj.start_time();
    const double t1 = traj.end_time();
    int last_sign = 0;
    double prev = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t k = 0; k < probe_count; ++k) {
        double t = probe_count == 1 ? t1 : t0 + (t1 - t0) * static_cast<double>(k) / static_cast<double>(probe_count - 1);
        if (k + 1 == probe_count) t = t1;
        const double p = lie.value(traj.sample_at(t));
        sig.samples.emplace_back(t, p);
        sig.min_abs = std::min(sig.min_abs, std::fabs(p));
        if (p == 0.0 || (!std::isnan(prev) && ((p > 0.0 && prev < 0.0) || (p < 0.0 && prev > 0.0)))) {
            sig.has_zero_crossing = true;
        }
        prev = p;
        if (std::fabs(p) > threshold) {
            const int s = p > 0.0 ? 1 : -1;
            if (last_sign != 0 && s != last_sign) ++sig.sign_changes;
            last_sign = s;
        }
    }
    return sig;
}

SweepSummary weak_attractor_sweep(const VectorField& field, const Expression& v, const std::vector<State>& grid,
                                  const Theorem2Params& params) {
    if (grid.empty()) throw std::invalid_argument("sweep grid must be non-empty");
    const LieDerivative lie(v, field);
    auto points = parallel_map<Theorem2Point>(grid.size(), [&](std::size_t i) {
        return check_point(field, lie, grid[i], params, nullptr, nullptr);
    });

    SweepSummary s;
    s.total = grid.size();
    for (const auto& p : points) {
        if (p.bounded == Verdict::fail) {
            ++s.blowups;
            s.failures.push_back({p.x0, p.note});
            continue;
        }
        ++s.evaluated;
        if (p.verdict == Verdict::pass) {
            ++s.passed;
        } else {
            s.failures.push_back({p.x0, p.note.empty() ? "min |grad V . f| above s_tol" : p.note});
        }
        if (p.bounded == Verdict::pass) {
            s.worst_min_abs_lie = std::max(s.worst_min_abs_lie, p.min_abs_lie);
            s.worst_normalized = std::max(s.worst_normalized, p.normalized_min);
        }
    }
    s.fraction = s.evaluated == 0 ? 0.0 : static_cast<double>(s.passed) / static_cast<double>(s.evaluated);
    return s;
}

std::vector<State> make_grid(const Box& box, const std::vector<std::size_t>& counts) {
    if (box.size() != counts.size() || box.empty()) throw std::invalid_argument("grid needs one count per box axis");
    for (auto c : counts) {
        if (c == 0) throw std::invalid_argument("grid counts must be positive");
    }
    std::vector<State> out;
    std::vector<std::size_t> idx(box.size(), 0);
    for (;;) {
        State x(box.size());
        for (std::size_t i = 0; i < box.size(); ++i) {
            x[i] = counts[i] == 1 ? 0.5 * (box[i].lo + box[i].hi)
                                  : box[i].lo + (box[i].hi - box[i].lo) * static_cast<double>(idx[i]) /
                                                    static_cast<double>(counts[i] - 1);
        }
        out.push_back(std::move(x));
        std::size_t d = box.size();
        for (;;) {
            if (d == 0) return out;
            --d;
            if (++idx[d] < counts[d]) break;
            idx[d] = 0;
        }
    }
}

}  // namespace limitset
