#include "limitset/invariance.hpp"

#include <algorithm>
#include <cmath>

#include "limitset/parallel.hpp"

namespace limitset {

namespace {

double box_violation(const Box& box, std::span<const double> x) {
    double v = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < x.size(); ++i) v = std::max({v, box[i].lo - x[i], x[i] - box[i].hi});
    return v;
}

// Membership measure including the box for clipped regions; +inf where the
// defining function cannot be evaluated.
double measure(const Region& region, std::span<const double> x) {
    double e;
    try {
        e = region.excess(x);
    } catch (const DomainError&) {
        return std::numeric_limits<double>::infinity();
    }
    if (region.clipped()) e = std::max(e, box_violation(region.box(), x));
    return e;
}

std::vector<double> probe_times(const Trajectory& traj, std::size_t probe_count) {
    std::vector<double> ts = traj.times();
    const double t1 = traj.end_time();
    for (std::size_t k = 0; k + 1 < probe_count; ++k) {
        ts.push_back(t1 * static_cast<double>(k) / static_cast<double>(probe_count - 1));
    }
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
    return ts;
}

struct Track {
    bool stayed = true;
    double worst = -std::numeric_limits<double>::infinity();
    double worst_time = 0.0;
    State worst_state;
};

Track track(const Trajectory& traj, const Region& region, double tol, std::size_t probe_count) {
    Track tr;
    for (double t : probe_times(traj, probe_count)) {
        State x = traj.sample_at(t);
        const double e = measure(region, x);
        if (!(e <= tol)) tr.stayed = false;
        if (e > tr.worst || tr.worst_state.empty()) {
            tr.worst = e;
            tr.worst_time = t;
            tr.worst_state = std::move(x);
        }
    }
    return tr;
}

IntegratorConfig with_horizon(IntegratorConfig cfg, double horizon) {
    cfg.t_end = horizon;
    return cfg;
}

double resolve(double value, double fallback) { return std::isnan(value) ? fallback : value; }

// Level of the membership measure below which integration error can account
// for the value: a multiple of the local error tolerance, carried to g-units
// by |grad g|.
double noise_floor(const Region& region, const IntegratorConfig& cfg, std::span<const double> x) {
    double xmax = 0.0;
    for (double v : x) xmax = std::max(xmax, std::fabs(v));
    double slope = 1.0;
    if (region.kind() == RegionKind::zero_set || region.kind() == RegionKind::sublevel) {
        double g2 = 0.0;
        try {
            for (const auto& d : region.g_gradient()) {
                const double v = evaluate(d, x);
                g2 += v * v;
            }
            slope = std::max(1.0, std::sqrt(g2));
        } catch (const DomainError&) {
        }
    }
    return 100.0 * (cfg.abs_tol + cfg.rel_tol * xmax) * slope;
}

}  // namespace

std::string to_string(Verdict v) {
    switch (v) {
    case Verdict::pass:
        return "PASS";
    case Verdict::fail:
        return "FAIL";
    case Verdict::inconclusive:
        return "INCONCLUSIVE";
    }
    return "INCONCLUSIVE";
}

Verdict combine(std::initializer_list<Verdict> verdicts) {
    Verdict out = Verdict::pass;
    for (Verdict v : verdicts) {
        if (v == Verdict::fail) return Verdict::fail;
        if (v == Verdict::inconclusive) out = Verdict::inconclusive;
    }
    return out;
}

double default_escape_tol(const Region& region) { return region.tol() > 0.0 ? 100.0 * region.tol() : 1e-6; }

std::vector<State> subsample(const std::vector<State>& points, std::size_t count) {
    if (points.size() <= count) return points;
    std::vector<State> out;
    out.reserve(count);
    for (std::size_t k = 0; k < count; ++k) out.push_back(points[k * points.size() / count]);
    return out;
}

InvarianceReport test_positive_invariance(const Region& region, const VectorField& field,
                                          const PositiveInvarianceParams& params) {
    InvarianceReport rep;
    rep.mode = "positive";
    rep.region_tol = region.tol();
    rep.tolerance = resolve(params.escape_tol, default_escape_tol(region));
    rep.horizon = params.horizon;
    rep.sample_count = params.sample_count;
    rep.resolution = params.resolution;
    rep.probe_count = params.probe_count;
    rep.box = region.box();
    if (!(rep.tolerance > region.tol())) throw std::invalid_argument("escape_tol must exceed the region tolerance");

    if (region.kind() == RegionKind::whole_space) {
        rep.verdict = Verdict::pass;
        return rep;
    }

    auto samples = subsample(sample_region(region, params.resolution, params.sampling).points, params.sample_count);
    rep.samples_tested = samples.size();
    if (samples.empty()) {
        rep.verdict = Verdict::inconclusive;
        rep.failure_kind = "no_samples";
        return rep;
    }

    const IntegratorConfig cfg = with_horizon(params.integrator, params.horizon);
    struct Outcome {
        Termination termination = Termination::horizon;
        Track track;
    };
    auto outcomes = parallel_map<Outcome>(samples.size(), [&](std::size_t i) {
        Trajectory traj = integrate(field, samples[i], cfg);
        Outcome o;
        o.termination = traj.termination();
        if (o.termination != Termination::blowup) o.track = track(traj, region, rep.tolerance, params.probe_count);
        return o;
    });

    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const Outcome& o = outcomes[i];
        if (o.termination == Termination::blowup) {
            ++rep.blowups;
            continue;
        }
        if (!o.track.stayed) ++rep.violations;
        if (o.termination != Termination::horizon && o.track.stayed) ++rep.integration_failures;
        if (o.track.worst > worst) {
            worst = o.track.worst;
            rep.worst = Violation{samples[i], o.track.worst_time, o.track.worst_state, o.track.worst};
        }
    }

    if (rep.violations > 0) {
        rep.verdict = Verdict::fail;
        rep.failure_kind = "escape";
    } else if (rep.blowups > 0) {
        rep.verdict = Verdict::fail;
        rep.failure_kind = "blowup";
    } else if (rep.integration_failures > 0) {
        rep.verdict = Verdict::inconclusive;
        rep.failure_kind = "integration";
    } else {
        rep.verdict = Verdict::pass;
    }
    return rep;
}

InvarianceReport test_negative_invariance(const Region& region, const VectorField& field,
                                          const NegativeInvarianceParams& params) {
    InvarianceReport rep;
    rep.mode = "negative";
    rep.region_tol = region.tol();
    rep.tolerance = resolve(params.entry_tol, 10.0 * region.tol());
    rep.margin = resolve(params.margin, region.tol() / 2.0);
    rep.horizon = params.horizon;
    rep.sample_count = params.sample_count;
    rep.resolution = params.resolution;
    rep.probe_count = std::max<std::size_t>(params.probe_count, 2);
    rep.box = params.box.empty() ? region.box() : params.box;

    if (region.kind() == RegionKind::whole_space) {
        rep.verdict = Verdict::pass;
        return rep;
    }
    if (rep.box.empty()) throw std::invalid_argument("negative invariance test needs a box for outside samples");
    if (rep.margin < 0.0 || rep.margin > region.tol()) throw std::invalid_argument("margin must lie in [0, tol]");

    // Outside samples: grid over the box, minus the inflated region and the
    // tie zone around its boundary.
    const double exclude = std::max(rep.tolerance, region.tol() + rep.margin);
    SampleCloud grid = sample_region(Region::whole_space(region.dimension(), rep.box), params.resolution, params.sampling);
    std::vector<State> outside;
    for (auto& x : grid.points) {
        const double m = measure(region, x);
        if (std::isfinite(m) && m > exclude) outside.push_back(std::move(x));
    }
    auto samples = subsample(outside, params.sample_count);
    rep.samples_tested = samples.size();
    if (samples.empty()) {
        // The region fills the box: nothing can enter from outside.
        rep.verdict = Verdict::pass;
        return rep;
    }

    const double core = region.tol() - rep.margin;
    const IntegratorConfig cfg = with_horizon(params.integrator, params.horizon);
    const bool signed_g = region.kind() == RegionKind::zero_set || region.kind() == RegionKind::sublevel;

    struct Outcome {
        Termination termination = Termination::horizon;
        std::optional<Violation> entry;
    };
    auto outcomes = parallel_map<Outcome>(samples.size(), [&](std::size_t i) {
        Trajectory traj = integrate(field, samples[i], cfg);
        Outcome o;
        o.termination = traj.termination();
        const double t1 = traj.end_time();
        const std::size_t probes = rep.probe_count;
        double prev_h = measure(region, samples[i]);
        double prev_g = signed_g ? evaluate(region.g(), samples[i]) : 0.0;
        double prev_t = 0.0;
        for (std::size_t k = 1; k < probes; ++k) {
            const double t = k + 1 == probes ? t1 : t1 * static_cast<double>(k) / static_cast<double>(probes - 1);
            State x = traj.sample_at(t);
            const double h = measure(region, x);
            double g = 0.0;
            const double floor = noise_floor(region, cfg, x);
            bool crossed = false;  // the continuous trajectory met {g = 0}
            bool inside = false;   // sublevel: g <= 0 at the probe
            if (signed_g && std::isfinite(h)) {
                g = evaluate(region.g(), x);
                if (region.kind() == RegionKind::zero_set) {
                    // A sign change between two values lost in integration
                    // noise says nothing about the true flow.
                    const bool resolved = std::max(std::fabs(g), std::fabs(prev_g)) > floor;
                    crossed = resolved && prev_g != 0.0 && (g == 0.0 || (g > 0.0) != (prev_g > 0.0));
                } else {
                    inside = g <= 0.0;
                }
            }
            // Finite-time arrival: the measure at least halves over one probe
            // interval from a level above the noise floor, i.e. a linear
            // extrapolation reaches zero within one more interval.
            const bool arriving = prev_h > floor && (h <= 0.0 || 2.0 * h <= prev_h);
            if (crossed) {
                // Report the crossing itself rather than the probe after it.
                double lo = prev_t, hi = t;
                for (int it = 0; it < 60 && hi - lo > 0.0; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    const double gm = evaluate(region.g(), traj.sample_at(mid));
                    if (gm != 0.0 && (gm > 0.0) == (prev_g > 0.0)) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                State y = traj.sample_at(hi);
                const double hy = measure(region, y);
                o.entry = Violation{samples[i], hi, std::move(y), hy};
                break;
            }
            if (h <= core && (inside || arriving)) {
                o.entry = Violation{samples[i], t, std::move(x), h};
                break;
            }
            prev_h = h;
            prev_g = g;
            prev_t = t;
        }
        return o;
    });

    for (const Outcome& o : outcomes) {
        if (o.termination == Termination::blowup) ++rep.blowups;
        if (o.termination == Termination::step_underflow || o.termination == Termination::step_limit) {
            ++rep.integration_failures;
        }
        if (o.entry) {
            ++rep.violations;
            if (!rep.worst) rep.worst = o.entry;
        }
    }
    if (rep.violations > 0) {
        rep.verdict = Verdict::fail;
        rep.failure_kind = "entry";
    } else if (rep.integration_failures > 0) {
        rep.verdict = Verdict::inconclusive;
        rep.failure_kind = "integration";
    } else {
        rep.verdict = Verdict::pass;
    }
    return rep;
}

SampleCloud estimate_largest_invariant_set(const Region& container, const VectorField& field,
                                           const LargestInvariantParams& params) {
    const double escape = resolve(params.escape_tol, default_escape_tol(container));
    SampleCloud cloud = container.kind() == RegionKind::whole_space && !container.has_box()
                            ? throw std::invalid_argument("whole-space container needs a box")
                            : sample_region(container, params.resolution, params.sampling);

    const IntegratorConfig cfg = with_horizon(params.integrator, params.horizon);
    auto keep = parallel_map<char>(cloud.points.size(), [&](std::size_t i) -> char {
        for (const bool backward : {false, true}) {
            Trajectory traj = backward ? integrate_backward(field, cloud.points[i], cfg)
                                       : integrate(field, cloud.points[i], cfg);
            if (traj.termination() != Termination::horizon) return 0;
            if (!track(traj, container, escape, params.probe_count).stayed) return 0;
        }
        return 1;
    });

    SampleCloud out;
    out.resolution = cloud.resolution;
    out.grid_nodes = cloud.grid_nodes;
    out.source = cloud.source;
    for (std::size_t i = 0; i < cloud.points.size(); ++i) {
        if (keep[i]) out.points.push_back(cloud.points[i]);
    }
    return out;
}

}  // namespace limitset
