#pragma once

// Numerical certificates for two omega-limit set estimates:
//
//  * Theorem-1 style: Omega positively invariant and compact, A negatively
//    invariant, grad V . f != 0 on Omega \ A. Then omega(x0) lies in the
//    largest invariant set M of closure(A) intersected with Omega.
//  * Theorem-2 style: for a bounded orbit and any C^1 function V,
//    omega(x0) meets S = {grad V . f = 0}.
//
// Thresholds on |grad V . f| are compared after dividing by a scale that is
// linear in V (see lie_scale), so every verdict is unchanged by V <- cV.

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "limitset/expr.hpp"
#include "limitset/invariance.hpp"
#include "limitset/odeint.hpp"
#include "limitset/omega.hpp"
#include "limitset/regions.hpp"

namespace limitset {

/// grad V . f together with its individual terms (dV/dx_i) f_i.
class LieDerivative {
public:
    LieDerivative(const Expression& v, const VectorField& field);

    const Expression& expression() const { return sum_; }
    double value(std::span<const double> x) const;
    /// sum_i |(dV/dx_i) f_i|, which bounds |value| and carries the scale of V
    /// even where the terms cancel exactly.
    double absolute_terms(std::span<const double> x) const;

private:
    Expression sum_;
    std::vector<Expression> terms_;
};

/// Normalising scale: max of absolute_terms over the points (0 if all vanish).
double lie_scale(const LieDerivative& lie, std::span<const State> points);

inline double normalized(double value, double scale) { return scale > 0.0 ? std::fabs(value) / scale : 0.0; }

// ---------------------------------------------------------------------------

struct Theorem1Params {
    std::size_t resolution = 41;  // grid for sampling Omega
    /// Samples closer than delta to A are excluded from condition (i).
    /// NaN selects 10 * A.tol.
    double delta = std::numeric_limits<double>::quiet_NaN();
    double epsilon_margin = 1e-8;  // normalised min |grad V . f| must exceed this
    double incl_tol = 1e-2;
    std::size_t x0_count = 12;
    IntegratorConfig integrator;  // t_end is the omega-estimation horizon
    OmegaParams omega;
    PositiveInvarianceParams omega_invariance;
    NegativeInvarianceParams a_invariance;
    LargestInvariantParams m_hat;
};

struct ConditionOne {
    Verdict verdict = Verdict::inconclusive;
    double delta = 0.0;
    std::size_t samples_total = 0;
    std::size_t samples_considered = 0;
    double min_abs_lie = 0.0;
    double scale = 0.0;
    double normalized_min = 0.0;
    std::optional<State> argmin;
};

struct OmegaInclusion {
    State x0;
    Verdict verdict = Verdict::inconclusive;
    std::string termination;
    std::vector<State> representatives;
    bool settled = false;
    double gap = 0.0;
    double max_dist_to_m_hat = 0.0;
};

struct Theorem1Report {
    Verdict overall = Verdict::inconclusive;
    std::string lie_expression;
    std::size_t omega_samples = 0;
    InvarianceReport omega_invariance;  // spot check of the Omega hypothesis
    ConditionOne condition_i;
    InvarianceReport condition_ii;
    std::size_t container_size = 0;
    std::vector<State> m_hat;
    Verdict conclusion = Verdict::inconclusive;
    double max_dist_to_m_hat = 0.0;
    std::vector<OmegaInclusion> per_x0;
    Theorem1Params params;
};

Theorem1Report check_theorem1(const VectorField& field, const Region& omega_region, const Region& a_region,
                              const Expression& v, const Theorem1Params& params = {});

// ---------------------------------------------------------------------------

struct Theorem2Params {
    IntegratorConfig integrator;
    OmegaParams omega;
    double s_tol = 1e-6;     // normalised |grad V . f| at a representative
    double bound = 1e6;      // boundedness surrogate for the positive orbit
    Box box;                 // enables geometric distance to S when non-empty
    std::size_t probe_count = 1000;
    /// Optional grid for the reachability set {x : phi(t, x) in S for some t}.
    std::vector<State> reach_grid;
    double incl_tol = 1e-2;
    LargestInvariantParams m_hat;
};

struct Theorem2Point {
    State x0;
    Verdict verdict = Verdict::inconclusive;
    Verdict bounded = Verdict::inconclusive;
    std::string termination;
    double max_norm = 0.0;
    std::vector<State> representatives;
    bool settled = false;
    double gap = 0.0;
    double min_abs_lie = 0.0;
    double scale = 0.0;
    double normalized_min = 0.0;
    std::optional<double> distance_to_s;
    std::optional<double> max_dist_to_m_hat;
    std::string note;
};

struct Theorem2Report {
    Verdict overall = Verdict::inconclusive;
    std::string lie_expression;
    std::vector<Theorem2Point> points;
    // Reachability grid results (empty when no grid was given).
    std::vector<State> reach_grid;
    std::vector<char> reaches_s;
    std::vector<State> m_hat;
    Verdict m_hat_inclusion = Verdict::inconclusive;
    bool m_hat_checked = false;
    Theorem2Params params;
};

Theorem2Report check_theorem2(const VectorField& field, const Expression& v, const std::vector<State>& x0s,
                              const Theorem2Params& params = {});

// ---------------------------------------------------------------------------

struct LieSignal {
    std::vector<std::pair<double, double>> samples;  // (t, p(t))
    double threshold = 0.0;
    std::size_t sign_changes = 0;  // ignoring |p| <= threshold
    double min_abs = 0.0;
    bool has_zero_crossing = false;  // strict sign change or exact zero
};

/// p(t) = grad V(phi(t)) . f(phi(t)) at probe_count equispaced times.
LieSignal lie_signal(const Trajectory& traj, const Expression& v, const VectorField& field, std::size_t probe_count,
                     double threshold = 1e-9);

struct SweepFailure {
    State x0;
    std::string reason;
};

struct SweepSummary {
    std::size_t total = 0;
    std::size_t evaluated = 0;  // excludes blow-ups
    std::size_t passed = 0;
    std::size_t blowups = 0;
    double fraction = 0.0;  // passed / evaluated
    double worst_min_abs_lie = 0.0;
    double worst_normalized = 0.0;
    std::vector<SweepFailure> failures;
};

SweepSummary weak_attractor_sweep(const VectorField& field, const Expression& v, const std::vector<State>& grid,
                                  const Theorem2Params& params = {});

/// Tensor grid with `counts[i]` nodes on box[i].
std::vector<State> make_grid(const Box& box, const std::vector<std::size_t>& counts);

}  // namespace limitset
