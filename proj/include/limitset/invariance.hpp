#pragma once

// Sampling-based tests of positive and negative invariance, and a
// finite-horizon estimate of the largest invariant set in a container.
//
// All verdicts are relative to the region's bounding box, the sampling
// resolution and the integration horizon; none of them is a proof.

#include <cstddef>
#include <initializer_list>
#include <limits>
#include <optional>
#include <string>

#include "limitset/odeint.hpp"
#include "limitset/regions.hpp"

namespace limitset {

enum class Verdict { pass, fail, inconclusive };

std::string to_string(Verdict v);

/// FAIL dominates INCONCLUSIVE, which dominates PASS.
Verdict combine(std::initializer_list<Verdict> verdicts);

struct Violation {
    State initial;
    double time = 0.0;
    State state;
    double excess = 0.0;  // region membership measure at `state`
};

struct PositiveInvarianceParams {
    std::size_t sample_count = 64;
    std::size_t resolution = 41;
    double horizon = 20.0;
    /// NaN selects 100 * region tolerance (1e-6 if the tolerance is 0).
    double escape_tol = std::numeric_limits<double>::quiet_NaN();
    std::size_t probe_count = 400;
    IntegratorConfig integrator;
    SamplingOptions sampling;
};

struct NegativeInvarianceParams {
    std::size_t sample_count = 64;
    std::size_t resolution = 41;
    double horizon = 20.0;
    /// Outside samples satisfy excess > entry_tol. NaN selects 10 * tol.
    double entry_tol = std::numeric_limits<double>::quiet_NaN();
    /// Entry means reaching excess <= tol - margin. NaN selects tol / 2.
    double margin = std::numeric_limits<double>::quiet_NaN();
    std::size_t probe_count = 2000;
    /// Box from which outside samples are drawn; the region's box if empty.
    Box box;
    IntegratorConfig integrator;
    SamplingOptions sampling;
};

struct InvarianceReport {
    std::string mode;  // "positive" or "negative"
    Verdict verdict = Verdict::inconclusive;
    /// "none", "escape", "entry", "blowup", "no_samples", "integration"
    std::string failure_kind = "none";
    std::size_t samples_tested = 0;
    std::size_t violations = 0;
    std::size_t blowups = 0;
    std::size_t integration_failures = 0;
    /// Positive mode: the sample with the largest excess. Negative mode: the
    /// first entry event in sample order.
    std::optional<Violation> worst;

    double region_tol = 0.0;
    double tolerance = 0.0;  // escape_tol or entry_tol as resolved
    double margin = 0.0;     // negative mode only
    double horizon = 0.0;
    std::size_t sample_count = 0;
    std::size_t resolution = 0;
    std::size_t probe_count = 0;
    Box box;
};

InvarianceReport test_positive_invariance(const Region& region, const VectorField& field,
                                          const PositiveInvarianceParams& params = {});

/// Contrapositive test: trajectories started outside the region (and outside
/// the tie zone around its boundary) must not enter its tol-shrunk core. An
/// entry counts only when the trajectory arrives in finite time, i.e. the
/// defining function changes sign or a linear extrapolation of the
/// membership measure reaches zero within one probe interval; asymptotic
/// approach is not an entry.
InvarianceReport test_negative_invariance(const Region& region, const VectorField& field,
                                          const NegativeInvarianceParams& params = {});

struct LargestInvariantParams {
    std::size_t resolution = 41;
    double horizon = 10.0;
    /// NaN selects 100 * container tolerance (1e-6 if the tolerance is 0).
    double escape_tol = std::numeric_limits<double>::quiet_NaN();
    std::size_t probe_count = 400;
    IntegratorConfig integrator;
    SamplingOptions sampling;
};

/// Grid samples of the container whose forward and backward trajectories
/// over the horizon stay members at escape_tol. Possibly empty.
SampleCloud estimate_largest_invariant_set(const Region& container, const VectorField& field,
                                           const LargestInvariantParams& params = {});

double default_escape_tol(const Region& region);

/// Every `stride`-th point so that at most `count` points remain.
std::vector<State> subsample(const std::vector<State>& points, std::size_t count);

}  // namespace limitset
