#pragma once

// Finite-window estimates of omega-limit sets.

#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "limitset/odeint.hpp"

namespace limitset {

struct OmegaParams {
    double tail_fraction = 0.25;
    std::size_t sample_count = 2000;
    double cluster_eps = 1e-2;

    void validate() const;
};

struct OmegaEstimate {
    /// One trajectory sample per cluster; every tail sample lies within
    /// cluster_eps of the representative of its cluster.
    std::vector<State> representatives;
    std::vector<double> radii;
    std::vector<std::size_t> cluster_sizes;
    double window_start = 0.0;
    double window_end = 0.0;
    /// Symmetric Hausdorff distance between the clouds of the two halves of
    /// the tail window.
    double gap = 0.0;
    bool settled = false;
    OmegaParams params;
};

/// Raised when the trajectory cannot support an estimate (finite escape,
/// step failure, or a tail too short for the requested samples).
class OmegaRefused : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

OmegaEstimate estimate_omega(const Trajectory& traj, const OmegaParams& params = {});

struct AttractionProfile {
    std::vector<std::pair<double, double>> samples;  // (t, distance to representatives)
    /// envelope[k] = max of the distances from sample k to the end.
    std::vector<double> envelope;
};

AttractionProfile attraction_profile(const Trajectory& traj, const OmegaEstimate& estimate, std::size_t probe_count);

}  // namespace limitset
