#include "limitset/omega.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "limitset/regions.hpp"

namespace limitset {

void OmegaParams::validate() const {
    if (!(tail_fraction > 0.0 && tail_fraction < 1.0)) throw std::invalid_argument("tail_fraction must lie in (0, 1)");
    if (sample_count < 4) throw std::invalid_argument("sample_count must be at least 4");
    if (!(cluster_eps > 0.0) || !std::isfinite(cluster_eps)) throw std::invalid_argument("cluster_eps must be positive");
}

OmegaEstimate estimate_omega(const Trajectory& traj, const OmegaParams& params) {
    params.validate();
    if (traj.termination() != Termination::horizon) {
        throw OmegaRefused("trajectory ended by " + to_string(traj.termination()) +
                           "; omega-limit estimation needs a bounded orbit integrated to the horizon");
    }

    const double t_end = traj.end_time();
    const double t_a = t_end * (1.0 - params.tail_fraction);
    const std::size_t m = params.sample_count;
    const double dt = (t_end - t_a) / static_cast<double>(m - 1);
    if (!(dt > 0.0)) throw OmegaRefused("tail window is empty");

    std::vector<State> tail;
    tail.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
        const double t = i + 1 == m ? t_end : t_a + dt * static_cast<double>(i);
        tail.push_back(traj.sample_at(t));
    }

    OmegaEstimate est;
    est.params = params;
    est.window_start = t_a;
    est.window_end = t_end;

    // Greedy first-fit in time order.
    for (const auto& x : tail) {
        bool placed = false;
        for (std::size_t c = 0; c < est.representatives.size(); ++c) {
            const double d = distance(x, est.representatives[c]);
            if (d <= params.cluster_eps) {
                est.radii[c] = std::max(est.radii[c], d);
                ++est.cluster_sizes[c];
                placed = true;
                break;
            }
        }
        if (!placed) {
            est.representatives.push_back(x);
            est.radii.push_back(0.0);
            est.cluster_sizes.push_back(1);
        }
    }

    const std::size_t half = m / 2;
    std::span<const State> first(tail.data(), half);
    std::span<const State> second(tail.data() + half, m - half);
    est.gap = hausdorff(first, second);
    est.settled = est.gap <= params.cluster_eps;
    return est;
}

AttractionProfile attraction_profile(const Trajectory& traj, const OmegaEstimate& estimate, std::size_t probe_count) {
    AttractionProfile profile;
    if (probe_count == 0) return profile;
    const double t0 = traj.start_time();
    const double t1 = traj.end_time();
    profile.samples.reserve(probe_count);
    for (std::size_t k = 0; k < probe_count; ++k) {
        double t = probe_count == 1 ? t1 : t0 + (t1 - t0) * static_cast<double>(k) / static_cast<double>(probe_count - 1);
        if (k + 1 == probe_count) t = t1;
        State x = traj.sample_at(t);
        profile.samples.emplace_back(t, distance_to_points(x, estimate.representatives));
    }
    profile.envelope.resize(probe_count);
    double running = 0.0;
    for (std::size_t k = probe_count; k-- > 0;) {
        running = std::max(running, profile.samples[k].second);
        profile.envelope[k] = running;
    }
    return profile;
}

}  // namespace limitset
