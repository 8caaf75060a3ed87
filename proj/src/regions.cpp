#include "limitset/regions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>

namespace limitset {

namespace {

constexpr int kNewtonIterations = 40;
constexpr int kRefineIterations = 200;

void check_box(const Box& box, int dimension) {
    if (box.empty()) return;
    if (static_cast<int>(box.size()) != dimension) throw DimensionError("box dimension does not match region");
    for (const auto& iv : box) {
        if (!(iv.lo <= iv.hi) || !std::isfinite(iv.lo) || !std::isfinite(iv.hi)) {
            throw std::invalid_argument("box intervals must be finite with lo <= hi");
        }
    }
}

void check_tol(double tol) {
    if (!(tol >= 0.0) || !std::isfinite(tol)) throw std::invalid_argument("region tolerance must be finite and >= 0");
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

State eval_gradient(const Region& r, std::span<const double> x) {
    State g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) g[i] = evaluate(r.g_gradient()[i], x);
    return g;
}

// Newton projection onto {g = 0}. Returns nullopt if it does not converge.
std::optional<State> project_to_surface(const Region& r, State y, double target) {
    for (int it = 0; it < kNewtonIterations; ++it) {
        const double gv = evaluate(r.g(), y);
        if (std::fabs(gv) <= target) return y;
        State grad = eval_gradient(r, y);
        const double gg = dot(grad, grad);
        if (!(gg > 0.0) || !std::isfinite(gg)) return std::nullopt;
        for (std::size_t i = 0; i < y.size(); ++i) y[i] -= gv * grad[i] / gg;
    }
    if (std::fabs(evaluate(r.g(), y)) <= target) return y;
    return std::nullopt;
}

std::vector<double> grid_axis(const Interval& iv, std::size_t resolution) {
    std::vector<double> axis(resolution);
    const double span = iv.hi - iv.lo;
    for (std::size_t i = 0; i < resolution; ++i) {
        axis[i] = iv.lo + span * static_cast<double>(i) / static_cast<double>(resolution - 1);
    }
    return axis;
}

// Closest point on the implicit surface to x, starting from y.
std::optional<State> refine_on_surface(const Region& r, std::span<const double> x, State y) {
    const double target = std::max(r.tol() * 1e-3, 1e-14);
    auto p = project_to_surface(r, std::move(y), target);
    if (!p) return std::nullopt;
    y = *p;
    for (int it = 0; it < kRefineIterations; ++it) {
        State grad = eval_gradient(r, y);
        const double gn = norm(grad);
        if (!(gn > 0.0)) break;
        State diff(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) diff[i] = x[i] - y[i];
        const double normal = dot(diff, grad) / gn;
        // Tangential step toward x, halved until the projected point does
        // not move away from x (large steps overshoot on curved surfaces).
        std::optional<State> q;
        for (double step = 1.0; step > 1e-6; step *= 0.5) {
            State next = y;
            for (std::size_t i = 0; i < x.size(); ++i) next[i] += step * (diff[i] - normal * grad[i] / gn);
            auto cand = project_to_surface(r, next, target);
            if (cand && distance(x, *cand) <= distance(x, y)) {
                q = std::move(cand);
                break;
            }
        }
        if (!q) break;
        const double moved = distance(*q, y);
        y = *q;
        if (moved <= kRefinementTol * 1e-3) break;
    }
    return y;
}

}  // namespace

bool inside(const Box& box, std::span<const double> x, double slack) {
    if (box.size() != x.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] < box[i].lo - slack || x[i] > box[i].hi + slack) return false;
    }
    return true;
}

std::string to_string(RegionKind kind) {
    switch (kind) {
    case RegionKind::zero_set:
        return "zero_set";
    case RegionKind::sublevel:
        return "sublevel";
    case RegionKind::point_set:
        return "point_set";
    case RegionKind::whole_space:
        return "whole_space";
    }
    return "unknown";
}

Region Region::zero_set(Expression g, int dimension, double tol, Box box, bool clip) {
    if (dimension < 1) throw std::invalid_argument("dimension must be positive");
    if (g.max_variable() > dimension) throw DimensionError("g uses variables beyond the region dimension");
    check_tol(tol);
    check_box(box, dimension);
    if (clip && box.empty()) throw std::invalid_argument("clipped region needs a box");
    Region r;
    r.kind_ = RegionKind::zero_set;
    r.dimension_ = dimension;
    r.tol_ = tol;
    r.box_ = std::move(box);
    r.clip_ = clip;
    r.grad_ = gradient(g, dimension);
    r.g_ = std::move(g);
    return r;
}

Region Region::sublevel(Expression g, int dimension, double tol, Box box, bool clip) {
    Region r = zero_set(std::move(g), dimension, tol, std::move(box), clip);
    r.kind_ = RegionKind::sublevel;
    return r;
}

Region Region::point_set(std::vector<State> points, double tol) {
    if (points.empty()) throw std::invalid_argument("point set must be non-empty");
    check_tol(tol);
    const std::size_t n = points.front().size();
    if (n == 0) throw std::invalid_argument("points must have positive dimension");
    for (const auto& p : points) {
        if (p.size() != n) throw DimensionError("point set entries have different dimensions");
        if (!std::all_of(p.begin(), p.end(), [](double v) { return std::isfinite(v); })) {
            throw std::invalid_argument("point set entries must be finite");
        }
    }
    Region r;
    r.kind_ = RegionKind::point_set;
    r.dimension_ = static_cast<int>(n);
    r.tol_ = tol;
    r.points_ = std::move(points);
    // The bounding box of the points, for reporting.
    r.box_.assign(n, Interval{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()});
    for (const auto& p : r.points_) {
        for (std::size_t i = 0; i < n; ++i) {
            r.box_[i].lo = std::min(r.box_[i].lo, p[i]);
            r.box_[i].hi = std::max(r.box_[i].hi, p[i]);
        }
    }
    return r;
}

Region Region::whole_space(int dimension, Box box) {
    if (dimension < 1) throw std::invalid_argument("dimension must be positive");
    check_box(box, dimension);
    Region r;
    r.kind_ = RegionKind::whole_space;
    r.dimension_ = dimension;
    r.tol_ = 0.0;
    r.box_ = std::move(box);
    return r;
}

Region Region::with_tol(double tol) const {
    check_tol(tol);
    Region r = *this;
    r.tol_ = tol;
    return r;
}

Region Region::with_box(Box box) const {
    check_box(box, dimension_);
    Region r = *this;
    r.box_ = std::move(box);
    return r;
}

double Region::excess(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != dimension_) throw DimensionError("point dimension does not match region");
    switch (kind_) {
    case RegionKind::zero_set:
        return std::fabs(evaluate(g_, x));
    case RegionKind::sublevel:
        return evaluate(g_, x);
    case RegionKind::point_set:
        return distance_to_points(x, points_);
    case RegionKind::whole_space:
        return -std::numeric_limits<double>::infinity();
    }
    return std::numeric_limits<double>::infinity();
}

bool member(const Region& region, std::span<const double> x, double tol) {
    if (region.clipped() && !inside(region.box(), x, tol)) return false;
    return region.excess(x) <= tol;
}

bool member(const Region& region, std::span<const double> x) { return member(region, x, region.tol()); }

SampleCloud sample_region(const Region& region, std::size_t resolution, const SamplingOptions& options) {
    if (resolution < 2) throw std::invalid_argument("sampling resolution must be at least 2");
    SampleCloud cloud;
    cloud.resolution = resolution;
    cloud.source = region.kind();

    if (region.kind() == RegionKind::point_set) {
        cloud.points = region.points();
        return cloud;
    }
    if (!region.has_box()) throw std::invalid_argument("sampling an implicit region needs a bounding box");

    const std::size_t n = static_cast<std::size_t>(region.dimension());
    const Box& box = region.box();
    std::vector<std::vector<double>> axes;
    std::vector<double> spacing(n);
    double half_diag = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        axes.push_back(grid_axis(box[i], resolution));
        spacing[i] = (box[i].hi - box[i].lo) / static_cast<double>(resolution - 1);
        half_diag += 0.25 * spacing[i] * spacing[i];
    }
    half_diag = std::sqrt(half_diag);

    std::mt19937_64 rng(options.seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);

    const bool implicit = region.kind() == RegionKind::zero_set || region.kind() == RegionKind::sublevel;
    const double tol = region.tol();
    const double target = std::max(tol * 1e-3, 1e-14);
    std::set<State> seen;
    std::vector<std::size_t> idx(n, 0);
    State x(n);
    for (bool done = false; !done;) {
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = axes[i][idx[i]];
            if (options.jitter > 0.0) x[i] += options.jitter * spacing[i] * unit(rng);
        }
        ++cloud.grid_nodes;

        try {
            if (member(region, x, tol)) {
                if (seen.insert(x).second) cloud.points.push_back(x);
            } else if (implicit) {
                // The surface may cross this node's cell if |g| is within
                // reach of a first-order step of length half_diag.
                const double gv = evaluate(region.g(), x);
                State grad = eval_gradient(region, x);
                if (std::fabs(gv) <= 1.5 * norm(grad) * half_diag) {
                    if (auto y = project_to_surface(region, x, target)) {
                        if (distance(*y, x) <= 2.0 * half_diag && inside(box, *y) && member(region, *y, tol)) {
                            if (seen.insert(*y).second) cloud.points.push_back(*y);
                        }
                    }
                }
            }
        } catch (const DomainError&) {
            // g undefined at this node: not a sample
        }

        std::size_t d = n;
        while (d > 0) {
            --d;
            if (++idx[d] < resolution) break;
            idx[d] = 0;
            if (d == 0) done = true;
        }
    }
    return cloud;
}

double distance_estimate(std::span<const double> x, const Region& region, const DistanceOptions& options) {
    switch (region.kind()) {
    case RegionKind::whole_space:
        return 0.0;
    case RegionKind::point_set:
        return distance_to_points(x, region.points());
    default:
        break;
    }
    if (member(region, x)) return 0.0;
    return distance_estimate(x, region, sample_region(region, options.resolution));
}

double distance_estimate(std::span<const double> x, const Region& region, const SampleCloud& cloud) {
    if (region.kind() == RegionKind::whole_space) return 0.0;
    if (region.kind() == RegionKind::point_set) return distance_to_points(x, region.points());
    if (member(region, x)) return 0.0;
    if (cloud.empty()) throw UndefinedDistance("region has no samples inside its box");

    std::size_t best_k = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < cloud.points.size(); ++k) {
        double d = distance(x, cloud.points[k]);
        if (d < best) {
            best = d;
            best_k = k;
        }
    }

    State start = cloud.points[best_k];
    try {
        if (region.kind() == RegionKind::sublevel && evaluate(region.g(), start) < 0.0) {
            // Walk from the interior sample toward x until g changes sign.
            State lo = start;
            State hi(x.begin(), x.end());
            for (int it = 0; it < 80; ++it) {
                State mid(lo.size());
                for (std::size_t i = 0; i < mid.size(); ++i) mid[i] = 0.5 * (lo[i] + hi[i]);
                if (evaluate(region.g(), mid) <= 0.0) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            start = lo;
        }
        if (auto y = refine_on_surface(region, x, start)) {
            if (!region.clipped() || inside(region.box(), *y, region.tol())) best = std::min(best, distance(x, *y));
        }
    } catch (const DomainError&) {
        // refinement left the domain of g; keep the cloud estimate
    }
    return best;
}

double distance_to_points(std::span<const double> x, std::span<const State> points) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : points) best = std::min(best, distance(x, p));
    return best;
}

double hausdorff(std::span<const State> a, std::span<const State> b) {
    if (a.empty() && b.empty()) return 0.0;
    if (a.empty() || b.empty()) return std::numeric_limits<double>::infinity();
    double h = 0.0;
    for (const auto& p : a) h = std::max(h, distance_to_points(p, b));
    for (const auto& p : b) h = std::max(h, distance_to_points(p, a));
    return h;
}

}  // namespace limitset
