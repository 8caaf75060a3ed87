#pragma once

// Sets in state space with tolerance-based membership: zero sets {g = 0},
// sublevel sets {g <= 0}, finite point sets and the whole space. The
// closure of a set is modelled by inflating the membership tolerance.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "limitset/expr.hpp"
#include "limitset/odeint.hpp"

namespace limitset {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

/// Axis-aligned box, one interval per coordinate.
using Box = std::vector<Interval>;

bool inside(const Box& box, std::span<const double> x, double slack = 0.0);

enum class RegionKind { zero_set, sublevel, point_set, whole_space };

std::string to_string(RegionKind kind);

class Region {
public:
    static constexpr double kDefaultTol = 1e-6;

    /// {x : g(x) = 0}. `clip` restricts membership to the box as well.
    static Region zero_set(Expression g, int dimension, double tol = kDefaultTol, Box box = {}, bool clip = false);
    /// {x : g(x) <= 0}.
    static Region sublevel(Expression g, int dimension, double tol = kDefaultTol, Box box = {}, bool clip = false);
    static Region point_set(std::vector<State> points, double tol = kDefaultTol);
    static Region whole_space(int dimension, Box box = {});

    RegionKind kind() const { return kind_; }
    int dimension() const { return dimension_; }
    double tol() const { return tol_; }
    const Box& box() const { return box_; }
    bool has_box() const { return !box_.empty(); }
    bool clipped() const { return clip_; }

    /// Defining function; only meaningful for zero_set and sublevel.
    const Expression& g() const { return g_; }
    const std::vector<Expression>& g_gradient() const { return grad_; }
    const std::vector<State>& points() const { return points_; }

    Region with_tol(double tol) const;
    Region with_box(Box box) const;

    /// Membership measure in region units: |g| for zero sets, g for sublevel
    /// sets, Euclidean distance for point sets, -inf for the whole space.
    /// member(x, tol) <=> excess(x) <= tol (and, when clipped, x in the box).
    double excess(std::span<const double> x) const;

private:
    Region() = default;

    RegionKind kind_ = RegionKind::whole_space;
    int dimension_ = 0;
    double tol_ = kDefaultTol;
    Box box_;
    bool clip_ = false;
    Expression g_;
    std::vector<Expression> grad_;
    std::vector<State> points_;
};

/// Throws DomainError if the defining expression cannot be evaluated at x.
bool member(const Region& region, std::span<const double> x, double tol);
bool member(const Region& region, std::span<const double> x);

struct SamplingOptions {
    /// Uniform jitter applied to grid nodes, as a fraction of the grid spacing.
    double jitter = 0.0;
    std::uint64_t seed = 0;
};

struct SampleCloud {
    std::vector<State> points;
    std::size_t resolution = 0;
    std::size_t grid_nodes = 0;  // nodes visited, 0 for point sets
    RegionKind source = RegionKind::whole_space;

    bool empty() const { return points.empty(); }
    std::size_t size() const { return points.size(); }
};

/// Uniform grid over the box keeping members at the region tolerance. For
/// implicit regions, nodes whose cell may straddle the surface {g = 0} are
/// additionally projected onto it with Newton steps along grad g, so thin
/// sets such as curves are represented. Output order is deterministic.
SampleCloud sample_region(const Region& region, std::size_t resolution, const SamplingOptions& options = {});

class UndefinedDistance : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Absolute accuracy target of the local refinement in distance_estimate.
inline constexpr double kRefinementTol = 1e-6;

struct DistanceOptions {
    std::size_t resolution = 201;
};

/// Estimated Euclidean distance from x to the region. Exact for point sets
/// and the whole space; for implicit regions, nearest cloud sample refined
/// by a projected-gradient search on the surface. Members get 0.
double distance_estimate(std::span<const double> x, const Region& region, const DistanceOptions& options = {});

/// Same, reusing a precomputed cloud of the region.
double distance_estimate(std::span<const double> x, const Region& region, const SampleCloud& cloud);

/// Nearest-point distance to a finite set; +inf for an empty set.
double distance_to_points(std::span<const double> x, std::span<const State> points);

/// Symmetric Hausdorff distance between finite sets; +inf if exactly one is
/// empty, 0 if both are.
double hausdorff(std::span<const State> a, std::span<const State> b);

}  // namespace limitset
