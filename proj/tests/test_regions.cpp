#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "limitset/regions.hpp"
#include "oracles.hpp"

using namespace limitset;

namespace {

Box square(double a) { return {{-a, a}, {-a, a}}; }

Region circle(double tol = Region::kDefaultTol, Box box = square(2)) {
    return Region::zero_set(parse("x1^2+x2^2-1", 2), 2, tol, std::move(box));
}

double brute_force_distance(const State& x, const std::vector<State>& pts) {
    double best = INFINITY;
    for (const auto& p : pts) {
        double s = 0;
        for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - p[i]) * (x[i] - p[i]);
        best = std::min(best, std::sqrt(s));
    }
    return best;
}

}  // namespace

TEST_CASE("membership by kind") {
    const auto axis = Region::zero_set(parse("x2", 2), 2);
    CHECK(member(axis, State{0.5, 1e-9}, 1e-6));
    CHECK_FALSE(member(axis, State{0.5, 1e-3}, 1e-6));

    const auto pole = Region::point_set({{-5, 0}});
    CHECK(member(pole, State{-5, 0}, 0.0));
    CHECK_FALSE(member(pole, State{-5, 1e-300}, 0.0));
    CHECK(distance_estimate(State{-5, 1e-300}, pole) == 1e-300);

    const auto disk = Region::sublevel(parse("x1^2+x2^2-1", 2), 2);
    CHECK_FALSE(member(disk, State{1, 1}, 1e-6));
    CHECK(member(disk, State{0.1, 0.2}, 1e-6));

    const auto all = Region::whole_space(2);
    CHECK(member(all, State{1e300, -1e300}, 0.0));

    // Clipping restricts membership to the box.
    const auto arc = Region::zero_set(parse("x1^2+x2^2-1", 2), 2, 1e-6, {{0, 0.8}, {0.5, 1}}, true);
    CHECK(member(arc, oracle::polar(1, 1.2)));
    CHECK_FALSE(member(arc, oracle::polar(1, 0.2)));
    CHECK_FALSE(member(arc, oracle::polar(1, 2.5)));

    CHECK_THROWS_AS(member(Region::zero_set(parse("log(x1)", 1), 1), State{-1.0}), DomainError);
    CHECK_THROWS_AS(member(axis, State{1, 2, 3}), DimensionError);
}

TEST_CASE("tolerance inflation is monotone") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-2, 2), t(0, 1e-2);
    const std::vector<Region> regions{circle(), Region::sublevel(parse("x1*x2", 2), 2),
                                      Region::point_set({{0, 0}, {1, 1}}), Region::zero_set(parse("x2", 2), 2)};
    for (int k = 0; k < 2000; ++k) {
        const State x{u(rng), u(rng)};
        const double t1 = t(rng), t2 = t1 + t(rng);
        for (const auto& r : regions) {
            if (member(r, x, t1)) CHECK(member(r, x, t2));
        }
    }
}

TEST_CASE("sampling a circle covers every angle") {
    const auto cloud = sample_region(circle(2e-2), 401);
    REQUIRE(cloud.size() > 100);
    CHECK(cloud.resolution == 401);
    CHECK(cloud.grid_nodes == 401u * 401u);
    std::vector<double> angles;
    for (const auto& p : cloud.points) {
        CHECK(std::fabs(std::hypot(p[0], p[1]) - 1.0) <= 2e-2);
        angles.push_back(std::atan2(p[1], p[0]));
    }
    std::sort(angles.begin(), angles.end());
    double gap = angles.front() + 2 * std::numbers::pi - angles.back();
    for (std::size_t i = 1; i < angles.size(); ++i) gap = std::max(gap, angles[i] - angles[i - 1]);
    CHECK(gap < 5.0 * std::numbers::pi / 180.0);
}

TEST_CASE("every sample is a member") {
    const std::vector<Region> regions{circle(), circle(1e-3), Region::sublevel(parse("x1^2+x2^2-1", 2), 2, 1e-6, square(2)),
                                      Region::zero_set(parse("x2 - sin(3*x1)", 2), 2, 1e-6, square(2)),
                                      Region::whole_space(2, square(1))};
    for (const auto& r : regions) {
        const auto cloud = sample_region(r, 41);
        CHECK_FALSE(cloud.empty());
        for (const auto& p : cloud.points) CHECK(member(r, p, r.tol()));
    }
}

TEST_CASE("point sets, empty sets and bad resolutions") {
    const std::vector<State> pts{{1, 2}, {3, 4}, {-1, 0}};
    const auto cloud = sample_region(Region::point_set(pts), 10);
    CHECK(cloud.points == pts);
    CHECK(cloud.grid_nodes == 0);

    const auto empty = Region::zero_set(parse("x1^2+x2^2+1", 2), 2, 1e-6, square(3));
    CHECK(sample_region(empty, 51).empty());
    CHECK_THROWS_AS(distance_estimate(State{0, 0}, empty), UndefinedDistance);

    CHECK_THROWS_AS(sample_region(circle(), 1), std::invalid_argument);
    CHECK_THROWS_AS(sample_region(Region::zero_set(parse("x2", 2), 2), 11), std::invalid_argument);
}

TEST_CASE("sampling is deterministic and seeds jitter") {
    const auto a = sample_region(circle(1e-3), 61);
    const auto b = sample_region(circle(1e-3), 61);
    CHECK(a.points == b.points);

    SamplingOptions j1{0.3, 1}, j2{0.3, 2};
    const auto c = sample_region(circle(1e-3), 61, j1);
    const auto d = sample_region(circle(1e-3), 61, j1);
    const auto e = sample_region(circle(1e-3), 61, j2);
    CHECK(c.points == d.points);
    CHECK(c.points != e.points);
}

TEST_CASE("distance estimates") {
    const auto pole = Region::point_set({{-5, 0}});
    CHECK(distance_estimate(State{3, 4}, pole) == doctest::Approx(std::sqrt(80.0)).epsilon(1e-15));

    const auto axis = Region::zero_set(parse("x2", 2), 2, 1e-6, square(10));
    CHECK(std::fabs(distance_estimate(State{1, 2}, axis) - 2.0) <= 1e-6);
    CHECK(distance_estimate(State{1, 1e-9}, axis) == 0.0);
    CHECK(distance_estimate(State{7, 7}, Region::whole_space(2)) == 0.0);

    // Circle against a brute-force scan of the parametrised curve.
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.8, 1.8);
    const auto c = circle();
    const auto cloud = sample_region(c, 201);
    for (int k = 0; k < 40; ++k) {
        const State x{u(rng), u(rng)};
        const double expected = oracle::distance_to_curve(
            x, [](double t) { return oracle::polar(1, t); }, 0, 2 * std::numbers::pi);
        CHECK(std::fabs(distance_estimate(x, c, cloud) - expected) <= 1e-5);
    }
}

TEST_CASE("zero distance coincides with membership at the refinement tolerance") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    const auto c = circle(kRefinementTol);
    const auto cloud = sample_region(c, 201);
    for (int k = 0; k < 200; ++k) {
        State x = k % 2 ? State{u(rng), u(rng)} : oracle::polar(1.0 + 1e-8 * u(rng), u(rng) * 2);
        CHECK((distance_estimate(x, c, cloud) == 0.0) == member(c, x, kRefinementTol));
    }
}

TEST_CASE("point-set distance matches an exhaustive scan and is 1-Lipschitz") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(-4, 4);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<State> pts(50);
        for (auto& p : pts) p = {u(rng), u(rng), u(rng)};
        const auto r = Region::point_set(pts);
        const State x{u(rng), u(rng), u(rng)}, y{u(rng), u(rng), u(rng)};
        CHECK(distance_estimate(x, r) == brute_force_distance(x, pts));
        CHECK(distance_to_points(x, pts) == brute_force_distance(x, pts));
        CHECK(std::fabs(distance_estimate(x, r) - distance_estimate(y, r)) <= distance(x, y) + 1e-12);
    }
    CHECK(std::isinf(distance_to_points(State{0.0}, std::vector<State>{})));
}

TEST_CASE("Hausdorff distance") {
    const std::vector<State> a{{0, 0}, {1, 0}}, b{{0, 0}, {1, 0}, {1, 3}};
    CHECK(hausdorff(a, a) == 0.0);
    CHECK(hausdorff(a, b) == doctest::Approx(3.0));
    CHECK(hausdorff(b, a) == hausdorff(a, b));
    CHECK(std::isinf(hausdorff(a, std::vector<State>{})));
    CHECK(hausdorff(std::vector<State>{}, std::vector<State>{}) == 0.0);
}

TEST_CASE("box helpers and region variants") {
    const Box b{{0, 1}, {-1, 1}};
    CHECK(inside(b, State{0.5, 0}));
    CHECK_FALSE(inside(b, State{1.5, 0}));
    CHECK(inside(b, State{1.05, 0}, 0.1));

    const auto c = circle(1e-6);
    CHECK(c.with_tol(0.1).tol() == 0.1);
    CHECK(c.with_box(square(1)).box().size() == 2);
    CHECK(to_string(RegionKind::zero_set) == "zero_set");
    CHECK(c.excess(State{2, 0}) == doctest::Approx(3.0));
    CHECK(Region::sublevel(parse("x1", 1), 1).excess(State{-2.0}) == -2.0);
    CHECK_THROWS_AS(Region::zero_set(parse("x3", 3), 2), DimensionError);
    CHECK_THROWS_AS(Region::point_set({}), std::invalid_argument);
}
