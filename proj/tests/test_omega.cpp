#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "limitset/omega.hpp"
#include "limitset/regions.hpp"
#include "oracles.hpp"

using namespace limitset;

namespace {

VectorField field(std::vector<std::string> comps) {
    std::vector<Expression> parsed;
    for (const auto& c : comps) parsed.push_back(parse(c, static_cast<int>(comps.size())));
    return VectorField(std::move(parsed));
}

const VectorField& eq4() {
    static const VectorField f = field({"-abs(x2)*x2", "abs(x2)*x1"});
    return f;
}

IntegratorConfig horizon(double t_end) {
    IntegratorConfig c;
    c.t_end = t_end;
    return c;
}

OmegaEstimate omega_of(const VectorField& f, const State& x0, double t_end = 200, OmegaParams p = {}) {
    return estimate_omega(integrate(f, x0, horizon(t_end)), p);
}

// Same sample times as the estimator uses.
std::vector<State> tail_samples(const Trajectory& tr, const OmegaEstimate& est) {
    std::vector<State> out;
    const std::size_t m = est.params.sample_count;
    for (std::size_t i = 0; i < m; ++i) {
        const double t = i + 1 == m ? est.window_end
                                    : est.window_start + (est.window_end - est.window_start) * i / double(m - 1);
        out.push_back(tr.sample_at(t));
    }
    return out;
}

}  // namespace

TEST_CASE("an equilibrium is its own limit set") {
    const auto est = omega_of(eq4(), {2, 0});
    REQUIRE(est.representatives.size() == 1);
    CHECK(est.representatives[0] == State{2, 0});
    CHECK(est.settled);
    CHECK(est.gap == 0.0);
    CHECK(est.radii[0] == 0.0);
    CHECK(est.cluster_sizes[0] == est.params.sample_count);
    CHECK(est.window_start == 150.0);
    CHECK(est.window_end == 200.0);
}

TEST_CASE("the three cases of the planar pole map") {
    const auto up = omega_of(eq4(), {3, 4});
    REQUIRE(up.representatives.size() == 1);
    CHECK(distance(up.representatives[0], State{-5, 0}) < 1e-2);
    CHECK(up.settled);

    const auto down = omega_of(eq4(), {3, -4});
    REQUIRE(down.representatives.size() == 1);
    CHECK(distance(down.representatives[0], State{5, 0}) < 1e-2);
    CHECK(down.settled);
}

TEST_CASE("pole map property over random initial states") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> r(0.5, 3.0), th(0.2, std::numbers::pi - 0.2);
    std::bernoulli_distribution below(0.5);
    for (int trial = 0; trial < 16; ++trial) {
        const double angle = below(rng) ? -th(rng) : th(rng);
        const State x0 = oracle::polar(r(rng), angle);
        const auto est = omega_of(eq4(), x0);
        CAPTURE(x0);
        CHECK(est.settled);
        const State pole = oracle::eq4_omega(x0);
        for (const auto& rep : est.representatives) {
            CHECK(std::fabs(norm(rep) - norm(x0)) <= 1e-3);
            CHECK(distance(rep, pole) <= 1e-2);
        }
    }
}

TEST_CASE("every tail sample is within cluster_eps of a representative") {
    for (const State& x0 : {State{1, 0}, State{0.3, 1.2}, State{-1, 0.5}}) {
        for (const auto* f : {&eq4()}) {
            const auto tr = integrate(*f, x0, horizon(60));
            OmegaParams p;
            p.cluster_eps = 5e-2;
            const auto est = estimate_omega(tr, p);
            for (const auto& x : tail_samples(tr, est)) CHECK(distance_to_points(x, est.representatives) <= p.cluster_eps);
            for (std::size_t c = 0; c < est.radii.size(); ++c) CHECK(est.radii[c] <= p.cluster_eps);
        }
    }
    const auto h = field({"x2", "-x1"});
    const auto tr = integrate(h, State{1, 0}, horizon(100));
    const auto est = estimate_omega(tr);
    for (const auto& x : tail_samples(tr, est)) CHECK(distance_to_points(x, est.representatives) <= 1e-2);
}

TEST_CASE("periodic orbit: representatives cover the circle") {
    const auto est = omega_of(field({"x2", "-x1"}), {1, 0}, 100);
    CHECK(est.settled);
    CHECK(est.representatives.size() > 100);
    for (const auto& rep : est.representatives) CHECK(std::fabs(norm(rep) - 1.0) <= 1e-6);
    for (int k = 0; k < 3600; ++k) {
        const State p = oracle::polar(1.0, 2 * std::numbers::pi * k / 3600);
        CHECK(distance_to_points(p, est.representatives) <= est.params.cluster_eps);
    }
}

TEST_CASE("drifting orbits are reported as unsettled") {
    const auto est = omega_of(field({"1", "0"}), {0, 0}, 200);
    CHECK_FALSE(est.settled);
    // The halves are 1000 samples apart in time.
    CHECK(est.gap == doctest::Approx(1000 * 50.0 / 1999).epsilon(1e-9));
}

TEST_CASE("estimation is refused without a bounded orbit to the horizon") {
    const auto tr = integrate(field({"x1^2"}), State{1.0}, horizon(5));
    CHECK_THROWS_AS(estimate_omega(tr), OmegaRefused);

    OmegaParams bad;
    bad.tail_fraction = 1.0;
    CHECK_THROWS_AS(estimate_omega(integrate(eq4(), State{1, 0}, horizon(1)), bad), std::invalid_argument);
    bad = {};
    bad.cluster_eps = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("estimate is stable under advancing the initial state") {
    // omega(phi(T, x0)) = omega(x0). The poles are semi-stable, so T is kept
    // short enough that x2 is still far above the integration noise; a state
    // advanced onto the pole at noise level may legitimately land on the
    // other side.
    for (const State& x0 : {State{3, 4}, State{0.5, -1}}) {
        const auto tr = integrate(eq4(), x0, horizon(200));
        const auto a = estimate_omega(tr);
        for (double T : {0.5, 1.0, 2.0}) {
            REQUIRE(std::fabs(tr.sample_at(T)[1]) > 1e-6);
            const auto b = omega_of(eq4(), tr.sample_at(T));
            CHECK(hausdorff(a.representatives, b.representatives) <= 2 * a.params.cluster_eps);
        }
    }
    const auto h = field({"x2", "-x1"});
    const auto tr = integrate(h, State{1, 0}, horizon(100));
    const auto a = estimate_omega(tr);
    const auto b = estimate_omega(integrate(h, tr.sample_at(2.3), horizon(100)));
    CHECK(hausdorff(a.representatives, b.representatives) <= 2 * a.params.cluster_eps);
}

TEST_CASE("doubling the horizon does not increase the settledness gap") {
    for (const State& x0 : {State{3, 4}, State{3, -4}, State{2, 0}, State{0, 1}}) {
        double previous = INFINITY;
        for (double t_end : {50.0, 100.0, 200.0}) {
            const double gap = omega_of(eq4(), x0, t_end).gap;
            CHECK(gap <= previous + 1e-12);
            previous = gap;
        }
    }
}

TEST_CASE("attraction profiles") {
    const auto eq = integrate(eq4(), State{2, 0}, horizon(50));
    const auto flat = attraction_profile(eq, estimate_omega(eq), 100);
    for (const auto& [t, d] : flat.samples) CHECK(d == 0.0);

    const auto tr = integrate(eq4(), State{0, 1}, horizon(200));
    const auto est = estimate_omega(tr);
    const auto prof = attraction_profile(tr, est, 400);
    REQUIRE(prof.samples.size() == 400);
    CHECK(prof.samples.front().first == 0.0);
    CHECK(prof.samples.back().first == 200.0);
    for (std::size_t k = 300; k < 400; ++k) CHECK(prof.samples[k].second <= 1e-2);
    for (std::size_t k = 0; k + 1 < 400; ++k) {
        CHECK(prof.envelope[k] >= prof.envelope[k + 1]);
        CHECK(prof.envelope[k] >= prof.samples[k].second);
    }

    const auto h = field({"x2", "-x1"});
    const auto htr = integrate(h, State{1, 0}, horizon(100));
    const auto hprof = attraction_profile(htr, estimate_omega(htr), 500);
    for (const auto& [t, d] : hprof.samples) CHECK(d <= 1e-2);
    CHECK(attraction_profile(htr, estimate_omega(htr), 0).samples.empty());
}
