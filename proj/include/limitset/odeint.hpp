#pragma once

// Adaptive Dormand-Prince 5(4) integration of autonomous fields with
// dense output and finite-escape detection.

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "limitset/expr.hpp"

namespace limitset {

using State = std::vector<double>;

/// x' = f(x), with f given component-wise by expressions over x1..xn.
class VectorField {
public:
    VectorField() = default;
    explicit VectorField(std::vector<Expression> components);

    std::size_t dimension() const { return components_.size(); }
    const std::vector<Expression>& components() const { return components_; }

    /// Field with every component negated; integrating it forward runs the
    /// original flow backward.
    VectorField reversed() const;
    bool is_reversed() const { return sign_ < 0.0; }

    /// Writes f(x) into `out`. Throws DomainError on evaluation failure or a
    /// non-finite component.
    void evaluate(std::span<const double> x, std::span<double> out) const;
    State operator()(std::span<const double> x) const;

    /// Total number of abs/sign switches over all components.
    std::size_t switch_count() const { return switches_; }
    /// evaluate() with the switches frozen at `modes` (see evaluate_locked);
    /// the actual switch signs at x are written to `seen` when non-null.
    void evaluate_locked(std::span<const double> x, std::span<double> out, std::span<const signed char> modes,
                         std::vector<signed char>* seen) const;

private:
    std::vector<Expression> components_;
    std::size_t switches_ = 0;
    double sign_ = 1.0;
};

struct IntegratorConfig {
    double rel_tol = 1e-9;
    double abs_tol = 1e-12;
    double initial_step = 0.0;  // 0 selects a starting step automatically
    double max_step = 0.0;      // 0 means unbounded (t_end)
    double min_step = 1e-14;
    double t_end = 200.0;
    double blowup_norm = 1e8;
    std::size_t max_steps = 10'000'000;

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;
};

enum class Termination {
    horizon,
    blowup,
    step_underflow,
    step_limit,
};

std::string to_string(Termination t);

class Trajectory {
public:
    struct Step {
        double t0 = 0.0;
        double h = 0.0;
        // Hairer's continuous-output coefficients, each of length n.
        State r1, r2, r3, r4, r5;
    };

    std::size_t dimension() const { return dimension_; }
    std::size_t size() const { return times_.size(); }
    const std::vector<double>& times() const { return times_; }
    const std::vector<State>& states() const { return states_; }
    const std::vector<Step>& steps() const { return steps_; }

    double start_time() const { return times_.front(); }
    double end_time() const { return times_.back(); }
    const State& initial_state() const { return states_.front(); }
    const State& final_state() const { return states_.back(); }

    Termination termination() const { return termination_; }
    /// Time at which the blow-up threshold was crossed (an upper estimate of
    /// the escape time); NaN unless termination() == blowup.
    double blowup_time() const { return blowup_time_; }
    bool backward() const { return backward_; }
    std::size_t rejected_steps() const { return rejected_; }

    /// Dense output at `t`. Stored knots are returned verbatim.
    State sample_at(double t) const;

    /// Largest Euclidean norm over the stored knots.
    double max_norm() const;

private:
    friend Trajectory integrate(const VectorField&, std::span<const double>, const IntegratorConfig&);

    std::size_t dimension_ = 0;
    std::vector<double> times_;
    std::vector<State> states_;
    std::vector<Step> steps_;
    Termination termination_ = Termination::horizon;
    double blowup_time_ = std::numeric_limits<double>::quiet_NaN();
    bool backward_ = false;
    std::size_t rejected_ = 0;
};

class OutOfRange : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

Trajectory integrate(const VectorField& field, std::span<const double> x0, const IntegratorConfig& config);

/// Integrates -f; times in the result are elapsed backward times >= 0.
Trajectory integrate_backward(const VectorField& field, std::span<const double> x0, const IntegratorConfig& config);

State sample_at(const Trajectory& traj, double t);

/// Header `t,x1,...,xn`, one row per knot, 17 significant digits.
void write_csv(std::ostream& out, const Trajectory& traj);

double norm(std::span<const double> x);
double distance(std::span<const double> a, std::span<const double> b);

}  // namespace limitset
