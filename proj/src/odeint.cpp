#include "limitset/odeint.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace limitset {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;
constexpr double a21 = 1.0 / 5.0;
constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0;
constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0, a64 = 49.0 / 176.0,
                 a65 = -5103.0 / 18656.0;
constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0, a75 = -2187.0 / 6784.0,
                 a76 = 11.0 / 84.0;
constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0, e5 = -17253.0 / 339200.0,
                 e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

// PI controller constants (Hairer & Wanner, DOPRI5 defaults).
constexpr double kSafety = 0.9;
constexpr double kBeta = 0.04;
constexpr double kExpo = 0.2 - kBeta * 0.75;
constexpr double kFacMin = 0.2;   // h_new >= 0.2 h
constexpr double kFacMax = 10.0;  // h_new <= 10 h
// Steps at most this long (relative to max(1, |t|)) may cross a switch.
constexpr double kCrossingStep = 1e-9;

bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

class Stepper {
public:
    Stepper(const VectorField& f, std::size_t n)
        : f_(f), k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), tmp(n), y1(n), err(n) {}

    // One trial step from (y, k1 = f(y)). Returns false if a stage could not
    // be evaluated.
    bool attempt(const State& y, double h) {
        const std::size_t n = y.size();
        try {
            for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * a21 * k1[i];
            stage(k2);
            for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
            stage(k3);
            for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
            stage(k4);
            for (std::size_t i = 0; i < n; ++i)
                tmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
            stage(k5);
            for (std::size_t i = 0; i < n; ++i)
                tmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
            stage(k6);
            for (std::size_t i = 0; i < n; ++i)
                y1[i] = y[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
            if (!all_finite(y1)) return false;
            f_.evaluate_locked(y1, k7, modes, &seen);
        } catch (const DomainError&) {
            return false;
        }
        for (std::size_t i = 0; i < n; ++i)
            err[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
        return all_finite(err);
    }

    // Max-norm of the scaled local error.
    double error_norm(const State& y, double rtol, double atol) const {
        double worst = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            double sk = atol + rtol * std::max(std::fabs(y[i]), std::fabs(y1[i]));
            worst = std::max(worst, std::fabs(err[i]) / sk);
        }
        return worst;
    }

    Trajectory::Step dense(const State& y, double t0, double h) const {
        const std::size_t n = y.size();
        Trajectory::Step s;
        s.t0 = t0;
        s.h = h;
        s.r1 = y;
        s.r2.resize(n);
        s.r3.resize(n);
        s.r4.resize(n);
        s.r5.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double dy = y1[i] - y[i];
            const double bspl = h * k1[i] - dy;
            s.r2[i] = dy;
            s.r3[i] = bspl;
            s.r4[i] = dy - h * k7[i] - bspl;
            s.r5[i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] + d7 * k7[i]);
        }
        return s;
    }

    // Starts a step at y: k1 = f(y) and the switch modes of y.
    void restart(const State& y) {
        f_.evaluate_locked(y, k1, {}, &seen);
        modes = seen;
    }

    // Whether some abs/sign argument has a different strict sign at y1 than
    // at the start of the step.
    bool crossed() const {
        for (std::size_t i = 0; i < modes.size(); ++i) {
            if (modes[i] != 0 && seen[i] != 0 && seen[i] != modes[i]) return true;
        }
        return false;
    }

    const VectorField& f_;
    State k1, k2, k3, k4, k5, k6, k7, tmp, y1, err;
    // Stages are evaluated with the switches frozen at their signs at the
    // start of the step, so the field is smooth inside every step and a
    // switch can only change sign where a step ends.
    std::vector<signed char> modes, seen;

private:
    void stage(State& k) {
        if (!all_finite(tmp)) throw DomainError("non-finite stage state");
        f_.evaluate_locked(tmp, k, modes, nullptr);
    }
};

// Starting step, following Hairer's HINIT.
double initial_step(const VectorField& f, const State& y, const State& f0, double rtol, double atol, double hmax) {
    const std::size_t n = y.size();
    double dnf = 0.0, dny = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double sk = atol + rtol * std::fabs(y[i]);
        dnf += (f0[i] / sk) * (f0[i] / sk);
        dny += (y[i] / sk) * (y[i] / sk);
    }
    double h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : std::sqrt(dny / dnf) * 0.01;
    h = std::min(h, hmax);

    State y1(n), f1(n);
    for (std::size_t i = 0; i < n; ++i) y1[i] = y[i] + h * f0[i];
    double der2 = 0.0;
    try {
        f.evaluate(y1, f1);
        for (std::size_t i = 0; i < n; ++i) {
            double sk = atol + rtol * std::fabs(y[i]);
            double d = (f1[i] - f0[i]) / sk;
            der2 += d * d;
        }
        der2 = std::sqrt(der2) / h;
    } catch (const DomainError&) {
        return h * 0.1;
    }
    double der12 = std::max(der2, std::sqrt(dnf));
    double h1 = der12 <= 1e-15 ? std::max(1e-6, h * 1e-3) : std::pow(0.01 / der12, 0.2);
    return std::min({100.0 * h, h1, hmax});
}

}  // namespace

// ---------------------------------------------------------------------------

VectorField::VectorField(std::vector<Expression> components) : components_(std::move(components)) {
    if (components_.empty()) throw DimensionError("vector field needs at least one component");
    const int n = static_cast<int>(components_.size());
    for (std::size_t i = 0; i < components_.size(); ++i) {
        if (components_[i].max_variable() > n) {
            throw DimensionError("field component " + std::to_string(i + 1) + " uses variables beyond dimension " +
                                 std::to_string(n));
        }
        switches_ += limitset::switch_count(components_[i]);
    }
}

VectorField VectorField::reversed() const {
    VectorField r = *this;
    r.sign_ = -sign_;
    return r;
}

void VectorField::evaluate(std::span<const double> x, std::span<double> out) const {
    if (x.size() != components_.size() || out.size() != components_.size()) {
        throw DimensionError("state dimension does not match the field");
    }
    for (std::size_t i = 0; i < components_.size(); ++i) {
        double v = limitset::evaluate(components_[i], x);
        if (!std::isfinite(v)) throw DomainError("non-finite field value");
        out[i] = sign_ * v;
    }
}

void VectorField::evaluate_locked(std::span<const double> x, std::span<double> out, std::span<const signed char> modes,
                                  std::vector<signed char>* seen) const {
    if (x.size() != components_.size() || out.size() != components_.size()) {
        throw DimensionError("state dimension does not match the field");
    }
    if (seen) seen->clear();
    std::size_t cursor = 0;
    for (std::size_t i = 0; i < components_.size(); ++i) {
        double v = limitset::evaluate_locked(components_[i], x, modes, cursor, seen);
        if (!std::isfinite(v)) throw DomainError("non-finite field value");
        out[i] = sign_ * v;
    }
}

State VectorField::operator()(std::span<const double> x) const {
    State out(components_.size());
    evaluate(x, out);
    return out;
}

void IntegratorConfig::validate() const {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument(std::string(name) + " must be positive");
    };
    positive(rel_tol, "rel_tol");
    positive(abs_tol, "abs_tol");
    positive(t_end, "t_end");
    positive(blowup_norm, "blowup_norm");
    positive(min_step, "min_step");
    if (initial_step < 0.0) throw std::invalid_argument("initial_step must be >= 0");
    if (max_step < 0.0) throw std::invalid_argument("max_step must be >= 0");
    if (max_steps == 0) throw std::invalid_argument("max_steps must be positive");
}

std::string to_string(Termination t) {
    switch (t) {
    case Termination::horizon:
        return "horizon";
    case Termination::blowup:
        return "blowup";
    case Termination::step_underflow:
        return "step_underflow";
    case Termination::step_limit:
        return "step_limit";
    }
    return "unknown";
}

Trajectory integrate(const VectorField& field, std::span<const double> x0, const IntegratorConfig& config) {
    config.validate();
    const std::size_t n = field.dimension();
    if (x0.size() != n) throw DimensionError("initial state dimension does not match the field");
    if (!all_finite(x0)) throw std::invalid_argument("initial state must be finite");

    Trajectory traj;
    traj.dimension_ = n;
    traj.backward_ = field.is_reversed();

    State y(x0.begin(), x0.end());
    double t = 0.0;
    traj.times_.push_back(t);
    traj.states_.push_back(y);

    if (norm(y) >= config.blowup_norm) {
        traj.termination_ = Termination::blowup;
        traj.blowup_time_ = 0.0;
        return traj;
    }

    Stepper st(field, n);
    try {
        st.restart(y);
    } catch (const DomainError&) {
        traj.termination_ = Termination::step_underflow;
        return traj;
    }

    const double t_end = config.t_end;
    const double hmax = config.max_step > 0.0 ? std::min(config.max_step, t_end) : t_end;
    double h = config.initial_step > 0.0 ? config.initial_step
                                         : initial_step(field, y, st.k1, config.rel_tol, config.abs_tol, hmax);
    h = std::min(h, hmax);
    double facold = 1e-4;
    bool last_rejected = false;
    std::size_t steps = 0;

    while (t < t_end) {
        if (++steps > config.max_steps) {
            traj.termination_ = Termination::step_limit;
            return traj;
        }
        const double hmin = std::max(config.min_step, 16.0 * std::numeric_limits<double>::epsilon() * std::fabs(t));
        if (h < hmin) {
            traj.termination_ = Termination::step_underflow;
            return traj;
        }
        bool final_step = false;
        if (t + h >= t_end || t + 1.01 * h >= t_end) {
            h = t_end - t;
            final_step = true;
        }

        if (!st.attempt(y, h)) {
            ++traj.rejected_;
            h *= 0.25;
            last_rejected = true;
            continue;
        }

        const double err = st.error_norm(y, config.rel_tol, config.abs_tol);
        const double fac11 = std::pow(err, kExpo);
        const bool crossing = err <= 1.0 && st.crossed();
        if (crossing && h > std::max(hmin, kCrossingStep * std::max(1.0, std::fabs(t)))) {
            // Shrink towards the switching surface; a genuine crossing is
            // accepted once the step is negligible.
            ++traj.rejected_;
            h *= 0.5;
            last_rejected = true;
            continue;
        }
        if (err <= 1.0) {
            double fac = fac11 / std::pow(facold, kBeta);
            fac = std::clamp(fac / kSafety, 1.0 / kFacMax, 1.0 / kFacMin);
            double hnew = h / fac;
            facold = std::max(err, 1e-4);

            traj.steps_.push_back(st.dense(y, t, h));
            t = final_step ? t_end : t + h;
            y = st.y1;
            if (crossing) {
                try {
                    st.restart(y);
                } catch (const DomainError&) {
                    traj.termination_ = Termination::step_underflow;
                    return traj;
                }
            } else {
                st.k1 = st.k7;
                st.modes = st.seen;
            }
            traj.times_.push_back(t);
            traj.states_.push_back(y);

            if (norm(y) >= config.blowup_norm) {
                traj.termination_ = Termination::blowup;
                traj.blowup_time_ = t;
                return traj;
            }
            if (last_rejected) hnew = std::min(hnew, h);
            last_rejected = false;
            h = std::min(hnew, hmax);
        } else {
            ++traj.rejected_;
            h /= std::min(1.0 / kFacMin, fac11 / kSafety);
            last_rejected = true;
        }
    }
    traj.termination_ = Termination::horizon;
    return traj;
}

Trajectory integrate_backward(const VectorField& field, std::span<const double> x0, const IntegratorConfig& config) {
    return integrate(field.reversed(), x0, config);
}

State Trajectory::sample_at(double t) const {
    if (!(t >= times_.front() && t <= times_.back())) {
        throw OutOfRange("time " + std::to_string(t) + " outside trajectory range [" + std::to_string(times_.front()) +
                         ", " + std::to_string(times_.back()) + "]");
    }
    auto it = std::lower_bound(times_.begin(), times_.end(), t);
    std::size_t k = static_cast<std::size_t>(it - times_.begin());
    if (it != times_.end() && *it == t) return states_[k];

    const Step& s = steps_[k - 1];
    const double theta = (t - s.t0) / s.h;
    const double theta1 = 1.0 - theta;
    State out(dimension_);
    for (std::size_t i = 0; i < dimension_; ++i) {
        out[i] = s.r1[i] + theta * (s.r2[i] + theta1 * (s.r3[i] + theta * (s.r4[i] + theta1 * s.r5[i])));
    }
    return out;
}

double Trajectory::max_norm() const {
    double m = 0.0;
    for (const auto& s : states_) m = std::max(m, norm(s));
    return m;
}

State sample_at(const Trajectory& traj, double t) { return traj.sample_at(t); }

void write_csv(std::ostream& out, const Trajectory& traj) {
    out << 't';
    for (std::size_t i = 1; i <= traj.dimension(); ++i) out << ",x" << i;
    out << '\n';
    char buf[40];
    for (std::size_t k = 0; k < traj.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.17g", traj.times()[k]);
        out << buf;
        for (double v : traj.states()[k]) {
            std::snprintf(buf, sizeof buf, "%.17g", v);
            out << ',' << buf;
        }
        out << '\n';
    }
}

namespace {

// sqrt(sum d_i^2) with rescaling when the plain sum under- or overflows.
template <class Diff>
double euclidean(std::size_t n, Diff diff) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += diff(i) * diff(i);
    if (s > 1e-280 && s < 1e280) return std::sqrt(s);
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::fabs(diff(i)));
    if (scale == 0.0 || !std::isfinite(scale)) return scale;
    s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += (diff(i) / scale) * (diff(i) / scale);
    return scale * std::sqrt(s);
}

}  // namespace

double norm(std::span<const double> x) {
    return euclidean(x.size(), [&](std::size_t i) { return x[i]; });
}

double distance(std::span<const double> a, std::span<const double> b) {
    return euclidean(a.size(), [&](std::size_t i) { return a[i] - b[i]; });
}

}  // namespace limitset
