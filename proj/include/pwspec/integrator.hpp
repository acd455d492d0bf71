#pragma once

// Adaptive Dormand-Prince 5(4) integration of the guidance flow with a
// G-drift monitor and rejection of steps that would cross Q = 0 or |Q| = 1.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dynamics.hpp"

namespace pwspec {

struct IntegratorSettings
{
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    double max_step = 0.5;
    /// Permitted |G(t) - G(0)| per unit T.
    double g_drift_tol = 1e-6;
    double initial_step = 1e-2;
    /// Consecutive rejected attempts before giving up on a step.
    int max_refinements = 60;
    std::size_t max_steps = 50'000'000;

    void validate() const
    {
        if (!(rel_tol > 0.0) || !(abs_tol > 0.0) || !(max_step > 0.0) || !(g_drift_tol > 0.0)
            || !(initial_step > 0.0) || max_refinements <= 0 || max_steps == 0)
            throw std::invalid_argument("IntegratorSettings: all tolerances and limits must be positive");
    }
};

/// Integration failure carrying the time and state at which it happened.
class IntegrationError : public std::runtime_error
{
  public:
    IntegrationError(std::string const& what, double time, PhaseState state)
        : std::runtime_error(compose(what, time, state)), time_(time), state_(std::move(state))
    {
    }

    double time() const noexcept { return time_; }
    PhaseState const& state() const noexcept { return state_; }

  private:
    static std::string compose(std::string const& what, double time, PhaseState const& s)
    {
        std::ostringstream os;
        os.precision(17);
        os << what << " at T = " << time << " (Q = " << s.q << ", Y' = " << s.yp;
        if (!s.vacuum.empty())
            os << ", " << s.vacuum.size() << " vacuum modes";
        os << ")";
        return os.str();
    }

    double time_;
    PhaseState state_;
};

/// Accepted steps of one integration.
struct Trajectory
{
    std::vector<double> times;
    std::vector<PhaseState> states;
    std::vector<double> g_values;

    std::size_t size() const noexcept { return times.size(); }
    bool empty() const noexcept { return times.empty(); }
};

/// Counters from one integration run.
struct IntegrationStats
{
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    double max_g_drift = 0.0;
};

namespace detail {

// Dormand-Prince 5(4) tableau.
struct DormandPrince
{
    static constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;
    static constexpr double a21 = 1.0 / 5.0;
    static constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
    static constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
    static constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0,
                            a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0;
    static constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                            a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
    static constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0,
                            b5 = -2187.0 / 6784.0, b6 = 11.0 / 84.0;
    // b - b_hat
    static constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                            e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
};

// The integrator works on the packed layout (z, Y', Q_0, ...) with
// z = ln|Q^2 - 1|. In z the |Q| = 1 barrier sits at z = -inf and
// dz/dT = -Y'/3 on both sides of it, so orbits that graze the barrier stay
// resolvable. Q^2 is recovered as 1 + e^z (outer) or -expm1(z) (inner).
struct PackedFrame
{
    bool outer = true;
    double q_sign = 1.0;

    double q_squared(double z) const noexcept { return outer ? 1.0 + std::exp(z) : -std::expm1(z); }
};

// Returns false where the field is singular or non-finite instead of
// throwing: the caller shrinks the step.
inline bool packed_velocity(PackedFrame frame, std::span<double const> y, std::span<double const> ratios,
                            std::span<double> dy) noexcept
{
    double const z = y[0];
    double const yp = y[1];
    if (!std::isfinite(z) || !std::isfinite(yp))
        return false;
    // inner region: z -> 0- is Q -> 0
    if (!frame.outer && !(z < 0.0))
        return false;
    double const q2 = frame.q_squared(z);
    if (!(q2 > 0.0))
        return false;
    double dyp = 1.0 / (6.0 * q2) + q2 / 3.0 - 5.0 / 6.0;
    for (std::size_t k = 0; k < ratios.size(); ++k) {
        double const qk = y[2 + k];
        dyp += ratios[k] * (qk * qk / 3.0 - 1.0 / 6.0);
        dy[2 + k] = -ratios[k] * qk * yp / 6.0;
    }
    dy[0] = -yp / 3.0;
    dy[1] = dyp;
    for (double v : dy)
        if (!std::isfinite(v))
            return false;
    return true;
}

// G on the packed layout. A vacuum coordinate that is exactly zero stays zero,
// but its -ln|Q_k| term still moves: ln|Q_k| - (r_k/2) z is a constant of the
// flow, so such a mode contributes -(r_k/2) z (the infinite constant dropped).
inline double packed_G(PackedFrame frame, std::span<double const> y, std::span<double const> ratios) noexcept
{
    double const z = y[0];
    double const q2 = frame.q_squared(z);
    double const log_q2 = frame.outer ? std::log1p(std::exp(z)) : std::log(q2);
    double g = 0.5 * y[1] * y[1] + q2 - 0.5 * log_q2 - z;
    for (std::size_t k = 2; k < y.size(); ++k)
        g += y[k] != 0.0 ? y[k] * y[k] - std::log(std::abs(y[k])) : -0.5 * ratios[k - 2] * z;
    return g;
}

}  // namespace detail

/// Integrates the guidance flow for one configuration.
///
/// The same object may be reused for many states; it is not thread-safe, but
/// independent instances may run concurrently.
class GuidanceIntegrator
{
  public:
    using Observer = std::function<void(double, PhaseState const&, double)>;

    GuidanceIntegrator(IntegratorSettings settings, ModeSpectrum modes = {})
        : settings_(settings), modes_(std::move(modes))
    {
        settings_.validate();
        for (double r : modes_.ratios)
            if (!(r > 0.0) || !std::isfinite(r))
                throw std::invalid_argument("mode energy ratios must be positive");
        std::size_t const dim = 2 + modes_.size();
        for (auto& k : k_)
            k.resize(dim);
        y_.resize(dim);
        ytmp_.resize(dim);
        ynew_.resize(dim);
    }

    IntegratorSettings const& settings() const noexcept { return settings_; }
    ModeSpectrum const& modes() const noexcept { return modes_; }
    IntegrationStats const& stats() const noexcept { return stats_; }

    /// Advance `state` from `t0` through each of the increasing `stops`,
    /// writing the state at each stop into `out`. `observer`, when set, sees
    /// every accepted step as (T, state, G).
    void propagate(PhaseState const& state, double t0, std::span<double const> stops,
                   std::span<PhaseState> out, Observer const& observer = {})
    {
        if (stops.size() != out.size())
            throw std::invalid_argument("propagate: output span size mismatch");
        detail::require_matching_modes(state, modes_);
        if (state.q == 0.0 || !std::isfinite(state.q))
            throw SingularStateError("propagate: Q = 0 is a singular manifold");
        for (double qk : state.vacuum)
            if (!std::isfinite(qk))
                throw std::invalid_argument("propagate: non-finite vacuum coordinate");
        if (!std::isfinite(state.yp))
            throw std::invalid_argument("propagate: non-finite Y'");
        for (std::size_t i = 0; i < stops.size(); ++i) {
            if (!(stops[i] >= (i == 0 ? t0 : stops[i - 1])))
                throw std::invalid_argument("propagate: stop times must be nondecreasing and >= t0");
        }

        stats_ = {};
        if (state.gap == 0.0 || !std::isfinite(state.gap))
            throw SingularStateError("propagate: |Q| = 1 is a singular manifold");
        // Q may round to +-1 when the gap is tiny; otherwise the two must agree
        if (std::abs(state.q) != 1.0 && (state.gap > 0.0) != (std::abs(state.q) > 1.0))
            throw std::invalid_argument("propagate: barrier gap is inconsistent with Q");
        frame_ = {state.gap > 0.0, std::copysign(1.0, state.q)};
        pack(state, y_);
        double const g0 = detail::packed_G(frame_, y_, modes_.ratios);
        double t = t0;
        double h = std::min(settings_.initial_step, settings_.max_step);
        bool have_k1 = false;
        if (observer)
            observer(t, state, g0);

        for (std::size_t stop = 0; stop < stops.size(); ++stop) {
            double const target = stops[stop];
            while (t < target) {
                if (stats_.accepted >= settings_.max_steps)
                    throw IntegrationError("step budget exhausted", t, unpack(y_));
                if (!have_k1) {
                    if (!detail::packed_velocity(frame_, y_, modes_.ratios, k_[0]))
                        throw IntegrationError("non-finite velocity", t, unpack(y_));
                    have_k1 = true;
                }
                int attempts = 0;
                for (;;) {
                    double const remaining = target - t;
                    bool const landing = h >= remaining * (1.0 - 1e-12);
                    double const hs = landing ? remaining : h;
                    double err = 0.0;
                    char const* reason = nullptr;
                    double g_new = 0.0;
                    if (!attempt(hs, err)) {
                        reason = "non-finite stage";
                    } else if (err > 1.0) {
                        reason = "local error above tolerance";
                    } else {
                        g_new = detail::packed_G(frame_, ynew_, modes_.ratios);
                        double const drift = std::abs(g_new - g0);
                        double const budget = settings_.g_drift_tol * (t + hs - t0)
                                              + 64.0 * std::numeric_limits<double>::epsilon()
                                                    * (1.0 + std::abs(g0));
                        if (!(drift <= budget))
                            reason = "G drift above tolerance";
                        else
                            stats_.max_g_drift = std::max(stats_.max_g_drift, drift);
                    }
                    if (!reason) {
                        t = landing ? target : t + hs;
                        std::swap(y_, ynew_);
                        std::swap(k_[0], k_[6]);  // first same as last
                        ++stats_.accepted;
                        double const grow
                            = err > 0.0 ? std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0) : 5.0;
                        double const next = std::min(hs * grow, settings_.max_step);
                        // a short landing step says nothing about the natural step size
                        h = (landing && attempts == 0) ? std::max(h, next) : next;
                        h = std::min(h, settings_.max_step);
                        if (observer)
                            observer(t, unpack(y_), g_new);
                        break;
                    }
                    ++stats_.rejected;
                    if (++attempts > settings_.max_refinements)
                        throw IntegrationError(std::string("step refinement exhausted (") + reason + ")", t,
                                               unpack(y_));
                    double const shrink = (err > 1.0 && std::isfinite(err))
                                              ? std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.5)
                                              : 0.25;
                    h = hs * shrink;
                    if (!(h > 0.0) || t + h == t)
                        throw IntegrationError(std::string("step size underflow (") + reason + ")", t,
                                               unpack(y_));
                }
            }
            // before the first step the caller's state is returned untouched, not re-derived from z
            out[stop] = t == t0 ? state : unpack(y_);
        }
    }

    /// Integrate for a duration `t_end`, recording every accepted step.
    Trajectory integrate(PhaseState const& state, double t_end)
    {
        if (!(t_end > 0.0))
            throw std::invalid_argument("integrate: t_end must be positive");
        Trajectory traj;
        PhaseState final_state;
        double const stop = t_end;
        propagate(state, 0.0, std::span<double const>(&stop, 1), std::span<PhaseState>(&final_state, 1),
                  [&](double t, PhaseState const& s, double g) {
                      traj.times.push_back(t);
                      traj.states.push_back(s);
                      traj.g_values.push_back(g);
                  });
        return traj;
    }

  private:
    bool attempt(double h, double& err)
    {
        using DP = detail::DormandPrince;
        std::size_t const n = y_.size();
        auto stage = [&](auto&& combine, std::size_t into) {
            for (std::size_t i = 0; i < n; ++i)
                ytmp_[i] = y_[i] + h * combine(i);
            return detail::packed_velocity(frame_, ytmp_, modes_.ratios, k_[into]);
        };
        auto const& k = k_;
        if (!stage([&](std::size_t i) { return DP::a21 * k[0][i]; }, 1))
            return false;
        if (!stage([&](std::size_t i) { return DP::a31 * k[0][i] + DP::a32 * k[1][i]; }, 2))
            return false;
        if (!stage([&](std::size_t i) { return DP::a41 * k[0][i] + DP::a42 * k[1][i] + DP::a43 * k[2][i]; },
                   3))
            return false;
        if (!stage(
                [&](std::size_t i) {
                    return DP::a51 * k[0][i] + DP::a52 * k[1][i] + DP::a53 * k[2][i] + DP::a54 * k[3][i];
                },
                4))
            return false;
        if (!stage(
                [&](std::size_t i) {
                    return DP::a61 * k[0][i] + DP::a62 * k[1][i] + DP::a63 * k[2][i] + DP::a64 * k[3][i]
                           + DP::a65 * k[4][i];
                },
                5))
            return false;
        for (std::size_t i = 0; i < n; ++i)
            ynew_[i] = y_[i]
                       + h * (DP::b1 * k[0][i] + DP::b3 * k[2][i] + DP::b4 * k[3][i] + DP::b5 * k[4][i]
                              + DP::b6 * k[5][i]);
        if (!detail::packed_velocity(frame_, ynew_, modes_.ratios, k_[6]))
            return false;
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double const e = h
                             * (DP::e1 * k[0][i] + DP::e3 * k[2][i] + DP::e4 * k[3][i] + DP::e5 * k[4][i]
                                + DP::e6 * k[5][i] + DP::e7 * k[6][i]);
            double const scale
                = settings_.abs_tol + settings_.rel_tol * std::max(std::abs(y_[i]), std::abs(ynew_[i]));
            sum += (e / scale) * (e / scale);
        }
        err = std::sqrt(sum / static_cast<double>(n));
        return std::isfinite(err);
    }

    void pack(PhaseState const& s, std::vector<double>& y) const
    {
        y[0] = s.log_gap();
        y[1] = s.yp;
        std::copy(s.vacuum.begin(), s.vacuum.end(), y.begin() + 2);
    }

    PhaseState unpack(std::vector<double> const& y) const
    {
        PhaseState s;
        s.q = std::copysign(std::sqrt(frame_.q_squared(y[0])), frame_.q_sign);
        s.gap = frame_.outer ? std::exp(y[0]) : -std::exp(y[0]);
        s.yp = y[1];
        s.vacuum.assign(y.begin() + 2, y.end());
        return s;
    }

    IntegratorSettings settings_;
    ModeSpectrum modes_;
    IntegrationStats stats_;
    detail::PackedFrame frame_;
    std::array<std::vector<double>, 7> k_;
    std::vector<double> y_, ytmp_, ynew_;
};

/// Integrate `state` for a duration `t_end` and return every accepted step.
inline Trajectory integrate(PhaseState const& state, double t_end, IntegratorSettings const& settings,
                            ModeSpectrum const& modes = {})
{
    GuidanceIntegrator integrator(settings, modes);
    return integrator.integrate(state, t_end);
}

}  // namespace pwspec
