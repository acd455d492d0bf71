#pragma once

// Orbit-level analysis of the reduced flow: points on a G level, period
// measurement from a Poincare section, and closed-orbit tracing.

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dynamics.hpp"
#include "integrator.hpp"

namespace pwspec {

/// Point (Q, 0) on the positive-Q branch where G equals `level`, on the side of
/// the region minimum facing away from Q = 1.
///
/// Outer orbits are entered at Q > Q*, inner ones at Q < Q*.
inline double axis_crossing(double level, Region region)
{
    auto const [qmin, floor] = region_minimum(region);
    if (!(level > floor))
        throw std::domain_error("axis_crossing: level at or below the region minimum");
    auto f = [](double q) { return barrier_potential(q) ; };
    double lo = qmin;
    double hi = region == Region::outer ? qmin : 0.0;
    if (region == Region::outer) {
        while (f(hi) < level)
            hi *= 2.0;
    } else {
        // f -> +inf as Q -> 0+; find a bracket end with f above the level
        hi = qmin;
        do {
            hi *= 0.5;
        } while (f(hi) < level && hi > 1e-300);
    }
    for (int i = 0; i < 200; ++i) {
        double const mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi)
            break;
        (f(mid) < level ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

struct PeriodOptions
{
    /// Motion below this phase-space extent counts as a fixed point.
    double stationary_extent = 1e-12;
    /// Maximum |Q| mismatch between successive section crossings.
    double return_tolerance = 1e-4;
};

struct PeriodEstimate
{
    enum class Status
    {
        ok,
        stationary,  //!< the trajectory does not move
        no_return,   //!< fewer than two section crossings within the span
        not_closed,  //!< crossings found but they do not return to the same point
    };

    Status status = Status::no_return;
    /// Mean spacing of successive upward crossings (valid when status == ok).
    double period = 0.0;
    /// Time between the first two crossings.
    double first_return = 0.0;
    std::vector<double> crossing_times;

    explicit operator bool() const noexcept { return status == Status::ok; }
};

namespace detail {

// Root of the cubic Hermite interpolant of Y'(t) on [t0, t1].
inline double hermite_root(double t0, double y0, double d0, double t1, double y1, double d1)
{
    double const h = t1 - t0;
    auto p = [&](double s) {
        double const s2 = s * s, s3 = s2 * s;
        return (2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * h * d0 + (-2 * s3 + 3 * s2) * y1
               + (s3 - s2) * h * d1;
    };
    double a = 0.0, b = 1.0;
    double pa = p(a);
    for (int i = 0; i < 80; ++i) {
        double const m = 0.5 * (a + b);
        double const pm = p(m);
        if ((pm < 0.0) == (pa < 0.0)) {
            a = m;
            pa = pm;
        } else {
            b = m;
        }
    }
    return t0 + 0.5 * (a + b) * h;
}

}  // namespace detail

/// Period of a reduced-flow trajectory from upward crossings of Y' = 0.
inline PeriodEstimate detect_period(Trajectory const& traj, PeriodOptions const& opts = {})
{
    PeriodEstimate est;
    if (traj.size() < 2) {
        est.status = PeriodEstimate::Status::no_return;
        return est;
    }
    double extent = 0.0;
    for (auto const& s : traj.states) {
        if (!s.vacuum.empty())
            throw std::invalid_argument("detect_period: expects a reduced (two-dimensional) trajectory");
        extent = std::max({extent, std::abs(s.q - traj.states.front().q),
                           std::abs(s.yp - traj.states.front().yp)});
    }
    if (extent <= opts.stationary_extent) {
        est.status = PeriodEstimate::Status::stationary;
        return est;
    }

    std::vector<double> crossing_q;
    for (std::size_t i = 0; i + 1 < traj.size(); ++i) {
        auto const& a = traj.states[i];
        auto const& b = traj.states[i + 1];
        if (!(a.yp < 0.0 && b.yp >= 0.0))
            continue;
        auto const va = velocity_reduced(a.q, a.yp);
        auto const vb = velocity_reduced(b.q, b.yp);
        double const tc = detail::hermite_root(traj.times[i], a.yp, va[1], traj.times[i + 1], b.yp, vb[1]);
        est.crossing_times.push_back(tc);
        // Q at the crossing, linearly interpolated; only used for the closure check
        double const s = (tc - traj.times[i]) / (traj.times[i + 1] - traj.times[i]);
        crossing_q.push_back(a.q + s * (b.q - a.q));
    }
    if (est.crossing_times.size() < 2) {
        est.status = PeriodEstimate::Status::no_return;
        return est;
    }
    for (double q : crossing_q) {
        if (std::abs(q - crossing_q.front()) > opts.return_tolerance) {
            est.status = PeriodEstimate::Status::not_closed;
            return est;
        }
    }
    est.first_return = est.crossing_times[1] - est.crossing_times[0];
    est.period = (est.crossing_times.back() - est.crossing_times.front())
                 / static_cast<double>(est.crossing_times.size() - 1);
    est.status = PeriodEstimate::Status::ok;
    return est;
}

/// Closed orbit of the reduced flow through the level G = `level`.
struct Orbit
{
    double level = 0.0;
    Region region = Region::outer;
    double period = 0.0;
    Trajectory path;  //!< one revolution, starting and ending on Y' = 0
};

/// Trace one revolution of the positive-Q orbit at `level` in `region`.
inline Orbit trace_orbit(double level, Region region, IntegratorSettings settings = {},
                         double max_span = 1e4)
{
    PhaseState const start{axis_crossing(level, region), 0.0, {}};
    Orbit orbit{level, region, 0.0, {}};
    // Integrate in growing windows until two section crossings appear.
    for (double span = 50.0; span <= max_span; span *= 2.0) {
        PhaseState const offset{start.q, -1e-9, {}};
        auto traj = integrate(offset, span, settings);
        auto est = detect_period(traj);
        if (est.status == PeriodEstimate::Status::ok) {
            orbit.period = est.first_return;
            orbit.path = integrate(start, orbit.period, settings);
            return orbit;
        }
    }
    throw std::runtime_error("trace_orbit: no closed orbit found for G = " + std::to_string(level));
}

}  // namespace pwspec
