#pragma once

// Guidance flow of the one-photon mode and pointer in the frozen frame,
// optionally with vacuum modes, and the conserved function whose level sets
// are the orbits.

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pwspec {

/// Configuration-space point (Q, Y', {Q_k}).
///
/// `gap` holds Q^2 - 1 separately from Q: orbits with large G pass far closer
/// to |Q| = 1 than a double next to 1 can resolve, while the gap itself keeps
/// full relative precision. sign(gap) is the side of the |Q| = 1 barrier.
struct PhaseState
{
    double q = 0.0;
    double yp = 0.0;
    std::vector<double> vacuum;
    double gap = -1.0;

    PhaseState() = default;

    PhaseState(double q_, double yp_, std::vector<double> vacuum_ = {})
        : q(q_), yp(yp_), vacuum(std::move(vacuum_)), gap((q_ - 1.0) * (q_ + 1.0))
    {
    }

    /// State with sign(Q) = `q_sign` and Q^2 - 1 = `gap_`; Q itself is
    /// rounded, so prefer the Q constructor away from |Q| = 1.
    static PhaseState from_gap(double q_sign, double gap_, double yp_, std::vector<double> vacuum_ = {})
    {
        PhaseState s;
        s.gap = gap_;
        s.q = std::copysign(std::sqrt(1.0 + gap_), q_sign);
        s.yp = yp_;
        s.vacuum = std::move(vacuum_);
        return s;
    }

    /// ln|Q^2 - 1|.
    double log_gap() const { return std::log(std::abs(gap)); }

    bool operator==(PhaseState const&) const = default;
};

/// Energy ratios E_k / E_gamma, one per vacuum mode.
struct ModeSpectrum
{
    std::vector<double> ratios;

    static ModeSpectrum uniform(std::size_t n, double ratio = 1.0)
    {
        return ModeSpectrum{std::vector<double>(n, ratio)};
    }

    std::size_t size() const noexcept { return ratios.size(); }
};

/// Thrown when a state sits on one of the singular manifolds Q = 0, +-1.
class SingularStateError : public std::domain_error
{
  public:
    using std::domain_error::domain_error;
};

/// Which side of the barrier |Q| = 1 a state lives on.
enum class Region
{
    inner,  //!< 0 < |Q| < 1
    outer,  //!< |Q| > 1
};

inline char const* to_string(Region r)
{
    return r == Region::inner ? "inner" : "outer";
}

inline Region region_of(double q)
{
    return std::abs(q) < 1.0 ? Region::inner : Region::outer;
}

namespace detail {

inline void require_nonzero_q(double q)
{
    if (q == 0.0 || !std::isfinite(q))
        throw SingularStateError("guidance velocity is singular at Q = 0");
}

inline void require_off_barriers(double q)
{
    if (q == 0.0 || std::abs(q) == 1.0 || !std::isfinite(q))
        throw SingularStateError("Q = " + std::to_string(q) + " lies on a singular manifold");
}

inline void require_matching_modes(PhaseState const& s, ModeSpectrum const& modes)
{
    if (s.vacuum.size() != modes.ratios.size())
        throw std::invalid_argument("vacuum coordinate count (" + std::to_string(s.vacuum.size())
                                    + ") does not match mode spectrum ("
                                    + std::to_string(modes.ratios.size()) + ")");
}

// (Q^2 - 1) evaluated as a product so that it stays accurate next to |Q| = 1.
inline double q2m1(double q) noexcept { return (q - 1.0) * (q + 1.0); }

inline double dyp_photon(double q) noexcept
{
    double const q2 = q * q;
    return 1.0 / (6.0 * q2) + q2 / 3.0 - 5.0 / 6.0;
}

inline double dq_photon(double q, double yp) noexcept
{
    return yp * (1.0 / q - q) / 6.0;
}

}  // namespace detail

/// Q^2 - ln|Q| - ln|Q^2 - 1|: the Q-dependent part of G.
inline double barrier_potential(double q)
{
    detail::require_off_barriers(q);
    return q * q - std::log(std::abs(q)) - std::log(std::abs(detail::q2m1(q)));
}

/// Reduced two-dimensional guidance velocity (dQ/dT, dY'/dT).
inline std::array<double, 2> velocity_reduced(double q, double yp)
{
    detail::require_nonzero_q(q);
    return {detail::dq_photon(q, yp), detail::dyp_photon(q)};
}

inline std::array<double, 2> velocity_reduced(PhaseState const& s)
{
    if (!s.vacuum.empty())
        throw std::invalid_argument("velocity_reduced: state carries vacuum modes");
    return velocity_reduced(s.q, s.yp);
}

/// Multi-mode guidance velocity, laid out as (dQ, dY', dQ_0, dQ_1, ...).
inline void velocity_full(PhaseState const& s, ModeSpectrum const& modes, std::vector<double>& out)
{
    detail::require_nonzero_q(s.q);
    detail::require_matching_modes(s, modes);
    out.resize(2 + s.vacuum.size());
    double dyp = detail::dyp_photon(s.q);
    for (std::size_t k = 0; k < s.vacuum.size(); ++k) {
        double const qk = s.vacuum[k];
        double const r = modes.ratios[k];
        dyp += r * (qk * qk / 3.0 - 1.0 / 6.0);
        out[2 + k] = -r * qk * s.yp / 6.0;
    }
    out[0] = detail::dq_photon(s.q, s.yp);
    out[1] = dyp;
}

inline std::vector<double> velocity_full(PhaseState const& s, ModeSpectrum const& modes)
{
    std::vector<double> out;
    velocity_full(s, modes, out);
    return out;
}

/// G = Y'^2/2 + Q^2 - ln|Q| - ln|Q^2 - 1|, conserved by the reduced flow.
inline double conserved_G_reduced(double q, double yp)
{
    return 0.5 * yp * yp + barrier_potential(q);
}

inline double conserved_G_reduced(PhaseState const& s)
{
    if (s.q == 0.0 || s.gap == 0.0 || !std::isfinite(s.q) || !std::isfinite(s.gap))
        throw SingularStateError("state lies on a singular manifold");
    return 0.5 * s.yp * s.yp + s.q * s.q - std::log(std::abs(s.q)) - s.log_gap();
}

/// Multi-mode G: the reduced G plus sum_k (Q_k^2 - ln|Q_k|).
inline double conserved_G_full(PhaseState const& s, ModeSpectrum const& modes)
{
    detail::require_matching_modes(s, modes);
    double g = conserved_G_reduced(s);
    for (double qk : s.vacuum) {
        if (qk == 0.0 || !std::isfinite(qk))
            throw SingularStateError("vacuum coordinate on the singular manifold Q_k = 0");
        g += qk * qk - std::log(std::abs(qk));
    }
    return g;
}

/// The four fixed points (+-sqrt(5 +- sqrt(17))/2, 0): roots of 2Q^4 - 5Q^2 + 1.
inline std::array<std::pair<double, double>, 4> stationary_points()
{
    double const s17 = std::sqrt(17.0);
    double const outer = std::sqrt(5.0 + s17) / 2.0;
    double const inner = std::sqrt(5.0 - s17) / 2.0;
    return {{{-outer, 0.0}, {-inner, 0.0}, {inner, 0.0}, {outer, 0.0}}};
}

/// Minimum of the barrier potential on |Q| > 1 (outer) or 0 < |Q| < 1 (inner).
///
/// Found by golden-section search of Q^2 - ln|Q| - ln|Q^2-1| on a bracket that
/// excludes the logarithmic walls, so it does not rely on the closed-form roots.
inline std::pair<double, double> region_minimum(Region region)
{
    double a = region == Region::outer ? 1.0 + 1e-9 : 1e-9;
    double b = region == Region::outer ? 10.0 : 1.0 - 1e-9;
    auto f = [](double q) { return q * q - std::log(q) - std::log(std::abs(detail::q2m1(q))); };
    constexpr double inv_phi = 0.618033988749894848204586834366;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c);
    double fd = f(d);
    for (int iter = 0; iter < 200 && (b - a) > 1e-15 * (1.0 + std::abs(a)); ++iter) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    double const qmin = 0.5 * (a + b);
    return {qmin, f(qmin)};
}

/// Lowest G attainable in a region; contours with G below it are empty.
inline double region_floor(Region region)
{
    return region_minimum(region).second;
}

/// Which half-width expression to evaluate.
enum class HalfWidthConvention
{
    /// 2 sqrt(2 (G_max - c)): the expression as originally printed.
    printed,
    /// sqrt(2 (G_max - c)): follows from G = Y'^2/2 + f(Q) with f >= c.
    derived,
};

/// Half-width in Y' of the strip occupied by an ensemble with G <= g_max.
///
/// The default returns the printed expression. Trajectories attain the
/// `derived` value; see the half-width tests.
inline double half_width_bound(double g_max, Region region,
                               HalfWidthConvention convention = HalfWidthConvention::printed)
{
    double const floor = region_floor(region);
    // allow for the rounding of the tabulated constants (1.62105, 1.22552)
    if (g_max < floor - 1e-5)
        throw std::domain_error("half_width_bound: G_max below the " + std::string(to_string(region))
                                + " region minimum; the confined region is empty");
    double const excess = std::max(0.0, g_max - floor);
    double const derived = std::sqrt(2.0 * excess);
    return convention == HalfWidthConvention::printed ? 2.0 * derived : derived;
}

}  // namespace pwspec
