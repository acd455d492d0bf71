#pragma once

// Analytic densities of the one-photon field mode coupled to a Gaussian
// pointer, written in the frozen frame (Q, Y') with Y' = Y - T, plus the
// ideal telescope's energy dispersion bookkeeping.

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace pwspec {

/// Resolution bookkeeping of the ideal telescope.
///
/// The rescaled time T is the reciprocal of the fractional energy dispersion
/// dE/E_gamma, so only T is stored. Energies are in caller-chosen units.
class DispersionModel
{
  public:
    DispersionModel(double e_gamma, double resolution)
        : e_gamma_(e_gamma), t_(resolution)
    {
        if (!(e_gamma > 0.0) || !std::isfinite(e_gamma))
            throw std::invalid_argument("DispersionModel: E_gamma must be positive");
        if (!(resolution > 0.0) || !std::isfinite(resolution))
            throw std::invalid_argument("DispersionModel: T must be positive");
    }

    static DispersionModel from_fractional_dispersion(double e_gamma, double fraction)
    {
        if (!(fraction > 0.0))
            throw std::invalid_argument("DispersionModel: dispersion must be positive");
        return DispersionModel(e_gamma, 1.0 / fraction);
    }

    double e_gamma() const noexcept { return e_gamma_; }
    double T() const noexcept { return t_; }
    double fractional_dispersion() const noexcept { return 1.0 / t_; }
    /// Absolute width dE of the dispersion, E_gamma / T.
    double delta_e() const noexcept { return e_gamma_ / t_; }

  private:
    double e_gamma_;
    double t_;
};

struct ReducedDensityParams
{
    double w = 1.0;
};

namespace detail {
inline constexpr double inv_sqrt_2pi = 0.398942280401432677939946059934;
inline constexpr double two_over_sqrt_pi = 1.12837916709551257389615890312;

inline void require_width(double w)
{
    if (!(w > 0.0) || !std::isfinite(w))
        throw std::invalid_argument("widening parameter w must be positive");
}
}  // namespace detail

/// Standard normal pointer factor of |psi|^2.
inline double pointer_density(double yp) noexcept
{
    return detail::inv_sqrt_2pi * std::exp(-0.5 * yp * yp);
}

/// |chi_1(Q)|^2 for the first excited oscillator state.
inline double excited_mode_density(double q) noexcept
{
    return detail::two_over_sqrt_pi * q * q * std::exp(-q * q);
}

/// |chi_0(Q)|^2 for a vacuum mode.
inline double vacuum_mode_density(double qk) noexcept
{
    return std::exp(-qk * qk) / std::sqrt(std::numbers::pi);
}

/// Quantum equilibrium |psi|^2 in the frozen frame; stationary under the flow.
inline double equilibrium_density(double q, double yp) noexcept
{
    return pointer_density(yp) * excited_mode_density(q);
}

/// Nonequilibrium density |psi(Q/w, Y')|^2 / w. w = 1 is equilibrium.
inline double widened_density(double q, double yp, double w)
{
    detail::require_width(w);
    return equilibrium_density(q / w, yp) / w;
}

inline double widened_density(double q, double yp, ReducedDensityParams params)
{
    return widened_density(q, yp, params.w);
}

/// Analytic <Q^2> of the widened density.
inline double widened_second_moment(double w)
{
    detail::require_width(w);
    return 1.5 * w * w;
}

/// D(E | E_gamma): Gaussian centred on E_gamma with standard deviation E_gamma / T.
inline double dispersion_pdf(double energy, DispersionModel const& model) noexcept
{
    double const sigma = model.delta_e();
    double const z = (energy - model.e_gamma()) / sigma;
    return detail::inv_sqrt_2pi * std::exp(-0.5 * z * z) / sigma;
}

/// E = E_gamma (1 + Y'/T): the energy assigned to a pointer reading.
inline double pointer_to_energy(double yp, DispersionModel const& model) noexcept
{
    return model.e_gamma() * (1.0 + yp / model.T());
}

/// Y' = (E - E_gamma) / dE.
inline double energy_to_pointer(double energy, DispersionModel const& model) noexcept
{
    return (energy - model.e_gamma()) / model.delta_e();
}

}  // namespace pwspec
