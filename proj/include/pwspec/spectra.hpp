#pragma once

// Downstream of the dynamics: nonequilibrium dispersion estimates, the
// Gaussian blur of actual spectra, line-plus-background composition and
// counting of line components.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "ensemble.hpp"
#include "histogram.hpp"
#include "quadrature.hpp"
#include "quantum_state.hpp"

namespace pwspec {

// -- actual spectra ------------------------------------------------------------

struct DeltaLine
{
    double energy = 1.0;
};

struct GaussianLine
{
    double energy = 1.0;
    double sigma = 0.1;
};

/// Continuum under a line, normalized to unit integral on its domain.
class BackgroundModel
{
  public:
    enum class Kind
    {
        power_law,
        table,
    };

    /// E^-index on [lo, hi].
    static BackgroundModel power_law(double index, double lo, double hi)
    {
        if (!(lo > 0.0) || !(hi > lo))
            throw std::invalid_argument("BackgroundModel: power-law domain must satisfy 0 < lo < hi");
        BackgroundModel b(Kind::power_law, lo, hi);
        b.index_ = index;
        if (std::abs(index - 1.0) < 1e-12)
            b.norm_ = 1.0 / std::log(hi / lo);
        else
            b.norm_ = (1.0 - index) / (std::pow(hi, 1.0 - index) - std::pow(lo, 1.0 - index));
        return b;
    }

    /// Index 2.4 over one decade centred (logarithmically) on `e_line`.
    static BackgroundModel default_for_line(double e_line)
    {
        double const half_decade = std::sqrt(10.0);
        return power_law(2.4, e_line / half_decade, e_line * half_decade);
    }

    /// Piecewise-linear table; values are renormalized by the trapezoid rule.
    static BackgroundModel table(std::vector<double> energies, std::vector<double> values)
    {
        if (energies.size() < 2 || energies.size() != values.size())
            throw std::invalid_argument("BackgroundModel: table needs >= 2 matching points");
        double area = 0.0;
        for (std::size_t i = 0; i + 1 < energies.size(); ++i) {
            if (!(energies[i + 1] > energies[i]))
                throw std::invalid_argument("BackgroundModel: table energies must increase");
            area += 0.5 * (values[i] + values[i + 1]) * (energies[i + 1] - energies[i]);
        }
        for (double v : values)
            if (!(v >= 0.0))
                throw std::invalid_argument("BackgroundModel: table values must be nonnegative");
        if (!(area > 0.0))
            throw std::invalid_argument("BackgroundModel: table has zero area");
        BackgroundModel b(Kind::table, energies.front(), energies.back());
        b.norm_ = 1.0 / area;
        b.energies_ = std::move(energies);
        b.values_ = std::move(values);
        return b;
    }

    Kind kind() const noexcept { return kind_; }
    double index() const noexcept { return index_; }
    double lo() const noexcept { return lo_; }
    double hi() const noexcept { return hi_; }

    double density(double e) const
    {
        if (!(e >= lo_ && e <= hi_))
            return 0.0;
        if (kind_ == Kind::power_law)
            return norm_ * std::pow(e, -index_);
        auto const it = std::upper_bound(energies_.begin(), energies_.end(), e);
        std::size_t const i = it == energies_.end() ? energies_.size() - 2 : std::size_t(it - energies_.begin()) - 1;
        double const s = (e - energies_[i]) / (energies_[i + 1] - energies_[i]);
        return norm_ * (values_[i] + s * (values_[i + 1] - values_[i]));
    }

  private:
    BackgroundModel(Kind kind, double lo, double hi) : kind_(kind), lo_(lo), hi_(hi) {}

    Kind kind_;
    double lo_;
    double hi_;
    double index_ = 0.0;
    double norm_ = 1.0;
    std::vector<double> energies_;
    std::vector<double> values_;
};

using SpectrumComponent = std::variant<DeltaLine, GaussianLine, BackgroundModel>;

/// Weighted mixture of components; weights are normalized on construction.
class ActualSpectrum
{
  public:
    ActualSpectrum(SpectrumComponent c) { parts_.emplace_back(1.0, std::move(c)); }
    ActualSpectrum(DeltaLine c) : ActualSpectrum(SpectrumComponent(c)) {}
    ActualSpectrum(GaussianLine c) : ActualSpectrum(SpectrumComponent(c)) {}
    ActualSpectrum(BackgroundModel c) : ActualSpectrum(SpectrumComponent(std::move(c))) {}

    explicit ActualSpectrum(std::vector<std::pair<double, SpectrumComponent>> parts) : parts_(std::move(parts))
    {
        double total = 0.0;
        for (auto const& [weight, c] : parts_) {
            if (!(weight >= 0.0))
                throw std::invalid_argument("ActualSpectrum: negative mixture weight");
            total += weight;
        }
        if (!(total > 0.0))
            throw std::invalid_argument("ActualSpectrum: mixture has no weight");
        for (auto& part : parts_)
            part.first /= total;
    }

    std::vector<std::pair<double, SpectrumComponent>> const& parts() const noexcept { return parts_; }

  private:
    std::vector<std::pair<double, SpectrumComponent>> parts_;
};

struct ConvolutionOptions
{
    /// Absolute tolerance of each adaptive quadrature.
    double tol = 1e-8;
    /// Required margin of the grid beyond the actual spectrum's support, in dE.
    double coverage_sigmas = 6.0;
    bool require_coverage = true;
};

namespace detail {

inline double gaussian(double x, double sigma) noexcept
{
    double const z = x / sigma;
    return inv_sqrt_2pi * std::exp(-0.5 * z * z) / sigma;
}

// Probability that N(0, sigma) falls in [a, b].
inline double gaussian_mass(double a, double b, double sigma) noexcept
{
    double const s = sigma * std::numbers::sqrt2;
    return 0.5 * (std::erf(b / s) - std::erf(a / s));
}

inline std::pair<double, double> support(SpectrumComponent const& c)
{
    return std::visit(
        [](auto const& x) -> std::pair<double, double> {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, DeltaLine>)
                return {x.energy, x.energy};
            else if constexpr (std::is_same_v<T, GaussianLine>)
                return {x.energy - 6.0 * x.sigma, x.energy + 6.0 * x.sigma};
            else
                return {x.lo(), x.hi()};
        },
        c);
}

inline constexpr double kernel_reach = 12.0;

// Integrate g(E') * rho(E') over the overlap of the component's effective
// support with [lo, hi].
template<class G>
double against_component(SpectrumComponent const& c, G const& g, double lo, double hi, double tol)
{
    return std::visit(
        [&](auto const& x) -> double {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, DeltaLine>) {
                return g(x.energy);
            } else if constexpr (std::is_same_v<T, GaussianLine>) {
                if (!(x.sigma > 0.0))
                    throw std::invalid_argument("GaussianLine: sigma must be positive");
                double const a = std::max(lo, x.energy - kernel_reach * x.sigma);
                double const b = std::min(hi, x.energy + kernel_reach * x.sigma);
                return adaptive_simpson([&](double e) { return gaussian(e - x.energy, x.sigma) * g(e); }, a, b,
                                        tol);
            } else {
                double const a = std::max(lo, x.lo());
                double const b = std::min(hi, x.hi());
                return adaptive_simpson([&](double e) { return x.density(e) * g(e); }, a, b, tol);
            }
        },
        c);
}

}  // namespace detail

/// Pointwise Gaussian blur of `actual` at energy `e` with width dE = E_gamma / T.
inline double convolved_density(ActualSpectrum const& actual, DispersionModel const& model, double e,
                                ConvolutionOptions const& opts = {})
{
    double const sigma = model.delta_e();
    double const reach = detail::kernel_reach * sigma;
    double total = 0.0;
    for (auto const& [weight, c] : actual.parts()) {
        if (weight == 0.0)
            continue;
        total += weight
                 * detail::against_component(
                     c, [&](double ep) { return detail::gaussian(e - ep, sigma); }, e - reach, e + reach, opts.tol);
    }
    return total;
}

/// Blurred spectrum on the bins of `edges`: each density is the exact bin
/// average, obtained by integrating the actual spectrum against the
/// Gaussian's bin probability. Mass falling outside the grid is reported in
/// out_of_range_mass.
inline SpectrumHistogram convolve_spectrum(ActualSpectrum const& actual, DispersionModel const& model,
                                           std::vector<double> const& edges, ConvolutionOptions const& opts = {})
{
    SpectrumHistogram h;
    h.edges = edges;
    h.units = SpectrumUnits::energy;
    if (edges.size() < 3)
        throw std::invalid_argument("convolve_spectrum: need at least two bins");
    for (std::size_t i = 0; i + 1 < edges.size(); ++i)
        if (!(edges[i + 1] > edges[i]))
            throw std::invalid_argument("convolve_spectrum: edges must be strictly increasing");
    double const sigma = model.delta_e();
    if (opts.require_coverage) {
        for (auto const& [weight, c] : actual.parts()) {
            auto const [lo, hi] = detail::support(c);
            if (weight > 0.0
                && (edges.front() > lo - opts.coverage_sigmas * sigma || edges.back() < hi + opts.coverage_sigmas * sigma))
                throw std::invalid_argument("convolve_spectrum: energy grid does not cover the spectrum support plus "
                                            + std::to_string(opts.coverage_sigmas) + " dE");
        }
    }
    double const reach = detail::kernel_reach * sigma;
    std::size_t const bins = edges.size() - 1;
    h.densities.assign(bins, 0.0);
    double in_range = 0.0;
    for (std::size_t i = 0; i < bins; ++i) {
        double const a = edges[i];
        double const b = edges[i + 1];
        double mass = 0.0;
        for (auto const& [weight, c] : actual.parts()) {
            if (weight == 0.0)
                continue;
            mass += weight
                    * detail::against_component(
                        c, [&](double ep) { return detail::gaussian_mass(a - ep, b - ep, sigma); }, a - reach,
                        b + reach, opts.tol * (b - a));
        }
        mass = std::max(mass, 0.0);
        h.densities[i] = mass / (b - a);
        in_range += mass;
    }
    if (in_range > 1.0 + 1e-9)
        throw QuadratureError("convolve_spectrum: in-range mass " + std::to_string(in_range) + " exceeds 1");
    // recompute from the stored densities so the histogram invariant holds to rounding
    h.out_of_range_mass = std::max(0.0, 1.0 - h.in_range_mass());
    if (h.in_range_mass() > 1.0) {
        double const scale = 1.0 / h.in_range_mass();
        for (auto& d : h.densities)
            d *= scale;
        h.out_of_range_mass = 0.0;
    }
    return h;
}

// -- nonequilibrium dispersion ----------------------------------------------------

/// Re-express a pointer-unit histogram on the energy axis of `model`.
inline SpectrumHistogram to_energy_units(SpectrumHistogram const& h, DispersionModel const& model)
{
    if (h.units != SpectrumUnits::pointer)
        throw std::invalid_argument("to_energy_units: histogram is not in pointer units");
    SpectrumHistogram out;
    out.units = SpectrumUnits::energy;
    out.out_of_range_mass = h.out_of_range_mass;
    out.edges.reserve(h.edges.size());
    for (double y : h.edges)
        out.edges.push_back(pointer_to_energy(y, model));
    out.densities.resize(h.bins());
    for (std::size_t i = 0; i < h.bins(); ++i)
        out.densities[i] = h.mass(i) / out.width(i);
    return out;
}

/// Observed-energy histogram of a snapshot, i.e. the nonequilibrium
/// dispersion D_noneq(E | E_gamma) at resolution T = snapshot time.
///
/// Bins are laid out uniformly in Y' over [yp_lo, yp_hi]; with
/// `units == energy` their edges are mapped through E = E_gamma (1 + Y'/T).
inline SpectrumHistogram estimate_dispersion_noneq(Ensemble const& snapshot, DispersionModel const& model,
                                                   std::size_t bins, double yp_lo, double yp_hi,
                                                   SpectrumUnits units = SpectrumUnits::energy)
{
    if (std::abs(snapshot.t_now - model.T()) > 1e-12 * std::max(1.0, model.T()))
        throw std::invalid_argument("estimate_dispersion_noneq: snapshot time " + std::to_string(snapshot.t_now)
                                    + " differs from the model resolution T = " + std::to_string(model.T()));
    if (units == SpectrumUnits::field)
        throw std::invalid_argument("estimate_dispersion_noneq: units must be energy or pointer");
    auto h = marginal_histogram(snapshot, Axis::yp, bins, yp_lo, yp_hi);
    if (units == SpectrumUnits::pointer)
        return h;
    return to_energy_units(h, model);
}

// -- composition ---------------------------------------------------------------------

struct LineScenario
{
    double e_line = 1.0;
    double n_sig = 0.0;
    double n_bkg = 0.0;
    DispersionModel model{1.0, 1.0};

    double n_tot() const noexcept { return n_sig + n_bkg; }

    void validate() const
    {
        if (!(n_sig >= 0.0) || !(n_bkg >= 0.0) || !(n_tot() > 0.0))
            throw std::invalid_argument("LineScenario: counts must be nonnegative with a positive total");
        if (std::abs(e_line - model.e_gamma()) > 1e-12 * model.e_gamma())
            throw std::invalid_argument("LineScenario: line energy differs from the model's E_gamma");
    }
};

/// Observed spectrum of a line on a background: the background is blurred
/// by the equilibrium dispersion, the line follows `d_noneq`. The result uses
/// the bins of `d_noneq`; background mass off that grid is out of range.
inline SpectrumHistogram compose_observed(LineScenario const& scenario, BackgroundModel const& background,
                                          SpectrumHistogram const& d_noneq, ConvolutionOptions opts = {})
{
    scenario.validate();
    if (d_noneq.units != SpectrumUnits::energy)
        throw std::invalid_argument("compose_observed: signal histogram must be in energy units");
    double const f_sig = scenario.n_sig / scenario.n_tot();
    double const f_bkg = scenario.n_bkg / scenario.n_tot();
    SpectrumHistogram out;
    out.edges = d_noneq.edges;
    out.units = SpectrumUnits::energy;
    out.densities.assign(d_noneq.bins(), 0.0);
    out.out_of_range_mass = f_sig * d_noneq.out_of_range_mass;
    if (f_bkg > 0.0) {
        opts.require_coverage = false;
        auto const bkg = convolve_spectrum(ActualSpectrum(background), scenario.model, d_noneq.edges, opts);
        for (std::size_t i = 0; i < out.bins(); ++i)
            out.densities[i] += f_bkg * bkg.densities[i];
        out.out_of_range_mass += f_bkg * bkg.out_of_range_mass;
    }
    for (std::size_t i = 0; i < out.bins(); ++i)
        out.densities[i] += f_sig * d_noneq.densities[i];
    return out;
}

// -- line counting ---------------------------------------------------------------------

struct ModeCountOptions
{
    /// Gaussian smoothing bandwidth in the histogram's own axis units.
    double bandwidth = 0.15;
    /// Minimum prominence as a fraction of the smoothed global maximum.
    double prominence_fraction = 0.10;
    /// Smoothed density is evaluated at this many points per bin.
    int oversample = 4;
};

/// Kernel-smoothed density of a histogram sampled on a fine regular grid.
inline std::vector<std::pair<double, double>> smoothed_density(SpectrumHistogram const& h,
                                                               ModeCountOptions const& opts = {})
{
    if (h.bins() == 0)
        throw std::invalid_argument("smoothed_density: empty histogram");
    if (!(opts.bandwidth > 0.0) || opts.oversample < 1)
        throw std::invalid_argument("smoothed_density: bandwidth and oversample must be positive");
    double const lo = h.edges.front();
    double const hi = h.edges.back();
    std::size_t const points = h.bins() * static_cast<std::size_t>(opts.oversample);
    std::vector<std::pair<double, double>> out;
    out.reserve(points);
    for (std::size_t j = 0; j < points; ++j) {
        double const x = lo + (hi - lo) * (static_cast<double>(j) + 0.5) / static_cast<double>(points);
        double s = 0.0;
        for (std::size_t i = 0; i < h.bins(); ++i)
            s += h.mass(i) * detail::gaussian(x - h.center(i), opts.bandwidth);
        out.emplace_back(x, s);
    }
    return out;
}

/// Topographic prominence of every strict local maximum of `y` (plateaus
/// count once), as (index, prominence) pairs.
inline std::vector<std::pair<std::size_t, double>> peak_prominences(std::vector<double> const& y)
{
    std::vector<std::pair<std::size_t, double>> peaks;
    std::size_t const n = y.size();
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && y[j + 1] == y[i])
            ++j;
        bool const rises = i == 0 ? false : y[i - 1] < y[i];
        bool const falls = j + 1 >= n ? false : y[j + 1] < y[i];
        if (rises && falls) {
            double const h = y[i];
            double left_min = h;
            for (std::size_t k = i; k-- > 0;) {
                if (y[k] > h)
                    break;
                left_min = std::min(left_min, y[k]);
            }
            double right_min = h;
            for (std::size_t k = j + 1; k < n; ++k) {
                if (y[k] > h)
                    break;
                right_min = std::min(right_min, y[k]);
            }
            peaks.emplace_back((i + j) / 2, h - std::max(left_min, right_min));
        }
        i = j + 1;
    }
    return peaks;
}

/// Number of distinct lines: prominent local maxima of the smoothed density.
inline int mode_count(SpectrumHistogram const& h, ModeCountOptions const& opts = {})
{
    auto const curve = smoothed_density(h, opts);
    std::vector<double> y;
    y.reserve(curve.size());
    for (auto const& [x, v] : curve)
        y.push_back(v);
    double const top = *std::max_element(y.begin(), y.end());
    if (!(top > 0.0))
        return 0;
    int count = 0;
    for (auto const& [idx, prom] : peak_prominences(y))
        if (prom >= opts.prominence_fraction * top)
            ++count;
    return count;
}

}  // namespace pwspec
