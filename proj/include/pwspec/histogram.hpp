#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pwspec {

/// Axis a histogram is binned over.
enum class SpectrumUnits
{
    energy,   //!< recorded energy E
    pointer,  //!< Y' = (E - E_gamma) / dE
    field,    //!< excited-mode amplitude Q
};

inline char const* to_string(SpectrumUnits u)
{
    switch (u) {
    case SpectrumUnits::energy: return "energy";
    case SpectrumUnits::pointer: return "pointer";
    case SpectrumUnits::field: return "field";
    }
    return "?";
}

/// Binned probability density. In-range mass plus `out_of_range_mass` is 1.
struct SpectrumHistogram
{
    std::vector<double> edges;
    std::vector<double> densities;
    SpectrumUnits units = SpectrumUnits::pointer;
    double out_of_range_mass = 0.0;

    std::size_t bins() const noexcept { return densities.size(); }
    double width(std::size_t i) const { return edges[i + 1] - edges[i]; }
    double center(std::size_t i) const { return 0.5 * (edges[i] + edges[i + 1]); }
    double mass(std::size_t i) const { return densities[i] * width(i); }

    double in_range_mass() const
    {
        double m = 0.0;
        for (std::size_t i = 0; i < bins(); ++i)
            m += mass(i);
        return m;
    }

    /// Throws if edges are not increasing, a density is negative, or the
    /// total mass is not 1 within `tol`.
    void validate(double tol = 1e-12) const
    {
        if (edges.size() < 2 || edges.size() != densities.size() + 1)
            throw std::invalid_argument("SpectrumHistogram: need bins >= 1 and edges = bins + 1");
        for (std::size_t i = 0; i + 1 < edges.size(); ++i)
            if (!(edges[i + 1] > edges[i]))
                throw std::invalid_argument("SpectrumHistogram: edges must be strictly increasing");
        for (double d : densities)
            if (!(d >= 0.0) || !std::isfinite(d))
                throw std::invalid_argument("SpectrumHistogram: densities must be finite and nonnegative");
        if (!(out_of_range_mass >= 0.0))
            throw std::invalid_argument("SpectrumHistogram: negative out-of-range mass");
        double const total = in_range_mass() + out_of_range_mass;
        if (std::abs(total - 1.0) > tol)
            throw std::invalid_argument("SpectrumHistogram: total mass " + std::to_string(total) + " != 1");
    }
};

/// `bins` equal-width edges spanning [lo, hi].
inline std::vector<double> uniform_edges(std::size_t bins, double lo, double hi)
{
    if (bins < 1 || !(hi > lo))
        throw std::invalid_argument("uniform_edges: need bins >= 1 and hi > lo");
    std::vector<double> edges(bins + 1);
    for (std::size_t i = 0; i <= bins; ++i)
        edges[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins);
    edges.back() = hi;
    return edges;
}

/// Density histogram of `values` over uniform bins; values outside [lo, hi]
/// are counted in out_of_range_mass.
inline SpectrumHistogram histogram_of(std::span<double const> values, std::size_t bins, double lo, double hi,
                                      SpectrumUnits units)
{
    if (values.empty())
        throw std::invalid_argument("histogram_of: no samples");
    if (bins < 2)
        throw std::invalid_argument("histogram_of: need at least two bins");
    SpectrumHistogram h;
    h.edges = uniform_edges(bins, lo, hi);
    h.units = units;
    std::vector<std::size_t> counts(bins, 0);
    std::size_t outside = 0;
    double const scale = static_cast<double>(bins) / (hi - lo);
    for (double v : values) {
        if (!(v >= lo && v <= hi)) {
            ++outside;
            continue;
        }
        auto idx = static_cast<std::size_t>((v - lo) * scale);
        if (idx >= bins)
            idx = bins - 1;
        // floating-point edge cases: respect the stored edges exactly
        while (idx > 0 && v < h.edges[idx])
            --idx;
        while (idx + 1 < bins && v >= h.edges[idx + 1])
            ++idx;
        ++counts[idx];
    }
    double const n = static_cast<double>(values.size());
    h.densities.resize(bins);
    for (std::size_t i = 0; i < bins; ++i)
        h.densities[i] = static_cast<double>(counts[i]) / (n * h.width(i));
    h.out_of_range_mass = static_cast<double>(outside) / n;
    return h;
}

}  // namespace pwspec
