#pragma once

// Seeded equilibrium and widened ensembles, deterministic parallel evolution
// to snapshot times, and marginal statistics.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "dynamics.hpp"
#include "histogram.hpp"
#include "integrator.hpp"
#include "quantum_state.hpp"
#include "random.hpp"

namespace pwspec {

/// Samples closer than this to Q = 0, +-1 (or Q_k = 0) are redrawn.
inline constexpr double singular_exclusion = 1e-8;

struct Ensemble
{
    std::vector<PhaseState> points;
    double w = 1.0;
    double t_now = 0.0;
    std::uint64_t seed = 0;
    ModeSpectrum modes;

    std::size_t size() const noexcept { return points.size(); }
};

struct SnapshotSet
{
    std::vector<double> times;
    std::vector<Ensemble> ensembles;
};

/// A point failed to integrate; evolution was aborted.
class EnsembleEvolutionError : public std::runtime_error
{
  public:
    EnsembleEvolutionError(std::size_t index, std::uint64_t seed, std::string const& cause)
        : std::runtime_error("point " + std::to_string(index) + " (seed " + std::to_string(seed)
                             + ") failed: " + cause),
          index_(index), seed_(seed)
    {
    }

    std::size_t index() const noexcept { return index_; }
    std::uint64_t seed() const noexcept { return seed_; }

  private:
    std::size_t index_;
    std::uint64_t seed_;
};

namespace detail {

inline bool near_singular(PhaseState const& s) noexcept
{
    if (std::abs(s.q) < singular_exclusion || std::abs(s.gap) < singular_exclusion)
        return true;
    for (double qk : s.vacuum)
        if (std::abs(qk) < singular_exclusion)
            return true;
    return false;
}

// Point `index` of a widened ensemble; w = 1 is the equilibrium draw.
inline PhaseState draw_point(std::uint64_t seed, std::uint64_t index, double w, std::size_t n_vacuum)
{
    CounterStream rng(seed, index);
    std::vector<double> vacuum(n_vacuum);
    for (;;) {
        double const yp = rng.normal();
        double const q = w * rng.sign() * std::sqrt(rng.gamma_three_halves());
        // vacuum ground state |chi_0|^2 is normal with variance 1/2
        for (auto& qk : vacuum)
            qk = rng.normal() * std::numbers::sqrt2 * 0.5;
        PhaseState s(q, yp, vacuum);
        if (!near_singular(s))
            return s;
    }
}

}  // namespace detail

/// Nonequilibrium ensemble |psi(Q/w, Y')|^2 / w: equilibrium draws with Q scaled by w.
inline Ensemble sample_widened(std::size_t n, double w, std::uint64_t seed, ModeSpectrum modes = {})
{
    if (n == 0)
        throw std::invalid_argument("sample: ensemble size must be positive");
    detail::require_width(w);
    Ensemble e;
    e.w = w;
    e.seed = seed;
    e.modes = std::move(modes);
    e.points.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        e.points.push_back(detail::draw_point(seed, i, w, e.modes.size()));
    return e;
}

/// Equilibrium ensemble |psi|^2: Y' ~ N(0,1), Q^2 ~ Gamma(3/2), random sign of Q.
inline Ensemble sample_equilibrium(std::size_t n, std::uint64_t seed, ModeSpectrum modes = {})
{
    return sample_widened(n, 1.0, seed, std::move(modes));
}

/// Worker count for `requested` (0 = hardware concurrency).
inline unsigned resolve_threads(unsigned requested)
{
    if (requested > 0)
        return requested;
    unsigned const hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

/// Evolve every point of `ensemble` to each of `times`.
///
/// Points are integrated independently; results are identical for any
/// `threads` value. The first failing point aborts the run.
inline SnapshotSet evolve_to_snapshots(Ensemble const& ensemble, std::span<double const> times,
                                       IntegratorSettings const& settings, unsigned threads = 0)
{
    if (ensemble.points.empty())
        throw std::invalid_argument("evolve_to_snapshots: empty ensemble");
    if (times.empty())
        throw std::invalid_argument("evolve_to_snapshots: no snapshot times");
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!std::isfinite(times[i]) || times[i] < ensemble.t_now || (i > 0 && !(times[i] > times[i - 1])))
            throw std::invalid_argument(
                "evolve_to_snapshots: times must be strictly increasing and not before the ensemble time");
    }
    settings.validate();

    std::size_t const n = ensemble.size();
    std::size_t const m = times.size();
    SnapshotSet out;
    out.times.assign(times.begin(), times.end());
    out.ensembles.resize(m);
    for (std::size_t j = 0; j < m; ++j) {
        auto& e = out.ensembles[j];
        e.w = ensemble.w;
        e.seed = ensemble.seed;
        e.modes = ensemble.modes;
        e.t_now = times[j];
        e.points.resize(n);
    }

    std::atomic<std::size_t> next{0};
    std::atomic<bool> abort{false};
    std::mutex failure_mutex;
    std::size_t failed_index = n;
    std::string failure;

    auto worker = [&] {
        GuidanceIntegrator integrator(settings, ensemble.modes);
        std::vector<PhaseState> states(m);
        for (;;) {
            std::size_t const i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= n || abort.load(std::memory_order_relaxed))
                return;
            try {
                integrator.propagate(ensemble.points[i], ensemble.t_now, times, states);
            } catch (std::exception const& ex) {
                std::lock_guard lock(failure_mutex);
                if (i < failed_index) {
                    failed_index = i;
                    failure = ex.what();
                }
                abort.store(true, std::memory_order_relaxed);
                return;
            }
            for (std::size_t j = 0; j < m; ++j)
                out.ensembles[j].points[i] = std::move(states[j]);
        }
    };

    unsigned const nthreads = std::min<std::size_t>(resolve_threads(threads), n);
    if (nthreads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(nthreads);
        for (unsigned t = 0; t < nthreads; ++t)
            pool.emplace_back(worker);
    }
    if (failed_index < n)
        throw EnsembleEvolutionError(failed_index, ensemble.seed, failure);
    return out;
}

inline SnapshotSet evolve_to_snapshots(Ensemble const& ensemble, std::vector<double> const& times,
                                       IntegratorSettings const& settings, unsigned threads = 0)
{
    return evolve_to_snapshots(ensemble, std::span<double const>(times), settings, threads);
}

enum class Axis
{
    q,
    yp,
};

inline std::vector<double> coordinates(Ensemble const& e, Axis axis)
{
    std::vector<double> v;
    v.reserve(e.size());
    for (auto const& p : e.points)
        v.push_back(axis == Axis::q ? p.q : p.yp);
    return v;
}

/// Density-normalized marginal over one coordinate.
inline SpectrumHistogram marginal_histogram(Ensemble const& e, Axis axis, std::size_t bins, double lo, double hi)
{
    if (e.points.empty())
        throw std::invalid_argument("marginal_histogram: empty ensemble");
    auto const v = coordinates(e, axis);
    return histogram_of(v, bins, lo, hi, axis == Axis::q ? SpectrumUnits::field : SpectrumUnits::pointer);
}

// -- sample statistics -------------------------------------------------------

inline double standard_normal_cdf(double x) noexcept
{
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

inline double sample_mean(std::span<double const> v)
{
    if (v.empty())
        throw std::invalid_argument("sample_mean: no samples");
    double s = 0.0;
    for (double x : v)
        s += x;
    return s / static_cast<double>(v.size());
}

/// Unbiased sample standard deviation.
inline double sample_stddev(std::span<double const> v)
{
    if (v.size() < 2)
        throw std::invalid_argument("sample_stddev: need at least two samples");
    double const mu = sample_mean(v);
    double ss = 0.0;
    for (double x : v)
        ss += (x - mu) * (x - mu);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

/// One-sample Kolmogorov-Smirnov statistic sup |F_n - F|.
template<class Cdf>
double ks_statistic(std::span<double const> samples, Cdf&& cdf)
{
    if (samples.empty())
        throw std::invalid_argument("ks_statistic: no samples");
    std::vector<double> v(samples.begin(), samples.end());
    std::sort(v.begin(), v.end());
    double const n = static_cast<double>(v.size());
    double d = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        double const f = cdf(v[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    return d;
}

inline double ks_statistic_standard_normal(std::span<double const> samples)
{
    return ks_statistic(samples, standard_normal_cdf);
}

/// CDF of |chi_1(Q)|^2: 1/2 + sign(Q) P(3/2, Q^2)/2, with the regularized
/// lower incomplete gamma written through erf.
inline double excited_mode_cdf(double q) noexcept
{
    double const a = std::abs(q);
    double const p = std::erf(a) - 2.0 * a * std::exp(-a * a) / std::sqrt(std::numbers::pi);
    return q >= 0.0 ? 0.5 + 0.5 * p : 0.5 - 0.5 * p;
}

}  // namespace pwspec
