#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace pwspec {

/// The adaptive rule could not reach its tolerance at the depth limit.
class QuadratureError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

namespace detail {

template<class F>
double simpson_step(F const& f, double a, double fa, double m, double fm, double b, double fb, double whole,
                    double tol, int depth, int max_depth)
{
    double const lm = 0.5 * (a + m);
    double const rm = 0.5 * (m + b);
    double const flm = f(lm);
    double const frm = f(rm);
    double const left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double const right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    double const delta = left + right - whole;
    if (std::abs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    if (depth >= max_depth)
        throw QuadratureError("adaptive Simpson: tolerance not reached on [" + std::to_string(a) + ", "
                              + std::to_string(b) + "]");
    return simpson_step(f, a, fa, lm, flm, m, fm, left, 0.5 * tol, depth + 1, max_depth)
           + simpson_step(f, m, fm, rm, frm, b, fb, right, 0.5 * tol, depth + 1, max_depth);
}

}  // namespace detail

/// Adaptive Simpson integral of f over [a, b] to absolute tolerance `tol`.
///
/// The interval is pre-split into `panels` pieces so that narrow features are
/// not missed by the first coarse estimate.
template<class F>
double adaptive_simpson(F const& f, double a, double b, double tol, int panels = 16, int max_depth = 40)
{
    if (!(b > a))
        return 0.0;
    double total = 0.0;
    double const width = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
        double const lo = a + width * p;
        double const hi = p + 1 == panels ? b : lo + width;
        double const mid = 0.5 * (lo + hi);
        double const flo = f(lo), fmid = f(mid), fhi = f(hi);
        double const whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
        total += detail::simpson_step(f, lo, flo, mid, fmid, hi, fhi, whole, tol / panels, 0, max_depth);
    }
    return total;
}

}  // namespace pwspec
