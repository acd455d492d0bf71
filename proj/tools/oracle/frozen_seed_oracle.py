"""Independent re-computation of the frozen-seed ensemble statistics.

Reads the T=0 points written by `pwspec run` (so both sides start from the
same sample), integrates every point with scipy's DOP853 on the reduced
guidance flow written in z = ln|Q^2 - 1|, and prints the Y' statistics and
line counts (scipy.signal prominences) at each requested time.

    python3 frozen_seed_oracle.py out/w4/points_T0.csv 5 10 1000

Set ORACLE_LIMIT=n to use only the first n points; when points_T<t>.csv
files sit next to the input, the per-point Y' differences are reported too.
"""

import os
import sys

import numpy as np
from scipy.integrate import solve_ivp
from scipy.signal import find_peaks
from scipy.stats import kstest


def rhs_factory(outer):
    def rhs(_t, y):
        z, yp = y
        q2 = 1.0 + np.exp(z) if outer else -np.expm1(z)
        return [-yp / 3.0, 1.0 / (6.0 * q2) + q2 / 3.0 - 5.0 / 6.0]

    return rhs


def evolve(q, yp, times):
    outer = abs(q) > 1.0
    z0 = np.log(abs((q - 1.0) * (q + 1.0)))
    sol = solve_ivp(rhs_factory(outer), (0.0, times[-1]), [z0, yp], method="DOP853",
                    t_eval=times, rtol=1e-10, atol=1e-12)
    if not sol.success:
        raise RuntimeError(sol.message)
    return sol.y[1]


def line_count(yp, bins=50, lo=-5.0, hi=5.0, bandwidth=0.15, floor=0.10, oversample=4):
    counts, edges = np.histogram(yp, bins=bins, range=(lo, hi))
    mass = counts / len(yp)
    centres = 0.5 * (edges[1:] + edges[:-1])
    n = bins * oversample
    x = lo + (hi - lo) * (np.arange(n) + 0.5) / n
    kernel = np.exp(-0.5 * ((x[:, None] - centres[None, :]) / bandwidth) ** 2)
    smooth = kernel @ mass / (bandwidth * np.sqrt(2 * np.pi))
    peaks, props = find_peaks(smooth, prominence=floor * smooth.max())
    return len(peaks)


def main():
    path = sys.argv[1]
    times = [float(t) for t in sys.argv[2:]]
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    limit = int(os.environ.get("ORACLE_LIMIT", "0"))
    if limit:
        data = data[:limit]
    q0, yp0 = data[:, 1], data[:, 2]
    out = np.empty((len(times), len(q0)))
    for i, (q, yp) in enumerate(zip(q0, yp0)):
        out[:, i] = evolve(q, yp, times)
    for t, yp in zip(times, out):
        ks = kstest(yp, "norm").statistic
        line = f"T={t:g} mean={yp.mean():.6f} sd={yp.std(ddof=1):.6f} ks={ks:.6f} lines={line_count(yp)}"
        other = os.path.join(os.path.dirname(path), f"points_T{t:g}.csv")
        if os.path.exists(other):
            ref = np.loadtxt(other, delimiter=",", skiprows=1)[: len(yp), 2]
            line += f" max|dY'|={np.abs(ref - yp).max():.3e}"
        print(line, flush=True)


if __name__ == "__main__":
    main()
