"""Fit the unspecified inequality constants on calibration grids.

Prints the extreme required value on each grid and the frozen value it
implies (25% margin, rounded outward).  Paste the output into
``geomdetect/calibration.py``.  The tests use different grids.
"""

from __future__ import annotations

import argparse

import numpy as np

from geomdetect import calibration as cal
from geomdetect.coupling_lab import build_coupling, sample_sphere_points


def psi_grid():
    for p in np.geomspace(1e-4, 0.5, 9):
        for d in (10, 100, 1000, 10000):
            yield float(p), d


def fit_upper(name, values):
    worst = max(values)
    print(f"{name}: max required {worst:.6g} -> frozen {cal.round_up(worst * cal.MARGIN)}")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=20240601)
    ap.add_argument("--draws", type=int, default=10000)
    args = ap.parse_args()

    fit_upper("PSI_THRESHOLD_C", [cal.required_threshold_c(p, d) for p, d in psi_grid()])
    fit_upper("PSI_DENSITY_C1", [cal.required_density_c1(p, d) for p, d in psi_grid()])
    fit_upper("PSI_TAIL_C", [cal.required_tail_c(p, d) for p, d in psi_grid()])

    sand = [(float(t), d) for t in np.linspace(0.0, 0.1, 6) for d in (2, 10, 100, 1000, 10000)]
    fit_upper("SANDWICH_C1", [cal.required_sandwich_c1(t, d) for t, d in sand])
    c2 = min(cal.allowed_sandwich_c2(t, d) for t, d in sand)
    print(f"SANDWICH_C2: min allowed {c2:.6g} -> frozen {cal.round_down(c2 / cal.MARGIN)}")

    pc = [
        (n, t, float(q))
        for n in (20, 100, 500, 2000)
        for t in (3, 4, 5)
        for q in np.geomspace(t**4 / n**2, 0.9, 13)
        if t**4 / n**2 < 0.9
    ]
    fit_upper("PLANTED_CLIQUE_C", [cal.required_planted_clique_c(*x) for x in pc])

    pp = [
        (n, t, float(lam))
        for n in (20, 100, 500, 2000)
        for t in (3, 4, 5)
        for lam in np.geomspace(1 / n, 10.0, 13)
    ]
    fit_upper("PLANTED_POISSON_C", [cal.required_planted_poisson_c(*x) for x in pp])

    n, d = 16, 4096
    rng = np.random.default_rng(args.seed)
    req = []
    for _ in range(args.draws):
        st, _ = build_coupling(sample_sphere_points(n - 1, d, rng), rng)
        req.append(cal.required_remainder_c(n, d, st.coeffs[2:], st.t_values[2:], st.gammas[2:], st.a22))
    q = float(np.quantile(req, 1 - n ** -cal.REMAINDER_S))
    print(f"REMAINDER_C: {1 - n ** -cal.REMAINDER_S:.4f} quantile {q:.6g} -> frozen {cal.round_up(q)}")


if __name__ == "__main__":
    main()
