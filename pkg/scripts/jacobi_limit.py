"""Long-time limits: moment flow at large t against the free Jacobi law.

For each (alpha, beta) the moments evolved from the Bernoulli start are
compared with the closed-form limit, and the limit density is recovered by
Stieltjes inversion of the closed-form transform.
"""
from __future__ import annotations

import argparse
from dataclasses import dataclass

import numpy as np

from liberation.measures import TraceParams, moments, preset
from liberation.moments import evolve_moments
from liberation.transform import (
    EpsilonSchedule,
    jacobi_density,
    jacobi_edges,
    jacobi_limit,
    steady_G,
    stieltjes_density,
)


@dataclass
class LimitConfig:
    pairs: tuple = ((0.5, 0.5), (0.3, 0.6), (0.8, 0.7), (0.2, 0.2))
    order: int = 24
    t_final: float = 40.0


def run(cfg: LimitConfig):
    fine = EpsilonSchedule((1e-5, 5e-6, 2.5e-6))
    print(f"{'alpha':>6} {'beta':>6} {'r-':>8} {'r+':>8} {'atom0':>7} {'atom1':>7} "
          f"{'|g(T)-g_inf|':>13} {'sup|rho err|':>13}")
    for al, be in cfg.pairs:
        p = TraceParams(al, be)
        g = evolve_moments(moments(preset("bernoulli", p), cfg.order, p), cfg.t_final, p, 1e-12)
        law = jacobi_limit(al, be)
        gap = np.max(np.abs(g.g - moments(law, cfg.order).g))
        rm, rp = jacobi_edges(al, be)
        x = np.linspace(rm, rp, 102)[1:-1]
        x = x[(x - rm > 0.02) & (rp - x > 0.02)]
        err = np.max(np.abs(stieltjes_density(lambda z: steady_G(al, be, z), x, fine)
                            - jacobi_density(al, be, x))) if x.size else 0.0
        print(f"{al:6.2f} {be:6.2f} {rm:8.5f} {rp:8.5f} {law.atom_at(0.0):7.4f} "
              f"{law.atom_at(1.0):7.4f} {gap:13.2e} {err:13.2e}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--order", type=int, default=LimitConfig.order)
    ap.add_argument("--t-final", type=float, default=LimitConfig.t_final)
    a = ap.parse_args()
    run(LimitConfig(order=a.order, t_final=a.t_final))


if __name__ == "__main__":
    main()
