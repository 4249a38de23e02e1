"""Measure the time-stepping order of the rigid-rotation check.

At short horizons the drift sits at round-off, so the ratio under step
halving is read over a longer run.
"""

from __future__ import annotations

import argparse
from dataclasses import dataclass

from vstates.continuation import continue_branch
from vstates.contour import rigid_rotation_check
from vstates.spectral import ModeVector


@dataclass
class OrderRun:
    horizons: tuple[float, ...] = (0.5, 4.0, 8.0)
    steps: tuple[int, ...] = (64, 128, 256)


def run(cfg: OrderRun) -> None:
    m3 = continue_branch(3, 0.1, 0.02).states[-1]
    cases = {"ellipse xi=0.2": (ModeVector.single(2, 16, 0.2), 0.52), "m=3 xi=0.1": (m3.mv, m3.lam)}
    for name, (mv, lam) in cases.items():
        for t in cfg.horizons:
            drifts = [rigid_rotation_check(mv, lam, t_final=t, steps=n).drift for n in cfg.steps]
            ratios = " ".join(f"{a / b:6.1f}" for a, b in zip(drifts, drifts[1:]))
            print(f"{name:16s} t={t:4.1f} drift " + " ".join(f"{d:.2e}" for d in drifts) + f"  ratios {ratios}")


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--horizons", type=float, nargs="+", default=list(OrderRun.horizons))
    a = p.parse_args()
    run(OrderRun(horizons=tuple(a.horizons)))


if __name__ == "__main__":
    main()
