"""Continue m-fold branches from the disc and write tables, summaries and plots.

    python scripts/run_branches.py --folds 3 4 5 --xi-max 0.1 --outdir runs
"""

from __future__ import annotations

import argparse
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from vstates.continuation import continue_branch
from vstates.diagnostics import diagnose
from vstates.io import emit_svg, write_branch_csv
from vstates.spectral import default_grid_size, synthesize


@dataclass
class BranchRun:
    folds: list[int] = field(default_factory=lambda: [3, 4, 5])
    xi_max: float = 0.1
    dxi: float = 0.02
    K: int = 16
    tol: float = 1e-12
    outdir: str = "runs"


def run(cfg: BranchRun) -> dict:
    out = Path(cfg.outdir)
    out.mkdir(parents=True, exist_ok=True)
    summary = {"config": asdict(cfg), "branches": {}}
    for m in cfg.folds:
        N = default_grid_size(m, cfg.K)
        b = continue_branch(m, cfg.xi_max, cfg.dxi, K=cfg.K, N=N, tol=cfg.tol)
        write_branch_csv(out / f"branch_m{m}.csv", b, cfg.K, N, cfg.tol, cfg.dxi, cfg.xi_max)
        rows = []
        for s in b.states:
            d = diagnose(s.mv, s.lam, N, n_max=4)
            rows.append({
                "xi": s.xi, "lambda": s.lam, "omega": s.omega, "residual_inf": s.residual_inf,
                "min_curvature": d.min_curvature, "decay_rho": d.decay_rho, "q_consistency": d.q_consistency,
            })
        if b.states:
            emit_svg(synthesize(b.states[-1].mv, N, derivs=1).phi, out / f"boundary_m{m}.svg", overlay_circle=True)
        summary["branches"][m] = {"reason": b.reason, "warnings": b.warnings, "states": rows}
        print(f"m={m}: {len(b)} states ({b.reason})")
        for r in rows:
            print(f"  xi={r['xi']:.3f}  lambda={r['lambda']:.12f}  Omega={r['omega']:.12f}  min kappa={r['min_curvature']:.4f}")
    (out / "summary.json").write_text(json.dumps(summary, indent=2, default=float) + "\n")
    return summary


def main() -> None:
    d = BranchRun()
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--folds", type=int, nargs="+", default=d.folds)
    p.add_argument("--xi-max", type=float, default=d.xi_max)
    p.add_argument("--dxi", type=float, default=d.dxi)
    p.add_argument("--K", type=int, default=d.K)
    p.add_argument("--tol", type=float, default=d.tol)
    p.add_argument("--outdir", default=d.outdir)
    a = p.parse_args()
    run(BranchRun(a.folds, a.xi_max, a.dxi, a.K, a.tol, a.outdir))


if __name__ == "__main__":
    main()
