"""Branch tables (CSV), reports (JSON), boundary plots (SVG) and flat config files."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from . import __version__
from .continuation import Branch, VState
from .spectral import ModeVector


class StateFileError(ValueError):
    pass


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def branch_columns(fold: int, K: int) -> list[str]:
    return ["xi", "lambda", "omega", "residual_inf"] + [f"a{n * fold - 1}" for n in range(1, K + 1)]


def write_branch_csv(path: str | Path, branch: Branch, K: int, N: int, tol: float, dxi: float, xi_max: float) -> None:
    header = {
        "m": branch.fold,
        "K": K,
        "N": N,
        "tol": fmt(tol),
        "dxi": fmt(dxi),
        "xi_max": fmt(xi_max),
        "version": __version__,
        "reason": branch.reason,
    }
    with open(path, "w", newline="") as fh:
        for key, val in header.items():
            fh.write(f"# {key}={val}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(branch_columns(branch.fold, K))
        for s in branch.states:
            writer.writerow([fmt(s.xi), fmt(s.lam), fmt(s.omega), fmt(s.residual_inf)] + [fmt(a) for a in s.mv.coeffs])


def read_branch_csv(path: str | Path) -> tuple[dict, Branch]:
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise StateFileError(f"cannot read {path}: {exc}") from exc
    header: dict[str, str] = {}
    body = []
    for line in lines:
        if line.startswith("#"):
            key, _, val = line[1:].strip().partition("=")
            header[key.strip()] = val.strip()
        elif line.strip():
            body.append(line)
    try:
        fold, K, N = int(header["m"]), int(header["K"]), int(header["N"])
        meta = {
            "m": fold,
            "K": K,
            "N": N,
            "tol": float(header["tol"]),
            "dxi": float(header["dxi"]),
            "xi_max": float(header["xi_max"]),
            "reason": header.get("reason", ""),
            "version": header.get("version", ""),
        }
        rows = list(csv.reader(body))
        if rows[0] != branch_columns(fold, K):
            raise StateFileError("column header does not match m and K")
        branch = Branch(fold, reason=meta["reason"])
        for row in rows[1:]:
            vals = [float(x) for x in row]
            if len(vals) != 4 + K or not all(math.isfinite(v) for v in vals):
                raise StateFileError("malformed state row")
            mv = ModeVector(fold, np.array(vals[4:]))
            branch.states.append(VState(fold, vals[1], mv, vals[3], N))
    except StateFileError:
        raise
    except (KeyError, ValueError, IndexError) as exc:
        raise StateFileError(f"corrupted branch file {path}: {exc}") from exc
    return meta, branch


def write_json(path: str | Path | None, payload: dict) -> str:
    text = json.dumps(payload, indent=2, sort_keys=True, default=_json_default) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def emit_svg(points, path: str | Path, overlay_circle: bool = False, size: int = 400) -> None:
    """Closed path through ``points`` (complex), y axis pointing up."""
    z = np.asarray(points, dtype=np.complex128)
    extent = max(1.0, float(np.abs(z).max())) * 1.1
    scale = size / (2 * extent)

    def xy(p: complex) -> str:
        return f"{(p.real + extent) * scale:.6f},{(extent - p.imag) * scale:.6f}"

    d = "M " + " L ".join(xy(p) for p in z) + " Z"
    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">',
    ]
    if overlay_circle:
        c = extent * scale
        parts.append(
            f'  <circle cx="{c:.6f}" cy="{c:.6f}" r="{scale:.6f}" fill="none" stroke="#999999" stroke-dasharray="4 3"/>'
        )
    parts.append(f'  <path d="{d}" fill="#c6dbef" stroke="#08519c" stroke-width="1"/>')
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n")


def read_config(path: str | Path) -> dict[str, str]:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise ValueError(f"{path}:{lineno}: expected key=value")
        out[key.strip().replace("-", "_")] = val.strip()
    return out
