"""Regenerate the embedded quadrature tables in crates/core/data/.

Lebedev rules come from scipy.integrate.lebedev_rule (Lebedev-Laikov tables).
Fliege-Maier point sets come from the samplings_fliege.mat file that ships
with pyfar (pyfar/samplings/external). The published 900-point set carries
non-positive weights for several sizes (121, 169, 361, 441, 625, 729, 784,
900). For those, nodes are kept and positive weights are solved that
integrate every real SH up to the highest feasible order exactly (max-min
weight first, then closest to the published weights); the achieved order is
stored as `refit_exact_order`.

Usage: python3 tools/gen_grids.py <path/to/samplings_fliege.mat>
"""
import hashlib
import json
import sys
from pathlib import Path

import numpy as np
import scipy.io
from scipy.integrate import lebedev_rule
from scipy.special import sph_harm_y

OUT = Path(__file__).resolve().parent.parent / "crates" / "core" / "data"
LEBEDEV_DEGREES = list(range(3, 32, 2)) + [35, 41, 47, 53, 59]


def to_deg(az_rad, el_rad):
    az = np.degrees(az_rad) % 360.0
    az[az >= 360.0] = 0.0
    return az, np.degrees(el_rad)


def real_sh(order, az_rad, colat_rad):
    cols = []
    for n in range(order + 1):
        for m in range(-n, n + 1):
            y = sph_harm_y(n, abs(m), colat_rad, az_rad)
            if m < 0:
                cols.append(np.sqrt(2) * (-1) ** m * y.imag)
            elif m == 0:
                cols.append(y.real)
            else:
                cols.append(np.sqrt(2) * (-1) ** m * y.real)
    return np.array(cols).T


def lebedev():
    rules = []
    for deg in LEBEDEV_DEGREES:
        x, w = lebedev_rule(deg)
        az, el = to_deg(np.arctan2(x[1], x[0]), np.arcsin(np.clip(x[2], -1, 1)))
        w = w / w.sum()
        rules.append({
            "degree": deg,
            "directions": [[float(a), float(e)] for a, e in zip(az, el)],
            "weights": [float(v) for v in w],
        })
    return rules


def refit_positive(az, colat, w0):
    """Positive weights exact for the highest feasible SH order below sqrt(n) - 1."""
    order = int(np.sqrt(len(az))) - 2
    while order > 0:
        w = _refit(az, colat, w0, order)
        if w is not None:
            return w, order
        order -= 1
    raise RuntimeError("no positive weights found")


def _refit(az, colat, w0, order):
    import cvxpy as cp

    basis = real_sh(order, az, colat)
    rhs = np.zeros(basis.shape[1])
    rhs[0] = 1.0 / np.sqrt(4 * np.pi)
    n = len(az)
    w = cp.Variable(n)
    t = cp.Variable()
    cp.Problem(cp.Maximize(t), [basis.T @ w == rhs, w >= t]).solve(solver=cp.CLARABEL)
    if t.value is None or t.value <= 0:
        return None
    floor = 0.9 * float(t.value)
    w = cp.Variable(n)
    cp.Problem(cp.Minimize(cp.sum_squares(w - w0)), [basis.T @ w == rhs, w >= floor]).solve(
        solver=cp.CLARABEL
    )
    return np.asarray(w.value)


def fliege(mat_path):
    mat = scipy.io.loadmat(mat_path)
    sets = []
    for key in sorted((k for k in mat if k.startswith("Fliege_")), key=lambda k: int(k[7:])):
        data = mat[key]
        az_rad, colat = data[:, 0], data[:, 1]
        w = data[:, 2] / data[:, 2].sum()
        exact_order = None
        if (w <= 0).any():
            w, exact_order = refit_positive(az_rad, colat, w)
            w = w / w.sum()
        az, el = to_deg(az_rad, np.pi / 2 - colat)
        sets.append({
            "num_points": int(len(w)),
            "refit_exact_order": exact_order,
            "directions": [[float(a), float(e)] for a, e in zip(az, el)],
            "weights": [float(v) for v in w],
        })
    return sets


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    files = {
        "lebedev.json": {"version": 1, "source": "Lebedev-Laikov", "rules": lebedev()},
        "fliege.json": {"version": 1, "source": "Fliege-Maier", "sets": fliege(sys.argv[1])},
    }
    sums = []
    for name, payload in files.items():
        text = json.dumps(payload, separators=(",", ":")) + "\n"
        (OUT / name).write_text(text)
        sums.append(f"{hashlib.sha256(text.encode()).hexdigest()}  {name}")
    (OUT / "SHA256SUMS").write_text("\n".join(sums) + "\n")


if __name__ == "__main__":
    main()
