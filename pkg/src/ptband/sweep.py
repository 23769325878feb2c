"""Sweeps of the Bloch solver over a quasimomentum grid."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .averaged import JordanData, jordan_analyze
from .bloch import BlochPoint, solve_bloch, trust_window
from .potential import PotentialSpec, mean_matrix

BOUNDARY_TS = (-2 / 3, -1 / 3, 1 / 3, 2 / 3)


def t_grid(n: int) -> np.ndarray:
    """``n`` uniform points ``-1 + 2i/n`` (i = 1..n) on (-1, 1].

    Points landing on +-1/3 or +-2/3 are moved half a step towards zero so
    that no sample sits on a boundary of the resonance index sets.
    """
    if n < 3:
        raise ValueError("need at least 3 t-points")
    h = 2.0 / n
    ts = -1.0 + h * np.arange(1, n + 1)
    for b in BOUNDARY_TS:
        hit = np.isclose(ts, b, rtol=0, atol=1e-12)
        ts[hit] = b - np.sign(b) * h / 2
    ts[-1] = 1.0
    return ts


def thread_count(default: int | None = None) -> int:
    env = os.environ.get("PTBAND_THREADS")
    if env:
        return max(1, int(env))
    return default or 1


def label_point(jd: JordanData, t: float, lam: complex, kmax: int) -> tuple[int, int, float]:
    """Nearest unperturbed eigenvalue ``mu_{k,j}(t)``: returns (k, j, distance)."""
    ks = np.arange(-kmax, kmax + 1)
    base = (2 * ks + t) ** 2
    best = (0, 0, np.inf)
    for j, b in enumerate(jd.blocks):
        d = np.abs(lam - (base + b.mu))
        i = int(np.argmin(d))
        # prefer k >= 0 on ties (t = 0 makes k and -k coincide)
        ties = np.nonzero(d <= d[i] * (1 + 1e-14))[0]
        i = max(ties, key=lambda x: (ks[x] >= 0, -abs(ks[x])))
        if d[i] < best[2]:
            best = (int(ks[i]), j, float(d[i]))
    return best


@dataclass
class BandSweep:
    spec: PotentialSpec
    jd: JordanData
    K: int
    ts: np.ndarray
    points: list  # list[BlochPoint]
    labels: list  # (k, j) per point
    distances: list  # |lambda - mu_{k,j}(t)| per point

    def at(self, t: float) -> list[BlochPoint]:
        return [p for p in self.points if p.t == t]

    def by_t(self) -> dict:
        out: dict[float, list] = {}
        for p in self.points:
            out.setdefault(p.t, []).append(p)
        return out

    def to_json(self) -> dict:
        return {
            "K": self.K,
            "t": self.ts.tolist(),
            "spec": self.spec.to_json(),
            "averaged": self.jd.to_json(),
            "points": [
                {"t": p.t, "re": p.lam.real, "im": p.lam.imag, "mult": p.mult,
                 "k": k, "j": j, "dist": d, "residual_rows": p.residual_rows,
                 "sup_norm": p.sup_norm, "refined": p.refined}
                for p, (k, j), d in zip(self.points, self.labels, self.distances)
            ],
        }


def run_sweep(spec: PotentialSpec, K: int = 64, ts=None, window=None, *,
              jd: JordanData | None = None, workers: int | None = None,
              keep_vectors: bool = False) -> BandSweep:
    ts = t_grid(201) if ts is None else np.asarray(ts, dtype=float)
    jd = jordan_analyze(mean_matrix(spec)) if jd is None else jd

    def one(t):
        win = window
        if win is None:
            win = trust_window(spec, t, K)
        return solve_bloch(spec, float(t), K, win, keep_vectors=keep_vectors)

    n = thread_count(workers)
    if n > 1:
        with ThreadPoolExecutor(n) as pool:
            results = list(pool.map(one, ts))
    else:
        results = [one(t) for t in ts]
    points, labels, dists = [], [], []
    for res in results:
        for p in res:
            k, j, d = label_point(jd, p.t, p.lam, K + 2)
            points.append(p)
            labels.append((k, j))
            dists.append(d)
    return BandSweep(spec, jd, K, ts, points, labels, dists)
