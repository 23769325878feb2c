"""Localization of Bloch eigenvalues: disks around (2n+t)^2, epsilon
neighbourhoods of mu_{k,j}(t), the threshold N1 and the t-exclusion sets."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import intervals as iv
from .averaged import JordanData
from .potential import PotentialNorms, compute_norms
from .sweep import BandSweep

FIT_RANGE = (5, 40)
MIN_FIT_POINTS = 5


def index_set_A(k: int, t: float) -> set[int]:
    """Indices n whose unperturbed level (2n+t)^2 can resonate with (2k+t)^2.

    The boundary points +-1/3, +-2/3 are assigned to the single-index case.
    """
    if not -1 < t <= 1:
        raise ValueError(f"t must lie in (-1, 1], got {t}")
    if abs(t) < 1 / 3:
        return {k, -k}
    if abs(t) <= 2 / 3:
        return {k}
    if t > 0:
        return {k, -k - 1}
    return {k, -k + 1}


@dataclass
class GapCheck:
    ok: bool
    worst_margin: float
    worst_case: tuple | None
    checked: int


def gap_bound_check(k_max: int, ts) -> GapCheck:
    """Exhaustive check of |(2n+t)^2 - (2k+t)^2| >= 4/3 (2|k|-1) for
    1 < |k| <= k_max, |n| <= 2 k_max, n outside A(k, t)."""
    worst, case, count = math.inf, None, 0
    ns = np.arange(-2 * k_max, 2 * k_max + 1)
    for t in ts:
        for k in [*range(-k_max, -1), *range(2, k_max + 1)]:
            excl = index_set_A(k, t)
            mask = ~np.isin(ns, list(excl))
            gap = np.abs((2 * ns[mask] + t) ** 2 - (2 * k + t) ** 2)
            margin = gap - 4 / 3 * (2 * abs(k) - 1)
            i = int(np.argmin(margin))
            count += int(mask.sum())
            if margin[i] < worst:
                worst, case = float(margin[i]), (int(k), int(ns[mask][i]), float(t))
    return GapCheck(worst >= 0, worst, case, count)


@dataclass
class EpsilonEstimate:
    """Observed distances of Bloch eigenvalues to mu_{k,j}(t), per (|k|, j)."""
    eps_hat: dict  # (k, j) -> float, k >= 0
    counts: dict
    slope_vs_k: dict = field(default_factory=dict)   # j -> d log eps / d log k
    slope_vs_rate: dict = field(default_factory=dict)  # j -> d log eps / d log(1/k + q_k)
    c6_hat: dict = field(default_factory=dict)  # j -> min constant in eps <= c6 (1/k+q_k)^(1/r_j)
    fit_range: tuple = FIT_RANGE
    fit_skipped: dict = field(default_factory=dict)

    def eps_k(self, k: int) -> float:
        """max over j of eps_hat(|k|, j); 0 when nothing was observed."""
        vals = [v for (kk, _), v in self.eps_hat.items() if kk == abs(k)]
        return max(vals, default=0.0)

    def bound_holds(self, norms: PotentialNorms, jd: JordanData, j: int) -> bool:
        c6 = self.c6_hat.get(j)
        if c6 is None:
            return False
        lo, hi = self.fit_range
        r = jd.blocks[j].r
        for (k, jj), e in self.eps_hat.items():
            if jj == j and lo <= k <= hi:
                if e > c6 * (1 / k + norms.q.get(k, 0.0)) ** (1 / r) * (1 + 1e-12):
                    return False
        return True


def epsilon_localization(sweep: BandSweep, jd: JordanData, norms: PotentialNorms,
                         fit_range=FIT_RANGE) -> EpsilonEstimate:
    eps: dict = {}
    counts: dict = {}
    for (k, j), d in zip(sweep.labels, sweep.distances):
        key = (abs(k), j)
        eps[key] = max(eps.get(key, 0.0), d)
        counts[key] = counts.get(key, 0) + 1
    est = EpsilonEstimate(dict(sorted(eps.items())), counts, fit_range=tuple(fit_range))
    lo, hi = fit_range
    for j, block in enumerate(jd.blocks):
        ks = np.array([k for (k, jj) in est.eps_hat if jj == j and lo <= k <= hi], dtype=float)
        if ks.size == 0:
            est.fit_skipped[j] = "no data in fit range"
            continue
        e = np.array([est.eps_hat[(int(k), j)] for k in ks])
        rate = 1 / ks + np.array([norms.q.get(int(k), 0.0) for k in ks])
        bound = rate ** (1 / block.r)
        est.c6_hat[j] = float(np.max(e / bound))
        good = e > 0
        if good.sum() < MIN_FIT_POINTS:
            est.fit_skipped[j] = f"only {int(good.sum())} positive eps values"
            continue
        est.slope_vs_k[j] = float(np.polyfit(np.log(ks[good]), np.log(e[good]), 1)[0])
        est.slope_vs_rate[j] = float(np.polyfit(np.log(rate[good]), np.log(e[good]), 1)[0])
    return est


def delta_k(eps: EpsilonEstimate, k: int) -> float:
    # eps_{-k} and eps_k share the |k| bucket
    return 2 * max(eps.eps_k(k), eps.eps_k(k + 1), eps.eps_k(k - 1))


def n1_conditions(k: int, delta: float, c: float, jd: JordanData) -> bool:
    real = [b.mu.real for b in jd.blocks if b.is_real]
    nonreal = [abs(b.mu.imag) for b in jd.blocks if not b.is_real]
    if not (delta < c or delta == 0.0):
        return False
    if not 4 / 3 * (2 * k - 1) > 3 * c + max((abs(x) for x in real), default=0.0):
        return False
    if nonreal and not delta < min(nonreal):
        return False
    gaps = [abs(a - b) for i, a in enumerate(real) for b in real[i + 1:]]
    if gaps and not delta < min(gaps):
        return False
    return True


def find_n1(eps: EpsilonEstimate, c: float, jd: JordanData, k_max: int) -> tuple[int, bool]:
    """Smallest N >= 1 such that every k in (N, k_max] meets the thresholds."""
    n1 = k_max
    for k in range(k_max, 1, -1):
        if n1_conditions(k, delta_k(eps, k), c, jd):
            n1 = k - 1
        else:
            break
    return max(n1, 1), n1 < k_max


@dataclass
class LocalizationConfig:
    M_hat: float
    B: float
    c_hat: float
    delta: dict  # k -> delta_k
    N1_hat: int
    N1_found: bool
    eps: EpsilonEstimate
    norms: PotentialNorms
    k_max: int

    def to_json(self, violations=()) -> dict:
        return {
            "M_hat": self.M_hat,
            "B": self.B,
            "c_hat": self.c_hat,
            "N1_hat": self.N1_hat,
            "eps": [{"k": k, "j": j, "eps_hat": v} for (k, j), v in self.eps.eps_hat.items()],
            "violations": [list(v) for v in violations],
        }


def estimate_constants(sweep: BandSweep, k_max: int = 40, fit_range=FIT_RANGE) -> LocalizationConfig:
    if not sweep.points:
        raise ValueError("empty sweep")
    norms = compute_norms(sweep.spec, range(0, k_max + 2))
    M_hat = max(p.sup_norm for p in sweep.points)
    c_hat = M_hat * norms.B
    eps = epsilon_localization(sweep, sweep.jd, norms, fit_range)
    deltas = {k: delta_k(eps, k) for k in range(1, k_max + 1)}
    n1, found = find_n1(eps, c_hat, sweep.jd, k_max)
    return LocalizationConfig(M_hat, norms.B, c_hat, deltas, n1, found, eps, norms, k_max)


@dataclass
class ContainmentReport:
    ok: bool
    violations: list  # (t, re, im, nearest n, distance)
    max_ratio: float  # max distance / c_hat


def disk_containment(sweep: BandSweep, config: LocalizationConfig, k_max: int | None = None) -> ContainmentReport:
    """Every eigenvalue must lie in some open disk |lambda - (2n+t)^2| < c_hat."""
    bad = []
    worst = 0.0
    c = config.c_hat
    for p in sweep.points:
        n = _nearest_level(p.t, p.lam)
        if k_max is not None and abs(n) > k_max:
            continue
        d = abs(p.lam - (2 * n + p.t) ** 2)
        if c > 0:
            worst = max(worst, d / c)
        if d >= c and d > 1e-10 * (1 + abs(p.lam)):
            bad.append((p.t, p.lam.real, p.lam.imag, n, d))
    return ContainmentReport(not bad, bad, worst)


def _nearest_level(t: float, lam: complex) -> int:
    x = math.sqrt(max(lam.real, 0.0))
    cands = {math.floor((s * x - t) / 2) + d for s in (1, -1) for d in (-1, 0, 1, 2)}
    return min(cands, key=lambda n: (abs(lam - (2 * n + t) ** 2), -n))


def exclusion_sets(jd: JordanData, k: int, delta: float, j: int) -> list[tuple[float, float]]:
    """Quasimomenta near crossings of mu_{k,j}(t) with mu_{n,i}(t), n in
    {-k, -k-1, -k+1}, i over the real eigenvalues; merged open intervals
    clipped to (-1, 1]."""
    if not jd.blocks[j].is_real:
        raise ValueError(f"eigenvalue index {j} is not real")
    if k < 1:
        raise ValueError("exclusion sets are defined for k >= 1")
    if delta <= 0:
        return []
    mj = jd.blocks[j].mu.real
    pieces = []
    for b in jd.blocks:
        if not b.is_real:
            continue
        d = b.mu.real - mj
        for center, half in ((d / (8 * k), delta / (8 * k)),
                             (1 + d / (4 * (2 * k + 1)), delta / (4 * (2 * k + 1))),
                             (-1 + d / (4 * (2 * k - 1)), delta / (4 * (2 * k - 1)))):
            pieces.append((center - half, center + half))
    return iv.merge(iv.clip(pieces, -1.0, 1.0))


def complement_decomposition(U) -> list[tuple[float, float]]:
    """(-1, 1] minus the union of ``U`` as ordered closed intervals [a_i, b_i]
    (the first one is open at -1 when a_1 = -1)."""
    return iv.complement(U, -1.0, 1.0)
