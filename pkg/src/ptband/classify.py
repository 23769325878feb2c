"""Classification of the real spectrum: bands Gamma_{k,j,i}, coverage of
[0, n], boundedness when A has no real eigenvalues, and the half-line test."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import intervals as iv
from .averaged import JordanData
from .bloch import local_eigvals
from .localization import (LocalizationConfig, complement_decomposition,
                           exclusion_sets)
from .sweep import BandSweep

REAL_RTOL = 1e-6
BAND_RTOL = 1e-4
BAND_SAMPLES = 20
SCAN_STEP = 0.05


def tau_real(lam) -> float:
    return REAL_RTOL * (1 + abs(lam))


def tau_band(lam) -> float:
    return BAND_RTOL * (1 + abs(lam))


@dataclass
class RealBand:
    lo: float
    hi: float
    k: int
    j: int
    i: int
    validated: bool = False
    misses: list = field(default_factory=list)  # sample values without a real eigenvalue


class BandValidator:
    """Checks that sample points of a band are (numerically) real Bloch
    eigenvalues.  Looks in the sweep first and falls back to targeted
    solves at the quasimomentum predicted by the unperturbed band."""

    def __init__(self, sweep: BandSweep, max_iter: int = 4):
        self.sweep = sweep
        self.max_iter = max_iter
        reals = [p.lam.real for p in sweep.points if abs(p.lam.imag) <= tau_real(p.lam)]
        self.reals = np.sort(np.array(reals))
        self.targeted = 0

    def _in_sweep(self, lam: float) -> bool:
        if self.reals.size == 0:
            return False
        i = np.searchsorted(self.reals, lam)
        near = self.reals[max(i - 1, 0): i + 1]
        return bool(np.any(np.abs(near - lam) <= tau_band(lam)))

    def hit(self, lam: float, k: int, mu: float) -> bool:
        if self._in_sweep(lam):
            return True
        spec = self.sweep.spec
        x = math.sqrt(max(lam - mu, 0.0))
        t = min(max(x - 2 * k, -1 + 1e-12), 1.0)
        for _ in range(self.max_iter):
            self.targeted += 1
            ev = local_eigvals(spec, t, k)
            real = ev[np.abs(ev.imag) <= tau_real(ev)].real
            if real.size == 0:
                return False
            found = real[np.argmin(np.abs(real - lam))]
            if abs(found - lam) <= tau_band(lam):
                return True
            t = min(max(t + (lam - found) / (2 * (2 * k + t)), -1 + 1e-12), 1.0)
        return False


def extract_real_bands(sweep: BandSweep, jd: JordanData, config: LocalizationConfig,
                       k_max: int | None = None, samples: int = BAND_SAMPLES,
                       validate: bool = True) -> list[RealBand]:
    """Intervals ``[mu_{k,j}(a_i) + delta_k, mu_{k,j}(b_i) - delta_k]`` over
    the resonance-free pieces [a_i, b_i] of (-1, 1], for real eigenvalues
    of odd multiplicity and N1 < k <= k_max."""
    k_max = config.k_max if k_max is None else k_max
    validator = BandValidator(sweep) if validate else None
    bands = []
    for j in jd.odd_real_indices():
        mu = jd.blocks[j].mu.real
        for k in range(config.N1_hat + 1, k_max + 1):
            delta = config.delta.get(k, 0.0)
            pieces = complement_decomposition(exclusion_sets(jd, k, delta, j))
            for i, (a, b) in enumerate(pieces):
                lo = (2 * k + a) ** 2 + mu + delta
                hi = (2 * k + b) ** 2 + mu - delta
                if hi < lo:
                    continue
                band = RealBand(lo, hi, k, j, i)
                if validator is not None:
                    for lam in np.linspace(lo, hi, samples):
                        if not validator.hit(float(lam), k, mu):
                            band.misses.append(float(lam))
                    band.validated = not band.misses
                bands.append(band)
    return bands


def band_union(bands) -> list[tuple[float, float]]:
    return iv.merge([(b.lo, b.hi) for b in bands if b.validated])


def coverage_ratio(bands, n_grid) -> dict:
    """n -> |[0, n] minus union| / |union within [0, n]| (None if undefined)."""
    union = band_union(bands)
    out = {}
    for n in n_grid:
        covered = iv.measure(iv.clip(union, 0.0, float(n)))
        out[n] = None if covered == 0 else (float(n) - covered) / covered
    return out


def measure_deficit(bands, config: LocalizationConfig) -> dict:
    """(k, j) -> (|Gamma_{k,j}| - sum_i |Gamma_{k,j,i}|) / delta_k."""
    total: dict = {}
    for b in bands:
        total[(b.k, b.j)] = total.get((b.k, b.j), 0.0) + (b.hi - b.lo)
    out = {}
    for (k, j), s in total.items():
        d = config.delta.get(k, 0.0)
        deficit = 8 * k - s
        out[(k, j)] = deficit / d if d > 0 else (0.0 if abs(deficit) < 1e-9 * k else math.inf)
    return out


@dataclass
class BoundednessResult:
    applicable: bool
    ok: bool
    hull: tuple | None = None
    threshold: float | None = None
    violations: list = field(default_factory=list)


def boundedness_check(sweep: BandSweep, jd: JordanData, config: LocalizationConfig) -> BoundednessResult:
    """With no real eigenvalue of A, real Bloch eigenvalues stay below
    (2 N1 + 1)^2 + c_hat."""
    if jd.s > 0:
        return BoundednessResult(False, True)
    reals = [p for p in sweep.points if abs(p.lam.imag) < tau_real(p.lam)]
    threshold = (2 * config.N1_hat + 1) ** 2 + config.c_hat
    hull = (min(p.lam.real for p in reals), max(p.lam.real for p in reals)) if reals else None
    bad = [(p.t, p.lam.real, p.lam.imag) for p in reals if p.lam.real > threshold]
    return BoundednessResult(True, not bad, hull, threshold, bad)


@dataclass
class DiskRealityResult:
    checked: int
    violations: list  # (t, k, j, reason)

    @property
    def ok(self) -> bool:
        return not self.violations


def disk_reality_check(sweep: BandSweep, jd: JordanData, config: LocalizationConfig,
               k_max: int | None = None) -> DiskRealityResult:
    """Away from the exclusion sets, the disk of radius delta_k around a real
    mu_{k,j}(t) of odd multiplicity v holds v eigenvalues, at least one real;
    simple mu_j gives exactly one, simple and real."""
    k_max = config.k_max if k_max is None else k_max
    by_t = sweep.by_t()
    checked, bad = 0, []
    for j in jd.odd_real_indices():
        block = jd.blocks[j]
        for k in range(config.N1_hat + 1, k_max + 1):
            delta = config.delta.get(k, 0.0)
            radius = max(delta, 1e-9 * (1 + (2 * k + 1) ** 2))
            # exact crossings (delta = 0) still need a neighbourhood
            U = exclusion_sets(jd, k, radius, j)
            for t, pts in by_t.items():
                if any(a < t and (t < b or b >= 1.0) for a, b in U):
                    continue
                center = (2 * k + t) ** 2 + block.mu.real
                inside = [p for p in pts if abs(p.lam - center) <= radius]
                count = sum(p.mult for p in inside)
                checked += 1
                if count != block.multiplicity:
                    bad.append((t, k, j, f"{count} eigenvalues in disk, expected {block.multiplicity}"))
                elif not any(abs(p.lam.imag) <= tau_real(p.lam) for p in inside):
                    bad.append((t, k, j, "no real eigenvalue in disk"))
                elif block.multiplicity == 1 and inside[0].mult != 1:
                    bad.append((t, k, j, "eigenvalue not simple"))
    return DiskRealityResult(checked, bad)


@dataclass
class DiamResult:
    applicable: bool
    d: float = 0.0
    triple: tuple | None = None   # indices j_1 < j_2 < j_3 into jd.blocks
    witness: tuple | None = None  # minimizing (i_1, i_2, i_3)


def diam_condition(jd: JordanData) -> DiamResult:
    """Best (largest) d over odd-multiplicity real triples of
    min over i in {real}^3 of diam{mu_j1 + mu_i1, mu_j2 + mu_i2, mu_j3 + mu_i3}."""
    odd = jd.odd_real_indices()
    if len(odd) < 3:
        return DiamResult(False)
    real = [j for j, b in enumerate(jd.blocks) if b.is_real]
    mu = {j: jd.blocks[j].mu.real for j in real}
    best = DiamResult(True, -1.0)
    for triple in itertools.combinations(odd, 3):
        d_min, arg = math.inf, None
        for ii in itertools.product(real, repeat=3):
            vals = [mu[jp] + mu[ip] for jp, ip in zip(triple, ii)]
            diam = max(vals) - min(vals)
            if diam < d_min:
                d_min, arg = diam, ii
        if d_min > best.d:
            best = DiamResult(True, d_min, triple, arg)
    return best


@dataclass
class HalfLineResult:
    applicable: bool
    verdict: bool | None = None
    H_hat: float | None = None
    H_theory: float | None = None
    lambda_max: float | None = None
    holes: list = field(default_factory=list)
    N: int | None = None
    beta: dict = field(default_factory=dict)
    triple_intersection_empty: bool | None = None
    note: str = ""


def _alpha_k(jd: JordanData, k: int, j: int, delta: float) -> float:
    """Largest distance from mu_{k,j}(U-piece) to its window centre
    (2k+n)^2 + (mu_i + mu_j)/2."""
    mj = jd.blocks[j].mu.real
    worst = 0.0
    for b in jd.blocks:
        if not b.is_real:
            continue
        mi = b.mu.real
        d = mi - mj
        for n, center, half in ((0, d / (8 * k), delta / (8 * k)),
                                (1, 1 + d / (4 * (2 * k + 1)), delta / (4 * (2 * k + 1))),
                                (-1, -1 + d / (4 * (2 * k - 1)), delta / (4 * (2 * k - 1)))):
            lo, hi = max(center - half, -1.0), min(center + half, 1.0)
            if hi < lo:
                continue
            target = (2 * k + n) ** 2 + (mi + mj) / 2
            for tt in (lo, hi):
                # mu_{k,j} over the piece, written relative to the crossing
                worst = max(worst, abs((2 * k + tt) ** 2 + mj - target))
    return worst


def halfline_verdict(bands, jd: JordanData, config: LocalizationConfig, lambda_max: float,
                     diam: DiamResult | None = None, step: float = SCAN_STEP) -> HalfLineResult:
    diam = diam_condition(jd) if diam is None else diam
    if not diam.applicable or diam.d <= 0:
        return HalfLineResult(False, note="diam condition fails (d = 0) or fewer than three odd real eigenvalues")
    real_mu = [b.mu.real for b in jd.blocks if b.is_real]
    ks = range(config.N1_hat + 1, config.k_max + 1)
    beta = {k: 2 * max(_alpha_k(jd, k, j, config.delta.get(k, 0.0)) for j in diam.triple) for k in ks}
    # smallest N with 4 beta_k < d for all larger observed k
    N = None
    for k in reversed(list(ks)):
        if 4 * beta[k] < diam.d:
            N = k
        else:
            break
    res = HalfLineResult(True, beta=beta, N=N, lambda_max=lambda_max)
    if N is None:
        res.verdict = False
        res.note = "4 beta_k < d never holds in the observed k range"
        return res
    unions = []
    for j in diam.triple:
        mj = jd.blocks[j].mu.real
        unions.append(iv.merge([
            ((2 * k + n) ** 2 + (mi + mj) / 2 - beta[k], (2 * k + n) ** 2 + (mi + mj) / 2 + beta[k])
            for k in range(N, config.k_max + 1) for n in (-1, 0, 1) for mi in real_mu]))
    common = iv.intersect(iv.intersect(unions[0], unions[1]), unions[2])
    res.triple_intersection_empty = not common
    res.H_theory = max((2 * N - 1) ** 2 + jd.blocks[j].mu.real for j in diam.triple)
    top = (2 * config.k_max + 1) ** 2 + min(jd.blocks[j].mu.real for j in diam.triple)
    if lambda_max > top:
        res.note = f"lambda_max capped at {top:.6g} (largest band computed)"
        lambda_max = top
        res.lambda_max = top
    union = band_union(bands)
    grid = np.arange(0.0, lambda_max + step / 2, step)
    covered = np.zeros(grid.size, bool)
    for a, b in union:
        covered |= (grid >= a) & (grid <= b)
    holes = np.nonzero(~covered)[0]
    res.H_hat = float(grid[holes[-1] + 1]) if holes.size and holes[-1] + 1 < grid.size else (
        float(grid[0]) if not holes.size else None)
    if res.H_hat is None or res.H_hat >= lambda_max or res.H_theory >= lambda_max:
        res.verdict = None
        res.note = "window too small"
        return res
    res.holes = [float(grid[h]) for h in holes if grid[h] >= res.H_theory]
    res.verdict = bool(not res.holes and res.triple_intersection_empty)
    return res


@dataclass
class ClassificationReport:
    real_bands: list
    coverage: dict
    bounded: BoundednessResult
    disk_reality: DiskRealityResult | None
    bands_applicable: bool
    diam: DiamResult
    halfline: HalfLineResult
    config: LocalizationConfig
    jd: JordanData
    deficit: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        h = self.halfline
        return {
            "averaged": self.jd.to_json(),
            "localization": self.config.to_json(),
            "real_bands": [
                {"lo": b.lo, "hi": b.hi, "k": b.k, "j": b.j, "i": b.i, "validated": b.validated}
                for b in self.real_bands],
            "coverage_ratio": {str(n): r for n, r in self.coverage.items()},
            "bounded_verdict": None if not self.bounded.applicable else {
                "ok": self.bounded.ok, "hull": self.bounded.hull, "threshold": self.bounded.threshold,
                "violations": self.bounded.violations},
            "disk_reality": None if self.disk_reality is None else {
                "checked": self.disk_reality.checked, "violations": [list(v) for v in self.disk_reality.violations]},
            "bands_applicable": self.bands_applicable,
            "halfline": {
                "d": self.diam.d if self.diam.applicable else None,
                "triple": self.diam.triple,
                "witness": self.diam.witness,
                "applicable": h.applicable,
                "verdict": h.verdict,
                "H_hat": h.H_hat,
                "H_theory": h.H_theory,
                "verified_window": [h.H_hat, h.lambda_max] if h.H_hat is not None else None,
                "holes": h.holes,
                "triple_intersection_empty": h.triple_intersection_empty,
                "note": h.note,
            },
        }

    def bands_csv_rows(self):
        yield ("lo", "hi", "k", "j", "i", "validated")
        for b in self.real_bands:
            yield (b.lo, b.hi, b.k, b.j, b.i, int(b.validated))


def classify(sweep: BandSweep, config: LocalizationConfig, *, n_grid=(100, 400, 900, 1600),
             lambda_max: float = 2000.0, validate: bool = True) -> ClassificationReport:
    jd = sweep.jd
    bands = extract_real_bands(sweep, jd, config, validate=validate)
    diam = diam_condition(jd)
    return ClassificationReport(
        real_bands=bands,
        coverage=coverage_ratio(bands, n_grid),
        bounded=boundedness_check(sweep, jd, config),
        disk_reality=disk_reality_check(sweep, jd, config) if jd.s else None,
        bands_applicable=bool(jd.odd_real_indices()),
        diam=diam,
        halfline=halfline_verdict(bands, jd, config, lambda_max, diam),
        config=config,
        jd=jd,
        deficit=measure_deficit(bands, config),
    )
