"""Matrix potentials on [0, pi] stored as exp(2inx) Fourier matrices.

``Q(x) = sum_n C_n exp(2inx)``.  The operator everything else in the package
works with is ``-y'' + Q(x) y`` on the line, so ``C_n`` enters the Galerkin
matrix and the ODE integrator without any extra scaling.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

N_MAX_CAP = 64
PT_RTOL = 1e-10


class PotentialError(ValueError):
    """Malformed potential data (wrong shapes, bad file contents, ...)."""


class RealityError(ValueError):
    """Raised when a quantity that must be real for PT potentials is not."""


@dataclass(frozen=True)
class PotentialSpec:
    m: int
    harmonics: Mapping[int, np.ndarray] = field(default_factory=dict)
    n_max_cap: int = N_MAX_CAP

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1:
            raise PotentialError(f"m must be a positive integer, got {self.m!r}")
        clean = {}
        for n, c in self.harmonics.items():
            if int(n) != n:
                raise PotentialError(f"harmonic index must be an integer, got {n!r}")
            c = np.array(c, dtype=complex)
            if c.shape != (self.m, self.m):
                raise PotentialError(
                    f"harmonic {n}: expected shape {(self.m, self.m)}, got {c.shape}")
            c.setflags(write=False)
            clean[int(n)] = c
        object.__setattr__(self, "harmonics", dict(sorted(clean.items())))
        if self.n_max > self.n_max_cap:
            raise PotentialError(
                f"N_max = {self.n_max} exceeds the cap {self.n_max_cap}")

    @property
    def n_max(self) -> int:
        return max((abs(n) for n in self.harmonics), default=0)

    def coeff(self, n: int) -> np.ndarray:
        c = self.harmonics.get(n)
        return np.zeros((self.m, self.m), complex) if c is None else c

    @property
    def max_abs_coeff(self) -> float:
        return max((float(np.abs(c).max()) for c in self.harmonics.values()), default=0.0)

    @property
    def is_zero(self) -> bool:
        return self.max_abs_coeff == 0.0

    @classmethod
    def zero(cls, m: int = 1) -> "PotentialSpec":
        return cls(m, {})

    @classmethod
    def constant(cls, value) -> "PotentialSpec":
        value = np.atleast_2d(np.asarray(value, dtype=complex))
        return cls(value.shape[0], {0: value})

    @classmethod
    def from_samples(cls, samples, n_max: int, n_max_cap: int = N_MAX_CAP) -> "PotentialSpec":
        """Build a spec from ``Q`` sampled at ``x_j = pi*j/N``, ``j = 0..N-1``.

        ``samples`` has shape ``(N, m, m)`` (or ``(N,)`` for scalars).  The
        series is truncated at ``|n| <= n_max``; N must exceed ``2*n_max``.
        """
        s = np.asarray(samples, dtype=complex)
        if s.ndim == 1:
            s = s[:, None, None]
        if s.ndim != 3 or s.shape[1] != s.shape[2]:
            raise PotentialError(f"samples must have shape (N, m, m), got {s.shape}")
        npts = s.shape[0]
        if npts <= 2 * n_max:
            raise PotentialError(f"{npts} samples cannot resolve harmonics up to {n_max}")
        coeffs = np.fft.fft(s, axis=0) / npts
        harmonics = {}
        for n in range(-n_max, n_max + 1):
            c = coeffs[n % npts]
            if np.any(c != 0):
                harmonics[n] = c
        return cls(s.shape[1], harmonics, n_max_cap=n_max_cap)

    # --- JSON ------------------------------------------------------------
    def to_json(self) -> dict:
        return {
            "m": self.m,
            "harmonics": [
                {"n": n, "re": c.real.tolist(), "im": c.imag.tolist()}
                for n, c in self.harmonics.items()
            ],
        }

    @classmethod
    def from_json(cls, obj) -> "PotentialSpec":
        if not isinstance(obj, dict) or "m" not in obj:
            raise PotentialError("potential spec must be an object with an 'm' field")
        m = obj["m"]
        if not isinstance(m, int) or isinstance(m, bool):
            raise PotentialError("'m' must be an integer")
        harmonics: dict[int, np.ndarray] = {}
        for entry in obj.get("harmonics", []):
            try:
                n = entry["n"]
            except (KeyError, TypeError):
                raise PotentialError(f"harmonic entry without 'n': {entry!r}") from None
            if not isinstance(n, int) or isinstance(n, bool):
                raise PotentialError(f"harmonic index must be an integer, got {n!r}")
            try:
                re = np.asarray(entry.get("re", np.zeros((m, m))), dtype=float)
                im = np.asarray(entry.get("im", np.zeros((m, m))), dtype=float)
            except (TypeError, ValueError) as exc:
                raise PotentialError(f"harmonic {n}: {exc}") from None
            if re.shape != (m, m) or im.shape != (m, m):
                raise PotentialError(f"harmonic {n}: entries must be {m}x{m} matrices")
            c = re + 1j * im
            harmonics[n] = harmonics.get(n, 0) + c
        return cls(m, harmonics)

    @classmethod
    def load(cls, path) -> "PotentialSpec":
        with open(Path(path)) as fh:
            try:
                obj = json.load(fh)
            except json.JSONDecodeError as exc:
                raise PotentialError(f"{path}: invalid JSON ({exc})") from None
        return cls.from_json(obj)

    def dump(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2))


def pt_tolerance(spec: PotentialSpec) -> float:
    return PT_RTOL * spec.max_abs_coeff


def validate_pt(spec: PotentialSpec, tol: float | None = None):
    """Check conj(Q(-x)) == Q(x) entrywise.

    Substituting the series shows this is the same as every ``C_n`` being
    real.  Returns ``(ok, offenders)`` with offenders as ``(n, i, j)``.
    """
    tol = pt_tolerance(spec) if tol is None else tol
    offenders = []
    for n, c in spec.harmonics.items():
        for i, j in zip(*np.nonzero(np.abs(c.imag) > tol)):
            offenders.append((n, int(i), int(j)))
    return not offenders, offenders


def evaluate_Q(spec: PotentialSpec, x):
    """Q at ``x``; scalar x gives an ``(m, m)`` matrix, array x ``(len(x), m, m)``."""
    xs = np.asarray(x, dtype=float)
    out = np.zeros(xs.shape + (spec.m, spec.m), complex)
    for n, c in spec.harmonics.items():
        out = out + np.exp(2j * n * xs)[..., None, None] * c
    return out


def averaged_matrix(spec: PotentialSpec) -> np.ndarray:
    """``A = integral of Q over [0, pi]`` (= pi * C_0), real for PT input."""
    c0 = spec.coeff(0)
    if np.any(np.abs(c0.imag) > pt_tolerance(spec)):
        raise RealityError("averaged matrix is not real; potential is not PT-symmetric")
    return np.pi * c0.real


def mean_matrix(spec: PotentialSpec) -> np.ndarray:
    """Mean value ``A / pi`` of Q; the constant potential whose Bloch
    eigenvalues are exactly ``(2k+t)^2 + mu_j``."""
    return averaged_matrix(spec) / np.pi


@dataclass(frozen=True)
class PotentialNorms:
    B: float
    q: dict


def harmonic_set(k: int) -> tuple[int, ...]:
    k = abs(int(k))
    return tuple(sorted({2 * k, -2 * k, 2 * k + 1, -(2 * k + 1), 2 * k - 1, -(2 * k - 1)}))


def compute_norms(spec: PotentialSpec, k_range=range(1, 41)) -> PotentialNorms:
    # Parseval over [0, pi]: int |q_ij|^2 = pi * sum_n |C_n,ij|^2
    B = float(np.sqrt(np.pi * sum(float(np.sum(np.abs(c) ** 2)) for c in spec.harmonics.values())))
    q = {}
    for k in k_range:
        q[int(k)] = max(
            (np.sqrt(np.pi) * float(np.abs(spec.coeff(s)).max()) for s in harmonic_set(k)),
            default=0.0)
    return PotentialNorms(B=B, q=q)
