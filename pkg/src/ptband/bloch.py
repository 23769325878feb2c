"""Bloch eigenvalues of L_t(Q).

The primary solver is a Fourier-Galerkin truncation in the quasiperiodic
basis ``e_s exp(i(2k+t)x)/sqrt(pi)``; the monodromy matrix of the ODE
``Y'' = (Q - lambda) Y`` serves as an independent oracle and refiner.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg
from scipy.optimize import linear_sum_assignment

from .averaged import JordanData
from .potential import PotentialSpec, evaluate_Q

K_BUF = 4
MULT_RTOL = 1e-6
SUP_GRID = 1024


class SolverError(RuntimeError):
    pass


class IntegrationError(SolverError):
    pass


# --- Galerkin ------------------------------------------------------------

@dataclass(frozen=True)
class GalerkinMatrix:
    K: int
    t: float
    m: int
    matrix: np.ndarray
    window: tuple[float, float]

    @property
    def indices(self) -> np.ndarray:
        return np.arange(-self.K, self.K + 1)


def trust_window(spec: PotentialSpec, t: float, K: int, k_buf: int = K_BUF) -> tuple[float, float]:
    diag_min = min((2 * k + t) ** 2 for k in range(-K, K + 1))
    margin = sum(float(np.linalg.norm(c, 2)) for c in spec.harmonics.values())
    return diag_min - margin, float((2 * (K - k_buf) + 1) ** 2)


def coupling_matrix(spec: PotentialSpec, K: int, exclude_mean: bool = False) -> np.ndarray:
    """Matrix of multiplication by Q in the basis ``k = -K..K``: block (k, v)
    is ``C_{k-v}``."""
    size = 2 * K + 1
    real = all(not np.any(c.imag) for c in spec.harmonics.values())
    out = np.zeros((size * spec.m, size * spec.m), float if real else complex)
    for n, c in spec.harmonics.items():
        if (exclude_mean and n == 0) or abs(n) >= size:
            continue
        out += np.kron(np.eye(size, k=-n), c.real if real else c)
    return out


def build_galerkin(spec: PotentialSpec, t: float, K: int, k_buf: int = K_BUF) -> GalerkinMatrix:
    if K < spec.n_max + 2:
        raise ValueError(f"truncation K={K} is too small; need K >= N_max + 2 = {spec.n_max + 2}")
    if not -1 < t <= 1:
        raise ValueError(f"t must lie in (-1, 1], got {t}")
    mat = coupling_matrix(spec, K)
    ks = np.arange(-K, K + 1)
    mat[np.diag_indices_from(mat)] += np.repeat((2 * ks + t) ** 2, spec.m)
    return GalerkinMatrix(K, float(t), spec.m, mat, trust_window(spec, t, K, k_buf))


def convolve_Q(spec: PotentialSpec, coeffs: np.ndarray, exclude_mean: bool = False) -> np.ndarray:
    """Fourier coefficients of ``Q * Psi`` for ``Psi`` given on ``-K..K``;
    result lives on ``-(K+N)..(K+N)`` so boundary rows are not lost."""
    K = (coeffs.shape[0] - 1) // 2
    N = spec.n_max
    out = np.zeros((2 * (K + N) + 1, spec.m), complex)
    for n, c in spec.harmonics.items():
        if exclude_mean and n == 0:
            continue
        # row r <-> index r - (K+N); Psi_v contributes to index v + n
        out[N + n: N + n + 2 * K + 1] += coeffs @ c.T
    return out


def row_residuals(spec: PotentialSpec, t: float, lam: complex, coeffs: np.ndarray) -> np.ndarray:
    """Row residuals ``|(lam - (2n+t)^2) Psi_n - (Q Psi)_n|`` for n = -(K+N)..(K+N)."""
    K = (coeffs.shape[0] - 1) // 2
    N = spec.n_max
    qpsi = convolve_Q(spec, coeffs)
    psi = np.zeros_like(qpsi)
    psi[N: N + 2 * K + 1] = coeffs
    ns = np.arange(-(K + N), K + N + 1)
    res = (lam - (2 * ns + t) ** 2)[:, None] * psi - qpsi
    return np.abs(res).max(axis=1)


def sup_norm(coeffs: np.ndarray, npts: int = SUP_GRID) -> float:
    """max over a uniform x-grid on [0, pi) of |Psi(x)|, Psi = sum_k c_k e^{i(2k+t)x}/sqrt(pi)."""
    K = (coeffs.shape[0] - 1) // 2
    if 2 * K + 1 > npts:
        npts = 2 * K + 1
    buf = np.zeros((npts, coeffs.shape[1]), complex)
    ks = np.arange(-K, K + 1)
    buf[ks % npts] = coeffs
    vals = np.fft.ifft(buf, axis=0) * npts
    return float(np.sqrt((np.abs(vals) ** 2).sum(axis=1)).max() / np.sqrt(np.pi))


@dataclass(frozen=True)
class BlochPoint:
    t: float
    lam: complex
    mult: int
    vec: np.ndarray | None  # (2K+1, m) coefficients, unit l2 norm
    residual_rows: float
    refined: bool = False
    members: tuple = ()
    sup_norm: float = float("nan")
    residual_boundary: float = 0.0
    diagnostic: str = ""

    @property
    def vec_lambda(self) -> complex:
        """Eigenvalue the stored vector belongs to (a cluster member)."""
        return self.members[0] if self.members else self.lam


def _cluster_sorted(vals: np.ndarray, rtol: float) -> list[np.ndarray]:
    """Connected components of ``|a - b| <= rtol (1 + max|.|)``, ordered by
    increasing real part."""
    order = np.lexsort((vals.imag, vals.real))
    v = vals[order]
    parent = list(range(v.size))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for a in range(v.size):
        b = a + 1
        while b < v.size:
            tol = rtol * (1 + max(abs(v[a]), abs(v[b])))
            if v[b].real - v[a].real > tol:
                break
            if abs(v[b] - v[a]) <= tol:
                parent[find(b)] = find(a)
            b += 1
    groups: dict[int, list[int]] = {}
    for i in range(v.size):
        groups.setdefault(find(i), []).append(int(order[i]))
    return [np.array(g) for g in groups.values()]


def solve_bloch(spec: PotentialSpec, t: float, K: int, window=None, *,
                mult_rtol: float = MULT_RTOL, keep_vectors: bool = True,
                k_buf: int = K_BUF) -> list[BlochPoint]:
    """All Galerkin eigenvalues with ``Re lambda`` in ``window``, clustered."""
    g = build_galerkin(spec, t, K, k_buf)
    lo, hi = g.window if window is None else window
    try:
        vals, vecs = np.linalg.eig(g.matrix)
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"eigensolver failed at t={t}, K={K}: {exc}; "
                          f"cond={np.linalg.cond(g.matrix):.3e}") from exc
    sel = np.nonzero((vals.real >= lo) & (vals.real <= hi))[0]
    vals, vecs = vals[sel], vecs[:, sel]
    N = spec.n_max
    points = []
    for grp in _cluster_sorted(vals, mult_rtol):
        # keep the member closest to the cluster mean as representative
        lam = complex(np.mean(vals[grp]))
        order = grp[np.argsort(np.abs(vals[grp] - lam))]
        rep = order[0]
        coeffs = vecs[:, rep].reshape(2 * K + 1, spec.m)
        coeffs = coeffs / np.linalg.norm(coeffs)
        rows = row_residuals(spec, t, vals[rep], coeffs)
        inner = rows[2 * N: rows.size - 2 * N]  # |n| <= K - N
        boundary = np.concatenate([rows[:2 * N], rows[rows.size - 2 * N:]])
        points.append(BlochPoint(
            t=float(t), lam=lam, mult=len(grp),
            vec=coeffs if keep_vectors else None,
            residual_rows=float(inner.max()) if inner.size else 0.0,
            members=tuple(complex(v) for v in vals[order]),
            sup_norm=sup_norm(coeffs),
            residual_boundary=float(boundary.max()) if boundary.size else 0.0,
        ))
    return points


def galerkin_eigvals(spec: PotentialSpec, t: float, K: int) -> np.ndarray:
    return np.linalg.eigvals(build_galerkin(spec, t, K).matrix)


def local_eigvals(spec: PotentialSpec, t: float, k: int, width: int | None = None) -> np.ndarray:
    """Eigenvalues of the Galerkin matrix restricted to basis indices near the
    resonant set {k, -k, -k-1, -k+1}.  Cheap and accurate for the eigenvalues
    attached to level k once |k| is well beyond N_max."""
    if width is None:
        width = max(6, 3 * spec.n_max)
    idx = sorted({n for c in (k, -k, -k - 1, -k + 1) for n in range(c - width, c + width + 1)})
    idx = np.array(idx)
    m = spec.m
    diff = idx[:, None] - idx[None, :]
    real = all(not np.any(c.imag) for c in spec.harmonics.values())
    mat = np.zeros((idx.size * m, idx.size * m), float if real else complex)
    for n, c in spec.harmonics.items():
        mask = (diff == n).astype(float)
        if mask.any():
            mat += np.kron(mask, c.real if real else c)
    mat[np.diag_indices_from(mat)] += np.repeat((2 * idx + t) ** 2, m)
    return np.linalg.eigvals(mat)


# --- monodromy -------------------------------------------------------------

@dataclass(frozen=True)
class MonodromyResult:
    lam: complex
    M: np.ndarray
    detM: complex
    multipliers: np.ndarray
    charpoly_coeffs: np.ndarray  # det(rho I - M) = rho^2m + f1 rho^(2m-1) + ... + f_2m
    steps: int

    def delta(self, t: float) -> complex:
        """Characteristic determinant det(M - e^{i pi t} I)."""
        rho = np.exp(1j * np.pi * t)
        return complex(np.linalg.det(self.M - rho * np.eye(self.M.shape[0])))


def default_steps(lam: complex, min_steps: int = 1024) -> int:
    n = max(min_steps, int(math.ceil(512 * (1 + math.sqrt(abs(lam)) / 10))))
    return n


def _ordered_product(mats: np.ndarray) -> np.ndarray:
    """``mats[-1] @ ... @ mats[0]`` by pairwise reduction."""
    while mats.shape[0] > 1:
        if mats.shape[0] % 2:
            tail = mats[-1:]
            mats = np.concatenate([mats[1:-1:2] @ mats[0:-1:2], tail])
        else:
            mats = mats[1::2] @ mats[0::2]
    return mats[0]


def monodromy(spec: PotentialSpec, lam: complex, steps: int | None = None) -> MonodromyResult:
    """Transfer matrix over [0, pi] for ``Z' = [[0, I], [Q - lam, 0]] Z``.

    Fourth-order Magnus integrator with two Gauss nodes per step; the step
    generators are trace-free, so det M = 1 up to rounding.  Columns
    ``0..m-1`` start from (Y, Y') = (I, 0), columns ``m..2m-1`` from (0, I).
    """
    steps = default_steps(lam) if steps is None else int(steps)
    m = spec.m
    h = np.pi / steps
    c1, c2 = 0.5 - np.sqrt(3) / 6, 0.5 + np.sqrt(3) / 6
    x0 = np.arange(steps) * h
    V1 = evaluate_Q(spec, x0 + c1 * h) - lam * np.eye(m)
    V2 = evaluate_Q(spec, x0 + c2 * h) - lam * np.eye(m)
    omega = np.zeros((steps, 2 * m, 2 * m), complex)
    omega[:, :m, m:] = h * np.eye(m)
    omega[:, m:, :m] = 0.5 * h * (V1 + V2)
    # sqrt(3)/12 h^2 [A2, A1]; the lambda terms cancel in the commutator
    comm = (np.sqrt(3) / 12) * h * h
    omega[:, :m, :m] = comm * (V1 - V2)
    omega[:, m:, m:] = comm * (V2 - V1)
    E = scipy.linalg.expm(omega)
    M = _ordered_product(E)
    if not np.all(np.isfinite(M)):
        raise IntegrationError(f"non-finite monodromy at lambda={lam} with {steps} steps")
    return MonodromyResult(
        lam=complex(lam), M=M, detM=complex(np.linalg.det(M)),
        multipliers=np.linalg.eigvals(M), charpoly_coeffs=np.poly(M), steps=steps)


def char_det(spec: PotentialSpec, lam: complex, t: float, steps: int | None = None) -> complex:
    return monodromy(spec, lam, steps).delta(t)


def refine_with_monodromy(spec: PotentialSpec, t: float, point: BlochPoint, *,
                          steps: int | None = None, max_iter: int = 8,
                          floor: float = 1e-12) -> BlochPoint:
    """Newton iteration on ``F(lam) = det(M(lam) - e^{i pi t} I)`` seeded at
    ``point.lam`` with a central finite-difference derivative."""
    lam0 = point.lam
    steps = default_steps(lam0) if steps is None else steps
    F = lambda z: char_det(spec, z, t, steps)  # noqa: E731
    f0 = F(lam0)
    if abs(f0) <= floor:
        return replace(point, refined=True, diagnostic="seed already satisfies F = 0")
    lam, f = lam0, f0
    for _ in range(max_iter):
        dz = 1e-6 * (1 + abs(lam))
        dF = (F(lam + dz) - F(lam - dz)) / (2 * dz)
        if dF == 0 or not np.isfinite(dF):
            break
        step = f / dF
        lam_new = lam - step
        f_new = F(lam_new)
        if not np.isfinite(f_new) or abs(lam_new - lam0) > 1e-2 * (1 + abs(lam0)):
            return replace(point, refined=False, diagnostic="newton diverged")
        lam, f = lam_new, f_new
        if abs(step) <= 1e-14 * (1 + abs(lam)) or abs(f) <= floor:
            break
    if abs(f) * 10 <= abs(f0):
        return replace(point, lam=complex(lam), refined=True,
                       diagnostic=f"|F| {abs(f0):.2e} -> {abs(f):.2e}")
    return replace(point, refined=False, diagnostic=f"|F| not reduced ({abs(f0):.2e} -> {abs(f):.2e})")


# --- identities ------------------------------------------------------------

def chain_identity_residual(spec: PotentialSpec, jd: JordanData, point: BlochPoint,
                  n: int, j: int, s: int, r: int) -> float:
    """Residual of the chain identity at basis index ``n`` for the adjoint
    chain ``(j, s)`` up to order ``r``.

    ``jd`` must describe the mean matrix (``A/pi``): the perturbation is the
    mean-free part of Q, which vanishes for constant potentials.
    """
    if point.vec is None:
        raise ValueError("point carries no eigenvector")
    block = jd.blocks[j]
    chain = block.adjoint_chains[s]
    if r + 1 > len(chain):
        raise IndexError(f"r={r} exceeds chain length {len(chain)} of (j={j}, s={s})")
    coeffs = point.vec
    K = (coeffs.shape[0] - 1) // 2
    N = spec.n_max
    lam = point.vec_lambda
    t = point.t
    mu = (2 * n + t) ** 2 + block.mu
    ppsi = convolve_Q(spec, coeffs, exclude_mean=True)
    row = n + K + N
    p_n = ppsi[row] if 0 <= row < ppsi.shape[0] else np.zeros(spec.m, complex)
    psi_n = coeffs[n + K] if -K <= n <= K else np.zeros(spec.m, complex)
    root_pi = np.sqrt(np.pi)
    a_r = root_pi * np.vdot(chain[r], psi_n)
    rhs = sum((lam - mu) ** q * root_pi * np.vdot(chain[q], p_n) for q in range(r + 1))
    return float(abs((lam - mu) ** (r + 1) * a_r - rhs))


@dataclass
class ConjugationReport:
    ok: bool
    unmatched: list = field(default_factory=list)
    max_mismatch: float = 0.0


def conjugation_check(points, tol: float = 1e-6) -> ConjugationReport:
    """Is the multiset of eigenvalues (with multiplicity) closed under conjugation?"""
    vals = np.array([p.lam for p in points for _ in range(p.mult)], dtype=complex)
    if vals.size == 0:
        return ConjugationReport(True)
    cost = np.abs(vals[:, None] - vals.conj()[None, :])
    rows, cols = linear_sum_assignment(cost)
    bad = [(complex(vals[r]), complex(np.conj(vals[c]))) for r, c in zip(rows, cols) if cost[r, c] > tol]
    return ConjugationReport(not bad, bad, float(cost[rows, cols].max()))
