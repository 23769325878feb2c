"""Jordan structure of the mean matrix and the closed-form spectra of the
constant-potential operators ``L_t(0)`` and ``L_t(A)``."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

CLUSTER_RTOL = 1e-8


class JordanAmbiguityWarning(UserWarning):
    pass


@dataclass(frozen=True)
class JordanBlockData:
    """One distinct eigenvalue with its Jordan chains.

    ``chains[s][k]`` is ``u_{j,s,k}``; ``(A - mu) chains[s][k] = chains[s][k-1]``
    and ``chains[s][0]`` is an eigenvector of unit norm.  ``adjoint_chains``
    hold the same structure for ``A^H`` at ``conj(mu)``.
    """
    mu: complex
    multiplicity: int
    chains: tuple
    adjoint_chains: tuple

    @property
    def chain_lengths(self) -> tuple[int, ...]:
        return tuple(len(c) for c in self.chains)

    @property
    def r(self) -> int:
        return max(self.chain_lengths)

    @property
    def is_real(self) -> bool:
        return self.mu.imag == 0.0


@dataclass(frozen=True)
class JordanData:
    matrix: np.ndarray
    blocks: tuple  # real eigenvalues ascending first, then nonreal
    tol: float
    ambiguous: bool = False
    biorth_cond: float = 1.0
    warnings: tuple = field(default_factory=tuple)

    @property
    def m(self) -> int:
        return self.matrix.shape[0]

    @property
    def p(self) -> int:
        return len(self.blocks)

    @property
    def s(self) -> int:
        """Number of distinct real eigenvalues."""
        return sum(b.is_real for b in self.blocks)

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.array([b.mu for b in self.blocks])

    @property
    def real_eigenvalues(self) -> np.ndarray:
        return np.array([b.mu.real for b in self.blocks if b.is_real])

    @property
    def multiplicities(self) -> tuple[int, ...]:
        return tuple(b.multiplicity for b in self.blocks)

    def odd_real_indices(self) -> list[int]:
        return [j for j, b in enumerate(self.blocks) if b.is_real and b.multiplicity % 2 == 1]

    def chain_residual(self) -> float:
        worst = 0.0
        A = self.matrix.astype(complex)
        for b in self.blocks:
            for mat, mu, chains in ((A, b.mu, b.chains),
                                    (A.conj().T, np.conj(b.mu), b.adjoint_chains)):
                N = mat - mu * np.eye(self.m)
                for chain in chains:
                    prev = np.zeros(self.m, complex)
                    for u in chain:
                        worst = max(worst, float(np.linalg.norm(N @ u - prev)))
                        prev = u
        return worst

    def to_json(self) -> dict:
        return {
            "eigenvalues": [[b.mu.real, b.mu.imag] for b in self.blocks],
            "multiplicities": list(self.multiplicities),
            "chain_lengths": [list(b.chain_lengths) for b in self.blocks],
            "r": [b.r for b in self.blocks],
            "s": self.s,
            "tol": self.tol,
            "ambiguous": self.ambiguous,
            "biorth_cond": self.biorth_cond,
        }


def _cluster(values: np.ndarray, tol: float) -> list[list[int]]:
    # single-linkage: groups are connected components of |a - b| <= tol
    n = len(values)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for a in range(n):
        for b in range(a + 1, n):
            if abs(values[a] - values[b]) <= tol:
                parent[find(a)] = find(b)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return list(groups.values())


def _null_basis(M: np.ndarray, tol: float) -> np.ndarray:
    _, sv, vh = np.linalg.svd(M)
    rank = int(np.sum(sv > tol))
    return vh[rank:].conj().T


def _orth(M: np.ndarray, tol: float) -> np.ndarray:
    if M.shape[1] == 0:
        return M
    u, sv, _ = np.linalg.svd(M, full_matrices=False)
    return u[:, sv > tol]


def _chains(A: np.ndarray, mu: complex, mult: int, tol: float) -> tuple:
    """Jordan chains at ``mu`` by the nullspace ladder of ``N = A - mu I``."""
    m = A.shape[0]
    N = A - mu * np.eye(m)
    kernels = [np.zeros((m, 0), complex)]
    P = np.eye(m, dtype=complex)
    while kernels[-1].shape[1] < mult and len(kernels) <= mult:
        P = P @ N
        kernels.append(_null_basis(P, tol * max(1.0, np.linalg.norm(P, 2))))
    top = len(kernels) - 1
    chains = []
    for level in range(top, 0, -1):
        # vectors already present at this level: N^(L-level) applied to longer tops
        present = [np.linalg.matrix_power(N, L - level) @ v for L, v in chains]
        span = np.column_stack([kernels[level - 1]] + present) if present else kernels[level - 1]
        Q = _orth(span, tol)
        cand = kernels[level] - Q @ (Q.conj().T @ kernels[level])
        u, sv, _ = np.linalg.svd(cand, full_matrices=False)
        for col in range(int(np.sum(sv > 1e3 * tol))):
            chains.append((level, u[:, col]))
    out = []
    for level, v in chains:
        vecs = [np.linalg.matrix_power(N, level - 1 - k) @ v for k in range(level)]
        scale = np.linalg.norm(vecs[0])
        out.append(tuple(w / scale for w in vecs))
    return tuple(out)


def jordan_analyze(A, tol: float | None = None) -> JordanData:
    """Distinct eigenvalues, multiplicities and Jordan chains of a small
    dense matrix (m <= 16).  Rank decisions use singular values with the
    same threshold as eigenvalue clustering."""
    A = np.atleast_2d(np.asarray(A))
    m = A.shape[0]
    if A.shape != (m, m):
        raise ValueError(f"square matrix expected, got {A.shape}")
    if m > 16:
        raise ValueError("dense Jordan analysis is limited to m <= 16")
    norm = float(np.linalg.norm(A, 2))
    if tol is None:
        tol = CLUSTER_RTOL * max(norm, 1.0)
    ev = np.linalg.eigvals(A.astype(complex))
    groups = _cluster(ev, tol)
    centers = [complex(np.mean(ev[g])) for g in groups]
    notes = []
    ambiguous = False
    for a in range(len(centers)):
        for b in range(a + 1, len(centers)):
            if abs(centers[a] - centers[b]) <= 2 * tol:
                ambiguous = True
    if ambiguous:
        notes.append("eigenvalue clustering is borderline; Jordan structure may be unreliable")
        warnings.warn(notes[-1], JordanAmbiguityWarning, stacklevel=2)

    real_input = np.isrealobj(A) or not np.any(A.imag)
    blocks = []
    Ac = A.astype(complex)
    for g, mu in zip(groups, centers):
        if real_input and abs(mu.imag) <= tol:
            mu = complex(mu.real, 0.0)
        mult = len(g)
        chains = _chains(Ac, mu, mult, tol)
        adj = _chains(Ac.conj().T, np.conj(mu), mult, tol)
        blocks.append(JordanBlockData(mu, mult, chains, adj))
    blocks.sort(key=lambda b: (not b.is_real, b.mu.real, b.mu.imag))

    right = [u for b in blocks for c in b.chains for u in c]
    left = [u for b in blocks for c in b.adjoint_chains for u in c]
    if len(right) == m and len(left) == m:
        gram = np.array([[np.vdot(w, u) for u in right] for w in left])
        cond = float(np.linalg.cond(gram))
    else:
        cond = float("inf")
        notes.append("root vectors do not span C^m")
    return JordanData(A.copy(), tuple(blocks), tol, ambiguous, cond, tuple(notes))


def mu_kj(jd: JordanData, k: int, j: int, t: float) -> complex:
    """Eigenvalue ``(2k+t)^2 + mu_j`` of ``L_t(A)``."""
    return (2 * k + t) ** 2 + jd.blocks[j].mu


@dataclass(frozen=True)
class HalfLine:
    origin: complex
    real: bool
    redundant: bool  # real origin already inside [mu_1, inf)

    def contains(self, z: complex, tol: float = 1e-12) -> bool:
        d = z - self.origin
        return abs(d.imag) <= tol and d.real >= -tol


def half_lines(jd: JordanData) -> list[HalfLine]:
    """Origins of the half lines whose union is the spectrum of ``L(A)``."""
    if jd.p < 1:
        raise ValueError("matrix has no eigenvalues")
    out = []
    first_real = True
    for b in jd.blocks:
        if b.is_real:
            out.append(HalfLine(b.mu, True, not first_real))
            first_real = False
        else:
            out.append(HalfLine(b.mu, False, False))
    return out


def unperturbed_multiplicity(t: float, k: int, m: int) -> int:
    """Multiplicity of ``(2k+t)^2`` in the spectrum of ``L_t(0)``."""
    if not -1 < t <= 1:
        raise ValueError(f"t must lie in (-1, 1], got {t}")
    if t in (0, 1) and (2 * k + t) != 0:
        return 2 * m
    return m
