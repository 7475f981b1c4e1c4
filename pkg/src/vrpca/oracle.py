"""Exact desk-scale reference: dense symmetric eigendecomposition via cyclic
Jacobi rotations, spectrum/eigengap extraction, and a controlled-spectrum
dataset synthesizer."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, GapWarning, NonConvergenceError
from .matrix import DataMatrix, OrthonormalFrame

#: dense_eigh refuses larger problems; use the iterative solvers instead
DENSE_GUARD = 2000


def _round_robin(d):
    """Tournament schedule: d-1 rounds of disjoint pivot pairs covering every
    (p, q) exactly once per sweep. Returns a list of (p, q) index arrays."""
    players = list(range(d)) if d % 2 == 0 else list(range(d)) + [-1]
    half = len(players) // 2
    rounds = []
    for _ in range(len(players) - 1):
        ps, qs = [], []
        for i in range(half):
            a, b = players[i], players[-1 - i]
            if a >= 0 and b >= 0:
                ps.append(a)
                qs.append(b)
        rounds.append((np.asarray(ps), np.asarray(qs)))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def jacobi_eigh(A, tol=1e-12, max_sweeps=64, track_off=False):
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps rotate all off-diagonal pivots once (in round-robin order, so
    disjoint pivots within a round are applied as one orthogonal transform)
    until the off-diagonal Frobenius norm falls below tol * ||A||_F.

    Returns (eigenvalues desc, eigenvectors column-matched, off_history)
    where off_history is per-sweep off-diagonal norms when track_off is set,
    else None.
    """
    A = np.array(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatchError(f"expected a square matrix, got {A.shape}")
    d = A.shape[0]
    V = np.eye(d)
    norm_f = float(np.linalg.norm(A))
    history = [] if track_off else None
    if d == 1 or norm_f == 0.0:
        evals = np.diag(A).astype(float).copy()
        order = np.argsort(evals)[::-1]
        return evals[order], V[:, order], history

    rounds = _round_robin(d)
    off_part = np.empty_like(A)
    for _ in range(max_sweeps):
        # off-diagonal norm taken directly (a sum-minus-diagonal form would
        # cancel catastrophically near convergence)
        np.copyto(off_part, A)
        np.fill_diagonal(off_part, 0.0)
        off = float(np.linalg.norm(off_part))
        if track_off:
            history.append(off)
        if off <= tol * norm_f:
            break
        for p, q in rounds:
            apq = A[p, q]
            active = apq != 0.0
            if not np.any(active):
                continue
            app = A[p, p]
            aqq = A[q, q]
            # stable rotation angles (tau = cot(2 theta)); tau^2 overflowing
            # to inf gives the correct t -> 0 limit for negligible pivots
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                tau = (aqq - app) / (2.0 * apq)
                t = np.sign(tau) / (np.abs(tau) + np.sqrt(1.0 + tau * tau))
                t = np.where(tau == 0.0, 1.0, t)
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = t * c
            c = np.where(active, c, 1.0)
            s = np.where(active, s, 0.0)
            cols_p = A[:, p]
            cols_q = A[:, q]
            A[:, p] = c * cols_p - s * cols_q
            A[:, q] = s * cols_p + c * cols_q
            rows_p = A[p, :]
            rows_q = A[q, :]
            A[p, :] = c[:, None] * rows_p - s[:, None] * rows_q
            A[q, :] = s[:, None] * rows_p + c[:, None] * rows_q
            # pivots are zeroed exactly by the angle choice
            A[p, q] = 0.0
            A[q, p] = 0.0
            vp = V[:, p]
            vq = V[:, q]
            V[:, p] = c * vp - s * vq
            V[:, q] = s * vp + c * vq
    else:
        raise NonConvergenceError(
            f"Jacobi did not reach off-diagonal {tol:.1e} * ||A||_F "
            f"within {max_sweeps} sweeps")

    evals = np.diag(A).copy()
    order = np.argsort(evals, kind="stable")[::-1]
    return evals[order], V[:, order], history


@dataclass(frozen=True)
class Spectrum:
    """Full eigendecomposition of the covariance operator, sorted descending."""

    eigenvalues: np.ndarray
    eigenvectors: OrthonormalFrame

    @property
    def d(self):
        return self.eigenvalues.size

    def gap_at(self, k: int) -> float:
        """s_k - s_{k+1} (1-based k, valid for 1 <= k < d)."""
        if not 1 <= k < self.d:
            raise DimensionMismatchError(f"gap index {k} outside [1, {self.d - 1}]")
        return float(self.eigenvalues[k - 1] - self.eigenvalues[k])


def dense_eigh(X: DataMatrix) -> Spectrum:
    """Materialize A = (1/n) X X^T and eigendecompose it with cyclic Jacobi.

    Desk-scale reference only: refuses d > 2000. Iterates sweeps until the
    off-diagonal Frobenius norm is <= 1e-12 * ||A||_F.
    """
    if X.d > DENSE_GUARD:
        raise DimensionMismatchError(
            f"d={X.d} exceeds the dense guard ({DENSE_GUARD}); "
            "use the iterative solvers at this scale")
    A = X.data @ X.data.T / X.n
    evals, evecs, _ = jacobi_eigh(A)
    return Spectrum(eigenvalues=evals, eigenvectors=OrthonormalFrame(evecs))


def leading_subspace(spec: Spectrum, k: int) -> OrthonormalFrame:
    """First k eigenvectors; warns when the eigengap at k is (near) zero,
    in which case the subspace is not unique."""
    if not 1 <= k <= spec.d:
        raise DimensionMismatchError(f"k={k} outside [1, {spec.d}]")
    if k < spec.d:
        gap = spec.gap_at(k)
        scale = max(abs(float(spec.eigenvalues[0])), 1.0)
        if gap <= 1e-10 * scale:
            warnings.warn(
                f"eigengap at k={k} is {gap:.3e}; the leading subspace "
                "is not unique", GapWarning, stacklevel=2)
    return OrthonormalFrame(spec.eigenvectors.entries[:, :k])


@dataclass(frozen=True)
class SpectrumSpec:
    """Synthetic-data recipe: requested eigenvalues (descending) and the
    position k whose eigengap the instance is built to exercise."""

    eigenvalues: tuple
    k: int = 1

    def __post_init__(self):
        vals = tuple(float(v) for v in self.eigenvalues)
        object.__setattr__(self, "eigenvalues", vals)
        if len(vals) < 1:
            raise DimensionMismatchError("empty spectrum")
        if any(v < 0.0 for v in vals):
            raise DimensionMismatchError("negative eigenvalues requested")
        if any(a < b for a, b in zip(vals, vals[1:])):
            raise DimensionMismatchError("eigenvalues must be non-increasing")
        if not 1 <= self.k < max(len(vals), 2):
            raise DimensionMismatchError(f"gap position k={self.k} out of range")

    @property
    def d(self):
        return len(self.eigenvalues)

    @property
    def eigengap(self) -> float:
        if self.k >= len(self.eigenvalues):
            return float(self.eigenvalues[-1])
        return self.eigenvalues[self.k - 1] - self.eigenvalues[self.k]


def synthesize_dataset(spec: SpectrumSpec, n: int, seed: int) -> DataMatrix:
    """Build X = Q diag(sqrt(n s)) R^T so that (1/n) X X^T has exactly the
    requested spectrum.

    Q is a random d x d orthogonal matrix from a seeded Gaussian QR; R is a
    random n x d orthonormal set whose rows are then norm-balanced with
    Givens rotations, which makes every column norm of X equal to the trace
    of the spectrum (so the realized r is the smallest possible).
    Requires n >= d.
    """
    eigs = np.asarray(spec.eigenvalues, dtype=np.float64)
    d = eigs.size
    if n < d:
        raise DimensionMismatchError(f"need n >= d, got n={n}, d={d}")
    if not np.any(eigs > 0.0):
        raise DimensionMismatchError("all-zero spectrum requested")

    rng = np.random.Generator(np.random.Philox(key=seed))
    gq = rng.standard_normal((d, d))
    q, rq = np.linalg.qr(gq)
    q = q * np.sign(np.diag(rq))
    gr = rng.standard_normal((n, d))
    r0, rr = np.linalg.qr(gr)
    r0 = r0 * np.sign(np.diag(rr))

    # rows of B are the (scaled) data points; balance their norms to the
    # common value tau without touching B^T B = diag(n s)
    b = r0 * np.sqrt(n * eigs)
    tau = float(eigs.sum())
    norms = np.einsum("ij,ij->i", b, b)
    for _ in range(n):
        i = int(np.argmin(norms))
        j = int(np.argmax(norms))
        lo, hi = norms[i], norms[j]
        if hi - lo <= 1e-13 * max(tau, 1.0):
            break
        cross = float(b[i] @ b[j])
        root = np.sqrt(max(cross * cross - (lo - tau) * (hi - tau), 0.0))
        # pick the larger-magnitude root for numerical stability
        t1 = (cross + root) / (hi - tau)
        t2 = (cross - root) / (hi - tau)
        t = t1 if abs(t1) >= abs(t2) else t2
        c = 1.0 / np.sqrt(1.0 + t * t)
        s = t * c
        bi = c * b[i] - s * b[j]
        bj = s * b[i] + c * b[j]
        b[i] = bi
        b[j] = bj
        norms[i] = bi @ bi
        norms[j] = bj @ bj
    return DataMatrix(q @ b.T)
