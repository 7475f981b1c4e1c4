"""Dense matrix core: column-major data storage, implicit covariance
application, polar orthonormalization, Procrustes alignment and the
subspace metrics shared by every solver."""

from __future__ import annotations

import numpy as np

from .errors import DegenerateIterateError, DimensionMismatchError

#: max-entry tolerance for the orthonormal-columns invariant
ORTHO_TOL = 1e-10
#: Gram matrices with a smaller minimum eigenvalue are treated as singular
GRAM_MIN_EIG = 1e-12


def _as_2d(a, name):
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise DimensionMismatchError(f"{name} must be 1-D or 2-D, got shape {arr.shape}")
    return arr


class DataMatrix:
    """Immutable d x n store of n data points in d dimensions.

    The points are the columns; storage is column-major so that single
    columns are contiguous. The maximum squared Euclidean column norm is
    computed once from the stored columns and cached as ``r``.
    """

    __slots__ = ("data", "d", "n", "r")

    def __init__(self, columns):
        arr = np.asfortranarray(np.asarray(columns, dtype=np.float64))
        if arr.ndim != 2:
            raise DimensionMismatchError(f"data must be 2-D, got shape {arr.shape}")
        d, n = arr.shape
        if d < 1 or n < 1:
            raise DimensionMismatchError(f"empty data matrix (shape {arr.shape})")
        if not np.isfinite(arr).all():
            raise DimensionMismatchError("data matrix contains non-finite entries")
        arr.flags.writeable = False
        self.data = arr
        self.d = d
        self.n = n
        self.r = float(np.max(np.einsum("ij,ij->j", arr, arr)))

    def column(self, i):
        """Contiguous view of data point ``i``."""
        return self.data[:, i]

    def __repr__(self):
        return f"DataMatrix(d={self.d}, n={self.n}, r={self.r:.6g})"


class OrthonormalFrame:
    """A d x k matrix with orthonormal columns, validated at construction."""

    __slots__ = ("entries", "d", "k")

    def __init__(self, entries):
        arr = _as_2d(entries, "frame")
        d, k = arr.shape
        if not 1 <= k <= d:
            raise DimensionMismatchError(f"frame needs 1 <= k <= d, got d={d}, k={k}")
        dev = np.max(np.abs(arr.T @ arr - np.eye(k)))
        if not dev <= ORTHO_TOL:
            raise DimensionMismatchError(
                f"columns are not orthonormal: max |W^T W - I| = {dev:.3e}")
        arr = arr.copy(order="F")
        arr.flags.writeable = False
        self.entries = arr
        self.d = d
        self.k = k

    def column(self, j):
        return self.entries[:, j]

    def __repr__(self):
        return f"OrthonormalFrame(d={self.d}, k={self.k})"


class Rotation:
    """A k x k orthogonal matrix, validated at construction."""

    __slots__ = ("entries", "k")

    def __init__(self, entries):
        arr = _as_2d(entries, "rotation")
        k = arr.shape[0]
        if arr.shape != (k, k):
            raise DimensionMismatchError(f"rotation must be square, got {arr.shape}")
        dev = np.max(np.abs(arr.T @ arr - np.eye(k)))
        if not dev <= ORTHO_TOL:
            raise DimensionMismatchError(
                f"matrix is not orthogonal: max |B^T B - I| = {dev:.3e}")
        arr = arr.copy()
        arr.flags.writeable = False
        self.entries = arr
        self.k = k

    def __repr__(self):
        return f"Rotation(k={self.k})"


def _raw(a, name="operand"):
    """Unwrap frames to plain arrays; pass arrays through."""
    if isinstance(a, (OrthonormalFrame, Rotation)):
        return a.entries
    return np.asarray(a, dtype=np.float64)


def covariance_apply(X: DataMatrix, W):
    """Apply the covariance operator (1/n) X X^T to W without forming it.

    Computes (1/n) X (X^T W) in O(n d k); accepts a vector or a d x k
    array/frame and preserves the input's dimensionality.
    """
    arr = _raw(W)
    if arr.shape[0] != X.d:
        raise DimensionMismatchError(
            f"operand has {arr.shape[0]} rows, data dimension is {X.d}")
    return X.data @ (X.data.T @ arr) / X.n


def _polar(arr):
    """Polar orthonormalization W (W^T W)^{-1/2} on a raw array.

    For k = 1 this is exactly division by the Euclidean norm. The k x k
    Gram matrix is eigendecomposed; an ill-conditioned Gram triggers one
    refinement pass so the output meets the orthonormality invariant.
    """
    k = arr.shape[1]
    if k == 1:
        nrm2 = float(arr[:, 0] @ arr[:, 0])
        if nrm2 <= GRAM_MIN_EIG:
            raise DegenerateIterateError(
                f"degenerate iterate: Gram matrix min eigenvalue {nrm2:.3e}")
        return arr / np.sqrt(nrm2)
    gram = arr.T @ arr
    evals, evecs = np.linalg.eigh(gram)
    if evals[0] <= GRAM_MIN_EIG:
        raise DegenerateIterateError(
            f"degenerate iterate: Gram matrix min eigenvalue {evals[0]:.3e}")
    out = arr @ ((evecs / np.sqrt(evals)) @ evecs.T)
    if evals[0] < 1e-3 * evals[-1]:
        gram = out.T @ out
        evals, evecs = np.linalg.eigh(gram)
        out = out @ ((evecs / np.sqrt(evals)) @ evecs.T)
    return out


def polar_normalize(Wp) -> OrthonormalFrame:
    """Project a full-column-rank d x k matrix onto the nearest orthonormal
    frame, W' (W'^T W')^{-1/2}.

    Raises DegenerateIterateError when the Gram matrix is numerically
    singular (min eigenvalue <= 1e-12).
    """
    arr = _as_2d(_raw(Wp), "input")
    return OrthonormalFrame(_polar(arr))


def procrustes_rotation(C: OrthonormalFrame, D: OrthonormalFrame) -> Rotation:
    """Orthogonal k x k matrix B minimizing ||C - D B||_F.

    B = V U^T where U S V^T is an SVD of C^T D. Any valid SVD yields the
    same objective value, so ties from repeated singular values are benign.
    """
    if C.d != D.d or C.k != D.k:
        raise DimensionMismatchError(
            f"frames disagree: ({C.d},{C.k}) vs ({D.d},{D.k})")
    u, _, vt = np.linalg.svd(C.entries.T @ D.entries)
    return Rotation(vt.T @ u.T)


def potential(V: OrthonormalFrame, W: OrthonormalFrame) -> float:
    """Subspace distance k - ||V^T W||_F^2 between two orthonormal frames.

    Evaluated as the squared norm of the component of W outside span(V),
    which is the same quantity but avoids cancellation near zero. Lies in
    [0, k]; zero exactly when the column spaces coincide.
    """
    if V.d != W.d or V.k != W.k:
        raise DimensionMismatchError(
            f"frames disagree: ({V.d},{V.k}) vs ({W.d},{W.k})")
    resid = W.entries - V.entries @ (V.entries.T @ W.entries)
    return float(np.einsum("ij,ij->", resid, resid))


def rayleigh_residual(X: DataMatrix, W: OrthonormalFrame) -> float:
    """||A W - W (W^T A W)||_F with A = (1/n) X X^T applied implicitly.

    Zero exactly when the columns of W span an invariant subspace of the
    covariance operator; used as the oracle-free convergence diagnostic.
    """
    aw = covariance_apply(X, W.entries)
    resid = aw - W.entries @ (W.entries.T @ aw)
    return float(np.linalg.norm(resid))


def rescale_dataset(X: DataMatrix):
    """Divide every column by sqrt(r) so the rescaled max norm is 1.

    Returns (rescaled DataMatrix, scale) where scale is the original r.
    A solver running on the rescaled data is equivalent to the original
    run with the step size multiplied by the scale and the eigengap
    divided by it.
    """
    if X.r <= 0.0:
        raise DegenerateIterateError("cannot rescale an all-zero dataset")
    return DataMatrix(X.data / np.sqrt(X.r)), X.r
