"""Small dense real matrix kernel: determinant, adjugate, norms, stability test.

Every matrix in the estimation pipeline is tiny (side <= 8), so the routines
here favour exactness and well-definedness over asymptotic speed.  In
particular the adjugate is built entry-by-entry from signed minors, which
keeps it meaningful for singular inputs: the mixing step multiplies by the
adjugate precisely because no division ever takes place, and the regressor
determinant routinely passes through zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError

MAX_SIDE = 8


def as_vector(value, name: str = "vector") -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise DimensionError(f"{name} must be a non-empty 1-D array, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def as_matrix(value, name: str = "matrix") -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim != 2 or arr.size == 0:
        raise DimensionError(f"{name} must be a non-empty 2-D array, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def as_square(value, name: str = "matrix") -> np.ndarray:
    arr = as_matrix(value, name)
    rows, cols = arr.shape
    if rows != cols:
        raise DimensionError(f"{name} must be square, got shape {arr.shape}")
    if rows > MAX_SIDE:
        raise DimensionError(f"{name} side {rows} exceeds the supported maximum {MAX_SIDE}")
    return arr


def _det_rec(m: list[list[float]], size: int) -> float:
    # First-row cofactor expansion on plain lists; closed forms for the bases.
    if size == 1:
        return m[0][0]
    if size == 2:
        return m[0][0] * m[1][1] - m[0][1] * m[1][0]
    if size == 3:
        return (
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        )
    total = 0.0
    sign = 1.0
    rest = m[1:]
    for j in range(size):
        minor = [[row[c] for c in range(size) if c != j] for row in rest]
        total += sign * m[0][j] * _det_rec(minor, size - 1)
        sign = -sign
    return total


def determinant(matrix) -> float:
    """Determinant by first-row cofactor expansion (side <= 8)."""
    a = as_square(matrix)
    return float(_det_rec(a.tolist(), a.shape[0]))


def adjugate(matrix) -> np.ndarray:
    """Transpose of the cofactor matrix; satisfies adj(M) @ M = det(M) * I.

    Defined (and finite) for singular inputs as well.
    """
    a = as_square(matrix)
    k = a.shape[0]
    if k == 1:
        return np.ones((1, 1))
    m = a.tolist()
    adj = np.empty((k, k))
    for i in range(k):
        rows = [m[r] for r in range(k) if r != i]
        for j in range(k):
            minor = [[row[c] for c in range(k) if c != j] for row in rows]
            adj[j, i] = (-1.0) ** (i + j) * _det_rec(minor, k - 1)
    return adj


# ---------------------------------------------------------------------------
# Batched cofactor evaluation for the simulation hot path.  Each adjugate
# entry is still a signed minor; only the minor determinants are evaluated
# by vectorised closed forms (LAPACK beyond 4x4) instead of recursive
# expansion.  Tests pin this against determinant()/adjugate() above.

# Column pairs for the two-row Laplace split of a 4x4 determinant.
_PAIR_A = np.array([0, 0, 0, 1, 1, 2])
_PAIR_B = np.array([1, 2, 3, 2, 3, 3])
_PAIR_COMP = np.array([5, 4, 3, 2, 1, 0])
_PAIR_SIGN = np.array([1.0, -1.0, 1.0, 1.0, -1.0, 1.0])


def batched_det_small(stack: np.ndarray) -> np.ndarray:
    """Determinants of a (batch, k, k) stack via closed forms for k <= 4.

    The k = 4 case expands along the first two rows (products of
    complementary 2x2 determinants), which keeps exact cancellation for
    duplicated rows; larger sizes fall back to LAPACK.
    """
    s = np.asarray(stack, dtype=float)
    if s.ndim != 3 or s.shape[1] != s.shape[2]:
        raise DimensionError(f"expected a (batch, k, k) stack, got shape {s.shape}")
    k = s.shape[1]
    if k == 1:
        return s[:, 0, 0].copy()
    if k == 2:
        return s[:, 0, 0] * s[:, 1, 1] - s[:, 0, 1] * s[:, 1, 0]
    if k == 3:
        return (
            s[:, 0, 0] * (s[:, 1, 1] * s[:, 2, 2] - s[:, 1, 2] * s[:, 2, 1])
            - s[:, 0, 1] * (s[:, 1, 0] * s[:, 2, 2] - s[:, 1, 2] * s[:, 2, 0])
            + s[:, 0, 2] * (s[:, 1, 0] * s[:, 2, 1] - s[:, 1, 1] * s[:, 2, 0])
        )
    if k == 4:
        top = s[:, 0, _PAIR_A] * s[:, 1, _PAIR_B] - s[:, 0, _PAIR_B] * s[:, 1, _PAIR_A]
        bot = s[:, 2, _PAIR_A] * s[:, 3, _PAIR_B] - s[:, 2, _PAIR_B] * s[:, 3, _PAIR_A]
        return np.einsum("bp,bp,p->b", top, bot[:, _PAIR_COMP], _PAIR_SIGN)
    return np.linalg.det(s)


_MINOR_TABLES: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _minor_tables(k: int) -> tuple[np.ndarray, np.ndarray]:
    cached = _MINOR_TABLES.get(k)
    if cached is not None:
        return cached
    idx = np.empty((k * k, (k - 1) * (k - 1)), dtype=np.intp)
    for i in range(k):
        rows = [r for r in range(k) if r != i]
        for j in range(k):
            cols = [c for c in range(k) if c != j]
            idx[i * k + j] = [r * k + c for r in rows for c in cols]
    signs = np.fromfunction(lambda i, j: (-1.0) ** (i + j), (k, k))
    _MINOR_TABLES[k] = (idx, signs)
    return idx, signs


def det_adjugate_batch(matrices: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Determinants and adjugates of a (batch, k, k) stack, division-free.

    The determinant is the first-row cofactor expansion over the same minors
    that populate the adjugate, so adj(M) @ M - det(M) * I stays at rounding
    level even for ill-conditioned or singular members of the batch.
    """
    ms = np.asarray(matrices, dtype=float)
    if ms.ndim != 3 or ms.shape[1] != ms.shape[2]:
        raise DimensionError(f"expected a (batch, k, k) stack, got shape {ms.shape}")
    b, k, _ = ms.shape
    if k == 1:
        return ms[:, 0, 0].copy(), np.ones((b, 1, 1))
    if k == 2:
        dets = ms[:, 0, 0] * ms[:, 1, 1] - ms[:, 0, 1] * ms[:, 1, 0]
        adjs = np.empty_like(ms)
        adjs[:, 0, 0] = ms[:, 1, 1]
        adjs[:, 0, 1] = -ms[:, 0, 1]
        adjs[:, 1, 0] = -ms[:, 1, 0]
        adjs[:, 1, 1] = ms[:, 0, 0]
        return dets, adjs
    idx, signs = _minor_tables(k)
    sub = ms.reshape(b, k * k)[:, idx].reshape(b * k * k, k - 1, k - 1)
    minors = batched_det_small(sub).reshape(b, k, k)
    cof = signs * minors
    dets = np.einsum("bj,bj->b", ms[:, 0, :], cof[:, 0, :])
    return dets, np.swapaxes(cof, 1, 2)


def det_adjugate(matrix) -> tuple[float, np.ndarray]:
    """Single-matrix convenience wrapper around det_adjugate_batch."""
    a = as_square(matrix)
    dets, adjs = det_adjugate_batch(a[None, :, :])
    return float(dets[0]), adjs[0]


def norm2(vector) -> float:
    """Euclidean norm."""
    return float(np.linalg.norm(as_vector(vector)))


def norm_inf(matrix) -> float:
    """Max row sum norm."""
    return float(np.abs(as_matrix(matrix)).sum(axis=1).max())


def characteristic_polynomial(matrix) -> np.ndarray:
    """Coefficients of det(lambda*I - M), leading first, via the
    Faddeev-LeVerrier recursion (no eigenvalue iteration)."""
    a = as_square(matrix)
    n = a.shape[0]
    coeffs = np.empty(n + 1)
    coeffs[0] = 1.0
    mk = a.copy()
    eye = np.eye(n)
    for k in range(1, n + 1):
        ck = -np.trace(mk) / k
        coeffs[k] = ck
        if k < n:
            mk = a @ (mk + ck * eye)
    return coeffs


@dataclass(frozen=True)
class StabilityVerdict:
    """Outcome of the Routh array sign test.

    ``indeterminate`` is set when a zero pivot (or an all-zero row) makes the
    array inconclusive; such polynomials are reported as not stable.
    """

    stable: bool
    indeterminate: bool


def routh_verdict(coefficients) -> StabilityVerdict:
    """Routh array test: stable iff every root is in the open left half plane."""
    c = np.asarray(coefficients, dtype=float)
    if c.ndim != 1 or c.size < 1:
        raise DimensionError("coefficient list must be 1-D and non-empty")
    if not np.isfinite(c).all():
        raise ValueError("coefficients contain non-finite entries")
    if c[0] == 0.0:
        raise ValueError("leading coefficient must be nonzero")
    if c[0] < 0.0:
        c = -c
    n = c.size - 1
    if n == 0:
        return StabilityVerdict(True, False)
    # Necessary condition: every coefficient strictly positive.
    if np.any(c < 0.0):
        return StabilityVerdict(False, False)
    width = (n + 2) // 2
    prev2 = np.zeros(width)
    prev = np.zeros(width)
    prev2[: len(c[0::2])] = c[0::2]
    prev[: len(c[1::2])] = c[1::2]
    first_col = [prev2[0], prev[0]]
    for _ in range(2, n + 1):
        pivot = prev[0]
        if pivot == 0.0:
            return StabilityVerdict(False, True)
        new = np.zeros(width)
        new[: width - 1] = (pivot * prev2[1:] - prev2[0] * prev[1:]) / pivot
        prev2, prev = prev, new
        first_col.append(new[0])
    if any(v == 0.0 for v in first_col):
        return StabilityVerdict(False, True)
    return StabilityVerdict(all(v > 0.0 for v in first_col), False)


def hurwitz_verdict(matrix) -> StabilityVerdict:
    """Full verdict (including the indeterminate flag) for a matrix."""
    return routh_verdict(characteristic_polynomial(matrix))


def is_hurwitz(matrix) -> bool:
    """True iff all eigenvalues of the matrix have strictly negative real part.

    Decided by the Routh array on the characteristic polynomial; marginal or
    indeterminate cases count as not Hurwitz.
    """
    return hurwitz_verdict(matrix).stable
