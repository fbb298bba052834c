"""Dense linear-algebra kernels used throughout the package.

Matrices are 2-D float64 arrays in row-major layout, vectors are 1-D float64
arrays.  All functions are pure and safe to call from multiple threads.
"""

import numpy as np

from .errors import DimensionOverflowError, NumericalError, ShapeError

ENTRY_CAP = 2**31
"""Hard ceiling on the entry count of any produced array."""

NULLSPACE_RTOL = 1e-10
"""Default relative singular-value cutoff for numerical kernels."""

LSTSQ_RTOL = 1e-12
"""Default relative truncation threshold for least-squares solves."""


def _as_matrix(a, name="matrix"):
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise ShapeError(f"{name} must be 2-D and non-empty, got shape {a.shape}")
    return a


def _as_vector(v, name="vector"):
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1 or v.shape[0] < 1:
        raise ShapeError(f"{name} must be 1-D and non-empty, got shape {v.shape}")
    return v


def _check_entries(count, entry_cap):
    if count > entry_cap:
        raise DimensionOverflowError(
            f"result would hold {count} entries, exceeding the cap of {entry_cap}"
        )


def _svd(a, full_matrices):
    try:
        return np.linalg.svd(a, full_matrices=full_matrices)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD did not converge on a {a.shape} matrix") from exc


def kron(a, b, entry_cap=ENTRY_CAP):
    """Kronecker product of two matrices, block (i, j) equal to a[i, j] * b."""
    a = _as_matrix(a, "a")
    b = _as_matrix(b, "b")
    _check_entries(a.shape[0] * b.shape[0] * a.shape[1] * b.shape[1], entry_cap)
    return np.kron(a, b)


def kron_power(x, k, entry_cap=ENTRY_CAP):
    """k-fold Kronecker power of a vector: x for k=1, kron(x, kron_power(x, k-1)) above."""
    x = _as_vector(x, "x")
    if k < 1:
        raise ShapeError(f"power must be >= 1, got {k}")
    _check_entries(x.shape[0] ** k, entry_cap)
    out = x
    for _ in range(k - 1):
        out = np.kron(x, out)
    return out


def vec(a):
    """Stack the columns of a matrix into one vector."""
    return _as_matrix(a).ravel(order="F")


def unvec(v, rows):
    """Inverse of :func:`vec`; unvec(vec(A), A.shape[0]) == A."""
    v = _as_vector(v)
    if rows < 1 or v.shape[0] % rows != 0:
        raise ShapeError(f"vector of dim {v.shape[0]} cannot be unstacked into {rows} rows")
    return v.reshape(rows, -1, order="F")


def direct_sum(blocks):
    """Block-diagonal assembly of square matrices."""
    blocks = [_as_matrix(b, f"block {i}") for i, b in enumerate(blocks)]
    if not blocks:
        raise ShapeError("direct_sum needs at least one block")
    for i, b in enumerate(blocks):
        if b.shape[0] != b.shape[1]:
            raise ShapeError(f"block {i} is not square: {b.shape}")
    dim = sum(b.shape[0] for b in blocks)
    out = np.zeros((dim, dim))
    o = 0
    for b in blocks:
        s = b.shape[0]
        out[o:o + s, o:o + s] = b
        o += s
    return out


def hadamard(x, y):
    """Entrywise product of two vectors of equal dimension."""
    x = _as_vector(x, "x")
    y = _as_vector(y, "y")
    if x.shape != y.shape:
        raise ShapeError(f"dimension mismatch: {x.shape[0]} vs {y.shape[0]}")
    return x * y


def null_space(a, rel_tol=NULLSPACE_RTOL):
    """Orthonormal basis of the numerical kernel of ``a``.

    Returns an (n, k) array whose columns are the right singular vectors with
    singular values sigma_i <= rel_tol * sigma_max (every vector when
    sigma_max == 0).  k may be zero.
    """
    a = _as_matrix(a)
    if rel_tol <= 0:
        raise ShapeError(f"rel_tol must be positive, got {rel_tol}")
    m, n = a.shape
    if m < n:
        # Zero rows do not change right singular pairs but let the economy
        # SVD return all n right singular vectors.
        a = np.vstack([a, np.zeros((n - m, n))])
    _, s, vt = _svd(a, full_matrices=False)
    smax = s[0] if s.size else 0.0
    if smax == 0.0:
        return vt.T.copy()
    return vt[s <= rel_tol * smax].T.copy()


def lstsq(a, b, rel_tol=LSTSQ_RTOL, sparsify=None):
    """Minimum-norm least-squares solution of a x = b via truncated SVD.

    Singular values below rel_tol * sigma_max are discarded.  When
    ``sparsify`` is given, a greedy orthogonal-matching-pursuit pass retains
    at most that many nonzero coefficients instead.
    """
    a = _as_matrix(a, "a")
    b = _as_vector(b, "b")
    if a.shape[0] != b.shape[0]:
        raise ShapeError(f"a has {a.shape[0]} rows but b has dim {b.shape[0]}")
    if sparsify is not None:
        if sparsify < 1:
            raise ShapeError(f"sparsify must be >= 1, got {sparsify}")
        return _omp(a, b, sparsify, rel_tol)
    return _truncated_solve(a, b, rel_tol)


def _truncated_solve(a, b, rel_tol):
    u, s, vt = _svd(a, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros(a.shape[1])
    keep = s > rel_tol * s[0]
    return vt[keep].T @ ((u[:, keep].T @ b) / s[keep])


def _omp(a, b, max_nonzero, rel_tol):
    norms = np.linalg.norm(a, axis=0)
    viable = norms > 0
    bnorm = np.linalg.norm(b)
    residual = b.copy()
    selected: list[int] = []
    coeffs = np.zeros(0)
    for _ in range(min(max_nonzero, int(viable.sum()))):
        corr = np.zeros(a.shape[1])
        corr[viable] = np.abs(a[:, viable].T @ residual) / norms[viable]
        corr[selected] = 0.0
        j = int(np.argmax(corr))
        if corr[j] <= 1e-14 * max(bnorm, 1.0):
            break
        selected.append(j)
        coeffs = _truncated_solve(a[:, selected], b, rel_tol)
        residual = b - a[:, selected] @ coeffs
        if np.linalg.norm(residual) <= 1e-13 * max(bnorm, 1.0):
            break
    x = np.zeros(a.shape[1])
    if selected:
        x[selected] = coeffs
    return x
