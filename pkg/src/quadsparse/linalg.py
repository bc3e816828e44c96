"""Dense kernels shared by the recovery and landscape code.

Vectors and matrices are plain float64 numpy arrays.  Index sets are sorted
int arrays without duplicates (see ``index_set``).
"""

import math

import numpy as np

from .errors import ConvergenceError, InvalidArgument


def as_vector(v):
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise InvalidArgument("expected a non-empty 1-d vector")
    if not np.all(np.isfinite(v)):
        raise InvalidArgument("vector has non-finite entries")
    return v


def as_symmetric(M):
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] == 0:
        raise InvalidArgument("expected a non-empty square matrix")
    if not np.all(np.isfinite(M)):
        raise InvalidArgument("matrix has non-finite entries")
    if np.array_equal(M, M.T):
        return M
    return 0.5 * (M + M.T)


def index_set(indices, n):
    """Sorted, de-duplicated index array; every index must lie in [0, n)."""
    idx = np.unique(np.asarray(indices, dtype=np.int64).ravel())
    if idx.size and (idx[0] < 0 or idx[-1] >= n):
        raise InvalidArgument(f"index out of range for dimension {n}")
    return idx


def hard_threshold(v, k):
    """Keep the k largest-magnitude entries of v, zero the rest.

    Ties are broken in favour of the lower index.
    """
    v = as_vector(v)
    n = v.size
    if k < 0 or k > n:
        raise InvalidArgument(f"k={k} outside [0, {n}]")
    out = np.zeros_like(v)
    if k == 0:
        return out
    # stable sort on -|v| keeps lower indices first among equal magnitudes
    keep = np.argsort(-np.abs(v), kind="stable")[:k]
    out[keep] = v[keep]
    return out


def soft_threshold(v, tau):
    if tau < 0:
        raise InvalidArgument("negative threshold")
    v = np.asarray(v, dtype=np.float64)
    return np.sign(v) * np.maximum(np.abs(v) - tau, 0.0)


def restrict(obj, S):
    """Subvector or principal submatrix on the index set S."""
    obj = np.asarray(obj, dtype=np.float64)
    S = index_set(S, obj.shape[0])
    if obj.ndim == 1:
        return obj[S]
    if obj.ndim == 2 and obj.shape[0] == obj.shape[1]:
        return obj[np.ix_(S, S)]
    raise InvalidArgument("restrict expects a vector or a square matrix")


def embed(sub, S, n):
    """Inverse of ``restrict`` for vectors: zero outside S."""
    S = index_set(S, n)
    sub = np.asarray(sub, dtype=np.float64)
    if sub.shape != (S.size,):
        raise InvalidArgument("sub-vector length does not match index set")
    out = np.zeros(n)
    out[S] = sub
    return out


def ordered_matvec(cols, w):
    """cols @ w summed column by column, left to right.

    Elementwise accumulation gives the same bits whatever the memory layout
    of ``cols``, which a BLAS matvec does not promise.
    """
    cols = np.asarray(cols, dtype=np.float64)
    acc = np.zeros(cols.shape[0])
    for j in range(cols.shape[1]):
        acc += cols[:, j] * w[j]
    return acc


def canonical_sign(v):
    """Flip v so that its first nonzero coordinate is positive."""
    nz = np.flatnonzero(v)
    if nz.size and v[nz[0]] < 0:
        return -v
    return v


def sign_resolved_error(x, x0):
    return min(np.linalg.norm(x - x0), np.linalg.norm(x + x0))


def jacobi_eigh(M, tol=1e-14, max_sweeps=100):
    """Cyclic Jacobi eigendecomposition of a small symmetric matrix.

    Returns (eigenvalues, eigenvectors as columns), unsorted.  Works on
    Python floats; meant for the block sizes used by ``top_eigpair``.
    """
    A = np.asarray(M, dtype=np.float64).tolist()
    p = len(A)
    V = [[1.0 if r == c else 0.0 for c in range(p)] for r in range(p)]
    scale = max(max(abs(x) for x in row) for row in A) or 1e-300
    for _ in range(max_sweeps):
        off = math.sqrt(sum(A[i][j] ** 2 for i in range(p) for j in range(i)))
        if off <= tol * scale:
            break
        for i in range(p - 1):
            for j in range(i + 1, p):
                aij = A[i][j]
                if aij == 0.0:
                    continue
                theta = (A[j][j] - A[i][i]) / (2.0 * aij)
                if theta == 0.0:
                    t = 1.0
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                for r in range(p):
                    ari, arj = A[r][i], A[r][j]
                    A[r][i], A[r][j] = c * ari - s * arj, s * ari + c * arj
                for r in range(p):
                    air, ajr = A[i][r], A[j][r]
                    A[i][r], A[j][r] = c * air - s * ajr, s * air + c * ajr
                for r in range(p):
                    vri, vrj = V[r][i], V[r][j]
                    V[r][i], V[r][j] = c * vri - s * vrj, s * vri + c * vrj
    return np.array([A[i][i] for i in range(p)]), np.array(V)


def top_eigpair(M, tol=1e-10, max_iter=50_000, block=6, seed=0):
    """Largest-magnitude eigenpair of a symmetric matrix.

    Block power iteration with a Rayleigh-Ritz step on the block.  Returns
    ``(lam, v)`` with ``||M v - lam v|| <= tol * max(1, |lam|)``, ``||v|| = 1``
    and the first nonzero entry of v positive.  When the iteration stalls it
    restarts once from a fresh random block; a second failure raises
    ``ConvergenceError`` carrying the best residual seen.
    """
    M = as_symmetric(M)
    n = M.shape[0]
    if n == 1:
        return float(M[0, 0]), np.ones(1)
    if n <= block:
        # the block spans the whole space: one Ritz step is exact
        lam, V = jacobi_eigh(M)
        j = int(np.argmax(np.abs(lam)))
        v = canonical_sign(V[:, j] / np.linalg.norm(V[:, j]))
        return float(lam[j]), v

    rng = np.random.default_rng(seed)
    best = (np.inf, 0.0, None)
    for _attempt in range(2):
        Q, _ = np.linalg.qr(rng.standard_normal((n, block)))
        stall = 0
        last_res = np.inf
        for _ in range(max_iter):
            Z = M @ Q
            lam, W = jacobi_eigh(Q.T @ Z)
            j = int(np.argmax(np.abs(lam)))
            v = Q @ W[:, j]
            v /= np.linalg.norm(v)
            lam_j = float(v @ (M @ v))
            res = np.linalg.norm(M @ v - lam_j * v)
            if res < best[0]:
                best = (res, lam_j, v)
            if res <= tol * max(1.0, abs(lam_j)):
                return lam_j, canonical_sign(v)
            stall = stall + 1 if res >= 0.999999 * last_res else 0
            last_res = min(res, last_res)
            if stall > 200:
                break
            # rotating by the Ritz basis keeps the next projected matrix
            # nearly diagonal, so Jacobi needs few sweeps
            Q, _ = np.linalg.qr(Z @ W)
    raise ConvergenceError("top_eigpair did not converge", best_residual=best[0])
