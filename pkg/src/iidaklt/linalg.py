"""Small dense linear-algebra toolkit: rank, null spaces, orthonormal bases, lowest eigenpairs.

Matrices are plain numpy arrays.  Rank decisions use a :class:`Tolerance`
(relative singular-value cutoff plus an absolute floor).  Every returned basis
follows one phase convention: the first entry of largest modulus in each vector
is made real and positive, so outputs are reproducible bit for bit.
"""
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from .errors import DomainError, NumericalFailure

# Crossover between dense and iterative eigensolvers (3**7).
DENSE_MAX_DIM = 2187


@dataclass(frozen=True)
class Tolerance:
    """Cutoff ``rel * sigma_max + abs`` for deciding that a singular value is zero."""

    rel: float = 1e-10
    abs: float = 1e-12

    def __post_init__(self):
        if not (0.0 <= self.rel < 1.0):
            raise DomainError(f"Tolerance.rel must lie in [0, 1), got {self.rel}")
        if not self.abs >= 0.0:
            raise DomainError(f"Tolerance.abs must be nonnegative, got {self.abs}")

    def cutoff(self, sigma_max):
        return self.rel * sigma_max + self.abs


DEFAULT_TOL = Tolerance()


def as_cmat(M, name="matrix"):
    """Return ``M`` as a 2-d complex array, rejecting NaN/Inf entries."""
    M = np.asarray(M, dtype=complex)
    if M.ndim == 1:
        M = M[None, :]
    if M.ndim != 2:
        raise DomainError(f"{name} must be 2-dimensional, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise DomainError(f"{name} has non-finite entries")
    return M


def fix_phase(v):
    """Scale ``v`` by a unit phase so its first largest-modulus entry is real positive."""
    v = np.asarray(v, dtype=complex)
    mags = np.abs(v)
    if mags.max(initial=0.0) == 0.0:
        return v
    # first index within rounding of the max, so ties resolve deterministically
    i = int(np.flatnonzero(mags >= mags.max() * (1 - 1e-12))[0])
    return v * (np.conj(v[i]) / mags[i])


def _svd(M):
    try:
        U, s, Vh = scipy.linalg.svd(M, full_matrices=True, lapack_driver="gesdd")
    except (np.linalg.LinAlgError, ValueError):
        try:
            U, s, Vh = scipy.linalg.svd(M, full_matrices=True, lapack_driver="gesvd")
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise NumericalFailure(f"SVD did not converge: {exc}") from exc
    smax = s[0] if s.size else 0.0
    k = s.size
    recon = (U[:, :k] * s) @ Vh[:k]
    if np.abs(recon - M).max(initial=0.0) > 1e-10 * max(smax, 1e-300) + 1e-300:
        raise NumericalFailure("SVD reconstruction check failed")
    return U, s, Vh


def numerical_rank(M, tol=DEFAULT_TOL):
    """Number of singular values of ``M`` above ``tol.cutoff(sigma_max)``."""
    M = as_cmat(M)
    if M.size == 0:
        return 0
    _, s, _ = _svd(M)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > tol.cutoff(s[0])))


def nullspace(M, tol=DEFAULT_TOL):
    """Orthonormal basis of the numerical null space of ``M``, as columns of a matrix.

    Returns an array of shape ``(cols, nullity)``.  The columns are the right
    singular vectors whose singular values fall below the cutoff.
    """
    M = as_cmat(M)
    if M.size == 0:
        raise DomainError("nullspace needs a nonempty matrix")
    rows, cols = M.shape
    _, s, Vh = _svd(M)
    smax = s[0] if s.size else 0.0
    rank = int(np.sum(s > tol.cutoff(smax))) if smax > 0 else 0
    N = Vh[rank:].conj().T
    assert rank + N.shape[1] == cols, "rank-nullity violated"
    N = np.column_stack([fix_phase(N[:, i]) for i in range(N.shape[1])]) if N.shape[1] else N
    return N


def orthonormalize(vs, tol=DEFAULT_TOL):
    """Modified Gram-Schmidt on the vectors in order, dropping numerically dependent ones.

    ``vs`` is a sequence of equal-length vectors (or a matrix whose rows are the
    vectors).  Returns a list of orthonormal vectors spanning the same space.
    A vector is dropped when its residual after projection is below
    ``tol.cutoff(largest input norm)``.
    """
    vs = [np.asarray(v, dtype=complex).ravel() for v in vs]
    if not vs:
        return []
    if len({v.size for v in vs}) != 1:
        raise DomainError("orthonormalize needs vectors of one dimension")
    scale = max(np.linalg.norm(v) for v in vs)
    cut = tol.cutoff(scale)
    out = []
    for v in vs:
        w = v.copy()
        for _ in range(2):  # second pass restores orthogonality lost to rounding
            for q in out:
                w = w - q * np.vdot(q, w)
        nw = np.linalg.norm(w)
        if nw > cut:
            out.append(w / nw)
    return [fix_phase(q) for q in out]


def _norm_bound(H):
    """Cheap upper bound on the spectral norm (max absolute row sum)."""
    if scipy.sparse.issparse(H):
        return float(abs(H).sum(axis=1).max()) if H.nnz else 0.0
    return float(np.abs(H).sum(axis=1).max(initial=0.0))


def hermitian_lowest(H, k, dense_max_dim=DENSE_MAX_DIM):
    """The ``k`` smallest eigenvalues (ascending) and eigenvectors (columns) of Hermitian ``H``.

    ``H`` may be a dense array or a scipy sparse matrix.  Dense LAPACK is used up
    to ``dense_max_dim``; above it, ARPACK Lanczos (``eigsh``, smallest algebraic).
    Each eigenpair is checked for ``||Hv - lambda v|| <= 1e-8 ||H||``.
    """
    n = H.shape[0]
    if H.ndim != 2 or H.shape[1] != n:
        raise DomainError(f"H must be square, got shape {H.shape}")
    if not (1 <= k <= n):
        raise DomainError(f"need 1 <= k <= dim, got k={k}, dim={n}")
    hnorm = _norm_bound(H)
    asym = H - H.conj().T
    asym_size = abs(asym).max() if scipy.sparse.issparse(asym) else np.abs(asym).max(initial=0.0)
    if asym_size > 1e-10 * max(hnorm, 1.0):
        raise DomainError(f"H is not Hermitian (max asymmetry {asym_size:.3e})")
    Hs = (H + H.conj().T) / 2
    if n <= dense_max_dim or k >= n - 1:
        Hd = Hs.toarray() if scipy.sparse.issparse(Hs) else np.asarray(Hs)
        try:
            w, V = scipy.linalg.eigh(Hd, subset_by_index=[0, k - 1])
        except np.linalg.LinAlgError as exc:
            raise NumericalFailure(f"dense eigensolver failed: {exc}") from exc
    else:
        try:
            w, V = scipy.sparse.linalg.eigsh(
                scipy.sparse.csr_matrix(Hs), k=k, which="SA", tol=1e-12, maxiter=20 * n
            )
        except scipy.sparse.linalg.ArpackError as exc:
            raise NumericalFailure(f"Lanczos eigensolver failed: {exc}") from exc
        order = np.argsort(w)
        w, V = w[order], V[:, order]
    resid = np.linalg.norm(Hs @ V - V * w, axis=0)
    if np.any(resid > 1e-8 * max(hnorm, 1e-300)):
        raise NumericalFailure(f"eigenpair residual {resid.max():.3e} too large")
    V = np.column_stack([fix_phase(V[:, i]) for i in range(V.shape[1])])
    return w, V
