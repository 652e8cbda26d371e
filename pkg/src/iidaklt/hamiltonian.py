"""Two-site ground spaces, the nearest-neighbour parent Hamiltonian, and finite-chain spectra.

Two-site vectors live in C^9 with the left site as the more significant index
and the physical basis ordered (+, 0, -) on each site.
"""
from dataclasses import dataclass

import numpy as np
import scipy.sparse

from .aklt import AngleWindow, _as_window, check_angles, gamma_matrix
from .errors import CapacityError, DomainError, NumericalFailure
from .linalg import DEFAULT_TOL, hermitian_lowest, nullspace, numerical_rank, orthonormalize

MAX_CHAIN_SITES = 10
KERNEL_TOL = 1e-8

_P, _Z, _M = 0, 1, 2  # positions of +, 0, - in the physical basis


def _ket(i, j):
    v = np.zeros(9, dtype=complex)
    v[3 * i + j] = 1.0
    return v


@dataclass(frozen=True)
class GroundSpaceBasis:
    """Orthonormal basis (rows of ``vectors``) of the two-site ground space on ``site_pair``.

    ``raw`` holds the four unnormalized vectors phi_11, phi_12, phi_21, phi_22.
    """

    site_pair: tuple
    angles: tuple
    raw: np.ndarray
    vectors: np.ndarray

    @property
    def dim(self):
        return self.vectors.shape[0]

    def projector(self):
        return self.vectors.T @ self.vectors.conj()


def ground_vectors(w1, w2):
    """The four spanning vectors of the two-site ground space, as rows."""
    c1, s1, c2, s2 = np.cos(w1), np.sin(w1), np.cos(w2), np.sin(w2)
    phi11 = s1 * s2 * _ket(_Z, _Z) - c1 * c2 * _ket(_P, _M)
    phi12 = c1 * s2 * _ket(_M, _Z) - s1 * c2 * _ket(_Z, _M)
    phi21 = c1 * s2 * _ket(_P, _Z) - s1 * c2 * _ket(_Z, _P)
    phi22 = s1 * s2 * _ket(_Z, _Z) - c1 * c2 * _ket(_M, _P)
    return np.array([phi11, phi12, phi21, phi22])


def ground_basis(w1, w2, site_pair=(0, 1), allow_degenerate=False, tol=DEFAULT_TOL):
    """Orthonormalized two-site ground space for angles ``(w1, w2)``.

    At degenerate angles (allowed only with ``allow_degenerate``) dependent
    vectors are dropped, so the dimension may fall below 4.
    """
    check_angles([w1, w2], allow_degenerate)
    raw = ground_vectors(w1, w2)
    vecs = orthonormalize(list(raw), tol)
    vectors = np.array(vecs) if vecs else np.zeros((0, 9), dtype=complex)
    return GroundSpaceBasis(tuple(site_pair), (float(w1), float(w2)), raw, vectors)


def gamma_image(w1, w2, tol=DEFAULT_TOL):
    """Orthonormal basis (rows) of the range of the two-site Gamma map, from its SVD."""
    G = gamma_matrix(AngleWindow(0, [w1, w2]))
    U, s, _ = np.linalg.svd(G)
    r = int(np.sum(s > tol.cutoff(s[0]))) if s[0] > 0 else 0
    return U[:, :r].T


@dataclass(frozen=True)
class ParentTerm:
    """Projector ``h`` onto the orthogonal complement of the two-site ground space."""

    site_pair: tuple
    angles: tuple
    h: np.ndarray
    complement: np.ndarray  # orthonormal complement vectors, as rows

    def residuals(self, ground=None):
        """Projector and annihilation residuals: ||h^2 - h||, ||h - h^dag||, ||h g||."""
        h = self.h
        out = {
            "idempotence": float(np.abs(h @ h - h).max()),
            "hermiticity": float(np.abs(h - h.conj().T).max()),
        }
        if ground is not None:
            out["annihilation"] = float(np.abs(h @ ground.T).max()) if len(ground) else 0.0
        return out


def parent_term(w1, w2, site_pair=(0, 1), allow_degenerate=False, tol=DEFAULT_TOL):
    """Parent term ``h = 1 - P_G``, cross-checked against the sum over the complement basis."""
    gb = ground_basis(w1, w2, site_pair, allow_degenerate, tol)
    h = np.eye(9, dtype=complex) - gb.projector()
    if gb.dim:
        comp = nullspace(gb.vectors.conj(), tol).T
    else:
        comp = np.eye(9, dtype=complex)
    h_alt = comp.T @ comp.conj()
    diff = np.abs(h - h_alt).max()
    if diff > 1e-12:
        raise NumericalFailure(f"parent term paths disagree by {diff:.3e}")
    h = (h + h.conj().T) / 2
    return ParentTerm(tuple(site_pair), gb.angles, h, comp)


def _sector_labels(n):
    """Total S^z of every basis state of n spin-1 sites."""
    m = np.zeros(1, dtype=int)
    for _ in range(n):
        m = (m[:, None] + np.array([1, 0, -1])[None, :]).ravel()
    return m


@dataclass(frozen=True)
class IntersectionReport:
    """Dimension of G12 (x) C^3 intersected with C^3 (x) G23, total and per S^z sector."""

    dim: int
    sectors: dict

    @property
    def profile(self):
        """Sector dimensions for total S^z = -2, -1, 0, 1, 2."""
        return tuple(self.sectors.get(m, 0) for m in range(-2, 3))


def intersection_report(w1, w2, w3, allow_degenerate=False, tol=DEFAULT_TOL):
    """Null space of the stacked system (h12 (x) 1; 1 (x) h23) on three sites, by S^z sector."""
    h12 = parent_term(w1, w2, (0, 1), allow_degenerate, tol).h
    h23 = parent_term(w2, w3, (1, 2), allow_degenerate, tol).h
    eye = np.eye(3)
    A = np.vstack([np.kron(h12, eye), np.kron(eye, h23)])
    total = A.shape[1] - numerical_rank(A, tol)
    labels = _sector_labels(3)
    sectors = {}
    for m in range(-3, 4):
        idx = np.flatnonzero(labels == m)
        block = np.vstack([np.kron(h12, eye)[np.ix_(idx, idx)], np.kron(eye, h23)[np.ix_(idx, idx)]])
        sectors[m] = idx.size - numerical_rank(block, tol)
    if sum(sectors.values()) != total:
        raise NumericalFailure("sector dimensions do not add up to the intersection dimension")
    return IntersectionReport(total, sectors)


def intersection_dim(w1, w2, w3, allow_degenerate=False, tol=DEFAULT_TOL):
    """dim(G12 (x) C^3  n  C^3 (x) G23)."""
    return intersection_report(w1, w2, w3, allow_degenerate, tol).dim


def ground_dim(angles, tol=DEFAULT_TOL):
    """Dimension of the ground space on a window: the rank of the Gamma map there."""
    return numerical_rank(gamma_matrix(_as_window(angles)), tol)


def ground_dims(w1, w2, w3, tol=DEFAULT_TOL):
    """(dim G12, dim G23, dim G123) from Gamma-map ranks; meaningful at degenerate angles too."""
    return ground_dim([w1, w2], tol), ground_dim([w2, w3], tol), ground_dim([w1, w2, w3], tol)


@dataclass(frozen=True)
class ChainHamiltonian:
    """Open-boundary sum of parent terms on a window, as a sparse 3^n x 3^n matrix."""

    window: AngleWindow
    terms: tuple
    matrix: scipy.sparse.csr_matrix

    @property
    def n_sites(self):
        return len(self.window)


def embed(h, j, n):
    """Two-site operator ``h`` acting on sites j, j+1 of an n-site chain (0-based)."""
    return scipy.sparse.kron(
        scipy.sparse.kron(scipy.sparse.identity(3**j, format="csr"), scipy.sparse.csr_matrix(h)),
        scipy.sparse.identity(3 ** (n - j - 2), format="csr"),
        format="csr",
    )


def assemble(win, allow_degenerate=False):
    """Parent Hamiltonian of the window with open boundaries (2 <= n <= 10)."""
    win = _as_window(win)
    n = len(win)
    if n < 2:
        raise DomainError("a chain needs at least two sites")
    if n > MAX_CHAIN_SITES:
        raise CapacityError(f"chains are limited to {MAX_CHAIN_SITES} sites, got {n}")
    z = win.angles
    terms = tuple(
        parent_term(z[j], z[j + 1], (win.start + j, win.start + j + 1), allow_degenerate) for j in range(n - 1)
    )
    H = sum(embed(t.h, j, n) for j, t in enumerate(terms))
    if np.allclose(H.data.imag, 0.0, atol=0.0):
        H = H.real
    return ChainHamiltonian(win, terms, H.tocsr())


@dataclass(frozen=True)
class GapResult:
    e0: float
    gap: float
    kernel_dim: int


def finite_gap(win, kernel_tol=KERNEL_TOL, allow_degenerate=False):
    """Lowest eigenvalue, first eigenvalue above the kernel, and kernel dimension.

    Eigenvalues below ``kernel_tol`` count as kernel.
    """
    H = assemble(win, allow_degenerate).matrix
    dim = H.shape[0]
    k = min(dim, 8)
    while True:
        w, _ = hermitian_lowest(H, k)
        kernel = int(np.sum(w < kernel_tol))
        if kernel < k or k == dim:
            break
        k = min(dim, 2 * k)
    gap = float(w[kernel]) if kernel < len(w) else float("nan")
    return GapResult(float(w[0]), gap, kernel)
