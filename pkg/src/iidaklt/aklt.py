"""The angle-parametrized AKLT family: isometries, Kraus matrices, transfer maps, Gamma amplitudes.

Conventions
-----------
* Physical spin-1 basis is ordered (+, 0, -), so ``SZ = diag(1, 0, -1)``.
* Bond basis is (|+1/2>, |-1/2>).
* Superoperators on 2 x 2 matrices are 4 x 4 matrices acting on row-major
  vectorizations, i.e. in the matrix-unit basis (E11, E12, E21, E22).
* Kraus matrices satisfy ``V = sum_j |j> (x) X^j``, so ``[X^j]_{kl} = <j,k|V|l>``.
* Amplitude tables index configurations base 3, leftmost site most significant,
  with digits (-, 0, +) -> (0, 1, 2).
"""
import itertools
from dataclasses import dataclass

import numpy as np

from .apparatus import Apparatus, vec
from .errors import CapacityError, DomainError, NumericalFailure

EPS_DEG = 1e-6
MAX_TABLE_SITES = 12

SZ = np.diag([1.0, 0.0, -1.0]).astype(complex)
SPLUS = np.sqrt(2) * np.array([[0, 1, 0], [0, 0, 1], [0, 0, 0]], dtype=complex)
SMINUS = SPLUS.conj().T
SX = (SPLUS + SMINUS) / 2
SY = (SPLUS - SMINUS) / 2j
EYE3 = np.eye(3, dtype=complex)
EYE2 = np.eye(2, dtype=complex)
SIGMA_Z = np.diag([1.0, -1.0]).astype(complex)

# digit (-, 0, +) -> position in the physical basis (+, 0, -)
DIGIT_TO_PHYS = (2, 1, 0)


def normalize_angle(w):
    """Reduce an angle to [0, pi)."""
    w = float(w)
    if not np.isfinite(w):
        raise DomainError(f"angle must be finite, got {w}")
    return w % np.pi


def is_degenerate(w, eps=EPS_DEG):
    """True when ``w`` is within ``eps`` of 0 or pi/2 (mod pi)."""
    r = normalize_angle(w)
    return min(r, np.pi - r, abs(r - np.pi / 2)) < eps


def check_angles(angles, allow_degenerate=False, eps=EPS_DEG):
    """Return the angles as a float array, raising DomainError on degenerate values."""
    arr = np.asarray(angles, dtype=float).ravel()
    if not np.all(np.isfinite(arr)):
        raise DomainError("angles must be finite")
    if not allow_degenerate:
        bad = [float(w) for w in arr if is_degenerate(w, eps)]
        if bad:
            raise DomainError(f"degenerate angle(s) {bad} (within {eps} of 0 or pi/2); pass allow_degenerate=True")
    return arr


@dataclass(frozen=True)
class AngleWindow:
    """Angles on consecutive sites ``start, start+1, ..., start+len-1``."""

    start: int
    angles: np.ndarray

    def __init__(self, start, angles):
        arr = np.asarray(angles, dtype=float).ravel()
        if arr.size == 0:
            raise DomainError("angle window is empty")
        if not np.all(np.isfinite(arr)):
            raise DomainError("angles must be finite")
        object.__setattr__(self, "start", int(start))
        object.__setattr__(self, "angles", arr)

    @classmethod
    def centered(cls, angles):
        """Window on [-L, L+1] for ``2L+2`` angles."""
        n = len(angles)
        if n < 2 or n % 2:
            raise DomainError(f"a centered window needs an even length 2L+2, got {n}")
        return cls(-(n // 2 - 1), angles)

    def __len__(self):
        return self.angles.size

    @property
    def stop(self):
        return self.start + self.angles.size - 1

    @property
    def sites(self):
        return np.arange(self.start, self.stop + 1)

    def angle(self, j):
        if not self.start <= j <= self.stop:
            raise DomainError(f"site {j} outside window [{self.start}, {self.stop}]")
        return float(self.angles[j - self.start])

    def shifted(self, k):
        return AngleWindow(self.start + k, self.angles)


def _as_window(win):
    return win if isinstance(win, AngleWindow) else AngleWindow(0, win)


def isometry(w):
    """The 6 x 2 isometry V_w; rows |+,+h>, |+,-h>, |0,+h>, |0,-h>, |-,+h>, |-,-h> (h = 1/2)."""
    c, s = np.cos(w), np.sin(w)
    V = np.zeros((6, 2), dtype=complex)
    V[1, 0], V[2, 0] = c, -s
    V[3, 1], V[4, 1] = s, -c
    return V


def kraus(w):
    """Kraus matrices ``(X-, X0, X+)`` of the angle-``w`` AKLT isometry."""
    c, s = np.cos(w), np.sin(w)
    xm = np.array([[0, -c], [0, 0]], dtype=complex)
    x0 = np.array([[-s, 0], [0, s]], dtype=complex)
    xp = np.array([[0, 0], [c, 0]], dtype=complex)
    return xm, x0, xp


def kraus_stack(w):
    """Kraus matrices stacked in physical order (+, 0, -); shape (3, 2, 2), or (n, 3, 2, 2) for arrays."""
    w = np.asarray(w, dtype=float)
    c, s = np.cos(w), np.sin(w)
    X = np.zeros(w.shape + (3, 2, 2), dtype=complex)
    X[..., 0, 1, 0] = c
    X[..., 1, 0, 0] = -s
    X[..., 1, 1, 1] = s
    X[..., 2, 0, 1] = -c
    return X


def transfer_batch(a, ws):
    """Transfer matrices of ``b -> V_w^dag (a (x) b) V_w`` for each angle in ``ws``; shape (n, 4, 4).

    ``a`` may be one 3 x 3 matrix or a stack of shape (n, 3, 3).
    Uses the Kraus form E_a(b) = sum_{j,j'} a_{jj'} X^{j dag} b X^{j'}.
    """
    a = np.asarray(a, dtype=complex)
    if a.shape[-2:] != (3, 3):
        raise DomainError(f"site operator must be 3 x 3, got {a.shape}")
    X = kraus_stack(np.atleast_1d(ws))  # (n, 3, 2, 2)
    Xd = np.conj(np.swapaxes(X, -1, -2))
    # E(b)[p, s] = sum a_{jk} Xd_j[p, q] b[q, r] X_k[r, s]; rows (p, s), columns (q, r)
    if a.ndim == 2:
        T = np.einsum("jk,njpq,nkrs->npsqr", a, Xd, X)
    else:
        T = np.einsum("njk,njpq,nkrs->npsqr", a, Xd, X)
    n = T.shape[0]
    return T.reshape(n, 4, 4)


def transfer(a, w):
    """4 x 4 matrix of the transfer map ``b -> V_w^dag (a (x) b) V_w`` in the matrix-unit basis."""
    a = np.asarray(a, dtype=complex)
    if a.shape != (3, 3):
        raise DomainError(f"site operator must be 3 x 3, got {a.shape}")
    return transfer_batch(a, [w])[0]


def apply_map(T, b):
    """Apply a 4 x 4 superoperator to a 2 x 2 matrix."""
    return (T @ vec(b)).reshape(2, 2)


PAULI_BASIS = np.array(
    [EYE2 / np.sqrt(2), SIGMA_Z / np.sqrt(2), [[0, 1], [0, 0]], [[0, 0], [1, 0]]], dtype=complex
)


def pauli_view(T):
    """Matrix of a superoperator in the orthonormal basis (1/sqrt2, sigma_z/sqrt2, sigma_+, sigma_-)."""
    B = PAULI_BASIS.reshape(4, 4).T  # columns are vec of basis elements
    return B.conj().T @ T @ B


def choi(T):
    """Choi matrix sum_{kl} E_kl (x) T(E_kl) of a superoperator on 2 x 2 matrices."""
    C = np.zeros((4, 4), dtype=complex)
    for k in range(2):
        for l in range(2):
            E = np.zeros((2, 2), dtype=complex)
            E[k, l] = 1
            C += np.kron(E, apply_map(T, E))
    return C


REPLACEMENT = np.outer(vec(EYE2), vec(EYE2)) / 2  # b -> tr(b)/2 * 1


@dataclass(frozen=True)
class ChannelDistance:
    """Distance of a channel product to the replacement channel, by formula and by direct norm."""

    formula: float
    direct: float


def channel_distance(win, allow_degenerate=False):
    """``max(prod |cos 2z|, prod sin^2 z)`` together with the operator norm of ``Phi - T`` computed directly.

    ``Phi`` is the composition of the unital transfer maps over the window and
    ``T(b) = tr(b)/2 * 1``; the norm is the operator norm for the Hilbert-Schmidt
    inner product on 2 x 2 matrices.
    """
    z = check_angles(_as_window(win).angles, allow_degenerate)
    formula = max(np.prod(np.abs(np.cos(2 * z))), np.prod(np.sin(z) ** 2))
    Phi = np.eye(4, dtype=complex)
    for T in transfer_batch(EYE3, z):
        Phi = Phi @ T
    direct = np.linalg.norm(Phi - REPLACEMENT, 2)
    return ChannelDistance(float(formula), float(direct))


def kraus_products(win):
    """All products ``X^{i_n} ... X^{i_m}`` over the window, indexed like an AmplitudeTable; shape (3^n, 2, 2)."""
    win = _as_window(win)
    n = len(win)
    if n > MAX_TABLE_SITES:
        raise CapacityError(f"amplitude tables are limited to {MAX_TABLE_SITES} sites, got {n}")
    P = EYE2[None]
    for w in win.angles:
        X = np.stack(kraus(w))  # digit order (-, 0, +)
        # extend every word on the right; the new site multiplies from the left
        P = np.einsum("dij,pjk->pdik", X, P).reshape(-1, 2, 2)
    return P


@dataclass(frozen=True)
class AmplitudeTable:
    """Amplitudes ``tr[b X^{i_n} ... X^{i_m}]`` for all spin configurations on a window."""

    window: AngleWindow
    boundary: np.ndarray
    amplitudes: np.ndarray

    @staticmethod
    def index(config):
        """Table index of a configuration given as values in {-1, 0, +1}, leftmost site first."""
        idx = 0
        for v in config:
            if v not in (-1, 0, 1):
                raise DomainError(f"spin value {v} not in {{-1, 0, 1}}")
            idx = 3 * idx + int(v) + 1
        return idx

    def __getitem__(self, config):
        if len(config) != len(self.window):
            raise DomainError("configuration length differs from the window")
        return self.amplitudes[self.index(config)]

    def physical_vector(self):
        """The amplitudes as a vector in the tensor basis ordered (+, 0, -) per site."""
        return self.amplitudes[::-1].copy()


def gamma(win, b=EYE2):
    """Amplitude table of Gamma(b) on the window (at most 12 sites)."""
    win = _as_window(win)
    b = np.asarray(b, dtype=complex)
    if b.shape != (2, 2):
        raise DomainError(f"boundary matrix must be 2 x 2, got {b.shape}")
    P = kraus_products(win)
    amps = np.einsum("ij,pji->p", b, P)
    return AmplitudeTable(win, b, amps)


def gamma_matrix(win):
    """Matrix of ``b -> Gamma(b)`` in physical order; column 2k+l is the image of E_kl. Shape (3^n, 4)."""
    P = kraus_products(win)
    # tr(E_kl P) = P[l, k]
    G = np.transpose(P, (0, 2, 1)).reshape(-1, 4)
    return G[::-1]


def all_configs(n):
    """All configurations on n sites in table-index order."""
    return list(itertools.product((-1, 0, 1), repeat=n))


def is_admissible(sigma):
    """Even number of excitations with alternating signs."""
    nz = [v for v in sigma if v != 0]
    return len(nz) % 2 == 0 and all(nz[i] != nz[i + 1] for i in range(len(nz) - 1))


def coefficient(sigma, win):
    """Closed-form amplitude ``tr[X^{sigma_n} ... X^{sigma_m}]`` (boundary b = identity).

    For excited sites x_1 < ... < x_N with alternating signs and N even the value is
    ``(-1)^P prod_J sigma_x cos z_x prod_{J^c} sin z_y`` where

        P = [sigma_{x_N} = -] (n - x_N)
            + sum_{j<N} [sigma_{x_j} = -] (x_{j+1} - x_j - 1)
            + [sigma_{x_1} = +] (x_1 - m).

    The empty configuration gives ``(1 + (-1)^len) prod sin z``; anything else gives 0.
    """
    win = _as_window(win)
    sigma = tuple(int(v) for v in sigma)
    if len(sigma) != len(win):
        raise DomainError(f"configuration has {len(sigma)} sites, window has {len(win)}")
    if any(v not in (-1, 0, 1) for v in sigma):
        raise DomainError("spin values must lie in {-1, 0, 1}")
    z = win.angles
    J = [i for i, v in enumerate(sigma) if v != 0]
    Jc = [i for i, v in enumerate(sigma) if v == 0]
    sin_part = np.prod(np.sin(z[Jc])) if Jc else 1.0
    if not J:
        return complex((1 + (-1) ** len(sigma)) * sin_part)
    if not is_admissible(sigma):
        return 0j
    n = len(sigma) - 1
    P = (n - J[-1]) if sigma[J[-1]] == -1 else 0
    for a, b in zip(J[:-1], J[1:]):
        if sigma[a] == -1:
            P += b - a - 1
    if sigma[J[0]] == 1:
        P += J[0]
    cos_part = np.prod([sigma[x] * np.cos(z[x]) for x in J])
    return complex((-1) ** P * cos_part * sin_part)


def gamma_gram(win):
    """4 x 4 Gram matrix G^dag G of the Gamma map (matrix-unit coordinates)."""
    G = gamma_matrix(win)
    return G.conj().T @ G


def condition_number(win):
    """kappa = min over nonzero x of ||Gamma(x)||^2 / ||x||_rho^2 with ||x||_rho = ||x||_HS / 2.

    Equals four times the smallest squared singular value of the Gamma matrix,
    so kappa tends to 2 on long windows.  Checked against the lower bound
    ``2 - 8 d`` with ``d = ||Phi - T||``, which follows from
    ``| ||Gamma(x)||^2 - ||x||_HS^2 / 2 | <= 2 d ||x||_HS^2``.  The sharper-looking
    ``1 - d`` holds once ``d <= 1/7`` but not on every short window.
    """
    win = _as_window(win)
    ev = np.linalg.eigvalsh(gamma_gram(win))
    kappa = 4.0 * max(ev[0], 0.0)
    z = win.angles
    dist = max(np.prod(np.abs(np.cos(2 * z))), np.prod(np.sin(z) ** 2))
    if kappa < 2.0 - 8.0 * dist - 1e-10:
        raise NumericalFailure(f"kappa {kappa:.3e} below the lower bound {2 - 8 * dist:.3e}")
    return float(kappa)


def aklt_apparatus(angle_source):
    """Transfer apparatus (tr/2, E_{a, w_j}, identity) of the AKLT-type state.

    ``angle_source`` is an :class:`AngleWindow` (evaluation is then restricted to
    its sites) or a callable ``site -> angle`` for an unbounded chain.
    """
    if isinstance(angle_source, AngleWindow):
        angle_of = angle_source.angle
        site_range = (angle_source.start, angle_source.stop)
    elif callable(angle_source):
        angle_of = angle_source
        site_range = (None, None)
    else:
        win = AngleWindow(0, angle_source)
        angle_of = win.angle
        site_range = (win.start, win.stop)

    def site_map(a, j):
        return transfer(a, angle_of(j))

    return Apparatus(
        bond_dim=2,
        phys_dim=3,
        site_map=site_map,
        terminal=vec(EYE2) / 2,
        unit_section=EYE2,
        site_range=site_range,
    )


def szsz(angles, x, ell):
    """Closed form of <S^z_x S^z_{x+ell}> for ell >= 1; ``angles[j]`` is the angle at site j.

    Equals ``-cos^2 w_x cos^2 w_{x+ell} prod_{0<j<ell} (sin^2 w_{x+j} - cos^2 w_{x+j})``.
    """
    z = np.asarray(angles, dtype=float)
    if ell < 1:
        raise DomainError("ell must be >= 1")
    mid = z[x + 1 : x + ell]
    return float(-np.cos(z[x]) ** 2 * np.cos(z[x + ell]) ** 2 * np.prod(-np.cos(2 * mid)))


def szsz_contraction(angles, x, ell):
    """<S^z_x S^z_{x+ell}> by contraction of transfer maps (any ell >= 0)."""
    z = np.asarray(angles, dtype=float)
    app = aklt_apparatus(AngleWindow(0, z))
    if ell == 0:
        return app.expect(x, [SZ @ SZ]).real
    return app.expect(x, [SZ] + [EYE3] * (ell - 1) + [SZ]).real


def expectation_bruteforce(win, factors):
    """<a> from amplitude tables: (1/2) sum_{p,k} <Gamma(E_pk)| a |Gamma(E_pk)>.

    ``factors`` is one 3 x 3 matrix per window site.  Independent of the
    transfer-map contraction; limited to 12 sites.
    """
    win = _as_window(win)
    n = len(win)
    if len(factors) != n:
        raise DomainError("need one factor per window site")
    G = gamma_matrix(win)
    total = 0j
    for col in range(4):
        psi = G[:, col].reshape((3,) * n)
        phi = psi
        for site, f in enumerate(factors):
            phi = np.moveaxis(np.tensordot(f, phi, axes=([1], [site])), 0, site)
        total += np.vdot(psi.ravel(), phi.ravel())
    return total / 2
