"""Transfer apparatus: local expectation values as compositions of per-site maps.

An :class:`Apparatus` is a triple (terminal functional, site maps, unit section).
For a pure tensor ``a_m (x) ... (x) a_n`` the expectation value is

    terminal . E_{a_m, m} . E_{a_{m+1}, m+1} ... E_{a_n, n} (unit)

where each ``E_{a, j}`` acts on D x D matrices and is stored as a D^2 x D^2
matrix on row-major vectorizations.  The composition is evaluated right to left.
"""
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError
from .linalg import DEFAULT_TOL, numerical_rank


def vec(b):
    """Row-major vectorization of a square matrix."""
    return np.asarray(b, dtype=complex).reshape(-1)


def unvec(v):
    D = int(round(np.sqrt(v.size)))
    return np.asarray(v).reshape(D, D)


@dataclass(frozen=True)
class LocalObservable:
    """A weighted sum of pure tensors on the contiguous sites ``start .. start+len-1``.

    ``terms`` is a tuple of ``(weight, factors)`` pairs where ``factors`` is a
    tuple of d x d arrays, one per site.  All terms share the same support; use
    ``+`` to combine observables on different supports (identities are padded).
    """

    start: int
    terms: tuple

    def __post_init__(self):
        if not self.terms:
            raise DomainError("observable has no terms")
        n = len(self.terms[0][1])
        if n == 0:
            raise DomainError("observable has empty support")
        for _, factors in self.terms:
            if len(factors) != n:
                raise DomainError("all terms must share one support")
            d = factors[0].shape[0]
            if any(f.shape != (d, d) for f in factors):
                raise DomainError("factors must be square and of one size")

    @classmethod
    def product(cls, start, factors, weight=1.0):
        factors = tuple(np.asarray(f, dtype=complex) for f in factors)
        return cls(int(start), ((complex(weight), factors),))

    @property
    def length(self):
        return len(self.terms[0][1])

    @property
    def stop(self):
        """Last site of the support (inclusive)."""
        return self.start + self.length - 1

    @property
    def phys_dim(self):
        return self.terms[0][1][0].shape[0]

    def padded(self, start, stop):
        """The same observable written on the larger support ``[start, stop]``."""
        if start > self.start or stop < self.stop:
            raise DomainError("padding must enlarge the support")
        eye = np.eye(self.phys_dim, dtype=complex)
        left = (eye,) * (self.start - start)
        right = (eye,) * (stop - self.stop)
        return LocalObservable(start, tuple((w, left + f + right) for w, f in self.terms))

    def __add__(self, other):
        lo, hi = min(self.start, other.start), max(self.stop, other.stop)
        a, b = self.padded(lo, hi), other.padded(lo, hi)
        return LocalObservable(lo, a.terms + b.terms)

    def __mul__(self, scalar):
        return LocalObservable(self.start, tuple((w * scalar, f) for w, f in self.terms))

    __rmul__ = __mul__

    def dense(self):
        """Dense d^n x d^n matrix (leftmost site most significant); for small supports only."""
        out = 0
        for w, factors in self.terms:
            m = np.ones((1, 1), dtype=complex)
            for f in factors:
                m = np.kron(m, f)
            out = out + w * m
        return out


@dataclass(frozen=True)
class Apparatus:
    """Terminal functional, site-dependent transfer maps and unit section.

    ``site_map(a, j)`` returns the D^2 x D^2 matrix of ``b -> E_{a, j}(b)``.
    ``terminal`` is a length-D^2 vector ``t`` with ``terminal(b) = t . vec(b)``.
    ``site_range`` (inclusive, either end may be None) restricts evaluation.
    """

    bond_dim: int
    phys_dim: int
    site_map: Callable[[np.ndarray, int], np.ndarray]
    terminal: np.ndarray
    unit_section: np.ndarray
    site_range: tuple = (None, None)

    def check_support(self, start, stop):
        lo, hi = self.site_range
        if (lo is not None and start < lo) or (hi is not None and stop > hi):
            raise DomainError(f"support [{start}, {stop}] outside site range {self.site_range}")

    def apply(self, factors, start):
        """Vector ``E_{a_start} ... E_{a_stop}(unit)`` (right-to-left contraction)."""
        v = vec(self.unit_section)
        for j in range(len(factors) - 1, -1, -1):
            v = self.site_map(factors[j], start + j) @ v
        return v

    def evaluate(self, obs):
        """Expectation value of a :class:`LocalObservable`, summed term by term."""
        if obs.phys_dim != self.phys_dim:
            raise DomainError(f"observable acts on dimension {obs.phys_dim}, expected {self.phys_dim}")
        self.check_support(obs.start, obs.stop)
        total = 0j
        for w, factors in obs.terms:
            total += w * complex(self.terminal @ self.apply(factors, obs.start))
        return total

    def expect(self, start, factors):
        """Shorthand for evaluating the pure tensor ``factors`` starting at ``start``."""
        return self.evaluate(LocalObservable.product(start, factors))


def product_apparatus(one_site_states, start=0):
    """Bond-dimension-1 apparatus of the product state with the given one-site density matrices.

    Site ``start + j`` carries ``one_site_states[j]``.
    """
    states = [np.asarray(r, dtype=complex) for r in one_site_states]
    if not states:
        raise DomainError("need at least one site state")
    d = states[0].shape[0]
    for r in states:
        if r.shape != (d, d):
            raise DomainError("density matrices must be square and of one size")
        if np.abs(r - r.conj().T).max() > 1e-10:
            raise DomainError("density matrix is not Hermitian")
        if abs(np.trace(r) - 1) > 1e-10:
            raise DomainError(f"density matrix has trace {np.trace(r).real:.12g}, expected 1")
        if np.linalg.eigvalsh((r + r.conj().T) / 2).min() < -1e-10:
            raise DomainError("density matrix is not positive semidefinite")

    def site_map(a, j):
        return np.array([[np.trace(states[j - start] @ a)]], dtype=complex)

    return Apparatus(
        bond_dim=1,
        phys_dim=d,
        site_map=site_map,
        terminal=np.ones(1, dtype=complex),
        unit_section=np.ones((1, 1), dtype=complex),
        site_range=(start, start + len(states) - 1),
    )


def blocked_apparatus(base, p, offset=0):
    """Product over consecutive p-site blocks of the restrictions of ``base``.

    Blocks are ``[offset + q p, offset + (q+1) p - 1]`` for integer q.  Between
    blocks the bond is cut by the replacement map ``b -> terminal(b) unit``, so an
    observable evaluates to the product of its block restrictions.  A block only
    partly covered by an observable contributes the marginal of the covered part
    (the uncovered sites act as identities).
    """
    if p < 1:
        raise DomainError(f"block length p must be >= 1, got {p}")
    cut = np.outer(vec(base.unit_section), base.terminal)

    def site_map(a, j):
        m = base.site_map(a, j)
        if (j + 1 - offset) % p == 0:
            return m @ cut
        return m

    return Apparatus(base.bond_dim, base.phys_dim, site_map, base.terminal, base.unit_section, base.site_range)


@dataclass(frozen=True)
class AveragedApparatus:
    """Convex combination of apparatuses; ``evaluate`` is the weighted sum of the parts."""

    parts: tuple
    weights: tuple

    def __post_init__(self):
        if len(self.parts) != len(self.weights) or not self.parts:
            raise DomainError("parts and weights must be nonempty and of equal length")
        if abs(sum(self.weights) - 1) > 1e-12 or min(self.weights) < 0:
            raise DomainError("weights must be a probability vector")

    @property
    def phys_dim(self):
        return self.parts[0].phys_dim

    @property
    def bond_dim(self):
        return sum(p.bond_dim for p in self.parts)

    def evaluate(self, obs):
        return sum(w * p.evaluate(obs) for w, p in zip(self.weights, self.parts))

    def expect(self, start, factors):
        return self.evaluate(LocalObservable.product(start, factors))

    def check_support(self, start, stop):
        for p in self.parts:
            p.check_support(start, stop)


def block_approximant(base, p, window=None):
    """Average over the p block alignments of the p-block product state built from ``base``.

    ``window`` optionally restricts the site range of the result to ``(lo, hi)``.
    The result satisfies |base(a) - approx(a)| <= 2 ||a|| (j + m) / p for an
    observable ``a`` supported on ``j + m`` sites, up to edge effects in a
    window shorter than one block.
    """
    if p < 1:
        raise DomainError(f"block length p must be >= 1, got {p}")
    rng = tuple(window) if window is not None else base.site_range
    parts = []
    for n in range(p):
        b = blocked_apparatus(base, p, n)
        parts.append(Apparatus(b.bond_dim, b.phys_dim, b.site_map, b.terminal, b.unit_section, rng))
    return AveragedApparatus(tuple(parts), (1.0 / p,) * p)


def matrix_units(d):
    """The d^2 matrix units E_{kl} in lexicographic order."""
    out = np.zeros((d * d, d, d), dtype=complex)
    for i in range(d * d):
        out[i, i // d, i % d] = 1.0
    return out


def _left_functionals(app, sites, basis):
    """Rows ``terminal . E_{c_1} ... E_{c_r}`` for all basis words c on ``sites``."""
    L = app.terminal[None, :].astype(complex)
    for j in sites:
        maps = np.stack([app.site_map(e, j) for e in basis])  # (d^2, D^2, D^2)
        L = np.einsum("cx,exy->cey", L, maps).reshape(-1, maps.shape[-1])
    return L


def _right_vectors(app, sites, basis):
    """Columns ``E_{a_1} ... E_{a_r}(unit)`` for all basis words a on ``sites``."""
    R = vec(app.unit_section)[:, None]
    nb = len(basis)
    for j in reversed(sites):
        maps = np.stack([app.site_map(e, j) for e in basis])
        # new word index = e * (old count) + old index (leftmost site most significant)
        R = np.einsum("exy,ya->xea", maps, R).reshape(maps.shape[1], -1)
    return R


def cross_matrix(app, cut, gen_radius):
    """Matrix M[c, a] = evaluate(c (x) a) with c on the r sites left of ``cut`` and a on the r sites right.

    ``cut`` is a half-integer; the left block is ``cut-1/2-r+1 .. cut-1/2``.
    Rows and columns are ordered lexicographically over per-site matrix units.
    """
    if gen_radius < 1:
        raise DomainError("gen_radius must be >= 1")
    last_left = int(np.floor(cut))
    if abs(cut - last_left - 0.5) > 1e-12:
        raise DomainError(f"cut must be a half-integer, got {cut}")
    left = list(range(last_left - gen_radius + 1, last_left + 1))
    right = list(range(last_left + 1, last_left + 1 + gen_radius))
    app.check_support(left[0], right[-1])
    basis = matrix_units(app.phys_dim)
    if isinstance(app, AveragedApparatus):
        return sum(w * cross_matrix(p, cut, gen_radius) for w, p in zip(app.weights, app.parts))
    return _left_functionals(app, left, basis) @ _right_vectors(app, right, basis)


def correlation_rank(app, cut, gen_radius, tol=DEFAULT_TOL):
    """Numerical rank of the cross-expectation matrix across ``cut`` (see :func:`cross_matrix`)."""
    return numerical_rank(cross_matrix(app, cut, gen_radius), tol)
