"""Angle distributions, reproducible per-sample random streams, running statistics,
Lyapunov (Birkhoff) averages and rare-region scans.
"""
from dataclasses import dataclass

import numpy as np
import scipy.integrate

from .aklt import AngleWindow, is_degenerate, szsz_contraction
from .errors import DomainError

NORMALIZATION_TOL = 1e-8


@dataclass(frozen=True)
class DistributionSpec:
    """Law of one IID angle.

    kind ``"uniform"``: params (a, b); ``a == b`` is a point mass.
    kind ``"truncated_power"``: params (exponent, a, b); density proportional to x**exponent on [a, b].
    kind ``"table"``: params (xs, density); piecewise-linear density through the given points.
    """

    kind: str
    params: tuple
    allow_degenerate: bool = False

    def __post_init__(self):
        if self.kind == "uniform":
            a, b = map(float, self.params)
            if not a <= b:
                raise DomainError(f"uniform needs a <= b, got ({a}, {b})")
        elif self.kind == "truncated_power":
            e, a, b = map(float, self.params)
            if not (0 <= a < b):
                raise DomainError(f"truncated_power needs 0 <= a < b, got ({a}, {b})")
            if a == 0 and e <= -1:
                raise DomainError("truncated_power with a = 0 needs exponent > -1")
        elif self.kind == "table":
            xs, dens = (np.asarray(p, dtype=float) for p in self.params)
            if xs.ndim != 1 or xs.shape != dens.shape or xs.size < 2:
                raise DomainError("table needs matching 1-d x and density arrays with >= 2 points")
            if np.any(np.diff(xs) <= 0):
                raise DomainError("table x values must be strictly increasing")
            if np.any(dens < 0):
                raise DomainError("table density must be nonnegative")
            mass = scipy.integrate.trapezoid(dens, xs)
            if abs(mass - 1) > NORMALIZATION_TOL:
                raise DomainError(f"table density integrates to {mass:.12g}, not 1")
            object.__setattr__(self, "params", (tuple(xs), tuple(dens)))
        else:
            raise DomainError(f"unknown distribution kind {self.kind!r}")
        lo, hi = self.support
        if lo < 0 or hi >= np.pi:
            raise DomainError(f"support [{lo}, {hi}] must lie in [0, pi)")
        if self.is_point_mass and not self.allow_degenerate and is_degenerate(lo):
            raise DomainError(f"point mass at degenerate angle {lo}")

    @classmethod
    def uniform(cls, a, b, **kw):
        return cls("uniform", (float(a), float(b)), **kw)

    @classmethod
    def point(cls, x, **kw):
        return cls("uniform", (float(x), float(x)), **kw)

    @classmethod
    def truncated_power(cls, exponent, a, b, **kw):
        return cls("truncated_power", (float(exponent), float(a), float(b)), **kw)

    @classmethod
    def table(cls, xs, density, **kw):
        return cls("table", (tuple(xs), tuple(density)), **kw)

    @property
    def support(self):
        if self.kind == "uniform":
            return float(self.params[0]), float(self.params[1])
        if self.kind == "truncated_power":
            return float(self.params[1]), float(self.params[2])
        return float(self.params[0][0]), float(self.params[0][-1])

    @property
    def is_point_mass(self):
        lo, hi = self.support
        return lo == hi

    def ppf(self, u):
        """Inverse CDF, vectorized over ``u`` in [0, 1]."""
        u = np.asarray(u, dtype=float)
        if self.kind == "uniform":
            a, b = self.support
            return a + (b - a) * u
        if self.kind == "truncated_power":
            e, a, b = map(float, self.params)
            if abs(e + 1) < 1e-14:
                return a * (b / a) ** u
            q = e + 1
            return (a**q + u * (b**q - a**q)) ** (1 / q)
        xs, f = (np.asarray(p) for p in self.params)
        h = np.diff(xs)
        seg_mass = (f[:-1] + f[1:]) / 2 * h
        cdf = np.concatenate([[0.0], np.cumsum(seg_mass)])
        target = u * cdf[-1]
        i = np.clip(np.searchsorted(cdf, target, side="right") - 1, 0, len(h) - 1)
        r = target - cdf[i]
        f0, slope = f[i], (f[i + 1] - f[i]) / h[i]
        # solve f0 t + slope t^2 / 2 = r on the segment
        with np.errstate(divide="ignore", invalid="ignore"):
            quad = 2 * r / (f0 + np.sqrt(np.maximum(f0**2 + 2 * slope * r, 0.0)))
        t = np.where(f0 + np.abs(slope) > 0, quad, 0.0)
        return np.clip(xs[i] + t, xs[0], xs[-1])

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        lo, hi = self.support
        inside = (x >= lo) & (x <= hi)
        if self.kind == "uniform":
            return np.where(inside, 1.0 / (hi - lo), 0.0)
        if self.kind == "truncated_power":
            e, a, b = map(float, self.params)
            norm = np.log(b / a) if abs(e + 1) < 1e-14 else (b ** (e + 1) - a ** (e + 1)) / (e + 1)
            with np.errstate(divide="ignore"):
                return np.where(inside, np.abs(x) ** e / norm, 0.0)
        xs, f = (np.asarray(p) for p in self.params)
        return np.where(inside, np.interp(x, xs, f), 0.0)

    def expect(self, fn):
        """E[fn(angle)] by adaptive quadrature (exact evaluation for a point mass)."""
        lo, hi = self.support
        if self.is_point_mass:
            return float(fn(lo))
        points = list(self.params[0][1:-1]) if self.kind == "table" and len(self.params[0]) < 50 else None
        val, err = scipy.integrate.quad(lambda x: fn(x) * self.pdf(x), lo, hi, limit=500, points=points)
        if not np.isfinite(val) or err > 1e-6 * max(1.0, abs(val)):
            raise DomainError(f"quadrature did not converge (value {val}, error estimate {err})")
        return float(val)

    def sample(self, rng, n):
        if self.is_point_mass:
            return np.full(n, self.support[0])
        return self.ppf(rng.random(n))

    def moments(self):
        """(s2, c2) = (E sin^2, E cos^2)."""
        s2 = self.expect(lambda x: np.sin(x) ** 2)
        return s2, 1.0 - s2


@dataclass(frozen=True)
class SeedSpec:
    """Base seed; each (base_seed, *keys) gets an independent Philox stream."""

    base_seed: int

    def generator(self, *keys):
        ints = [int(self.base_seed) % 2**64] + [int(k) for k in keys]
        return np.random.Generator(np.random.Philox(np.random.SeedSequence(ints)))


def sample_window(spec, n, seed, idx, start=0, stream=()):
    """``n`` IID angles for sample ``idx``; identical for identical (seed, idx, stream)."""
    if n < 1:
        raise DomainError("window length must be >= 1")
    if not isinstance(seed, SeedSpec):
        seed = SeedSpec(seed)
    rng = seed.generator(*stream, idx)
    return AngleWindow(start, spec.sample(rng, n))


@dataclass
class McAccumulator:
    """Count, mean, sum of squared deviations, min and max of a scalar statistic.

    Merging follows the pairwise update of Chan, Golub and LeVeque.
    """

    count: int = 0
    mean: float = 0.0
    m2: float = 0.0
    min: float = float("inf")
    max: float = float("-inf")

    @classmethod
    def from_values(cls, values):
        v = np.asarray(values, dtype=float).ravel()
        if v.size == 0:
            return cls()
        if v.min() == v.max():  # constant samples: exact mean, zero spread
            return cls(int(v.size), float(v[0]), 0.0, float(v[0]), float(v[0]))
        mean = float(v.mean())
        return cls(int(v.size), mean, float(((v - mean) ** 2).sum()), float(v.min()), float(v.max()))

    def add(self, x):
        self.merge_in(McAccumulator(1, float(x), 0.0, float(x), float(x)))

    def merge_in(self, other):
        if other.count == 0:
            return self
        if self.count == 0:
            self.count, self.mean, self.m2, self.min, self.max = other.count, other.mean, other.m2, other.min, other.max
            return self
        n = self.count + other.count
        delta = other.mean - self.mean
        self.mean = self.mean + delta * other.count / n
        self.m2 = self.m2 + other.m2 + delta**2 * self.count * other.count / n
        self.count = n
        self.min = min(self.min, other.min)
        self.max = max(self.max, other.max)
        return self

    def merge(self, other):
        return McAccumulator(self.count, self.mean, self.m2, self.min, self.max).merge_in(other)

    @property
    def variance(self):
        return self.m2 / (self.count - 1) if self.count > 1 else 0.0

    @property
    def stderr(self):
        return float(np.sqrt(self.variance / self.count)) if self.count > 1 else 0.0


@dataclass(frozen=True)
class LyapunovResult:
    """Correlation decay rates along one trajectory versus the ergodic average.

    ``rates[l-1] = log|<S^z_0 S^z_l>| / l``; ``birkhoff`` is the sample mean of
    log|cos 2 w_j| with standard error ``stderr``; ``reference`` is its exact
    expectation by quadrature.
    """

    rates: np.ndarray
    birkhoff: float
    stderr: float
    reference: float


def log_szsz_magnitudes(angles):
    """log|<S^z_0 S^z_l>| for l = 1 .. len-1, accumulated in log space."""
    z = np.asarray(angles, dtype=float)
    logc2 = 2 * np.log(np.abs(np.cos(z)))
    logk = np.log(np.abs(np.cos(2 * z)))
    inner = np.concatenate([[0.0], np.cumsum(logk[1:-1])])  # sum over 0 < j < l
    return logc2[0] + logc2[1:] + inner


def lyapunov(spec, N, seed):
    """Decay rate of <S^z_0 S^z_l> along one trajectory of N+1 angles, the Birkhoff
    average of log|cos 2w| over N draws, and E log|cos 2w| by quadrature.
    """
    if N < 1:
        raise DomainError("N must be >= 1")
    reference = spec.expect(lambda x: np.log(np.abs(np.cos(2 * x))))
    z = sample_window(spec, N + 1, seed, 0).angles
    rates = log_szsz_magnitudes(z) / np.arange(1, N + 1)
    logk = np.log(np.abs(np.cos(2 * z[:N])))
    stderr = float(logk.std(ddof=1) / np.sqrt(N)) if N > 1 else 0.0
    return LyapunovResult(rates, float(logk.mean()), stderr, reference)


@dataclass(frozen=True)
class Run:
    """A maximal run of consecutive angles below ``delta`` and the correlation across it."""

    delta: float
    start: int
    length: int
    lower_bound: float
    correlation: float


def runs_below(angles, delta):
    """(start, length) of each maximal run of entries < delta, by position in ``angles``."""
    below = np.concatenate([[False], np.asarray(angles) < delta, [False]])
    edges = np.flatnonzero(np.diff(below.astype(int)))
    return [(int(a), int(b - a)) for a, b in zip(edges[::2], edges[1::2])]


def rare_region_scan(win, deltas):
    """For each delta, the maximal runs of angles below delta.

    Each run from site x to x+l reports prod_{j=0}^{l} cos(2 w_{x+j}) and the
    contracted magnitude |<S^z_x S^z_{x+l}>| (for l = 0 this is <(S^z_x)^2>).
    """
    win = win if isinstance(win, AngleWindow) else AngleWindow(0, win)
    z = win.angles
    out = []
    for d in deltas:
        for s, n in runs_below(z, d):
            bound = float(np.prod(np.cos(2 * z[s : s + n])))
            corr = abs(szsz_contraction(z, s, n - 1))
            out.append(Run(float(d), win.start + s, n, bound, corr))
    return out
