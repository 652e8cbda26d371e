"""Twist-operator expectations, the disorder-averaged Z2 index, and the geometric filling process.

The twist operator on [-L, L+1] is the product of ``u_x = exp(-i theta_x S^z)``
with ``theta_x = 2 pi (x + L) / (2L + 1)``.  For IID angles with
``s2 = E sin^2`` and ``c2 = E cos^2``, the averaged overlap

    E <Gamma_L(1)| T_L + 1 |Gamma_L(1)>

has an exact expansion over alternating spin configurations and an equivalent
representation through IID geometric gaps ``P[lambda = n] = c2 s2^(n-1)``:

    8 s2^(2L+2) + sum_{k >= 1} E_Q[ f_k(lambda) ],
    f_k = 1[S <= 2L+1] 2 (2L+2-S) c2 s2^(2L+1-S) (cos(2 pi O_k / (2L+1)) + 1),

where S is the sum of the first 2k-1 gaps and O_k the sum of the odd-numbered
gaps among them.  The leading term comes from the excitation-free configuration,
whose amplitude is ``2 prod sin``.
"""
import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .aklt import EYE2, EYE3, AngleWindow, transfer_batch
from .apparatus import vec
from .disorder import McAccumulator, SeedSpec, sample_window
from .errors import CapacityError, DomainError, NumericalFailure

MAX_ENUMERATION_L = 6
CHUNK = 256


def twist_angles(L):
    """theta_x for x = -L .. L+1."""
    x = np.arange(-L, L + 2)
    return 2 * np.pi * (x + L) / (2 * L + 1)


def twist_unitaries(L):
    """On-site factors diag(e^{-i theta}, 1, e^{i theta}) in the (+, 0, -) basis; shape (2L+2, 3, 3)."""
    th = twist_angles(L)
    U = np.zeros((th.size, 3, 3), dtype=complex)
    U[:, 0, 0] = np.exp(-1j * th)
    U[:, 1, 1] = 1.0
    U[:, 2, 2] = np.exp(1j * th)
    return U


def _length_to_L(n):
    if n < 2 or n % 2:
        raise DomainError(f"twist windows have even length 2L+2, got {n}")
    return n // 2 - 1


def _site_maps(angles, factors):
    """Transfer matrices for a batch of windows; angles (S, n), factors (n, 3, 3) -> (S, n, 4, 4)."""
    S, n = angles.shape
    out = np.empty((S, n, 4, 4), dtype=complex)
    for x in range(n):
        out[:, x] = transfer_batch(factors[x], angles[:, x])
    return out


def tasaki_values(angles):
    """nu(T_L) for a batch of windows on [-L, L+1]; ``angles`` has shape (S, 2L+2)."""
    angles = np.atleast_2d(np.asarray(angles, dtype=float))
    L = _length_to_L(angles.shape[1])
    maps = _site_maps(angles, twist_unitaries(L))
    v = np.broadcast_to(vec(EYE2), (angles.shape[0], 4)).copy()
    for x in range(angles.shape[1] - 1, -1, -1):
        v = np.einsum("sij,sj->si", maps[:, x], v)
    nu = (v[:, 0] + v[:, 3]) / 2
    if np.any(np.abs(nu) > 1 + 1e-12):
        raise NumericalFailure("twist expectation exceeds 1 in modulus")
    return nu


def tasaki_value(win):
    """nu(T_L) on one window of length 2L+2 (sites -L .. L+1) by transfer contraction."""
    z = win.angles if isinstance(win, AngleWindow) else np.asarray(win, dtype=float)
    return complex(tasaki_values(z[None, :])[0])


def gamma_overlaps(angles):
    """<Gamma(1)|T_L|Gamma(1)> and <Gamma(1)|Gamma(1)> for a batch of windows.

    Both are traces of composed transfer matrices, since
    <Gamma(1)|a|Gamma(1)> = sum_{j1 j2} <j1| E_a(|j1><j2|) |j2>.
    """
    angles = np.atleast_2d(np.asarray(angles, dtype=float))
    S, n = angles.shape
    L = _length_to_L(n)
    tw = _site_maps(angles, twist_unitaries(L))
    one = _site_maps(angles, np.broadcast_to(EYE3, (n, 3, 3)))
    Pt = np.broadcast_to(np.eye(4, dtype=complex), (S, 4, 4)).copy()
    P1 = Pt.copy()
    for x in range(n):
        Pt = Pt @ tw[:, x]
        P1 = P1 @ one[:, x]
    return np.trace(Pt, axis1=1, axis2=2), np.trace(P1, axis1=1, axis2=2).real


def tasaki_formula(sigma, L):
    """Both sides of sum (x+L) sigma_x / (2L+1) = -sigma_{x_1} sum_m (x_{2m} - x_{2m-1}) / (2L+1)."""
    sigma = list(sigma)
    if len(sigma) != 2 * L + 2:
        raise DomainError("configuration must have 2L+2 sites")
    xs = np.arange(-L, L + 2)
    lhs = sum((x + L) * s for x, s in zip(xs, sigma)) / (2 * L + 1)
    J = [x for x, s in zip(xs, sigma) if s != 0]
    if not J:
        return lhs, 0.0
    first = sigma[int(J[0] + L)]
    rhs = -first * sum(J[2 * m + 1] - J[2 * m] for m in range(len(J) // 2)) / (2 * L + 1)
    return lhs, rhs


@dataclass(frozen=True)
class Z2Result:
    """Per-L statistics over disorder samples."""

    L: int
    abs_nu_plus_1: McAccumulator
    imag_nu: McAccumulator
    overlap_plus_1: McAccumulator  # <Gamma|T_L + 1|Gamma>


def _z2_chunk(args):
    spec, L, base_seed, lo, hi = args
    seed = SeedSpec(base_seed)
    Z = np.array([sample_window(spec, 2 * L + 2, seed, i, stream=(L,)).angles for i in range(lo, hi)])
    nu = tasaki_values(Z)
    tw, nrm = gamma_overlaps(Z)
    return np.abs(nu + 1), nu.imag, (tw + nrm).real


def _chunks(samples):
    return [(lo, min(lo + CHUNK, samples)) for lo in range(0, samples, CHUNK)]


def _run_chunks(fn, tasks, workers):
    if workers <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, tasks))


def z2_index_sweep(spec, L_list, samples, seed, workers=1):
    """Disorder statistics of |nu(T_L) + 1| for each L.

    Sample ``i`` at size ``L`` uses the stream keyed by (seed, L, i); chunks are
    fixed index ranges, so results do not depend on ``workers``.
    """
    if samples < 2:
        raise DomainError("need at least two samples")
    base = seed.base_seed if isinstance(seed, SeedSpec) else int(seed)
    out = {}
    for L in L_list:
        if L < 1:
            raise DomainError("L must be >= 1")
        tasks = [(spec, int(L), base, lo, hi) for lo, hi in _chunks(samples)]
        parts = _run_chunks(_z2_chunk, tasks, workers)
        a, im, ov = (np.concatenate(p) for p in zip(*parts))
        out[int(L)] = Z2Result(int(L), McAccumulator.from_values(a), McAccumulator.from_values(im),
                               McAccumulator.from_values(ov))
    return out


@dataclass(frozen=True)
class FillingProcessParams:
    """Moments s2 = E sin^2, c2 = E cos^2 of the angle law, the half-size L, and the largest k."""

    s2: float
    c2: float
    L: int
    k_max: int = None

    def __post_init__(self):
        if not (0 < self.s2 < 0.5):
            raise DomainError(f"s2 must lie in (0, 1/2), got {self.s2}")
        if not (0.5 < self.c2 < 1):
            raise DomainError(f"c2 must lie in (1/2, 1), got {self.c2}")
        if abs(self.s2 + self.c2 - 1) > 1e-12:
            raise DomainError("s2 + c2 must equal 1")
        if self.L < 1:
            raise DomainError("L must be >= 1")
        if self.k_max is None:
            object.__setattr__(self, "k_max", self.L + 1)
        if not (0 <= self.k_max <= self.L + 1):
            raise DomainError("k_max must lie in [0, L+1]")

    @classmethod
    def from_s2(cls, s2, L, k_max=None):
        return cls(float(s2), 1.0 - float(s2), int(L), k_max)

    @classmethod
    def from_spec(cls, spec, L, k_max=None):
        s2, c2 = spec.moments()
        return cls(s2, c2, int(L), k_max)

    @property
    def mu(self):
        """Mean gap 1/c2."""
        return 1.0 / self.c2


def averaged_overlaps(p):
    """Exact E<Gamma_L|T_L|Gamma_L> and E<Gamma_L|Gamma_L> from disorder-averaged transfer maps.

    Only s2 and c2 enter, because every averaged site map is linear in
    E[cos^2] and E[sin^2].
    """
    L = p.L
    Xp = np.array([[0, 0], [1, 0]], dtype=complex)
    X0 = np.diag([-1.0, 1.0]).astype(complex)
    Xm = np.array([[0, -1], [0, 0]], dtype=complex)
    parts = [np.kron(X.conj().T, X.T) for X in (Xp, X0, Xm)]
    w = (p.c2, p.s2, p.c2)
    Pt, P1 = np.eye(4, dtype=complex), np.eye(4, dtype=complex)
    for th in twist_angles(L):
        u = (np.exp(-1j * th), 1.0, np.exp(1j * th))
        Pt = Pt @ sum(ui * wi * M for ui, wi, M in zip(u, w, parts))
        P1 = P1 @ sum(wi * M for wi, M in zip(w, parts))
    return complex(np.trace(Pt)), float(np.trace(P1).real)


def exact_config_terms(p):
    """Per-k contributions to E<Gamma|T_L|Gamma> and E<Gamma|Gamma> by enumerating configurations.

    Returns two arrays indexed by k = 0 .. L+1 (number of +/- pairs).  Each
    alternating configuration with 2k excitations carries weight
    c2^(2k) s2^(2L+2-2k) (four times that for k = 0) and twist phase
    cos(2 pi sum_m (x_{2m} - x_{2m-1}) / (2L+1)).
    """
    L = p.L
    if L > MAX_ENUMERATION_L:
        raise CapacityError(f"configuration enumeration is limited to L <= {MAX_ENUMERATION_L}")
    n = 2 * L + 2
    twist = np.zeros(L + 2)
    norm = np.zeros(L + 2)
    twist[0] = norm[0] = 4 * p.s2**n
    for k in range(1, L + 2):
        weight = p.c2 ** (2 * k) * p.s2 ** (n - 2 * k)
        for J in itertools.combinations(range(n), 2 * k):
            span = sum(J[2 * m + 1] - J[2 * m] for m in range(k))
            # two sign patterns (first excitation + or -), equal contributions
            twist[k] += 2 * weight * np.cos(2 * np.pi * span / (2 * L + 1))
            norm[k] += 2 * weight
    return twist, norm


def exact_config_sum(p, plus_identity=True):
    """E<Gamma_L|T_L + 1|Gamma_L> (or E<Gamma_L|T_L|Gamma_L> when ``plus_identity`` is False), by enumeration."""
    twist, norm = exact_config_terms(p)
    return float(twist.sum() + (norm.sum() if plus_identity else 0.0))


def _gap_sums(lam, k_max):
    """S_k (sum of the first 2k-1 gaps) and O_k (odd-numbered gaps among them) for k = 1..k_max."""
    cs = np.cumsum(lam, axis=1)
    odd = np.cumsum(lam[:, 0::2], axis=1)
    k = np.arange(1, k_max + 1)
    return cs[:, 2 * k - 2], odd[:, k - 1]


def filling_terms(p, lam):
    """f_k(lambda) for k = 1..k_max on each row of gap samples ``lam`` (shape (S, >= 2 k_max - 1))."""
    if p.k_max == 0:
        return np.zeros((lam.shape[0], 0))
    S, O = _gap_sums(lam, p.k_max)
    n = 2 * p.L + 1
    ok = S <= n
    with np.errstate(over="ignore", under="ignore"):
        val = 2 * (n + 1 - S) * p.c2 * p.s2 ** np.where(ok, n - S, 0) * (np.cos(2 * np.pi * O / n) + 1)
    return np.where(ok, val, 0.0)


def leading_term(p):
    """Contribution of the excitation-free configuration to E<Gamma|T_L + 1|Gamma>."""
    return 8 * p.s2 ** (2 * p.L + 2)


def draw_gaps(p, seed, idx, n=None):
    """IID geometric gaps for sample ``idx``: P[lambda = m] = c2 s2^(m-1)."""
    n = 2 * p.L + 1 if n is None else n
    return seed.generator(0x6E0, p.L, idx).geometric(p.c2, n)


def _gap_block(p, seed, lo, hi):
    return np.array([draw_gaps(p, seed, i) for i in range(lo, hi)])


@dataclass(frozen=True)
class GeometricEstimate:
    """Monte Carlo estimate of E<Gamma_L|T_L + 1|Gamma_L> from the filling process."""

    total: McAccumulator
    lambda_mean: McAccumulator
    lambda_z: float  # (sample mean - 1/c2) / stderr

    @property
    def mean(self):
        return self.total.mean

    @property
    def stderr(self):
        return self.total.stderr


def geometric_process(p, samples, seed):
    """Filling-process estimator; the sample mean of the gaps is checked against 1/c2 (5 sigma)."""
    if samples < 2:
        raise DomainError("need at least two samples")
    seed = seed if isinstance(seed, SeedSpec) else SeedSpec(seed)
    totals, lam_acc = [], McAccumulator()
    for lo, hi in _chunks(samples):
        lam = _gap_block(p, seed, lo, hi)
        totals.append(leading_term(p) + filling_terms(p, lam).sum(axis=1))
        lam_acc.merge_in(McAccumulator.from_values(lam))
    totals = np.concatenate(totals)
    z = (lam_acc.mean - p.mu) / lam_acc.stderr if lam_acc.stderr > 0 else 0.0
    if abs(z) > 5:
        raise NumericalFailure(f"gap sample mean is {z:.2f} standard errors from 1/c2")
    return GeometricEstimate(McAccumulator.from_values(totals), lam_acc, float(z))


def cramer_rate(c2, y):
    """Cramer rate function of the geometric law at mean value y >= 1.

    Legendre transform of log E exp(t lambda) = log(c2 e^t / (1 - s2 e^t)); the
    optimizer is t* = log(1 - 1/y) - log(s2).
    """
    s2 = 1 - c2
    y = float(y)
    if y < 1:
        return float("inf")
    if y == 1:
        return float(-np.log(c2))
    return float(y * np.log((y - 1) / (y * s2)) - np.log(c2 * (y - 1) / s2))


REGIMES = ("k0", "small_close", "small_far", "middle_close", "middle_far", "large_close", "large_far")


@dataclass(frozen=True)
class RegimeReport:
    """Split of the filling-process estimate by k range and concentration event.

    ``buckets`` maps each regime name to an accumulator of per-sample contributions.
    ``middle_mass`` accumulates the middle-close contributions with the cosine
    factor replaced by 1, so that middle_close <= envelope * middle_mass whenever the
    envelope bounds the cosine factor.
    """

    params: FillingProcessParams
    eps: float
    delta: float
    eta: float
    exponent_p: float
    buckets: dict
    total: McAccumulator
    middle_mass: McAccumulator
    envelope: float
    envelope_exceedances: int
    k_ranges: dict


def check_regime_hypotheses(mu, eps, delta, eta, exponent_p):
    if not 0 < eps < mu / 7:
        raise DomainError(f"need 0 < eps < mu/7 = {mu / 7:.6g}, got eps = {eps}")
    if not 0 < delta < mu - eps:
        raise DomainError(f"need 0 < delta < mu - eps = {mu - eps:.6g}, got delta = {delta}")
    if not 0 < exponent_p < 2 * delta / (delta + mu):
        raise DomainError(f"need 0 < p < 2 delta/(delta + mu) = {2 * delta / (delta + mu):.6g}, got p = {exponent_p}")
    if not eta > 0.5 * (1 + 1 / (mu - eps)):
        raise DomainError(f"need eta > (1 + 1/(mu - eps))/2 = {0.5 * (1 + 1 / (mu - eps)):.6g}, got eta = {eta}")


def middle_envelope(mu, eps, eta, L):
    return float(np.cos(np.pi * ((2 * mu / (mu + eps) - eps / (mu - eps)) * L / (2 * L + 1) - eps * eta / (2 * L + 1))) + 1)


def _regime_block(p, eps, delta, eta, lam):
    """Per-sample regime contributions for one block of gap samples."""
    mu, L, K = p.mu, p.L, p.k_max
    samples = lam.shape[0]
    f = filling_terms(p, lam)  # (samples, k_max)
    k = np.arange(1, K + 1)
    S, O = _gap_sums(lam, K)
    mean_all = S / (2 * k - 1)
    even_sum = np.concatenate([np.zeros((samples, 1)), np.cumsum(lam[:, 1::2], axis=1)], axis=1)[:, k - 1]
    even_mean = np.where(k > 1, even_sum / np.maximum(k - 1, 1), mu)
    m_tilde = (np.abs(O / k - mu) < eps / 2) & (np.abs(even_mean - mu) < eps / 2)
    small = k <= L / (mu + eps)
    large = k >= L / (mu - eps) + eta
    middle = ~small & ~large
    close = {
        "small": np.abs(mean_all - mu) < delta,
        "middle": m_tilde,
        "large": np.abs(mean_all - mu) < eps,
    }
    ranges = {"small": small, "middle": middle, "large": large}
    per = {"k0": np.full(samples, leading_term(p))}
    for name in ("small", "middle", "large"):
        sel = ranges[name][None, :]
        per[f"{name}_close"] = np.where(sel & close[name], f, 0.0).sum(axis=1)
        per[f"{name}_far"] = np.where(sel & ~close[name], f, 0.0).sum(axis=1)
    totals = leading_term(p) + f.sum(axis=1)
    n = 2 * L + 1
    ok = S <= n
    with np.errstate(over="ignore", under="ignore"):
        base = np.where(ok, 2 * (n + 1 - S) * p.c2 * p.s2 ** np.where(ok, n - S, 0), 0.0)
    sel = middle[None, :] & m_tilde
    mass = np.where(sel, base, 0.0).sum(axis=1)
    cosf = np.cos(2 * np.pi * O / n) + 1
    env = middle_envelope(mu, eps, eta, L)
    exceed = int(np.sum(sel & ok & (cosf > env + 1e-12)))
    return per, totals, mass, exceed, ranges


def regime_report(p, eps, delta, eta, exponent_p, samples, seed):
    """Monte Carlo contributions of each (k range, event) regime to E<Gamma|T_L + 1|Gamma>.

    k ranges: small k <= L/(mu+eps) < middle < L/(mu-eps) + eta <= large.
    Events: small uses |S/(2k-1) - mu| < delta; middle uses the split event that both
    the odd-gap and even-gap averages are within eps/2 of mu; large uses
    |S/(2k-1) - mu| < eps.  The large-close bucket is identically zero.
    Samples use the same gap streams as :func:`geometric_process`.
    """
    check_regime_hypotheses(p.mu, eps, delta, eta, exponent_p)
    if samples < 2:
        raise DomainError("need at least two samples")
    if p.k_max < 1:
        raise DomainError("regime_report needs k_max >= 1")
    seed = seed if isinstance(seed, SeedSpec) else SeedSpec(seed)
    per_all = {r: [] for r in REGIMES}
    totals, mass, exceed = [], [], 0
    for lo, hi in _chunks(samples):
        per, tot, m, ex, ranges = _regime_block(p, eps, delta, eta, _gap_block(p, seed, lo, hi))
        for r in REGIMES:
            per_all[r].append(per[r])
        totals.append(tot)
        mass.append(m)
        exceed += ex
    per = {r: np.concatenate(v) for r, v in per_all.items()}
    totals = np.concatenate(totals)
    recon = sum(per[r] for r in REGIMES)
    if np.abs(recon - totals).max() > 1e-12 * max(1.0, np.abs(totals).max()):
        raise NumericalFailure("regime buckets do not add up to the total")
    if np.any(per["large_close"] != 0.0):
        raise NumericalFailure("large-k close bucket is nonzero")
    k = np.arange(1, p.k_max + 1)
    return RegimeReport(
        params=p, eps=eps, delta=delta, eta=eta, exponent_p=exponent_p,
        buckets={r: McAccumulator.from_values(per[r]) for r in REGIMES},
        total=McAccumulator.from_values(totals),
        middle_mass=McAccumulator.from_values(np.concatenate(mass)),
        envelope=middle_envelope(p.mu, eps, eta, p.L),
        envelope_exceedances=exceed,
        k_ranges={name: [int(x) for x in k[ranges[name]]] for name in ranges},
    )
