"""Acceptance criteria 1-10 at their stated tolerances and runtime limits.

Each test is named ``test_criterion_NN_...``; the terminal summary prints one
PASS/FAIL line per criterion.
"""
import time

import numpy as np

from iidaklt.aklt import (
    EYE2,
    EYE3,
    SZ,
    AngleWindow,
    aklt_apparatus,
    all_configs,
    channel_distance,
    choi,
    coefficient,
    isometry,
    kraus_products,
    szsz,
    transfer,
)
from iidaklt.aklt import AmplitudeTable, expectation_bruteforce
from iidaklt.apparatus import LocalObservable, block_approximant, correlation_rank, product_apparatus, vec
from iidaklt.disorder import DistributionSpec, SeedSpec, lyapunov
from iidaklt.hamiltonian import (
    finite_gap,
    gamma_image,
    ground_dim,
    ground_dims,
    intersection_report,
    parent_term,
)
from iidaklt.tasaki import (
    FillingProcessParams,
    exact_config_sum,
    geometric_process,
    regime_report,
    tasaki_value,
    twist_unitaries,
    z2_index_sweep,
)


class Timer:
    def __init__(self, limit):
        self.limit = limit

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0
        return False

    def check(self):
        assert self.elapsed < self.limit, f"took {self.elapsed:.1f} s, limit {self.limit} s"


def nondegenerate_angles(rng, shape, margin=0.02):
    z = rng.uniform(margin, np.pi - margin, shape)
    near_half = np.abs(z - np.pi / 2) < margin
    z[near_half] += 2 * margin
    return z


def random_psd(rng, d):
    A = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return A @ A.conj().T


def test_criterion_01_kraus_and_complete_positivity():
    rng = np.random.default_rng(1)
    with Timer(5) as t:
        worst_iso = worst_choi = worst_unital = worst_tp = 0.0
        for w in rng.uniform(0, np.pi, 1000):
            V = isometry(w)
            worst_iso = max(worst_iso, np.abs(V.conj().T @ V - EYE2).max())
            worst_choi = min(worst_choi, np.linalg.eigvalsh(choi(transfer(random_psd(rng, 3), w))).min())
            T1 = transfer(EYE3, w)
            worst_unital = max(worst_unital, np.abs(T1 @ vec(EYE2) - vec(EYE2)).max())
            # trace preservation: tr E_1(b) = tr b, i.e. trace row (1,0,0,1) is left invariant
            worst_tp = max(worst_tp, np.abs(vec(EYE2).real @ T1 - vec(EYE2).real).max())
    assert worst_iso <= 1e-12
    assert worst_choi >= -1e-10
    assert worst_unital <= 1e-12
    assert worst_tp <= 1e-12
    t.check()


def test_criterion_02_channel_distance():
    rng = np.random.default_rng(2)
    with Timer(5) as t:
        worst = 0.0
        for _ in range(500):
            z = nondegenerate_angles(rng, rng.integers(1, 9))
            cd = channel_distance(z)
            worst = max(worst, abs(cd.formula - cd.direct))
    assert worst <= 1e-10
    t.check()


def test_criterion_03_coefficient_oracle():
    rng = np.random.default_rng(3)
    configs = all_configs(4)
    with Timer(5) as t:
        worst = worst_tr = 0.0
        for _ in range(20):
            z = nondegenerate_angles(rng, 4)
            direct = np.trace(kraus_products(z), axis1=1, axis2=2)
            for cfg in configs:
                c = coefficient(cfg, z)
                worst = max(worst, abs(c - direct[AmplitudeTable.index(cfg)]))
                worst_tr = max(worst_tr, abs(c - coefficient(tuple(-v for v in cfg), z)))
    assert worst <= 1e-12
    assert worst_tr <= 1e-12
    t.check()


def test_criterion_04_ground_space_geometry():
    rng = np.random.default_rng(4)
    with Timer(10) as t:
        for _ in range(200):
            w = nondegenerate_angles(rng, 3)
            assert ground_dim(w[:2]) == 4
            rep = intersection_report(*w)
            assert rep.dim == 4
            assert rep.profile == (0, 1, 2, 1, 0)
    t.check()


def test_criterion_04_degenerate_witness():
    # stated dimensions (dim G12, dim G23, dim G123) at angles (0, pi/2, w3)
    observed = ground_dims(0.0, np.pi / 2, 0.8)
    assert observed == (0, 4, 3), f"observed {observed}"


def test_criterion_05_parent_hamiltonian():
    rng = np.random.default_rng(5)
    with Timer(60) as t:
        for _ in range(20):
            w1, w2 = nondegenerate_angles(rng, 2)
            pt = parent_term(w1, w2)
            res = pt.residuals(gamma_image(w1, w2))
            assert max(res.values()) <= 1e-10
            assert np.linalg.matrix_rank(pt.h, tol=1e-8) == 5
        for n in range(2, 8):
            g = finite_gap(nondegenerate_angles(rng, n))
            assert g.e0 <= 1e-9
            assert g.kernel_dim == 4
    t.check()


def test_criterion_06_gap_trend():
    rng = np.random.default_rng(6)
    with Timer(120) as t:
        gaps = [finite_gap([d] * 6).gap for d in (0.3, 0.2, 0.1, 0.05)]
        assert all(a > b for a, b in zip(gaps, gaps[1:])), gaps
        base = rng.uniform(0.2, 0.7, 8)
        with_run = base.copy()
        with_run[2:6] = 0.02
        g_base, g_run = finite_gap(base), finite_gap(with_run)
        assert g_base.kernel_dim == g_run.kernel_dim == 4
        assert g_run.gap < g_base.gap
    t.check()


def test_criterion_07_correlation_identities():
    rng = np.random.default_rng(7)
    with Timer(30) as t:
        worst = 0.0
        for _ in range(500):
            n = int(rng.integers(2, 16))
            z = nondegenerate_angles(rng, n)
            x = int(rng.integers(0, n - 1))
            ell = int(rng.integers(1, n - x))
            app = aklt_apparatus(AngleWindow(0, z))
            v = app.expect(x, [SZ] + [EYE3] * (ell - 1) + [SZ]).real
            worst = max(worst, abs(v - szsz(z, x, ell)))
            q = rng.uniform(0.01, np.pi / 4, n)  # support inside [0, pi/4]
            vq = abs(aklt_apparatus(AngleWindow(0, q)).expect(x, [SZ] + [EYE3] * (ell - 1) + [SZ]))
            assert vq >= np.prod(np.cos(2 * q[x : x + ell + 1])) - 1e-15
        assert worst <= 1e-12
        res = lyapunov(DistributionSpec.uniform(0.05, 0.3), 10**5, 7)
        assert abs(res.birkhoff - res.reference) <= 3 * res.stderr
    t.check()


def test_criterion_08_block_approximant_bound():
    rng = np.random.default_rng(8)
    with Timer(30) as t:
        for _ in range(50):
            j, m = int(rng.integers(0, 4)), int(rng.integers(0, 4))
            z = nondegenerate_angles(rng, j + m + 1)
            base = aklt_apparatus(AngleWindow(0, z))
            factors = [rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)) for _ in range(m + 1)]
            norm = np.prod([np.linalg.norm(f, 2) for f in factors])
            obs = LocalObservable.product(j, factors)
            exact = base.evaluate(obs)
            for p in (8, 16, 32, 64):
                err = abs(exact - block_approximant(base, p).evaluate(obs))
                assert err <= 2 * norm * (j + m) / p + 1e-12, (j, m, p, err)
    t.check()


def test_criterion_09a_enumeration_vs_geometric():
    start = time.perf_counter()
    for L in (2, 3, 4, 5):
        for s2 in (0.1, 0.2, 0.3, 0.4):
            p = FillingProcessParams.from_s2(s2, L)
            est = geometric_process(p, 20000, SeedSpec(900 + 10 * L + int(10 * s2)))
            exact = exact_config_sum(p)
            assert abs(est.mean - exact) <= 3 * est.stderr, (L, s2, est.mean, exact, est.stderr)
    assert time.perf_counter() - start < 120


def test_criterion_09b_twist_brute_force():
    rng = np.random.default_rng(92)
    worst = 0.0
    for _ in range(20):
        z = rng.uniform(0.1, np.pi / 4 - 0.05, 4)
        bf = expectation_bruteforce(AngleWindow.centered(z), list(twist_unitaries(1)))
        worst = max(worst, abs(tasaki_value(z) - bf))
    assert worst <= 1e-12


def test_criterion_09c_z2_sweep():
    start = time.perf_counter()
    spec = DistributionSpec.uniform(0.1, np.pi / 4 - 0.05)
    res = z2_index_sweep(spec, [8, 16, 32, 64], 2000, 7)
    means = [res[L].abs_nu_plus_1.mean for L in (8, 16, 32, 64)]
    assert all(a > b for a, b in zip(means, means[1:])), means
    assert time.perf_counter() - start < 300


def test_criterion_09d_regime_report():
    # "decreasing" means strictly decreasing while positive; a bucket that has
    # reached exactly 0 stays at 0
    start = time.perf_counter()
    reports = []
    for L in (256, 512, 1024, 2048):
        p = FillingProcessParams.from_s2(0.2, L)
        reports.append(regime_report(p, 0.15, 0.5, 2.0, 0.4, 3000, SeedSpec(11)))
    for rep in reports:
        assert rep.buckets["large_close"].min == 0 and rep.buckets["large_close"].max == 0
    for name in ("k0", "small_close", "small_far", "middle_close", "middle_far", "large_far"):
        seq = [rep.buckets[name].mean for rep in reports]
        assert all(a > b or a == b == 0 for a, b in zip(seq, seq[1:])), (name, seq)
    assert time.perf_counter() - start < 120


def test_criterion_10_rank_probe():
    rng = np.random.default_rng(10)
    with Timer(10) as t:
        prod = product_apparatus([np.eye(3) / 3] * 6)
        assert [correlation_rank(prod, 2.5, r) for r in (1, 2, 3)] == [1, 1, 1]
        for _ in range(5):
            app = aklt_apparatus(AngleWindow(0, nondegenerate_angles(rng, 6, margin=0.1)))
            ranks = [correlation_rank(app, 2.5, r) for r in (1, 2, 3)]
            assert ranks[1] == 4
            assert ranks == sorted(ranks)
    t.check()
