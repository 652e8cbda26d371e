import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from iidaklt.errors import DomainError
from iidaklt.linalg import Tolerance, fix_phase, hermitian_lowest, nullspace, numerical_rank, orthonormalize


def test_nullspace_identity_is_empty():
    assert nullspace(np.eye(2)).shape == (2, 0)


def test_nullspace_of_row():
    N = nullspace(np.array([[1.0, 1.0]]))
    assert N.shape == (2, 1)
    assert np.abs(N[:, 0] - np.array([1, -1]) / np.sqrt(2)).max() < 1e-12


def test_nullspace_is_orthonormal_and_annihilated(rng):
    M = rng.normal(size=(5, 9)) + 1j * rng.normal(size=(5, 9))
    N = nullspace(M)
    assert N.shape == (9, 4)
    assert np.abs(N.conj().T @ N - np.eye(4)).max() < 1e-12
    assert np.abs(M @ N).max() < 1e-12


def test_phase_convention():
    v = fix_phase(np.array([0.3j, -1.0, 1.0]))
    assert abs(v[1] - 1.0) < 1e-15


def test_tolerance_validation():
    with pytest.raises(DomainError):
        Tolerance(rel=1.0)
    with pytest.raises(DomainError):
        Tolerance(abs=-1.0)


def test_orthonormalize_examples():
    out = orthonormalize([np.array([1.0, 0.0]), np.array([0.0, 2.0])])
    assert np.abs(np.array(out) - np.eye(2)).max() < 1e-15
    assert len(orthonormalize([np.array([1.0, 0.0]), np.array([1.0, 0.0])])) == 1
    assert orthonormalize([]) == []


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_orthonormalize_idempotent(k, n, seed):
    r = np.random.default_rng(seed)
    vs = list(r.normal(size=(k, n)) + 1j * r.normal(size=(k, n)))
    once = orthonormalize(vs)
    twice = orthonormalize(once)
    G = np.array(twice) @ np.array(twice).conj().T
    assert len(once) == min(k, n)
    assert np.abs(G - np.eye(len(twice))).max() < 1e-12
    assert np.abs(np.array(once) - np.array(twice)).max() < 1e-12


def test_numerical_rank():
    assert numerical_rank(np.zeros((3, 3))) == 0
    assert numerical_rank(np.eye(2)) == 2


def test_hermitian_lowest_diag():
    w, V = hermitian_lowest(np.diag([3.0, 1.0, 2.0]), 2)
    assert np.abs(w - [1.0, 2.0]).max() < 1e-14


def test_hermitian_lowest_rejects_non_hermitian():
    with pytest.raises(DomainError):
        hermitian_lowest(np.array([[0.0, 1.0], [0.0, 0.0]]), 1)


def test_dense_and_iterative_paths_agree(rng):
    import scipy.sparse

    A = scipy.sparse.random(400, 400, density=0.02, random_state=1)
    H = (A + A.T).tocsr()
    w_dense, _ = hermitian_lowest(H, 4)
    w_iter, V = hermitian_lowest(H, 4, dense_max_dim=100)
    assert np.abs(w_dense - w_iter).max() < 1e-9
    assert np.abs(H @ V - V * w_iter).max() < 1e-8
