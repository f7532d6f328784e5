import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from opdelta.operators import BlockStructure, block, hermitian, hs_inner, hs_norm, spectral, tensor

from _helpers import random_symmetric

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def sym_matrices(m):
    return arrays(np.float64, (m, m), elements=finite).map(hermitian)


def test_hs_inner_identity():
    assert hs_inner(np.eye(3), np.eye(3)) == 3.0


def test_hs_inner_orthogonal_projections():
    e1, e2 = np.eye(3)[0], np.eye(3)[1]
    assert hs_inner(tensor(e1, e1), tensor(e2, e2)) == 0.0


def test_hs_inner_matches_double_loop(rng):
    u, v = random_symmetric(rng, 4), random_symmetric(rng, 4)
    expected = 0.0
    for i in range(4):
        for j in range(4):
            expected += u[i, j] * v[i, j]
    assert hs_inner(u, v) == pytest.approx(expected, rel=1e-14)
    assert hs_inner(u, v) == pytest.approx(hs_inner(v, u), rel=1e-15)


def test_hs_inner_dimension_mismatch():
    with pytest.raises(ValueError, match="dimension mismatch"):
        hs_inner(np.eye(2), np.eye(3))


def test_tensor_examples(rng):
    e1 = np.array([1.0, 0.0, 0.0])
    np.testing.assert_array_equal(tensor(e1, e1), np.diag([1.0, 0, 0]))
    np.testing.assert_array_equal(tensor([1, 2], [3, 4]), [[3, 4], [6, 8]])
    f = rng.standard_normal(5)
    np.testing.assert_allclose(tensor(f, f) @ f, (f @ f) * f, rtol=1e-13)
    with pytest.raises(ValueError):
        tensor([1, 2], [1, 2, 3])


def test_tensor_symmetric_iff_parallel():
    t = tensor([1.0, 2.0], [2.0, 4.0])
    np.testing.assert_allclose(t, t.T)
    t = tensor([1.0, 0.0], [0.0, 1.0])
    assert not np.allclose(t, t.T)


def test_block_of_identity():
    s = BlockStructure(3, 1)
    np.testing.assert_array_equal(block(np.eye(3), s, 1, 2), np.zeros((3, 3)))
    np.testing.assert_array_equal(block(np.eye(3), s, 1, 1), s.projection(1))


def test_blocks_partition(rng):
    s = BlockStructure(4, 2)
    sigma = random_symmetric(rng, 4)
    total = sum(block(sigma, s, j, k) for j in (1, 2) for k in (1, 2))
    np.testing.assert_array_equal(total, sigma)
    np.testing.assert_array_equal(block(sigma, s, 1, 2).T, block(sigma, s, 2, 1))


@pytest.mark.parametrize("split", [0, 4, -1])
def test_block_structure_rejects_bad_split(split):
    with pytest.raises(ValueError):
        BlockStructure(4, split)


def test_spectral_multiplicity():
    d = spectral(np.diag([2.0, 1.0, 1.0]), group_tol=1e-10)
    assert [(lam, m) for lam, _, m in d.groups] == [(2.0, 1), (1.0, 2)]
    np.testing.assert_allclose(d.projections[1], np.diag([0.0, 1.0, 1.0]), atol=1e-15)


def test_spectral_distinct_reconstructs_exactly():
    t = np.diag([1.0, 3.0, 2.0])
    d = spectral(t)
    assert list(d.group_values) == [3.0, 2.0, 1.0]
    np.testing.assert_allclose(sum(lam * p for lam, p, _ in d.groups), t, atol=1e-15)


def test_spectral_random_reconstruction(rng):
    t = random_symmetric(rng, 6)
    d = spectral(t)
    recon = sum(lam * p for lam, p, _ in d.groups)
    assert hs_norm(recon - t) <= 1e-12 * hs_norm(t)
    assert d.multiplicities.sum() == 6


def test_spectral_projection_algebra(rng):
    d = spectral(random_symmetric(rng, 5))
    ps = d.projections
    for a, pa in enumerate(ps):
        np.testing.assert_allclose(pa @ pa, pa, atol=1e-12)
        np.testing.assert_allclose(pa, pa.T, atol=0)
        for b, pb in enumerate(ps):
            if a != b:
                assert np.linalg.norm(pa @ pb) <= 1e-12
    np.testing.assert_allclose(sum(ps), np.eye(5), atol=1e-12)


def test_spectral_rejects_nonfinite():
    with pytest.raises(np.linalg.LinAlgError):
        spectral(np.array([[np.nan, 0], [0, 1.0]]))


@given(sym_matrices(4))
def test_hs_norm_squared_nonnegative(u):
    assert hs_inner(u, u) >= 0
    assert (hs_inner(u, u) == 0) == (not np.any(u))


@given(sym_matrices(5))
def test_operator_norm_below_hs_norm(t):
    assert np.max(np.abs(np.linalg.eigvalsh(t))) <= hs_norm(t) * (1 + 1e-12) + 1e-12


@given(sym_matrices(4), sym_matrices(4), st.integers(0, 2**32 - 1))
def test_hs_inner_basis_independent(u, v, seed):
    q, _ = np.linalg.qr(np.random.default_rng(seed).standard_normal((4, 4)))
    lhs = hs_inner(q.T @ u @ q, q.T @ v @ q)
    assert lhs == pytest.approx(hs_inner(u, v), abs=1e-9 * (1 + hs_norm(u) * hs_norm(v)))


@given(sym_matrices(4), st.integers(1, 3))
def test_block_adjoint_symmetry(t, split):
    s = BlockStructure(4, split)
    np.testing.assert_array_equal(block(t, s, 1, 2).T, block(t, s, 2, 1))
