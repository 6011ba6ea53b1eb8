import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quasifree import LatticeShape, fourier_circulant, inverse_fourier, phase


def test_shape_counts():
    shape = LatticeShape((4, 6), 2)
    assert shape.d == 2
    assert shape.n_sites == 24
    assert shape.n_modes == 48


def test_shape_rejects_bad_input():
    with pytest.raises(ValueError):
        LatticeShape((4, 1))
    with pytest.raises(ValueError):
        LatticeShape((4,), 0)
    with pytest.raises(ValueError):
        LatticeShape((2, 2, 2, 2))


def test_offset_reduction_and_negation():
    shape = LatticeShape((4, 6))
    assert shape.reduce((-1, 7)) == (3, 1)
    assert shape.negate((1, 2)) == (3, 4)
    assert shape.negate((0, 0)) == (0, 0)
    assert shape.signed((3, 5)) == (-1, -1)
    assert shape.signed((2, 3)) == (2, 3)  # ties resolve positive


def test_self_conjugate_momenta():
    shape = LatticeShape((4, 5))
    selfconj = [tuple(k) for k in shape.momenta()[shape.self_conjugate_mask]]
    # k_i in {0, N_i/2 for even N_i} and nothing else
    assert selfconj == [(0, 0), (2, 0)]


def test_phase_zero_offset_is_one():
    shape = LatticeShape((8,))
    for k in range(8):
        assert phase((0,), (k,), shape) == pytest.approx(1.0)


def test_phase_quarter_rotation():
    shape = LatticeShape((4,))
    assert phase((1,), (1,), shape) == pytest.approx(1j)


def test_phase_multi_axis_direct_evaluation():
    # independent evaluation of the phase sum: 1*2/4 + 3*2/6 = 3/2
    shape = LatticeShape((4, 6))
    expected = np.exp(2j * np.pi * 1.5)
    assert phase((1, 3), (2, 2), shape) == pytest.approx(expected)
    assert expected == pytest.approx(-1.0)


def test_phase_unit_modulus():
    shape = LatticeShape((5, 7, 3))
    rng = np.random.default_rng(0)
    for _ in range(50):
        n = tuple(rng.integers(0, d) for d in shape.dims)
        k = tuple(rng.integers(0, d) for d in shape.dims)
        assert abs(abs(phase(n, k, shape)) - 1.0) < 1e-15


def test_phase_dimension_mismatch():
    shape = LatticeShape((4, 4))
    with pytest.raises(ValueError):
        phase((1,), (1, 1), shape)


@settings(max_examples=30, deadline=None)
@given(
    dims=st.tuples(st.integers(2, 7), st.integers(2, 7)),
    data=st.data(),
)
def test_phase_multiplicative_in_offset(dims, data):
    shape = LatticeShape(dims)
    n = tuple(data.draw(st.integers(0, d - 1)) for d in dims)
    m = tuple(data.draw(st.integers(0, d - 1)) for d in dims)
    k = tuple(data.draw(st.integers(0, d - 1)) for d in dims)
    lhs = phase(shape.add(n, m), k, shape)
    rhs = phase(n, k, shape) * phase(m, k, shape)
    assert abs(lhs - rhs) < 1e-12


def test_fourier_onsite_constant():
    shape = LatticeShape((6,), 2)
    mat = np.array([[1.0, 2j], [-2j, 3.0]])
    kern = fourier_circulant({(0,): mat}, shape)
    assert np.abs(kern - mat).max() < 1e-15


def test_fourier_cosine_band():
    shape = LatticeShape((4,))
    kern = fourier_circulant({(1,): np.array([[0.5]]), (-1,): np.array([[0.5]])}, shape)
    assert np.allclose(kern[:, 0, 0], [1.0, 0.0, -1.0, 0.0], atol=1e-15)


def test_inverse_constant_kernel():
    shape = LatticeShape((8,), 2)
    mat = np.array([[0.3, 1j], [-1j, -0.7]])
    offsets = inverse_fourier(np.broadcast_to(mat, (8, 2, 2)).copy(), shape)
    assert np.abs(offsets[(0,)] - mat).max() < 1e-14
    for n in range(1, 8):
        assert np.abs(offsets[(n,)]).max() < 1e-14


def test_inverse_cosine_kernel():
    shape = LatticeShape((4,))
    kern = np.array([1.0, 0.0, -1.0, 0.0]).reshape(4, 1, 1)
    offsets = inverse_fourier(kern, shape)
    assert offsets[(1,)][0, 0] == pytest.approx(0.5)
    assert offsets[(3,)][0, 0] == pytest.approx(0.5)
    assert abs(offsets[(0,)][0, 0]) < 1e-15
    assert abs(offsets[(2,)][0, 0]) < 1e-15


def _random_support(shape, reach, seed):
    rng = np.random.default_rng(seed)
    s = shape.spin
    support = {}
    for raw in np.ndindex(*([2 * reach + 1] * shape.d)):
        n = shape.reduce(tuple(c - reach for c in raw))
        support[n] = rng.normal(size=(s, s)) + 1j * rng.normal(size=(s, s))
    return support


@pytest.mark.parametrize("dims,spin", [((32,), 2), ((4, 6), 1)])
def test_round_trip(dims, spin):
    shape = LatticeShape(dims, spin)
    support = _random_support(shape, 1, seed=3)
    kern = fourier_circulant(support, shape)
    back = inverse_fourier(kern, shape)
    for n, mat in support.items():
        assert np.abs(back[n] - mat).max() < 1e-14
    for n, mat in back.items():
        if n not in support:
            assert np.abs(mat).max() < 1e-14


def test_round_trip_large_chain():
    shape = LatticeShape((1024,))
    support = _random_support(shape, 2, seed=5)
    back = inverse_fourier(fourier_circulant(support, shape), shape)
    err = max(np.abs(back[n] - mat).max() for n, mat in support.items())
    assert err < 1e-13


def test_hermitian_closed_kernel_gives_adjoint_closed_offsets():
    shape = LatticeShape((8,), 2)
    rng = np.random.default_rng(9)
    kern = rng.normal(size=(8, 2, 2)) + 1j * rng.normal(size=(8, 2, 2))
    kern = (kern + np.conj(np.transpose(kern, (0, 2, 1)))) / 2
    offsets = inverse_fourier(kern, shape)
    for n, mat in offsets.items():
        assert np.abs(offsets[shape.negate(n)] - mat.conj().T).max() < 1e-13


def test_parseval():
    shape = LatticeShape((16,), 2)
    support = _random_support(shape, 2, seed=11)
    kern = fourier_circulant(support, shape)
    lhs = np.sum(np.abs(kern) ** 2)
    rhs = shape.n_sites * sum(np.sum(np.abs(m) ** 2) for m in support.values())
    assert abs(lhs - rhs) / rhs < 1e-12


def test_support_collision_rejected():
    shape = LatticeShape((4,))
    with pytest.raises(ValueError, match="collision"):
        fourier_circulant({(1,): np.eye(1), (-3,): np.eye(1)}, shape)


def test_inverse_requires_full_grid():
    shape = LatticeShape((8,))
    with pytest.raises(ValueError, match="full momentum grid"):
        inverse_fourier(np.zeros((4, 1, 1)), shape)
