"""Typed dense tensors: contraction, raising, vertical pairs, inverses."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jetlag.errors import (
    ContractMismatchError,
    RaiseLowerMismatchError,
    SingularMetricError,
)
from jetlag.tensor_core import (
    DTensor,
    IndexSlot,
    S_DN,
    S_UP,
    T_DN,
    T_UP,
    V_DN,
    V_UP,
    bind_vertical,
    contract,
    raise_lower,
    split_vertical,
    sym_inverse,
)

P, N = 2, 3
RNG = np.random.default_rng(42)


def rand_tensor(signature, seed=None):
    rng = np.random.default_rng(seed) if seed is not None else RNG
    shape = tuple(e for s in signature for e in s.extents(P, N))
    return DTensor(signature, (P, N), rng.uniform(-1, 1, shape))


def spd_matrix(k, seed):
    rng = np.random.default_rng(seed)
    a = rng.uniform(-1, 1, (k, k))
    return a @ a.T + k * np.eye(k)


def test_scalar_contraction_matches_trace():
    t = rand_tensor((S_UP, S_DN, T_DN), seed=1)
    out = contract(t, 0, 1)
    assert out.signature == (T_DN,)
    want = np.einsum("iib->b", t.components)
    np.testing.assert_allclose(out.components, want, rtol=0, atol=0)


def test_vertical_contraction_sums_both_axes():
    t = rand_tensor((V_UP, V_DN), seed=2)
    out = contract(t, 0, 1)
    assert out.signature == ()
    # loop oracle over the paired (spatial, temporal) storage axes
    want = sum(
        t.components[i, a, i, a] for i in range(N) for a in range(P)
    )
    assert float(out.components) == pytest.approx(want, rel=1e-14)


def test_contract_rejects_mismatches():
    t = rand_tensor((S_UP, T_DN), seed=3)
    with pytest.raises(ContractMismatchError):
        contract(t, 0, 1)  # family mismatch
    t2 = rand_tensor((S_UP, S_UP), seed=4)
    with pytest.raises(ContractMismatchError):
        contract(t2, 0, 1)  # variance mismatch
    with pytest.raises(ContractMismatchError):
        contract(t, 0, 0)  # same axis


def test_sym_inverse_flips_variance():
    g = DTensor((S_DN, S_DN), (P, N), spd_matrix(N, 5))
    g_inv = sym_inverse(g)
    assert g_inv.signature == (S_UP, S_UP)
    np.testing.assert_allclose(
        g.components @ g_inv.components, np.eye(N), atol=1e-12
    )


def test_sym_inverse_rejects_bad_input():
    asym = np.array([[1.0, 2.0], [0.0, 1.0]])
    with pytest.raises(ValueError):
        sym_inverse(DTensor((T_DN, T_DN), (P, N), asym))
    singular = np.array([[1.0, 1.0], [1.0, 1.0]])
    with pytest.raises(SingularMetricError):
        sym_inverse(DTensor((T_DN, T_DN), (P, N), singular))
    with pytest.raises(ValueError):
        sym_inverse(rand_tensor((S_DN, S_DN, S_DN), seed=6))


def test_raise_lower_roundtrip():
    g = DTensor((S_DN, S_DN), (P, N), spd_matrix(N, 7))
    g_up = sym_inverse(g)
    t = rand_tensor((S_UP, T_DN), seed=8)
    lowered = raise_lower(t, 0, g)
    assert lowered.signature == (S_DN, T_DN)
    back = raise_lower(lowered, 0, g_up)
    assert back.signature == t.signature
    np.testing.assert_allclose(back.components, t.components, atol=1e-12)


def test_raise_lower_rejects_mismatches():
    g = DTensor((S_DN, S_DN), (P, N), spd_matrix(N, 9))
    t = rand_tensor((S_DN, T_DN), seed=10)
    with pytest.raises(RaiseLowerMismatchError):
        raise_lower(t, 0, g)  # lowering an already-down axis
    h = DTensor((T_DN, T_DN), (P, N), spd_matrix(P, 11))
    t_up = rand_tensor((S_UP,), seed=12)
    with pytest.raises(RaiseLowerMismatchError):
        raise_lower(t_up, 0, h)  # family mismatch
    v = rand_tensor((V_UP,), seed=13)
    with pytest.raises(RaiseLowerMismatchError):
        raise_lower(v, 0, g)  # bound pair must be split first


def test_split_bind_roundtrip():
    t = rand_tensor((V_UP, T_DN), seed=14)
    split = split_vertical(t, 0)
    assert split.signature == (S_UP, T_DN, T_DN)
    np.testing.assert_array_equal(split.components, t.components)
    back = bind_vertical(split, 0)
    assert back.signature == t.signature
    np.testing.assert_array_equal(back.components, t.components)


def test_contract_through_split_pair():
    # contracting a vertical pair equals contracting its split constituents
    t = rand_tensor((V_UP, V_DN), seed=15)
    whole = contract(t, 0, 1)
    s = split_vertical(split_vertical(t, 0), 2)
    # layout now (S_UP, T_DN, S_DN, T_UP); trace spatial then temporal
    step = contract(s, 0, 2)
    step = contract(step, 1, 0)
    assert float(step.components) == pytest.approx(
        float(whole.components), rel=1e-14
    )


def test_shape_and_finiteness_validation():
    with pytest.raises(ValueError):
        DTensor((S_DN,), (P, N), np.zeros(N + 1))
    with pytest.raises(ValueError):
        DTensor((S_DN,), (P, N), np.array([1.0, np.nan, 0.0]))
    with pytest.raises(ValueError):
        IndexSlot("diagonal", True)


def test_immutability():
    t = rand_tensor((S_DN,), seed=16)
    with pytest.raises(AttributeError):
        t.components = np.zeros(N)


@given(seed=st.integers(0, 10_000))
@settings(max_examples=60, deadline=None)
def test_raise_then_lower_is_identity(seed):
    g = DTensor((S_DN, S_DN), (P, N), spd_matrix(N, seed))
    g_up = sym_inverse(g)
    t = rand_tensor((S_DN, T_UP), seed=seed + 1)
    raised = raise_lower(t, 0, g_up)
    back = raise_lower(raised, 0, g)
    np.testing.assert_allclose(back.components, t.components, atol=1e-10)
