"""Deflections, electromagnetic blocks and the field-equation residuals."""
import numpy as np
import pytest

from jetlag.diff_engine import JetPoint
from jetlag.em_field import (
    bianchi_residuals,
    deflection_identity_residuals,
    deflection_set,
    em_tensors,
    maxwell_residuals,
)
from jetlag.errors import TorsionPreconditionError
from jetlag.geometry import frame, sample_points

from test_geometry import crafted_torsional_ctx


def _lower(fr, raw):
    return np.einsum("au,im,mu...->ia...", fr.h_inv.value, fr.g_jet.value, raw)


def test_metrical_deflections_are_lowered_raw(ctx_mixed22, pt_mixed22):
    ds = deflection_set(ctx_mixed22, pt_mixed22)
    fr = frame(ctx_mixed22, pt_mixed22, 2)
    for raw, met in (
        (ds.raw_temporal, ds.met_temporal),
        (ds.raw_spatial, ds.met_spatial),
        (ds.raw_vertical, ds.met_vertical),
    ):
        assert np.max(np.abs(_lower(fr, raw) - met)) < 1e-12


def test_lowered_liouville_components(ctx_mixed22, pt_mixed22):
    ds = deflection_set(ctx_mixed22, pt_mixed22)
    fr = frame(ctx_mixed22, pt_mixed22, 2)
    want = np.einsum(
        "au,pm,mu->pa", fr.h_inv.value, fr.g_jet.value, pt_mixed22.xs
    )
    assert np.max(np.abs(ds.x_low - want)) < 1e-14


def test_em_blocks_antisymmetric(ctx_mixed22, pt_mixed22):
    em = em_tensors(ctx_mixed22, pt_mixed22)
    assert np.max(np.abs(em.F + np.einsum("jai->iaj", em.F))) < 1e-14
    assert np.max(np.abs(em.f + np.einsum("jaib->iajb", em.f))) < 1e-14


def test_deflection_identities(ctx_mixed22, pt_mixed22):
    res = deflection_identity_residuals(ctx_mixed22, pt_mixed22)
    assert max(res.values()) < 1e-10


def test_bracket_identities(ctx_mixed22, pt_mixed22):
    res = bianchi_residuals(ctx_mixed22, pt_mixed22)
    assert max(res.values()) < 1e-10


def test_maxwell_on_mixed_space(ctx_mixed22):
    pts = sample_points(ctx_mixed22, 10, seed=7, box_xs=(-0.6, 0.6))
    rep = maxwell_residuals(ctx_mixed22, pts)
    assert rep.n_points == 10
    assert set(rep.equations) == {
        "F_temporal",
        "f_temporal",
        "F_spatial_cyclic",
        "mixed_cyclic",
        "f_vertical_cyclic",
    }
    for stats in rep.equations.values():
        assert stats.max_rel < 1e-9


def test_flat_space_is_sourceless(ctx_flat22, pt_flat22):
    em = em_tensors(ctx_flat22, pt_flat22)
    assert np.max(np.abs(em.F)) == 0.0
    assert np.max(np.abs(em.f)) == 0.0
    ds = deflection_set(ctx_flat22, pt_flat22)
    assert np.max(np.abs(ds.raw_spatial)) == 0.0
    kron = np.einsum("ij,ab->iajb", np.eye(2), np.eye(2))
    assert np.max(np.abs(ds.raw_vertical - kron)) == 0.0
    rep = maxwell_residuals(ctx_flat22, [pt_flat22])
    assert max(s.max_abs for s in rep.equations.values()) == 0.0


def test_direction_independent_reduction(ctx_tdep22, pt_tdep22):
    # with fibre-independent g the vertical deflection is h^{ab} g_ij, so
    # its antisymmetrization f vanishes and F drops out as well under the
    # canonical quadratic connection
    ds = deflection_set(ctx_tdep22, pt_tdep22)
    em = em_tensors(ctx_tdep22, pt_tdep22)
    fr = frame(ctx_tdep22, pt_tdep22, 2)
    want = np.einsum("ab,ij->iajb", fr.h_inv.value, fr.g_jet.value)
    assert np.max(np.abs(ds.met_vertical - want)) < 1e-12
    assert np.max(np.abs(em.f)) < 1e-15
    assert np.max(np.abs(em.F)) < 1e-12
    assert max(deflection_identity_residuals(ctx_tdep22, pt_tdep22).values()) < 1e-10
    assert max(bianchi_residuals(ctx_tdep22, pt_tdep22).values()) < 1e-10


def test_maxwell_direction_independent(ctx_tdep22):
    pts = sample_points(ctx_tdep22, 10, seed=9)
    rep = maxwell_residuals(ctx_tdep22, pts)
    for stats in rep.equations.values():
        assert stats.max_rel < 1e-9


def test_torsional_connection_refused():
    ctx = crafted_torsional_ctx()
    pt = JetPoint.of([0.1], [0.8, -0.6], [[0.9], [0.2]])
    with pytest.raises(TorsionPreconditionError) as exc_info:
        maxwell_residuals(ctx, [pt])
    err = exc_info.value
    assert err.witness is not None
    assert err.value > 0.1
