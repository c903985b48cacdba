"""Einstein blocks, conservation laws and the trace-adjusted stress-energy."""
import numpy as np
import pytest

from jetlag.diff_engine import JetPoint, jet_einsum, jet_linear
from jetlag.errors import (
    NaturalFormUnavailableError,
    OrderExceededError,
    VacuumConstantError,
)
from jetlag.geometry import (
    FromLagrangian,
    GeometryContext,
    QuadraticCanonical,
    frame,
    ricci_and_scalars,
    sample_points,
)
from jetlag.gravity import (
    conservation_residuals,
    einstein_blocks,
    natural_form_checks,
    natural_stress_energy,
    stress_energy_extract,
    _laws_at,
    _new_laws_at,
    _prop_identities_at,
    _raised_p_jets,
    _tilde_einstein_jets,
)
from jetlag.field_expr import ExprField
from jetlag.tensor_core import S_UP, T_DN, T_UP, V_DN, V_UP

import support
from oracles import h_einstein_oracle


def _all_blocks(eb):
    return [eb.tt, eb.ss, eb.vv, eb.st, eb.vt, eb.sv, eb.vs, eb.zero_ts, eb.zero_tv]


def test_flat_space_vacuum(ctx_flat22, pt_flat22):
    eb = einstein_blocks(ctx_flat22, pt_flat22)
    assert max(np.max(np.abs(b)) for b in _all_blocks(eb)) == 0.0
    T = stress_energy_extract(ctx_flat22, pt_flat22)
    blocks = [T.T_tt, T.T_ss, T.T_vv, T.T_st, T.T_vt, T.T_sv, T.T_vs]
    assert max(np.max(np.abs(b)) for b in blocks) == 0.0
    rep = conservation_residuals(ctx_flat22, [pt_flat22])
    assert max(s.max_abs for s in rep.laws.values()) == 0.0
    assert all(s == "pass" for s in rep.statuses.values())


# --------------------------------------------------------------------------
# curved h, flat g: the semi-Riemannian regime with an independent oracle
# --------------------------------------------------------------------------


@pytest.fixture(scope="module")
def curved_h_point():
    return JetPoint.of([0.5, -0.3], [0.4, 0.6], [[0.2, -0.4], [0.3, 0.5]])


def test_first_law_matches_h_oracle(ctx_curved_h, curved_h_point):
    fr = frame(ctx_curved_h, curved_h_point, 3)
    res1, _ = _laws_at(fr)[0]
    _, div_oracle = h_einstein_oracle(support.h22_at, curved_h_point.t)
    assert np.max(np.abs(res1 - div_oracle)) < 1e-7


def test_mixed_einstein_tensor_matches_h_oracle(ctx_curved_h, curved_h_point):
    fr = frame(ctx_curved_h, curved_h_point, 3)
    X1 = jet_einsum("am,mb->ab", fr.h_inv, fr.ricci_H_jet)
    total = float(
        fr.scalar_H_jet.value + fr.scalar_R_jet.value + fr.scalar_S_jet.value
    )
    emix_engine = X1.value - 0.5 * total * np.eye(2)
    emix_oracle, _ = h_einstein_oracle(support.h22_at, curved_h_point.t)
    assert np.max(np.abs(emix_engine - emix_oracle)) < 1e-7


def test_curved_h_laws_pass(ctx_curved_h):
    rep = conservation_residuals(ctx_curved_h, sample_points(ctx_curved_h, 5, seed=3))
    assert all(s == "pass" for s in rep.statuses.values())
    assert rep.direction_independent


def test_x_dependent_g_laws_pass(ctx_xdep22):
    rep = conservation_residuals(ctx_xdep22, sample_points(ctx_xdep22, 8, seed=11))
    assert all(s == "pass" for s in rep.statuses.values())
    assert rep.direction_independent


# --------------------------------------------------------------------------
# time-dependent g: the temporal law picks up a scalar defect
# --------------------------------------------------------------------------


def test_temporal_law_defect_structure(ctx_tdep22, pt_tdep22):
    fr = frame(ctx_tdep22, pt_tdep22, 3)
    res, _ = _laws_at(fr)[0]
    ginv = fr.g_inv.value
    dgdt = fr.ddt(fr.g_jet).value  # [i, j, b]
    ric_up = np.einsum(
        "im,jn,mn->ij", ginv, ginv, fr.ricci_Rmm_jet.value
    )
    # the residual is exactly +R^{ij} dg_ij/dt^b / 2 when g varies with t
    pred = 0.5 * np.einsum("ij,ijb->b", ric_up, dgdt)
    assert np.max(np.abs(res - pred)) < 1e-10
    assert np.max(np.abs(pred)) > 1e-3  # the defect is genuinely nonzero here


def test_temporal_law_flagged_others_pass(ctx_tdep22, pt_tdep22):
    rep = conservation_residuals(ctx_tdep22, [pt_tdep22])
    assert rep.statuses["temporal"] == "flagged"
    assert rep.statuses["spatial"] == "pass"
    assert rep.statuses["vertical"] == "pass"
    assert not rep.laws["temporal"].max_rel < rep.tol


# --------------------------------------------------------------------------
# stress-energy extraction and the vacuum constant
# --------------------------------------------------------------------------


def test_extraction_inverts_field_equation(ctx_tdep22, pt_tdep22):
    ric, sc = ricci_and_scalars(ctx_tdep22, pt_tdep22)
    gv = frame(ctx_tdep22, pt_tdep22, 2).g_jet.value
    T = stress_energy_extract(ctx_tdep22, pt_tdep22)
    assert np.max(np.abs(T.K * T.T_ss + 0.5 * sc.total * gv - ric.R_mm)) < 1e-12


def test_vacuum_constant_scales_and_gates(pt_tdep22):
    dims = (2, 2)
    base = support.tdep_g_ctx()
    doubled = GeometryContext(
        2,
        2,
        support.grid(support.H22_SRC, dims, ("t",)),
        base.g_source,
        QuadraticCanonical(),
        K=2.0,
    )
    T1 = stress_energy_extract(base, pt_tdep22)
    T2 = stress_energy_extract(doubled, pt_tdep22)
    assert np.array_equal(T2.T_ss * 2.0, T1.T_ss)
    assert np.array_equal(T2.T_vt * 2.0, T1.T_vt)
    vacuum = GeometryContext(
        2,
        2,
        support.grid(support.H22_SRC, dims, ("t",)),
        base.g_source,
        QuadraticCanonical(),
        K=0.0,
    )
    with pytest.raises(VacuumConstantError):
        stress_energy_extract(vacuum, pt_tdep22)


def test_conservation_needs_deep_budget():
    dims = (2, 2)
    h = support.grid(support.ident_src(2), dims, ("t",))
    L = ExprField(
        "xs[1][1]^2+xs[1][2]^2+xs[2][1]^2+xs[2][2]^2", dims, ("xs",)
    )
    ctx = GeometryContext(2, 2, h, FromLagrangian(L), QuadraticCanonical())
    pt = JetPoint.of([0.1, 0.2], [0.3, 0.4], [[0.5, 0.6], [0.7, 0.8]])
    with pytest.raises(OrderExceededError):
        conservation_residuals(ctx, [pt])


# --------------------------------------------------------------------------
# (3,3) direction-dependent space: layouts, identities, law variants
# --------------------------------------------------------------------------


def test_raised_contractions_match_ricci(ctx_mixed33, pt_mixed33):
    fr = frame(ctx_mixed33, pt_mixed33, 3)
    hv, hiv = fr.h_jet.value, fr.h_inv.value
    giv = fr.g_inv.value

    aux = np.einsum("me,ameb->ab", hiv, fr.cur_H_jet.value)
    assert np.max(np.abs(aux - np.einsum("am,mb->ab", hiv, fr.ricci_H_jet.value))) < 1e-12

    aux = -np.einsum("lm,ilbm->ib", giv, fr.cur_R2_jet.value)
    assert np.max(np.abs(aux - np.einsum("im,mb->ib", giv, fr.ricci_Rmt_jet.value))) < 1e-12

    aux = np.einsum("ml,imlj->ij", giv, fr.cur_R3_jet.value)
    assert np.max(np.abs(aux - np.einsum("im,mj->ij", giv, fr.ricci_Rmm_jet.value))) < 1e-12

    Pvt, Pvs, Psb = _raised_p_jets(fr)
    aux = -np.einsum("lm,au,ilbmu->iab", giv, hv, fr.cur_P1_jet.value)
    assert np.max(np.abs(aux - Pvt.value)) < 1e-12
    aux = -np.einsum("lm,au,iljmu->iaj", giv, hv, fr.cur_P2_jet.value)
    assert np.max(np.abs(aux - Pvs.value)) < 1e-12
    aux = np.einsum("lm,ilmjb->ijb", giv, fr.cur_P2_jet.value)
    assert np.max(np.abs(aux - Psb.value)) < 1e-12

    aux = np.einsum("lm,au,ilmujb->iajb", giv, hv, fr.cur_S_jet.value)
    tmp = np.einsum("im,mujb->iujb", giv, fr.ricci_S_jet.value)
    Sup = np.einsum("au,iujb->iajb", hv, tmp)
    assert np.max(np.abs(aux - Sup)) < 1e-12


def test_divergence_identities_stated_vs_derived(ctx_mixed33, pt_mixed33):
    fr = frame(ctx_mixed33, pt_mixed33, 3)
    displayed, derived = _prop_identities_at(fr)
    # the temporal identity closes as stated
    assert np.max(np.abs(displayed[0][0])) < 1e-12
    # the stated spatial and vertical forms carry a real defect on
    # direction-dependent metrics
    assert np.max(np.abs(displayed[1][0])) > 1e-6
    assert np.max(np.abs(displayed[2][0])) > 1e-6
    # while the contracted-cyclic forms close to machine precision
    for res, terms in derived:
        scale = max(np.max(np.abs(t)) for t in terms)
        assert np.max(np.abs(res)) < 1e-12 * max(1.0, scale)


def test_law_variants_agree(ctx_mixed33, pt_mixed33):
    fr = frame(ctx_mixed33, pt_mixed33, 3)
    old = _laws_at(fr)
    new, _simple = _new_laws_at(fr, 1.0)
    for k in range(3):
        scale = max(1.0, np.max(np.abs(old[k][0])))
        assert np.max(np.abs(old[k][0] - new[k][0])) < 1e-11 * scale


def test_trace_term_sign_matters(ctx_mixed33, pt_mixed33):
    # flipping the sign of the two trace terms in the temporal law moves the
    # residual by exactly twice those terms, so only one sign can close
    fr = frame(ctx_mixed33, pt_mixed33, 3)
    _, Emix_t, _, _, Evv, _ = _tilde_einstein_jets(fr)
    Ess = _tilde_einstein_jets(fr)[2]
    tM = jet_linear("ii->", jet_einsum("im,mj->ij", fr.g_inv, Ess))
    tmp = jet_einsum("ab,iajb->ij", fr.h_jet, Evv)
    tv = jet_linear("ii->", jet_einsum("im,mj->ij", fr.g_inv, tmp))
    d1 = jet_linear("aba->b", fr.cov_t(Emix_t, (T_UP, T_DN)))
    Rup = jet_einsum("im,mb->ib", fr.g_inv, fr.ricci_Rmt_jet)
    div_R = jet_linear("ibi->b", fr.cov_s(Rup, (S_UP, T_DN)))
    Pvt = _raised_p_jets(fr)[0]
    div_P1 = jet_linear("iabia->b", fr.cov_v(Pvt, (V_UP, T_DN)))
    n = 3
    term = fr.delta_t(tM) * (1.0 / (2.0 - n)) + fr.delta_t(tv) * (
        1.0 / (2.0 - n * n)
    )
    minus = (d1 - term).value + div_R.value + div_P1.value
    plus = (d1 + term).value + div_R.value + div_P1.value
    assert np.max(np.abs(plus - minus - 2 * term.value)) < 1e-12
    # the minus form is the engine's law; the trace terms are genuinely
    # nonzero here, so the plus variant is a different (wrong) equation
    engine_res, _ = _laws_at(fr)[0]
    assert np.max(np.abs(minus - engine_res)) < 1e-11
    assert np.max(np.abs(term.value)) > 1e-6


def test_block_trace_relation(ctx_mixed33, pt_mixed33):
    eb = einstein_blocks(ctx_mixed33, pt_mixed33)
    ric, sc = ricci_and_scalars(ctx_mixed33, pt_mixed33)
    hiv = frame(ctx_mixed33, pt_mixed33, 2).h_inv.value
    lhs = np.einsum("ab,ab->", hiv, eb.tt)
    assert lhs == pytest.approx(sc.H - 1.5 * sc.total, abs=1e-10)


# --------------------------------------------------------------------------
# trace-adjusted stress-energy
# --------------------------------------------------------------------------


def test_natural_form_construction(ctx_mixed33, pt_mixed33):
    nf = natural_stress_energy(ctx_mixed33, pt_mixed33)
    assert nf.trace_residual < 1e-9
    assert nf.roundtrip_residual < 1e-10
    assert nf.e1prime_residual < 1e-12


def test_natural_form_checks_direction_dependent(ctx_mixed33, pt_mixed33):
    pt2 = JetPoint.of(
        [0.1, 0.3, -0.2],
        [0.4, -0.3, 0.2],
        [[0.3, 0.1, -0.2], [0.2, -0.1, 0.3], [-0.3, 0.2, 0.1]],
    )
    nfc = natural_form_checks(ctx_mixed33, [pt_mixed33, pt2])
    assert nfc.identity_residuals["temporal"].max_rel < 1e-9
    for name in ("spatial", "vertical"):
        assert nfc.identity_residuals[name].max_rel > 1e-6
    for stats in nfc.identity_residuals_derived.values():
        assert stats.max_rel < 1e-11
    assert not nfc.simple_form["applicable"]


def test_natural_form_checks_direction_independent(ctx_xdep33):
    pts = sample_points(ctx_xdep33, 3, seed=5)
    nfc = natural_form_checks(ctx_xdep33, pts)
    for stats in nfc.identity_residuals.values():
        assert stats.max_abs < 1e-8
    assert nfc.simple_form["applicable"]
    assert max(s.max_abs for s in nfc.simple_form["residuals"].values()) < 1e-8
    for stats in nfc.new_law_residuals.values():
        assert stats.max_abs < 1e-8


def test_natural_form_gates(ctx_tdep22, pt_tdep22):
    with pytest.raises(NaturalFormUnavailableError):
        natural_stress_energy(ctx_tdep22, pt_tdep22)
    vacuum33 = support.xdep33_ctx(K=0.0)
    pts = sample_points(vacuum33, 1, seed=5)
    nf0 = natural_form_checks(vacuum33, pts)
    assert nf0.identity_residuals is not None
    assert nf0.new_law_residuals is None
    assert nf0.tilde_tt is None
