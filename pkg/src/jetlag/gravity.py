"""Einstein blocks, stress-energy, conservation laws, and the natural form.

Temporal indices a, b, g (range p); spatial indices i, j, k, m (range n);
Sc is the sum H + R + S of the three curvature scalars.  Block layouts keep
every vertical index pair adjacent, spatial axis first:

    tt[a, b]          H_ab - (Sc/2) h_ab
    ss[i, j]          R_ij - (Sc/2) g_ij
    vv[i, a, j, b]    S^(a)(b)_(i)(j) - (Sc/2) h^{ab} g_ij
    st[i, a]          R_ia
    vt[i, a, b]       P^(a)_(i)b
    sv[i, j, a]       P^(a)_i(j)
    vs[i, a, j]       P^(a)_(i)j

The two cross blocks with no curvature counterpart (layouts [a, i] and
[a, i, b]) are forced to vanish, so the matching stress-energy components
must be zero for the field equations to be solvable at all.

Conservation laws contract the first (upper) index of a mixed block against
the appended derivative axis; raised blocks follow the single convention
H^a_b = h^{am} H_mb, R^i_b = g^{im} R_mb, R^i_j = g^{im} R_mj,
P^(i)_(a)b = g^{im} h_{au} P^(u)_(m)b, P^{i(b)}_(j) = g^{im} P^(b)_m(j),
P^(i)_(a)j = g^{im} h_{au} P^(u)_(m)j and
S^(i)(b)_(a)(j) = g^{im} h_{au} S^(u)(b)_(m)(j).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .diff_engine import JetPoint, jet_einsum, jet_linear
from .em_field import ResidualStats, _Agg
from .errors import NaturalFormUnavailableError, VacuumConstantError
from .geometry import FromLagrangian, GeometryContext, _require_budget, frame
from .tensor_core import S_DN, S_UP, T_DN, T_UP, V_DN, V_UP

__all__ = [
    "EinsteinBlocks",
    "StressEnergySet",
    "ConservationReport",
    "NaturalFormReport",
    "einstein_blocks",
    "stress_energy_extract",
    "conservation_residuals",
    "natural_stress_energy",
    "natural_form_checks",
]

ZERO_BLOCK_NOTE = (
    "the temporal-spatial and temporal-vertical cross blocks have no "
    "curvature counterpart; the matching stress-energy components must vanish"
)


def _gate(ctx: GeometryContext, frame_order: int, why: str):
    extra = 1 if isinstance(ctx.g_source, FromLagrangian) else 0
    _require_budget(ctx, frame_order + extra, why)


# --------------------------------------------------------------------------
# Einstein blocks and stress-energy extraction
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class EinsteinBlocks:
    """Left sides of the gravitational field equations (layouts above)."""

    tt: np.ndarray
    ss: np.ndarray
    vv: np.ndarray
    st: np.ndarray
    vt: np.ndarray
    sv: np.ndarray
    vs: np.ndarray
    zero_ts: np.ndarray
    zero_tv: np.ndarray
    note: str = ZERO_BLOCK_NOTE


@dataclass(frozen=True)
class StressEnergySet:
    """Stress-energy components extracted as Einstein block / K."""

    T_tt: np.ndarray
    T_ss: np.ndarray
    T_vv: np.ndarray
    T_st: np.ndarray
    T_vt: np.ndarray
    T_sv: np.ndarray
    T_vs: np.ndarray
    zero_ts: np.ndarray
    zero_tv: np.ndarray
    K: float


def einstein_blocks(ctx: GeometryContext, pt: JetPoint) -> EinsteinBlocks:
    """The adapted blocks of the gravitational field equations at a point."""
    _gate(ctx, 2, "the Einstein blocks")
    fr = frame(ctx, pt, 2)
    h = fr.h_jet.value
    g = fr.g_jet.value
    sc = float(fr.scalar_H_jet.value + fr.scalar_R_jet.value + fr.scalar_S_jet.value)
    return EinsteinBlocks(
        tt=fr.ricci_H_jet.value - 0.5 * sc * h,
        ss=fr.ricci_Rmm_jet.value - 0.5 * sc * g,
        vv=fr.ricci_S_jet.value
        - 0.5 * sc * np.einsum("ab,ij->iajb", fr.h_inv.value, g),
        st=fr.ricci_Rmt_jet.value.copy(),
        vt=fr.ricci_P3_jet.value.copy(),
        sv=fr.ricci_P1_jet.value.copy(),
        vs=fr.ricci_P2_jet.value.copy(),
        zero_ts=np.zeros((ctx.p, ctx.n)),
        zero_tv=np.zeros((ctx.p, ctx.n, ctx.p)),
    )


def stress_energy_extract(ctx: GeometryContext, pt: JetPoint) -> StressEnergySet:
    """Stress-energy components implied by the field equations and ctx.K."""
    if ctx.K == 0.0:
        raise VacuumConstantError(
            "stress-energy extraction needs a nonzero gravitational constant; "
            "zero describes a vacuum source"
        )
    eb = einstein_blocks(ctx, pt)
    k = ctx.K
    return StressEnergySet(
        T_tt=eb.tt / k,
        T_ss=eb.ss / k,
        T_vv=eb.vv / k,
        T_st=eb.st / k,
        T_vt=eb.vt / k,
        T_sv=eb.sv / k,
        T_vs=eb.vs / k,
        zero_ts=eb.zero_ts.copy(),
        zero_tv=eb.zero_tv.copy(),
        K=k,
    )


# --------------------------------------------------------------------------
# conservation laws
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ConservationReport:
    """Residuals LHS - RHS of the three divergence laws.

    Each law's status is "pass" below tol and "flagged" otherwise; outside
    the direction-independent regime the laws are diagnostics, not hard
    assertions, so no status is ever "fail".
    """

    laws: dict
    statuses: dict
    direction_independent: bool
    n_points: int
    tol: float

    LAW_NAMES = ("temporal", "spatial", "vertical")


def _mixed_einstein_jets(fr):
    """(X1[a,b], X2[i,j], X3[i,a,j,b]): mixed blocks under the divergences.

    X1 = H^a_b - (Sc/2) d^a_b, X2 = R^i_j - (Sc/2) d^i_j,
    X3 = S^(i)(b)_(a)(j) - (Sc/2) d^i_j d^b_a.
    """
    half = (fr.scalar_H_jet + fr.scalar_R_jet + fr.scalar_S_jet) * 0.5
    eye_p = np.eye(fr.p)
    eye_n = np.eye(fr.n)
    X1 = jet_einsum("am,mb->ab", fr.h_inv, fr.ricci_H_jet) - jet_einsum(
        ",ab->ab", half, eye_p
    )
    X2 = jet_einsum("im,mj->ij", fr.g_inv, fr.ricci_Rmm_jet) - jet_einsum(
        ",ij->ij", half, eye_n
    )
    tmp = jet_einsum("im,mujb->iujb", fr.g_inv, fr.ricci_S_jet)
    Sup = jet_einsum("au,iujb->iajb", fr.h_jet, tmp)
    X3 = Sup - jet_einsum(",iajb->iajb", half, np.einsum("ij,ab->iajb", eye_n, eye_p))
    return X1, X2, X3


def _raised_p_jets(fr):
    """Raised mixed P blocks of the law right-hand sides."""
    tmp = jet_einsum("im,mub->iub", fr.g_inv, fr.ricci_P3_jet)
    Pvt = jet_einsum("au,iub->iab", fr.h_jet, tmp)   # P^(i)_(a)b
    tmp = jet_einsum("im,muj->iuj", fr.g_inv, fr.ricci_P2_jet)
    Pvs = jet_einsum("au,iuj->iaj", fr.h_jet, tmp)   # P^(i)_(a)j
    Psb = jet_einsum("im,mjb->ijb", fr.g_inv, fr.ricci_P1_jet)  # P^{i(b)}_(j)
    return Pvt, Pvs, Psb


def _laws_at(fr):
    """[(residual, constituent terms)] for the three laws at one frame."""
    X1, X2, X3 = _mixed_einstein_jets(fr)
    Pvt, Pvs, Psb = _raised_p_jets(fr)

    lhs1 = jet_linear("aba->b", fr.cov_t(X1, (T_UP, T_DN)))
    Rup = jet_einsum("im,mb->ib", fr.g_inv, fr.ricci_Rmt_jet)
    div_R = jet_linear("ibi->b", fr.cov_s(Rup, (S_UP, T_DN)))
    div_P1 = jet_linear("iabia->b", fr.cov_v(Pvt, (V_UP, T_DN)))
    res1 = lhs1 + div_R + div_P1

    lhs2 = jet_linear("iji->j", fr.cov_s(X2, (S_UP, S_DN)))
    div_P2 = jet_linear("iajia->j", fr.cov_v(Pvs, (V_UP, S_DN)))
    res2 = lhs2 + div_P2

    lhs3 = jet_linear("iajbia->jb", fr.cov_v(X3, (V_UP, V_DN)))
    div_P3 = jet_linear("ijbi->jb", fr.cov_s(Psb, (S_UP, V_DN)))
    res3 = lhs3 + div_P3

    return [
        (res1.value, (lhs1.value, div_R.value, div_P1.value)),
        (res2.value, (lhs2.value, div_P2.value)),
        (res3.value, (lhs3.value, div_P3.value)),
    ]


def _direction_independent_at(fr) -> bool:
    dgx = fr.ddxs(fr.g_jet).value
    scale = max(1.0, float(np.max(np.abs(fr.g_jet.value))))
    return float(np.max(np.abs(dgx))) <= 1e-10 * scale


def conservation_residuals(ctx: GeometryContext, pts, tol: float = 1e-6) -> ConservationReport:
    """Componentwise residuals of the three conservation laws over pts."""
    _gate(ctx, 3, "conservation-law divergences")
    aggs = [_Agg() for _ in range(3)]
    dir_indep = True
    count = 0
    for pt in pts:
        fr = frame(ctx, pt, 3)
        for agg, (res, terms) in zip(aggs, _laws_at(fr)):
            agg.add(res, terms)
        dir_indep = dir_indep and _direction_independent_at(fr)
        count += 1
    laws = {
        name: agg.stats() for name, agg in zip(ConservationReport.LAW_NAMES, aggs)
    }
    statuses = {
        name: "pass" if stats.max_rel < tol else "flagged"
        for name, stats in laws.items()
    }
    return ConservationReport(
        laws=laws,
        statuses=statuses,
        direction_independent=dir_indep,
        n_points=count,
        tol=tol,
    )


# --------------------------------------------------------------------------
# natural form (p > 2, n > 2)
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class NaturalFormReport:
    """Trace-adjusted stress-energy and its identity residuals.

    The construction half (traces, recovered scalars, tilde blocks, the
    rewritten-equation and round-trip residuals) describes one probe point;
    the verification half aggregates over sample points and is None until
    filled by the checks pass.  With K = 0 only the pure-geometry identity
    residuals are available.
    """

    p: int
    n: int
    K: float
    traces: dict | None
    tilde_traces: dict | None
    scalars_direct: tuple
    scalars_solved: tuple | None
    scalars_from_tilde: tuple | None
    tilde_tt: np.ndarray | None
    tilde_ss: np.ndarray | None
    tilde_vv: np.ndarray | None
    e1prime_residual: float | None
    trace_residual: float | None
    roundtrip_residual: float | None
    identity_residuals: dict | None = None
    identity_residuals_derived: dict | None = None
    new_law_residuals: dict | None = None
    simple_form: dict | None = None
    n_points: int = 1

    IDENTITY_NAMES = ("temporal", "spatial", "vertical")


def _require_natural_form(ctx: GeometryContext):
    if ctx.p <= 2 or ctx.n <= 2:
        raise NaturalFormUnavailableError(
            f"the trace-adjusted form needs p > 2 and n > 2, got "
            f"p={ctx.p}, n={ctx.n}"
        )


def natural_stress_energy(ctx: GeometryContext, pt: JetPoint) -> NaturalFormReport:
    """Trace-adjusted stress-energy construction at one point."""
    _require_natural_form(ctx)
    if ctx.K == 0.0:
        raise VacuumConstantError(
            "the trace-adjusted stress-energy needs a nonzero gravitational "
            "constant"
        )
    _gate(ctx, 2, "the trace-adjusted stress-energy")
    fr = frame(ctx, pt, 2)
    T = stress_energy_extract(ctx, pt)
    p, n, K = ctx.p, ctx.n, ctx.K
    h = fr.h_jet.value
    g = fr.g_jet.value
    h_inv = fr.h_inv.value
    g_inv = fr.g_inv.value
    H = float(fr.scalar_H_jet.value)
    R = float(fr.scalar_R_jet.value)
    S = float(fr.scalar_S_jet.value)

    # the vertical trace pairs the inverse vertical metric h_ab g^ij with
    # the vv block, mirroring the S scalar
    T_T = float(np.einsum("ab,ab->", h_inv, T.T_tt))
    T_M = float(np.einsum("ij,ij->", g_inv, T.T_ss))
    T_v = float(np.einsum("ab,ij,iajb->", h, g_inv, T.T_vv))
    D = 2.0 - p - n - p * n
    tot = T_T + T_M + T_v
    scalars_solved = (
        K * (T_T + p / D * tot),
        K * (T_M + n / D * tot),
        K * (T_v + p * n / D * tot),
    )

    G_up = np.einsum("ab,ij->iajb", h_inv, g)
    tilde_tt = T.T_tt + (R + S) / (2.0 * K) * h
    tilde_ss = T.T_ss + (H + S) / (2.0 * K) * g
    tilde_vv = T.T_vv + (H + R) / (2.0 * K) * G_up

    Tt_T = float(np.einsum("ab,ab->", h_inv, tilde_tt))
    Tt_M = float(np.einsum("ij,ij->", g_inv, tilde_ss))
    Tt_v = float(np.einsum("ab,ij,iajb->", h, g_inv, tilde_vv))
    scalars_from_tilde = (
        2.0 * K * Tt_T / (2.0 - p),
        2.0 * K * Tt_M / (2.0 - n),
        2.0 * K * Tt_v / (2.0 - p * n),
    )

    e1p = max(
        float(np.max(np.abs(fr.ricci_H_jet.value - 0.5 * H * h - K * tilde_tt))),
        float(np.max(np.abs(fr.ricci_Rmm_jet.value - 0.5 * R * g - K * tilde_ss))),
        float(np.max(np.abs(fr.ricci_S_jet.value - 0.5 * S * G_up - K * tilde_vv))),
    )
    direct = (H, R, S)
    trace_res = max(
        max(abs(a - b) for a, b in zip(direct, scalars_solved)),
        max(abs(a - b) for a, b in zip(direct, scalars_from_tilde)),
    )
    # round trip through the inverse trace relations
    Hr, Rr, Sr = scalars_from_tilde
    back_tt = tilde_tt - (Rr + Sr) / (2.0 * K) * h
    back_ss = tilde_ss - (Hr + Sr) / (2.0 * K) * g
    back_vv = tilde_vv - (Hr + Rr) / (2.0 * K) * G_up
    roundtrip = max(
        float(np.max(np.abs(back_tt - T.T_tt))),
        float(np.max(np.abs(back_ss - T.T_ss))),
        float(np.max(np.abs(back_vv - T.T_vv))),
    )
    return NaturalFormReport(
        p=p,
        n=n,
        K=K,
        traces={"T_T": T_T, "T_M": T_M, "T_v": T_v},
        tilde_traces={"T_T": Tt_T, "T_M": Tt_M, "T_v": Tt_v},
        scalars_direct=direct,
        scalars_solved=scalars_solved,
        scalars_from_tilde=scalars_from_tilde,
        tilde_tt=tilde_tt,
        tilde_ss=tilde_ss,
        tilde_vv=tilde_vv,
        e1prime_residual=e1p,
        trace_residual=trace_res,
        roundtrip_residual=roundtrip,
    )


def _tilde_einstein_jets(fr):
    """Trace-adjusted Einstein jets: lowered, mixed and raised variants."""
    Ett = fr.ricci_H_jet - jet_einsum(",ab->ab", fr.scalar_H_jet * 0.5, fr.h_jet)
    Emix_t = jet_einsum("am,mb->ab", fr.h_inv, Ett)
    Ess = fr.ricci_Rmm_jet - jet_einsum(",ij->ij", fr.scalar_R_jet * 0.5, fr.g_jet)
    Emix_s = jet_einsum("im,mj->ij", fr.g_inv, Ess)
    Gup = jet_einsum("ab,ij->iajb", fr.h_inv, fr.g_jet)
    Evv = fr.ricci_S_jet - jet_einsum(",iajb->iajb", fr.scalar_S_jet * 0.5, Gup)
    tmp = jet_einsum("mq,qujb->mujb", fr.g_inv, Evv)
    Econ = jet_einsum("uv,mvjb->mujb", fr.h_jet, tmp)
    return Ett, Emix_t, Ess, Emix_s, Evv, Econ


def _prop_identities_at(fr):
    """Residuals of the trace-adjusted Einstein divergence identities.

    Returns (displayed, derived): the curvature-product forms exactly as
    stated, and the forms obtained by contracting the cyclic differential
    identities of the connection (upper index against the second spatial
    slot, then g^{-1} and h on the remaining lower pairs).  On spaces with
    direction-dependent g the stated spatial and vertical forms carry a
    nonzero defect while the contracted-cyclic forms close to machine
    precision, so both are reported.
    """
    _, Emix_t, _, Emix_s, _, Econ = _tilde_einstein_jets(fr)

    id1 = jet_linear("aba->b", fr.cov_t(Emix_t, (T_UP, T_DN)))

    lhs2 = jet_linear("iji->j", fr.cov_s(Emix_s, (S_UP, S_DN)))
    # P^{l(u)}_(m): both plain lower spatial slots of the P-curvature
    # contracted away with g^{-1}
    Pcon = jet_einsum("lm,ilmjb->ijb", fr.g_inv, fr.cur_P2_jet)
    t1 = jet_einsum("muil,lmu->i", fr.tor_R3_jet, Pcon)
    tmp = jet_einsum("mukl,lpimu->kpi", fr.tor_R3_jet, fr.cur_P2_jet)
    t2 = jet_einsum("kp,kpi->i", fr.g_inv, tmp) * 0.5
    id2 = lhs2 - t1 + t2

    lhs3 = jet_linear("mujbmu->jb", fr.cov_v(Econ, (V_UP, V_DN)))
    tA = jet_einsum("lm,ilmujb->iujb", fr.g_inv, fr.cur_S_jet)
    Scon = jet_einsum("au,iujb->iajb", fr.h_jet, tA)   # S^(i)(b)_(a)(j)
    t3 = jet_einsum("muialc,lcmu->ia", fr.tor_S_jet, Scon)
    w1 = jet_einsum("cd,mukdlc->mukl", fr.h_jet, fr.tor_S_jet)
    w2 = jet_einsum("kp,mukl->mupl", fr.g_inv, w1)
    t4 = jet_einsum("mupl,lpiamu->ia", w2, fr.cur_S_jet) * 0.5
    id3 = lhs3 - t3 + t4

    displayed = [
        (id1.value, (id1.value,)),
        (id2.value, (lhs2.value, t1.value, t2.value)),
        (id3.value, (lhs3.value, t3.value, t4.value)),
    ]

    # spatial, contracted-cyclic: lhs2 = -1/2 g^{kp} (sum of the three
    # R-curvature x P-curvature couplings, one with the upper/second-slot
    # trace of P)
    tracedP = jet_linear("jpjmu->pmu", fr.cur_P2_jet)
    B3 = jet_einsum("muki,pmu->pik", fr.tor_R3_jet, tracedP)
    C3 = jet_einsum("kp,pik->i", fr.g_inv, B3)
    der2 = lhs2 + t1 * 0.5 - t2 + C3 * 0.5

    # vertical, same contraction pattern on the S-sector
    W1 = jet_einsum("kp,jpkgmu->jgmu", fr.g_inv, fr.cur_S_jet)
    W2 = jet_einsum("bg,jgmu->jbmu", fr.h_jet, W1)
    R1 = jet_einsum("muiajb,jbmu->ia", fr.tor_S_jet, W2)
    V1 = jet_einsum("bg,mujbkg->mujk", fr.h_jet, fr.tor_S_jet)
    V2 = jet_einsum("kp,mujk->mujp", fr.g_inv, V1)
    R2 = jet_einsum("mujp,jpiamu->ia", V2, fr.cur_S_jet)
    tracedS = jet_linear("jpjbmu->pbmu", fr.cur_S_jet)
    Y1 = jet_einsum("kp,pbmu->kbmu", fr.g_inv, tracedS)
    Y2 = jet_einsum("bg,kbmu->kgmu", fr.h_jet, Y1)
    R3 = jet_einsum("mukgia,kgmu->ia", fr.tor_S_jet, Y2)
    der3 = lhs3 + (R1 + R2 + R3) * 0.5

    derived = [
        (id1.value, (id1.value,)),
        (der2.value, (lhs2.value, C3.value)),
        (der3.value, (lhs3.value, R1.value, R2.value, R3.value)),
    ]
    return displayed, derived


def _new_laws_at(fr, K: float):
    """Residuals of the rewritten conservation laws at one frame.

    The scalar-trace terms enter with minus signs: the defining trace
    relations give T~_M = (2-n) R / (2K) and T~_v = (2-pn) S / (2K), so
    substituting T = T~ - (corrections) into the divergence laws produces
    K (div T~ - trace terms) on the left; a plus variant is inconsistent
    with those relations.
    """
    p, n = fr.p, fr.n
    Ett, Emix_t, Ess, Emix_s, Evv, Econ = _tilde_einstein_jets(fr)

    Tmix_t = Emix_t * (1.0 / K)
    Tmix_s = Emix_s * (1.0 / K)
    Tcon_v = Econ * (1.0 / K)
    tT = jet_linear("aa->", jet_einsum("am,mb->ab", fr.h_inv, Ett)) * (1.0 / K)
    tM = jet_linear("ii->", jet_einsum("im,mj->ij", fr.g_inv, Ess)) * (1.0 / K)
    tmp = jet_einsum("ab,iajb->ij", fr.h_jet, Evv)
    tv = jet_linear("ii->", jet_einsum("im,mj->ij", fr.g_inv, tmp)) * (1.0 / K)

    Pvt, Pvs, Psb = _raised_p_jets(fr)
    Rup = jet_einsum("im,mb->ib", fr.g_inv, fr.ricci_Rmt_jet)
    div_R = jet_linear("ibi->b", fr.cov_s(Rup, (S_UP, T_DN)))
    div_P1 = jet_linear("iabia->b", fr.cov_v(Pvt, (V_UP, T_DN)))
    div_P2 = jet_linear("iajia->j", fr.cov_v(Pvs, (V_UP, S_DN)))
    div_P3 = jet_linear("ijbi->jb", fr.cov_s(Psb, (S_UP, V_DN)))

    d1 = jet_linear("aba->b", fr.cov_t(Tmix_t, (T_UP, T_DN)))
    l1 = d1 - fr.delta_t(tM) * (1.0 / (2.0 - n)) - fr.delta_t(tv) * (1.0 / (2.0 - p * n))
    res1 = l1 * K + div_R + div_P1

    d2 = jet_linear("iji->j", fr.cov_s(Tmix_s, (S_UP, S_DN)))
    l2 = d2 - fr.delta_x(tT) * (1.0 / (2.0 - p)) - fr.delta_x(tv) * (1.0 / (2.0 - p * n))
    res2 = l2 * K + div_P2

    d3 = jet_linear("mujbmu->jb", fr.cov_v(Tcon_v, (V_UP, V_DN)))
    l3 = d3 - fr.ddxs(tT) * (1.0 / (2.0 - p)) - fr.ddxs(tM) * (1.0 / (2.0 - n))
    res3 = l3 * K + div_P3

    laws = [
        (res1.value, (d1.value * K, div_R.value, div_P1.value)),
        (res2.value, (d2.value * K, div_P2.value)),
        (res3.value, (d3.value * K, div_P3.value)),
    ]
    simple = [
        (d1.value, (d1.value,)),
        (d2.value, (d2.value,)),
        (d3.value, (d3.value,)),
    ]
    return laws, simple


def natural_form_checks(ctx: GeometryContext, pts) -> NaturalFormReport:
    """Identity and rewritten-law residuals over sample points."""
    _require_natural_form(ctx)
    _gate(ctx, 3, "the trace-adjusted identity checks")
    pts = list(pts)
    if not pts:
        raise ValueError("natural_form_checks needs at least one sample point")
    have_K = ctx.K != 0.0
    base = natural_stress_energy(ctx, pts[0]) if have_K else None

    iaggs = [_Agg() for _ in range(3)]
    daggs = [_Agg() for _ in range(3)]
    laggs = [_Agg() for _ in range(3)]
    saggs = [_Agg() for _ in range(3)]
    max_P = 0.0
    max_S = 0.0
    for pt in pts:
        fr = frame(ctx, pt, 3)
        displayed, derived = _prop_identities_at(fr)
        for agg, (res, terms) in zip(iaggs, displayed):
            agg.add(res, terms)
        for agg, (res, terms) in zip(daggs, derived):
            agg.add(res, terms)
        if have_K:
            laws, simple = _new_laws_at(fr, ctx.K)
            for agg, (res, terms) in zip(laggs, laws):
                agg.add(res, terms)
            for agg, (res, terms) in zip(saggs, simple):
                agg.add(res, terms)
        max_P = max(max_P, float(np.max(np.abs(fr.cur_P2_jet.value))))
        max_S = max(max_S, float(np.max(np.abs(fr.cur_S_jet.value))))

    names = NaturalFormReport.IDENTITY_NAMES
    identity = {nm: agg.stats() for nm, agg in zip(names, iaggs)}
    identity_derived = {nm: agg.stats() for nm, agg in zip(names, daggs)}
    new_laws = (
        {nm: agg.stats() for nm, agg in zip(names, laggs)} if have_K else None
    )
    applicable = max_P < 1e-10 and max_S < 1e-10
    simple_form = {
        "applicable": applicable,
        "max_P_curvature": max_P,
        "max_S_curvature": max_S,
        "residuals": (
            {nm: agg.stats() for nm, agg in zip(names, saggs)}
            if (applicable and have_K)
            else None
        ),
    }
    return NaturalFormReport(
        p=ctx.p,
        n=ctx.n,
        K=ctx.K,
        traces=base.traces if base else None,
        tilde_traces=base.tilde_traces if base else None,
        scalars_direct=base.scalars_direct if base else None,
        scalars_solved=base.scalars_solved if base else None,
        scalars_from_tilde=base.scalars_from_tilde if base else None,
        tilde_tt=base.tilde_tt if base else None,
        tilde_ss=base.tilde_ss if base else None,
        tilde_vv=base.tilde_vv if base else None,
        e1prime_residual=base.e1prime_residual if base else None,
        trace_residual=base.trace_residual if base else None,
        roundtrip_residual=base.roundtrip_residual if base else None,
        identity_residuals=identity,
        identity_residuals_derived=identity_derived,
        new_law_residuals=new_laws,
        simple_form=simple_form,
        n_points=len(pts),
    )
