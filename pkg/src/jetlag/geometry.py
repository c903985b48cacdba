"""Connections and curvature of generalized metrical multi-time Lagrange
spaces on a first-order jet bundle.

A space is described by a :class:`GeometryContext`: dimensions (p temporal,
n spatial), a temporal metric h (fields of t only), a vertical metric source
(direct g entries, or a Lagrangian whose half-Hessian is contracted down to
g), a spatial nonlinear-connection choice, a differentiation budget and the
gravitational constant K.

The canonical temporal nonlinear connection is M^(i)_(a)b = -H^g_ab x^i_g,
with H the Christoffel symbols of h.  The spatial one is either the
quadratic-canonical formula N^(i)_(a)j = Gamma^i_jm x^m_a
+ (g^im/2) dg_jm/dt^a (only for direction-independent g), the Christoffel
form gamma^i_jm(phi) x^m_a of a fixed spatial metric phi, or user-given
fields.

From these the Cartan canonical connection (H, G, L, C), its eight torsion
blocks, seven curvature blocks, Ricci contractions and scalar curvature are
assembled.  All differentiation flows through exact Taylor jets; finite
differences appear only in tests as an independent oracle.

Index layout convention used for every stored block: axes follow the
symbol's logical indices left to right, a bound vertical pair contributing
(spatial, temporal) adjacent axes.  All indices are 0-based in arrays.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .diff_engine import (
    DiffConfig,
    Jet,
    JetPoint,
    ScalarField,
    coord_count,
    coord_index,
    float_point,
    jet_einsum,
    jet_linear,
    jet_matrix_inverse,
    jet_stack,
    seed_point,
)
from .errors import (
    EvalDomainError,
    DerivativeDomainError,
    FieldValidationError,
    OrderExceededError,
    RegularityViolationError,
    SingularMetricError,
)
from .tensor_core import DTensor, IndexSlot, S_DN, S_UP, T_DN, T_UP

__all__ = [
    "DirectMetric",
    "FromLagrangian",
    "QuadraticCanonical",
    "ChristoffelOfPhi",
    "UserGiven",
    "GeometryContext",
    "JetTensorField",
    "CartanCoefficients",
    "TorsionSet",
    "CurvatureSet",
    "RicciSet",
    "ScalarSet",
    "RegularityVerdict",
    "TorsionFreeVerdict",
    "frame",
    "sample_points",
    "temporal_christoffel_and_M",
    "spatial_christoffel",
    "spatial_nlc",
    "adapted_deriv",
    "cartan_connection",
    "cov_deriv",
    "torsion_set",
    "curvature_set",
    "ricci_and_scalars",
    "vertical_metric_from_L",
    "energy_lagrangian",
    "kronecker_regularity_check",
    "nlc_torsion_free_check",
    "metricity_residuals",
    "curvature_antisymmetry_residuals",
]


# --------------------------------------------------------------------------
# context
# --------------------------------------------------------------------------

def _as_grid(entries, shape, what) -> np.ndarray:
    grid = np.empty(shape, dtype=object)
    arr = np.asarray(entries, dtype=object)
    if arr.shape != shape:
        raise ValueError(f"{what} must be a {shape} grid of fields, got {arr.shape}")
    for idx in np.ndindex(shape):
        f = arr[idx]
        if not isinstance(f, ScalarField):
            raise TypeError(f"{what}{list(idx)} is not a scalar field: {f!r}")
        grid[idx] = f
    return grid


def _check_deps(grid, allowed, what):
    allowed = frozenset(allowed)
    for idx in np.ndindex(grid.shape):
        extra = grid[idx].deps - allowed
        if extra:
            raise FieldValidationError(
                f"{what}{list(idx)} depends on {sorted(extra)}; "
                f"allowed dependencies are {sorted(allowed)}"
            )


@dataclass(frozen=True)
class DirectMetric:
    """Vertical metric given directly as an n x n grid of g_ij fields."""

    entries: object  # np.ndarray of ScalarField, shape (n, n)


@dataclass(frozen=True)
class FromLagrangian:
    """Vertical metric derived from a Lagrangian:
    g_ij = (1/p) h_mn d^2 L / (2 dxs^i_m dxs^j_n)."""

    L: ScalarField


@dataclass(frozen=True)
class QuadraticCanonical:
    """Spatial NLC N^(i)_(a)j = Gamma^i_jm x^m_a + (g^im/2) dg_jm/dt^a.

    Requires a direction-independent g.
    """


@dataclass(frozen=True)
class ChristoffelOfPhi:
    """Spatial NLC N^(i)_(a)j = gamma^i_jm(phi) x^m_a for a fixed spatial
    metric phi(x)."""

    phi: object  # np.ndarray of ScalarField, shape (n, n), deps {x}


@dataclass(frozen=True)
class UserGiven:
    """Spatial NLC supplied directly as an n x p x n grid of fields."""

    entries: object  # np.ndarray of ScalarField, shape (n, p, n)


class GeometryContext:
    """Immutable description of one space; shareable across threads.

    The realized g must stay symmetric, invertible, and of constant
    signature: the eigenvalue signs seen at the first evaluated point are
    recorded and asserted at every later point.
    """

    def __init__(self, p, n, h, g_source, nlc, diff=None, K=1.0):
        if p < 1 or n < 1:
            raise ValueError(f"dimensions must be positive, got p={p}, n={n}")
        self.p = int(p)
        self.n = int(n)
        self.h = _as_grid(h, (self.p, self.p), "h")
        _check_deps(self.h, {"t"}, "h")
        if isinstance(g_source, DirectMetric):
            g_source = DirectMetric(_as_grid(g_source.entries, (self.n, self.n), "g"))
        elif isinstance(g_source, FromLagrangian):
            if not isinstance(g_source.L, ScalarField):
                raise TypeError("FromLagrangian.L must be a scalar field")
        else:
            raise TypeError(f"unknown g source {g_source!r}")
        self.g_source = g_source
        if isinstance(nlc, ChristoffelOfPhi):
            phi = _as_grid(nlc.phi, (self.n, self.n), "phi")
            _check_deps(phi, {"x"}, "phi")
            nlc = ChristoffelOfPhi(phi)
        elif isinstance(nlc, UserGiven):
            nlc = UserGiven(
                _as_grid(nlc.entries, (self.n, self.p, self.n), "N")
            )
        elif not isinstance(nlc, QuadraticCanonical):
            raise TypeError(f"unknown spatial nonlinear connection {nlc!r}")
        self.nlc = nlc
        self.diff = diff if diff is not None else DiffConfig()
        self.K = float(K)
        self._lock = threading.Lock()
        self._signature = None  # (h signs, g signs) at first sample
        self._frames = {}

    # signature bookkeeping (D-tensor metrics must keep constant signature)

    def _check_signature(self, pt: JetPoint, h_val, g_val):
        signs = (
            tuple(int(np.sign(v)) for v in np.linalg.eigvalsh(h_val)),
            tuple(int(np.sign(v)) for v in np.linalg.eigvalsh(g_val)),
        )
        with self._lock:
            if self._signature is None:
                self._signature = signs
            elif self._signature != signs:
                raise RegularityViolationError(
                    f"metric signature changed between sample points: "
                    f"recorded {self._signature}, found {signs}",
                    witness=pt,
                )


# --------------------------------------------------------------------------
# frame: all jet-level geometry at one point, lazily computed and cached
# --------------------------------------------------------------------------

_LETTER_POOL = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"


def frame(ctx: GeometryContext, pt: JetPoint, order: int = 2) -> "Frame":
    """The cached geometry frame of ``ctx`` at ``pt``.

    ``order`` is the Taylor depth carried by the metric-level jets; 2 covers
    torsion/curvature values, 3 is needed for covariant derivatives of
    curvature-level objects (conservation laws, Bianchi residuals).
    """
    key = (pt.key(), order)
    with ctx._lock:
        fr = ctx._frames.get(key)
        if fr is not None:
            return fr
    fr = Frame(ctx, pt, order)
    with ctx._lock:
        if len(ctx._frames) >= 64:
            ctx._frames.pop(next(iter(ctx._frames)))
        ctx._frames[key] = fr
    return fr


class Frame:
    """Lazy jet pipeline of one (context, point, order) triple.

    Every cached property is a Jet whose component axes follow the block's
    logical indices; ``.value`` peels the point values.
    """

    def __init__(self, ctx: GeometryContext, pt: JetPoint, order: int):
        if pt.dims != (ctx.p, ctx.n):
            raise ValueError(
                f"point dims {pt.dims} do not match context ({ctx.p},{ctx.n})"
            )
        self.ctx = ctx
        self.pt = pt
        self.order = order
        self.p = ctx.p
        self.n = ctx.n
        self.N = coord_count(ctx.p, ctx.n)
        self._seeded = {}

    # -- seeding and field evaluation ------------------------------------

    def spt(self, deps, order=None):
        order = self.order if order is None else order
        key = (frozenset(deps), order)
        if key not in self._seeded:
            self._seeded[key] = seed_point(self.pt, order, frozenset(deps))
        return self._seeded[key]

    def eval_scalar(self, f: ScalarField, order=None) -> Jet:
        res = f(self.spt(f.deps, order))
        if isinstance(res, Jet):
            return res
        return Jet.constant(
            float(res), self.N, self.order if order is None else order
        )

    def eval_grid(self, grid: np.ndarray, order=None) -> Jet:
        jets = [self.eval_scalar(grid[idx], order) for idx in np.ndindex(grid.shape)]
        stacked = jet_stack(jets)
        return stacked.reshape_components(grid.shape)

    # -- coordinates -------------------------------------------------------

    @cached_property
    def xs_jet(self) -> Jet:
        idx = np.array(
            [
                [coord_index(self.p, self.n, ("xs", i, a)) for a in range(self.p)]
                for i in range(self.n)
            ]
        )
        return Jet.variables(self.pt.xs, idx, self.N, self.order)

    # -- metrics -----------------------------------------------------------

    @cached_property
    def h_jet(self) -> Jet:
        h = self.eval_grid(self.ctx.h)
        val = h.value
        scale = max(1.0, float(np.max(np.abs(val))))
        if float(np.max(np.abs(val - val.T))) > 1e-9 * scale:
            raise ValueError("temporal metric h is not symmetric at this point")
        return h

    @cached_property
    def g_jet(self) -> Jet:
        src = self.ctx.g_source
        if isinstance(src, DirectMetric):
            g = self.eval_grid(src.entries)
        else:
            g = self._g_from_lagrangian()
        val = g.value
        scale = max(1.0, float(np.max(np.abs(val))))
        if float(np.max(np.abs(val - val.T))) > 1e-9 * scale:
            raise ValueError("vertical metric g is not symmetric at this point")
        self.ctx._check_signature(self.pt, self.h_jet.value, val)
        return g

    def _g_from_lagrangian(self) -> Jet:
        halfhess = self.vertical_half_hessian
        return jet_einsum("mn,imjn->ij", self.h_jet, halfhess) * (1.0 / self.p)

    @cached_property
    def vertical_half_hessian(self) -> Jet:
        """G^(m)(n)_(i)(j) = (1/2) d^2 L / dxs^i_m dxs^j_n, axes [i,m,j,n]."""
        src = self.ctx.g_source
        if not isinstance(src, FromLagrangian):
            raise ValueError("vertical half-Hessian requires a Lagrangian source")
        L = self.eval_scalar(src.L, self.order + 2)
        lo = self.p + self.n
        d1 = L.dblock(slice(lo, self.N), (self.n, self.p))
        d2 = d1.dblock(slice(lo, self.N), (self.n, self.p))
        return d2 * 0.5

    @cached_property
    def h_inv(self) -> Jet:
        return jet_matrix_inverse(self.h_jet)

    @cached_property
    def g_inv(self) -> Jet:
        return jet_matrix_inverse(self.g_jet)

    # -- raw derivative blocks ----------------------------------------------

    def ddt(self, A: Jet) -> Jet:
        return A.dblock(slice(0, self.p))

    def ddx(self, A: Jet) -> Jet:
        return A.dblock(slice(self.p, self.p + self.n))

    def ddxs(self, A: Jet) -> Jet:
        return A.dblock(slice(self.p + self.n, self.N), (self.n, self.p))

    def _letters(self, k: int, avoid: str) -> str:
        out = [c for c in _LETTER_POOL if c not in avoid]
        return "".join(out[:k])

    def delta_t(self, A: Jet) -> Jet:
        """Adapted temporal derivative dA/dt^a - M^(j)_(b)a dA/dxs^j_b;
        appends one temporal axis."""
        cn = A.value.ndim
        S = self._letters(cn, "jba")
        dxs = self.ddxs(A)
        corr = jet_einsum(f"{S}jb,jba->{S}a", dxs, self.M_jet)
        return self.ddt(A) - corr

    def delta_x(self, A: Jet) -> Jet:
        """Adapted spatial derivative dA/dx^i - N^(j)_(b)i dA/dxs^j_b;
        appends one spatial axis."""
        cn = A.value.ndim
        S = self._letters(cn, "jbi")
        dxs = self.ddxs(A)
        corr = jet_einsum(f"{S}jb,jbi->{S}i", dxs, self.N_jet)
        return self.ddx(A) - corr

    # -- connections ---------------------------------------------------------

    @cached_property
    def Htc_jet(self) -> Jet:
        """Temporal Christoffel H^g_ab of h, axes [g,a,b]."""
        dh = self.ddt(self.h_jet)  # [m,a,b] = dh_ma/dt^b
        # dh_ma/db + dh_mb/da - dh_ab/dm, then (1/2) h^gm
        sym = dh + jet_linear("mab->mba", dh) - jet_linear("abm->mab", dh)
        return jet_einsum("gm,mab->gab", self.h_inv, sym) * 0.5

    @cached_property
    def M_jet(self) -> Jet:
        """Canonical temporal NLC M^(i)_(a)b = -H^g_ab x^i_g, axes [i,a,b]."""
        return -jet_einsum("gab,ig->iab", self.Htc_jet, self.xs_jet)

    def _christoffel_x(self, metric: Jet, inv: Jet) -> Jet:
        """Christoffel symbols of a spatial metric using d/dx only; [i,j,m]."""
        d = self.ddx(metric)  # [r,j,m] = d metric_rj / dx^m
        sym = d + jet_linear("rjm->rmj", d) - jet_linear("jmr->rjm", d)
        return jet_einsum("ir,rjm->ijm", inv, sym) * 0.5

    @cached_property
    def phi_jet(self) -> Jet:
        if not isinstance(self.ctx.nlc, ChristoffelOfPhi):
            raise ValueError("this context has no fixed spatial metric phi")
        phi = self.eval_grid(self.ctx.nlc.phi)
        val = phi.value
        if float(np.max(np.abs(val - val.T))) > 1e-9 * max(1.0, float(np.max(np.abs(val)))):
            raise ValueError("spatial metric phi is not symmetric at this point")
        return phi

    @cached_property
    def phi_inv(self) -> Jet:
        return jet_matrix_inverse(self.phi_jet)

    @cached_property
    def gamma_phi_jet(self) -> Jet:
        return self._christoffel_x(self.phi_jet, self.phi_inv)

    def require_direction_independent(self, what: str):
        """Error unless g has no velocity dependence at this point."""
        src = self.ctx.g_source
        if isinstance(src, DirectMetric):
            if not any("xs" in src.entries[idx].deps for idx in np.ndindex(src.entries.shape)):
                return
        dg = self.ddxs(self.g_jet).value
        dev = float(np.max(np.abs(dg)))
        scale = max(1.0, float(np.max(np.abs(self.g_jet.value))))
        if dev > 1e-10 * scale:
            ij = np.unravel_index(int(np.argmax(np.abs(dg))), dg.shape)
            raise RegularityViolationError(
                f"{what} requires a direction-independent g, but "
                f"dg/dxs at indices {tuple(int(v) for v in ij)} is {dev:.3e}",
                witness=self.pt,
            )

    @cached_property
    def gamma_g_jet(self) -> Jet:
        """Generalized Christoffel Gamma^i_jm of g(t,x); direction-independent
        g only."""
        self.require_direction_independent("the generalized Christoffel symbols")
        return self._christoffel_x(self.g_jet, self.g_inv)

    @cached_property
    def N_jet(self) -> Jet:
        """Spatial NLC N^(i)_(a)j, axes [i,a,j]."""
        nlc = self.ctx.nlc
        if isinstance(nlc, UserGiven):
            return self.eval_grid(nlc.entries)
        if isinstance(nlc, ChristoffelOfPhi):
            return jet_einsum("ijm,ma->iaj", self.gamma_phi_jet, self.xs_jet)
        self.require_direction_independent("the quadratic-canonical connection")
        term1 = jet_einsum("ijm,ma->iaj", self.gamma_g_jet, self.xs_jet)
        dg_t = self.ddt(self.g_jet)  # [j,m,a]
        term2 = jet_einsum("im,jma->iaj", self.g_inv, dg_t) * 0.5
        return term1 + term2

    # -- Cartan canonical connection ------------------------------------------

    @cached_property
    def Gc_jet(self) -> Jet:
        """G^k_jg = (g^ki/2) delta g_ij / delta t^g, axes [k,j,g]."""
        dg = self.delta_t(self.g_jet)  # [i,j,g]
        return jet_einsum("ki,ijg->kjg", self.g_inv, dg) * 0.5

    @cached_property
    def Lc_jet(self) -> Jet:
        """L^i_jk, axes [i,j,k]; Christoffel-type with delta/delta x."""
        d = self.delta_x(self.g_jet)  # [m,j,k] = delta g_mj / delta x^k
        sym = d + jet_linear("mjk->mkj", d) - jet_linear("jkm->mjk", d)
        return jet_einsum("im,mjk->ijk", self.g_inv, sym) * 0.5

    @cached_property
    def Cc_jet(self) -> Jet:
        """C^i(g)_j(k), axes [i,j,k,g]; Christoffel-type with d/dxs."""
        d = self.ddxs(self.g_jet)  # [m,j,k,g] = d g_mj / dxs^k_g
        sym = d + jet_linear("mjkg->mkjg", d) - jet_linear("jkmg->mjkg", d)
        return jet_einsum("im,mjkg->ijkg", self.g_inv, sym) * 0.5

    # -- generic covariant derivatives on jets ---------------------------------

    def _storage_slots(self, slots):
        out = []
        for s in slots:
            out.extend(s.constituents())
        return tuple(out)

    def cov_t(self, A: Jet, slots) -> Jet:
        """Temporal covariant derivative /b; appends one temporal axis."""
        slots = self._storage_slots(slots)
        cn = A.value.ndim
        if len(slots) != cn:
            raise ValueError(f"{len(slots)} slots for {cn} component axes")
        letters = self._letters(cn + 3, "")
        S = letters[:cn]
        w, q, d = letters[cn:cn + 3]
        out = self.delta_t(A)
        for ax, slot in enumerate(slots):
            src = S[:ax] + q + S[ax + 1:]
            dst = S[:ax] + w + S[ax + 1:]
            if slot.family == "temporal":
                coeff = self.Htc_jet
            else:
                coeff = self.Gc_jet
            # up: +K^w_{qd} A^q; down: -K^q_{wd} A_q (sum over the upper slot)
            cspec = f"{w}{q}{d}" if slot.up else f"{q}{w}{d}"
            term = jet_einsum(f"{cspec},{src}->{dst}{d}", coeff, A)
            out = out + term if slot.up else out - term
        return out

    def cov_s(self, A: Jet, slots) -> Jet:
        """Spatial covariant derivative |k; appends one spatial axis."""
        slots = self._storage_slots(slots)
        cn = A.value.ndim
        if len(slots) != cn:
            raise ValueError(f"{len(slots)} slots for {cn} component axes")
        letters = self._letters(cn + 3, "")
        S = letters[:cn]
        w, q, d = letters[cn:cn + 3]
        out = self.delta_x(A)
        for ax, slot in enumerate(slots):
            if slot.family == "temporal":
                continue
            src = S[:ax] + q + S[ax + 1:]
            dst = S[:ax] + w + S[ax + 1:]
            cspec = f"{w}{q}{d}" if slot.up else f"{q}{w}{d}"
            term = jet_einsum(f"{cspec},{src}->{dst}{d}", self.Lc_jet, A)
            out = out + term if slot.up else out - term
        return out

    def cov_v(self, A: Jet, slots) -> Jet:
        """Vertical covariant derivative |^(g)_(k); appends (n, p) axes."""
        slots = self._storage_slots(slots)
        cn = A.value.ndim
        if len(slots) != cn:
            raise ValueError(f"{len(slots)} slots for {cn} component axes")
        letters = self._letters(cn + 4, "")
        S = letters[:cn]
        w, q, d, e = letters[cn:cn + 4]
        out = self.ddxs(A)
        for ax, slot in enumerate(slots):
            if slot.family == "temporal":
                continue
            src = S[:ax] + q + S[ax + 1:]
            dst = S[:ax] + w + S[ax + 1:]
            cspec = f"{w}{q}{d}{e}" if slot.up else f"{q}{w}{d}{e}"
            term = jet_einsum(f"{cspec},{src}->{dst}{d}{e}", self.Cc_jet, A)
            out = out + term if slot.up else out - term
        return out

    # -- torsion ---------------------------------------------------------------

    @cached_property
    def tor_P2_jet(self) -> Jet:
        """P^(m)(b)_(mu)a(j) = dM^(m)_(mu)a/dxs^j_b - d^b_mu G^m_ja
        + d^m_j H^b_mu a; axes [m,mu,a,j,b]."""
        dM = self.ddxs(self.M_jet)  # [m,mu,a,j,b]
        p, n = self.p, self.n
        eye_p = np.eye(p)
        eye_n = np.eye(n)
        t2 = jet_einsum("mja,ub->muajb", self.Gc_jet, eye_p)
        t3 = jet_einsum("bua,mj->muajb", self.Htc_jet, eye_n)
        return dM - t2 + t3

    @cached_property
    def tor_P3_jet(self) -> Jet:
        """P^(m)(b)_(mu)i(j) = dN^(m)_(mu)i/dxs^j_b - d^b_mu L^m_ji;
        axes [m,mu,i,j,b]."""
        dN = self.ddxs(self.N_jet)  # [m,mu,i,j,b]
        t2 = jet_einsum("mji,ub->muijb", self.Lc_jet, np.eye(self.p))
        return dN - t2

    @cached_property
    def tor_R1_jet(self) -> Jet:
        """R^(m)_(mu)ab = delta M^(m)_(mu)a/dt^b - (a<->b); axes [m,mu,a,b]."""
        dM = self.delta_t(self.M_jet)  # [m,mu,a,b]
        return dM - jet_linear("muab->muba", dM)

    @cached_property
    def tor_R2_jet(self) -> Jet:
        """R^(m)_(mu)aj = delta M^(m)_(mu)a/dx^j - delta N^(m)_(mu)j/dt^a;
        axes [m,mu,a,j]."""
        dM = self.delta_x(self.M_jet)   # [m,mu,a,j]
        dN = self.delta_t(self.N_jet)   # [m,mu,j,a]
        return dM - jet_linear("muja->muaj", dN)

    @cached_property
    def tor_R3_jet(self) -> Jet:
        """R^(m)_(mu)ij = delta N^(m)_(mu)i/dx^j - (i<->j); axes [m,mu,i,j]."""
        dN = self.delta_x(self.N_jet)  # [m,mu,i,j]
        return dN - jet_linear("muij->muji", dN)

    @cached_property
    def tor_S_jet(self) -> Jet:
        """S^(m)(a)(b)_(mu)(i)(j) = d^a_mu C^m(b)_i(j) - d^b_mu C^m(a)_j(i);
        axes [m,mu,i,a,j,b]."""
        eye = np.eye(self.p)
        t1 = jet_einsum("mijb,ua->muiajb", self.Cc_jet, eye)
        t2 = jet_einsum("mjia,ub->muiajb", self.Cc_jet, eye)
        return t1 - t2

    # -- curvature ---------------------------------------------------------------

    @cached_property
    def cur_H_jet(self) -> Jet:
        """H^a_e b g = dH^a_eb/dt^g - dH^a_eg/dt^b + H^m_eb H^a_mg
        - H^m_eg H^a_mb; axes [a,e,b,g]."""
        dH = self.ddt(self.Htc_jet)  # [a,e,b,g]
        quad = jet_einsum("meb,amg->aebg", self.Htc_jet, self.Htc_jet)
        anti = dH + quad
        return anti - jet_linear("aebg->aegb", anti)

    @cached_property
    def cur_R1_jet(self) -> Jet:
        """R^l_i b g; axes [l,i,b,g]."""
        dG = self.delta_t(self.Gc_jet)  # [l,i,b,g]
        quad = jet_einsum("mib,lmg->libg", self.Gc_jet, self.Gc_jet)
        anti = dG + quad
        anti = anti - jet_linear("libg->ligb", anti)
        tail = jet_einsum("limu,mubg->libg", self.Cc_jet, self.tor_R1_jet)
        return anti + tail

    @cached_property
    def cur_R2_jet(self) -> Jet:
        """R^l_i b k; axes [l,i,b,k]."""
        dG = self.delta_x(self.Gc_jet)   # [l,i,b,k]
        dL = self.delta_t(self.Lc_jet)   # [l,i,k,b]
        t1 = dG - jet_linear("likb->libk", dL)
        t2 = jet_einsum("mib,lmk->libk", self.Gc_jet, self.Lc_jet)
        t3 = jet_einsum("mik,lmb->libk", self.Lc_jet, self.Gc_jet)
        tail = jet_einsum("limu,mubk->libk", self.Cc_jet, self.tor_R2_jet)
        return t1 + t2 - t3 + tail

    @cached_property
    def cur_R3_jet(self) -> Jet:
        """R^l_i j k; axes [l,i,j,k]."""
        dL = self.delta_x(self.Lc_jet)  # [l,i,j,k]
        quad = jet_einsum("mij,lmk->lijk", self.Lc_jet, self.Lc_jet)
        anti = dL + quad
        anti = anti - jet_linear("lijk->likj", anti)
        tail = jet_einsum("limu,mujk->lijk", self.Cc_jet, self.tor_R3_jet)
        return anti + tail

    @cached_property
    def cur_P1_jet(self) -> Jet:
        """P^l(g)_i b (k) = dG^l_ib/dxs^k_g - C^l(g)_i(k)/b
        + C^l(mu)_i(m) P^(m)(g)_(mu)b(k); axes [l,i,b,k,g]."""
        dG = self.ddxs(self.Gc_jet)  # [l,i,b,k,g]
        Ccov = self.cov_t(self.Cc_jet, (S_UP, S_DN, S_DN, T_UP))  # [l,i,k,g,b]
        t2 = jet_linear("likgb->libkg", Ccov)
        t3 = jet_einsum("limu,mubkg->libkg", self.Cc_jet, self.tor_P2_jet)
        return dG - t2 + t3

    @cached_property
    def cur_P2_jet(self) -> Jet:
        """P^l(g)_ij(k) = dL^l_ij/dxs^k_g - C^l(g)_i(k)|j
        + C^l(mu)_i(m) P^(m)(g)_(mu)j(k); axes [l,i,j,k,g]."""
        dL = self.ddxs(self.Lc_jet)  # [l,i,j,k,g]
        Ccov = self.cov_s(self.Cc_jet, (S_UP, S_DN, S_DN, T_UP))  # [l,i,k,g,j]
        t2 = jet_linear("likgj->lijkg", Ccov)
        t3 = jet_einsum("limu,mujkg->lijkg", self.Cc_jet, self.tor_P3_jet)
        return dL - t2 + t3

    @cached_property
    def cur_S_jet(self) -> Jet:
        """S^l(b)(g)_i(j)(k); axes [l,i,j,b,k,g]."""
        dC = self.ddxs(self.Cc_jet)  # [l,i,j,b,k,g]
        quad = jet_einsum("mijb,lmkg->lijbkg", self.Cc_jet, self.Cc_jet)
        anti = dC + quad
        return anti - jet_linear("lijbkg->likgjb", anti)

    # -- Ricci and scalars ----------------------------------------------------

    @cached_property
    def ricci_H_jet(self) -> Jet:
        """H_ab = H^m_abm."""
        return jet_linear("mabm->ab", self.cur_H_jet)

    @cached_property
    def ricci_P1_jet(self) -> Jet:
        """P^(a)_i(j) = -P^m(a)_im(j); axes [i,j,a]."""
        return -jet_linear("mimja->ija", self.cur_P2_jet)

    @cached_property
    def ricci_P2_jet(self) -> Jet:
        """P^(a)_(i)j = P^m(a)_ij(m); axes [i,a,j]."""
        return jet_linear("mijma->iaj", self.cur_P2_jet)

    @cached_property
    def ricci_P3_jet(self) -> Jet:
        """P^(a)_(i)b = P^m(a)_ib(m); axes [i,a,b]."""
        return jet_linear("mibma->iab", self.cur_P1_jet)

    @cached_property
    def ricci_S_jet(self) -> Jet:
        """S^(a)(b)_(i)(j) = S^m(b)(a)_i(j)(m); axes [i,a,j,b]."""
        return jet_linear("mijbma->iajb", self.cur_S_jet)

    @cached_property
    def ricci_Rmt_jet(self) -> Jet:
        """R_ia = R^m_iam; axes [i,a]."""
        return jet_linear("miam->ia", self.cur_R2_jet)

    @cached_property
    def ricci_Rmm_jet(self) -> Jet:
        """R_ij = R^m_ijm; axes [i,j]."""
        return jet_linear("mijm->ij", self.cur_R3_jet)

    @cached_property
    def scalar_H_jet(self) -> Jet:
        return jet_linear("aa->", jet_einsum("ab,bc->ac", self.h_inv, self.ricci_H_jet))

    @cached_property
    def scalar_R_jet(self) -> Jet:
        return jet_linear("ii->", jet_einsum("ij,jk->ik", self.g_inv, self.ricci_Rmm_jet))

    @cached_property
    def scalar_S_jet(self) -> Jet:
        lowered = jet_einsum("ab,iajb->ij", self.h_jet, self.ricci_S_jet)
        return jet_linear("ii->", jet_einsum("ij,jk->ik", self.g_inv, lowered))


# --------------------------------------------------------------------------
# result bundles
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class CartanCoefficients:
    """Htc[g,a,b] = H^g_ab; Gc[k,j,g] = G^k_jg; Lc[i,j,k] = L^i_jk;
    Cc[i,j,k,g] = C^i(g)_j(k)."""

    Htc: np.ndarray
    Gc: np.ndarray
    Lc: np.ndarray
    Cc: np.ndarray


@dataclass(frozen=True)
class TorsionSet:
    """The eight torsion blocks.

    T[m,a,j] = T^m_aj; P1[m,i,j,b] = P^m(b)_i(j); P2[m,mu,a,j,b] =
    P^(m)(b)_(mu)a(j); P3[m,mu,i,j,b] = P^(m)(b)_(mu)i(j); R1[m,mu,a,b] =
    R^(m)_(mu)ab; R2[m,mu,a,j] = R^(m)_(mu)aj; R3[m,mu,i,j] = R^(m)_(mu)ij;
    S[m,mu,i,a,j,b] = S^(m)(a)(b)_(mu)(i)(j).
    """

    T: np.ndarray
    P1: np.ndarray
    P2: np.ndarray
    P3: np.ndarray
    R1: np.ndarray
    R2: np.ndarray
    R3: np.ndarray
    S: np.ndarray


@dataclass(frozen=True)
class CurvatureSet:
    """The seven effective curvature blocks.

    H[a,e,b,g] = H^a_ebg; R1[l,i,b,g] = R^l_ibg; R2[l,i,b,k] = R^l_ibk;
    R3[l,i,j,k] = R^l_ijk; P1[l,i,b,k,g] = P^l(g)_ib(k); P2[l,i,j,k,g] =
    P^l(g)_ij(k); S[l,i,j,b,k,g] = S^l(b)(g)_i(j)(k).

    The remaining table entries are delta-weighted copies of these and are
    not stored.
    """

    H: np.ndarray
    R1: np.ndarray
    R2: np.ndarray
    R3: np.ndarray
    P1: np.ndarray
    P2: np.ndarray
    S: np.ndarray


@dataclass(frozen=True)
class RicciSet:
    """Ricci contractions.

    H[a,b] = H_ab; P1[i,j,a] = P^(a)_i(j) (carries the defining minus sign);
    P2[i,a,j] = P^(a)_(i)j; P3[i,a,b] = P^(a)_(i)b; S[i,a,j,b] =
    S^(a)(b)_(i)(j); R_mt[i,a] = R_ia; R_mm[i,j] = R_ij.
    """

    H: np.ndarray
    P1: np.ndarray
    P2: np.ndarray
    P3: np.ndarray
    S: np.ndarray
    R_mt: np.ndarray
    R_mm: np.ndarray


@dataclass(frozen=True)
class ScalarSet:
    """H = h^ab H_ab; R = g^ij R_ij; S = h_ab g^ij S^(a)(b)_(i)(j);
    total = H + R + S."""

    H: float
    R: float
    S: float
    total: float


@dataclass(frozen=True)
class RegularityVerdict:
    """Outcome of the Kronecker h-regularity probe."""

    regular: bool
    max_deviation: float
    witness: object  # offending JetPoint or None
    ghats: tuple     # extracted ghat (n, n) per sample point


@dataclass(frozen=True)
class TorsionFreeVerdict:
    """Outcome of the spatial-NLC torsion-freeness probe."""

    torsion_free: bool
    max_violation: float
    witness: object  # (JetPoint, indices) or None


# --------------------------------------------------------------------------
# public operations
# --------------------------------------------------------------------------

def temporal_christoffel_and_M(ctx: GeometryContext, pt: JetPoint):
    """(H^g_ab, M^(i)_(a)b) of the canonical temporal nonlinear connection."""
    fr = frame(ctx, pt, 1)
    return fr.Htc_jet.value.copy(), fr.M_jet.value.copy()


def spatial_christoffel(ctx: GeometryContext, pt: JetPoint, which: str = "generalized"):
    """Spatial Christoffel symbols, [i,j,m].

    ``which="generalized"``: of g(t, x), valid only for direction-independent
    g.  ``which="static"``: of the fixed spatial metric phi (requires the
    Christoffel-of-phi connection).
    """
    fr = frame(ctx, pt, 1)
    if which == "generalized":
        return fr.gamma_g_jet.value.copy()
    if which == "static":
        return fr.gamma_phi_jet.value.copy()
    raise ValueError(f"which must be 'generalized' or 'static', got {which!r}")


def spatial_nlc(ctx: GeometryContext, pt: JetPoint):
    """N^(i)_(a)j values at pt, axes [i,a,j]."""
    return frame(ctx, pt, 1).N_jet.value.copy()


def adapted_deriv(ctx: GeometryContext, f: ScalarField, pt: JetPoint, direction):
    """Adapted-basis derivative of a scalar field.

    direction: ("t", a) for delta/delta t^a, ("x", i) for delta/delta x^i,
    ("xs", i, a) for d/dxs^i_a (the vertical basis vector is a raw partial).
    Indices 0-based.
    """
    fr = frame(ctx, pt, 1)
    spt = seed_point(pt, 1, f.deps)
    res = f(spt)
    if not isinstance(res, Jet):
        res = Jet.constant(float(res), fr.N, 1)
    p, n = ctx.p, ctx.n
    kind = direction[0]
    if kind == "xs":
        return float(res.partial(coord_index(p, n, direction)).value)
    dxs = np.array(
        [
            [float(res.partial(coord_index(p, n, ("xs", j, b))).value) for b in range(p)]
            for j in range(n)
        ]
    )
    if kind == "t":
        a = direction[1]
        raw = float(res.partial(coord_index(p, n, ("t", a))).value)
        return raw - float(np.sum(fr.M_jet.value[:, :, a] * dxs))
    if kind == "x":
        i = direction[1]
        raw = float(res.partial(coord_index(p, n, ("x", i))).value)
        return raw - float(np.sum(fr.N_jet.value[:, :, i] * dxs))
    raise ValueError(f"unknown direction {direction!r}")


def _require_budget(ctx: GeometryContext, needed: int, why: str):
    if ctx.diff.max_order < needed:
        raise OrderExceededError(
            f"{why} needs a derivative budget of at least {needed}; "
            f"the context allows {ctx.diff.max_order}"
        )


def cartan_connection(ctx: GeometryContext, pt: JetPoint) -> CartanCoefficients:
    """The four coefficient families of the Cartan canonical connection."""
    if isinstance(ctx.g_source, FromLagrangian):
        _require_budget(ctx, 2, "the Cartan connection of a Lagrangian-derived metric")
    fr = frame(ctx, pt, 1)
    return CartanCoefficients(
        Htc=fr.Htc_jet.value.copy(),
        Gc=fr.Gc_jet.value.copy(),
        Lc=fr.Lc_jet.value.copy(),
        Cc=fr.Cc_jet.value.copy(),
    )


@dataclass(frozen=True)
class JetTensorField:
    """A d-tensor field: a typed signature plus a grid of scalar components.

    ``entries`` is an object array of scalar fields whose shape matches the
    storage extents of ``signature``.
    """

    signature: tuple
    entries: object

    def storage_shape(self, p: int, n: int):
        return tuple(e for s in self.signature for e in s.extents(p, n))


def cov_deriv(ctx: GeometryContext, tensor_field: JetTensorField, pt: JetPoint, kind: str) -> DTensor:
    """Covariant derivative of a d-tensor field at a point.

    kind: "temporal" (/b, appends a down temporal axis), "spatial" (|k,
    appends a down spatial axis) or "vertical" (|^(g)_(k), appends a down
    vertical pair stored as (spatial, temporal) axes).

    Rules, per storage axis: temporal derivative corrects temporal axes with
    H and spatial axes with G; spatial derivative corrects spatial axes with
    L; vertical derivative corrects spatial axes with C; up indices add the
    correction, down indices subtract it; temporal axes receive no spatial or
    vertical correction.
    """
    fr = frame(ctx, pt, 1)
    grid = np.asarray(tensor_field.entries, dtype=object)
    expect = tensor_field.storage_shape(ctx.p, ctx.n)
    if grid.shape != expect:
        raise ValueError(
            f"entries shape {grid.shape} does not match signature storage {expect}"
        )
    A = fr.eval_grid(grid)
    if kind == "temporal":
        out = fr.cov_t(A, tensor_field.signature)
        extra = (T_DN,)
    elif kind == "spatial":
        out = fr.cov_s(A, tensor_field.signature)
        extra = (S_DN,)
    elif kind == "vertical":
        out = fr.cov_v(A, tensor_field.signature)
        extra = (IndexSlot("vertical", False),)
    else:
        raise ValueError(f"kind must be temporal/spatial/vertical, got {kind!r}")
    sig = tuple(tensor_field.signature) + extra
    return DTensor(sig, (ctx.p, ctx.n), out.value.copy())


def torsion_set(ctx: GeometryContext, pt: JetPoint) -> TorsionSet:
    """All eight torsion blocks of the Cartan canonical connection."""
    fr = frame(ctx, pt, 2)
    Gc = fr.Gc_jet.value
    return TorsionSet(
        T=-np.transpose(Gc, (0, 2, 1)).copy(),
        P1=fr.Cc_jet.value.copy(),
        P2=fr.tor_P2_jet.value.copy(),
        P3=fr.tor_P3_jet.value.copy(),
        R1=fr.tor_R1_jet.value.copy(),
        R2=fr.tor_R2_jet.value.copy(),
        R3=fr.tor_R3_jet.value.copy(),
        S=fr.tor_S_jet.value.copy(),
    )


def curvature_set(ctx: GeometryContext, pt: JetPoint) -> CurvatureSet:
    """The seven effective curvature blocks."""
    if isinstance(ctx.g_source, FromLagrangian):
        _require_budget(ctx, 3, "curvature of a Lagrangian-derived space")
    else:
        _require_budget(ctx, 2, "curvature")
    fr = frame(ctx, pt, 2)
    return CurvatureSet(
        H=fr.cur_H_jet.value.copy(),
        R1=fr.cur_R1_jet.value.copy(),
        R2=fr.cur_R2_jet.value.copy(),
        R3=fr.cur_R3_jet.value.copy(),
        P1=fr.cur_P1_jet.value.copy(),
        P2=fr.cur_P2_jet.value.copy(),
        S=fr.cur_S_jet.value.copy(),
    )


def ricci_and_scalars(ctx: GeometryContext, pt: JetPoint):
    """Ricci contractions and the three curvature scalars."""
    if isinstance(ctx.g_source, FromLagrangian):
        _require_budget(ctx, 3, "curvature of a Lagrangian-derived space")
    else:
        _require_budget(ctx, 2, "curvature")
    fr = frame(ctx, pt, 2)
    ric = RicciSet(
        H=fr.ricci_H_jet.value.copy(),
        P1=fr.ricci_P1_jet.value.copy(),
        P2=fr.ricci_P2_jet.value.copy(),
        P3=fr.ricci_P3_jet.value.copy(),
        S=fr.ricci_S_jet.value.copy(),
        R_mt=fr.ricci_Rmt_jet.value.copy(),
        R_mm=fr.ricci_Rmm_jet.value.copy(),
    )
    H = float(fr.scalar_H_jet.value)
    R = float(fr.scalar_R_jet.value)
    S = float(fr.scalar_S_jet.value)
    return ric, ScalarSet(H=H, R=R, S=S, total=H + R + S)


def vertical_metric_from_L(ctx: GeometryContext, pt: JetPoint):
    """(Gvert[mu,nu,i,j], g_canonical[i,j]) of a Lagrangian-derived metric.

    Gvert is the half-Hessian (1/2) d^2 L/dxs^i_mu dxs^j_nu; g_canonical is
    its (1/p) h_mu nu contraction.
    """
    fr = frame(ctx, pt, 0)
    hh = fr.vertical_half_hessian.value  # [i,mu,j,nu]
    g = fr.g_jet.value
    cond = float(np.linalg.cond(g))
    if not np.isfinite(cond) or cond > 1e12:
        raise RegularityViolationError(
            f"canonical g is singular at this point (cond={cond:.3e})",
            witness=pt,
        )
    return np.transpose(hh, (1, 3, 0, 2)).copy(), g.copy()


def energy_lagrangian(ctx: GeometryContext, pt: JetPoint) -> float:
    """Absolute energy E = h^mu nu g_mr xs^m_mu xs^r_nu at pt."""
    fr = frame(ctx, pt, 0)
    hinv = np.linalg.inv(fr.h_jet.value)
    g = fr.g_jet.value
    return float(np.einsum("mn,ab,am,bn->", hinv, g, pt.xs, pt.xs))


class EnergyField(ScalarField):
    """The absolute energy Lagrangian E of a context, as a scalar field."""

    deps = frozenset(("t", "x", "xs"))

    def __init__(self, ctx: GeometryContext):
        self.ctx = ctx
        self._name = "absolute-energy"

    def __call__(self, spt):
        ctx = self.ctx
        if not isinstance(ctx.g_source, DirectMetric):
            raise ValueError(
                "the energy field of a Lagrangian-derived space is the "
                "Lagrangian's own concern; use the source L directly"
            )
        h = [[ctx.h[a, b](spt) for b in range(ctx.p)] for a in range(ctx.p)]
        g = [
            [ctx.g_source.entries[i, j](spt) for j in range(ctx.n)]
            for i in range(ctx.n)
        ]
        flat = [v for row in (h + g + [list(r) for r in spt.xs]) for v in row]
        template = next((v for v in flat if isinstance(v, Jet)), None)
        if template is None:
            hv = np.array(h, dtype=float)
            gv = np.array(g, dtype=float)
            xs = np.array(spt.xs, dtype=float)
            return float(
                np.einsum("mn,ab,am,bn->", np.linalg.inv(hv), gv, xs, xs)
            )

        def lift(rows, shape):
            vals = [
                v if isinstance(v, Jet)
                else Jet.constant(float(v), template.nvars, template.order)
                for row in rows
                for v in row
            ]
            return jet_stack(vals).reshape_components(shape)

        hj = lift(h, (ctx.p, ctx.p))
        hinv = jet_matrix_inverse(hj)
        gj = lift(g, (ctx.n, ctx.n))
        xs = lift([list(r) for r in spt.xs], (ctx.n, ctx.p))
        e = jet_einsum("mn,am->an", hinv, xs)
        e = jet_einsum("an,ab->bn", e, gj)
        e = jet_einsum("bn,bn->", e, xs)
        return e


def kronecker_regularity_check(ctx, pts, lagrangian=None, tol=1e-9) -> RegularityVerdict:
    """Probe whether a Lagrangian's half-Hessian splits as h^ab * ghat.

    For each sample point the half-Hessian blocks B^(a)(b) (n x n) are
    computed, ghat = (1/p) h_ab B^(a)(b) extracted, and the residual
    max |B^(a)(b) - h^ab ghat| compared against ``tol`` (scaled by the block
    magnitude).  Defaults to the context's Lagrangian, or its absolute
    energy when the metric is direct.
    """
    if lagrangian is None:
        if isinstance(ctx.g_source, FromLagrangian):
            lagrangian = ctx.g_source.L
        else:
            lagrangian = EnergyField(ctx)
    worst = 0.0
    witness = None
    ghats = []
    for pt in pts:
        fr = frame(ctx, pt, 0)
        spt = seed_point(pt, 2, lagrangian.deps)
        res = lagrangian(spt)
        if not isinstance(res, Jet):
            res = Jet.constant(float(res), fr.N, 2)
        lo = ctx.p + ctx.n
        d2 = res.dblock(slice(lo, fr.N), (ctx.n, ctx.p)).dblock(
            slice(lo, fr.N), (ctx.n, ctx.p)
        )
        B = 0.5 * d2.value  # [i,mu,j,nu]
        hval = fr.h_jet.value
        hinv = np.linalg.inv(hval)
        ghat = np.einsum("mn,imjn->ij", hval, B) / ctx.p
        recon = np.einsum("mn,ij->imjn", hinv, ghat)
        scale = max(1.0, float(np.max(np.abs(B))))
        dev = float(np.max(np.abs(B - recon))) / scale
        ghats.append(ghat)
        if dev > worst:
            worst = dev
            if dev > tol:
                witness = pt
    return RegularityVerdict(
        regular=worst <= tol,
        max_deviation=worst,
        witness=witness,
        ghats=tuple(ghats),
    )


def nlc_torsion_free_check(ctx, pts, tol=1e-9) -> TorsionFreeVerdict:
    """Check dN^(i)_(a)j/dxs^k_g = dN^(i)_(a)k/dxs^j_g over sample points."""
    worst = 0.0
    witness = None
    for pt in pts:
        # Christoffel-built N already spends one derivative order, so the
        # xs-gradient of N needs a depth-2 frame.
        fr = frame(ctx, pt, 2)
        dN = fr.ddxs(fr.N_jet).value  # [i,a,j,k,g]
        viol = dN - np.transpose(dN, (0, 1, 3, 2, 4))
        dev = float(np.max(np.abs(viol)))
        if dev > worst:
            worst = dev
            if dev > tol:
                idx = np.unravel_index(int(np.argmax(np.abs(viol))), viol.shape)
                witness = (pt, tuple(int(v) for v in idx))
    return TorsionFreeVerdict(
        torsion_free=worst <= tol, max_violation=worst, witness=witness
    )


def metricity_residuals(ctx: GeometryContext, pt: JetPoint) -> dict:
    """Max-abs covariant derivatives of both metrics; all six should vanish."""
    fr = frame(ctx, pt, 2)
    g_slots = (S_DN, S_DN)
    h_slots = (T_DN, T_DN)
    return {
        "g_spatial": float(np.max(np.abs(fr.cov_s(fr.g_jet, g_slots).value))),
        "g_vertical": float(np.max(np.abs(fr.cov_v(fr.g_jet, g_slots).value))),
        "h_temporal": float(np.max(np.abs(fr.cov_t(fr.h_jet, h_slots).value))),
        "h_spatial": float(np.max(np.abs(fr.cov_s(fr.h_jet, h_slots).value))),
        "h_vertical": float(np.max(np.abs(fr.cov_v(fr.h_jet, h_slots).value))),
        "g_temporal": float(np.max(np.abs(fr.cov_t(fr.g_jet, g_slots).value))),
    }


def curvature_antisymmetry_residuals(ctx: GeometryContext, pt: JetPoint) -> dict:
    """The seven lowered-antisymmetry identities; max |sym part| each.

    Lower the upper index with the matching metric, then the sum of the
    tensor and its first-two-index swap must vanish.
    """
    fr = frame(ctx, pt, 2)
    h = fr.h_jet.value
    g = fr.g_jet.value

    def anti(lowered, perm):
        return float(np.max(np.abs(lowered + np.transpose(lowered, perm))))

    H_low = np.einsum("bm,magd->abgd", h, fr.cur_H_jet.value)
    R1_low = np.einsum("jm,mibg->ijbg", g, fr.cur_R1_jet.value)
    R2_low = np.einsum("jm,mibk->ijbk", g, fr.cur_R2_jet.value)
    R3_low = np.einsum("jm,mikl->ijkl", g, fr.cur_R3_jet.value)
    P1_low = np.einsum("jm,mibkg->ijbkg", g, fr.cur_P1_jet.value)
    P2_low = np.einsum("jm,mikld->ijkld", g, fr.cur_P2_jet.value)
    S_low = np.einsum("jm,mikgld->ijkgld", g, fr.cur_S_jet.value)
    return {
        "H_tt": anti(H_low, (1, 0, 2, 3)),
        "R_tt": anti(R1_low, (1, 0, 2, 3)),
        "R_tm": anti(R2_low, (1, 0, 2, 3)),
        "R_mm": anti(R3_low, (1, 0, 2, 3)),
        "P_vt": anti(P1_low, (1, 0, 2, 3, 4)),
        "P_vm": anti(P2_low, (1, 0, 2, 3, 4)),
        "S_vv": anti(S_low, (1, 0, 2, 3, 4, 5)),
    }


# --------------------------------------------------------------------------
# sampling (identities are pointwise; boxes keep fields in smooth regimes)
# --------------------------------------------------------------------------

def sample_points(
    ctx: GeometryContext,
    count: int,
    seed: int,
    box_t=(-1.0, 1.0),
    box_x=(-1.0, 1.0),
    box_xs=(-1.0, 1.0),
    cond_limit=1e8,
    max_tries=None,
):
    """Draw points uniformly from coordinate boxes, rejecting near-singular
    metrics (condition number above ``cond_limit``) and field-domain
    violations."""
    rng = np.random.default_rng(seed)
    p, n = ctx.p, ctx.n
    pts = []
    tries = 0
    budget = max_tries if max_tries is not None else max(1000, 50 * count)
    while len(pts) < count:
        tries += 1
        if tries > budget:
            raise RuntimeError(
                f"could not sample {count} admissible points in {budget} tries "
                f"({len(pts)} found); widen the boxes or relax cond_limit"
            )
        pt = JetPoint.of(
            rng.uniform(box_t[0], box_t[1], size=p),
            rng.uniform(box_x[0], box_x[1], size=n),
            rng.uniform(box_xs[0], box_xs[1], size=(n, p)),
        )
        try:
            fr = frame(ctx, pt, 0)
            hval = fr.h_jet.value
            gval = fr.g_jet.value
            if np.linalg.cond(hval) > cond_limit or np.linalg.cond(gval) > cond_limit:
                continue
        except (EvalDomainError, DerivativeDomainError, SingularMetricError):
            continue
        pts.append(pt)
    return pts
