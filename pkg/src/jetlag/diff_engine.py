"""Forward-mode derivative arithmetic over jet-bundle coordinates.

The coordinate set of a first-order jet bundle with p temporal and n spatial
dimensions is flattened into a single variable vector

    z = (t^1..t^p, x^1..x^n, xs^1_1, xs^1_2, ..., xs^n_p)

of length N = p + n + n*p, with xs laid out row-major in (i, alpha).

A :class:`Jet` is a truncated multivariate Taylor expansion with respect to z:
``coeffs[k]`` stores the raw k-th derivative tensor, whose trailing k axes
(one per differentiation slot, each of size N) are symmetric.  A leading
"component" shape lets one Jet carry a whole tensor of values at once, and all
arithmetic broadcasts over it like numpy does.

Products use the multilinear Leibniz rule, compositions use Faa di Bruno over
set partitions, and matrix inversion uses a Newton iteration whose accuracy
order doubles per step.  Nothing here samples more than one point: finite
differences live in :func:`fd_partial` and are only ever used as an
independent cross-check of the Taylor path.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DerivativeDomainError, OrderExceededError

__all__ = [
    "Jet",
    "JetPoint",
    "SeededPoint",
    "DiffConfig",
    "ScalarField",
    "PyField",
    "AgreementReport",
    "coord_count",
    "coord_index",
    "seed_point",
    "float_point",
    "eval_derivs",
    "fd_partial",
    "check_grad",
    "jet_einsum",
    "jet_linear",
    "jet_stack",
    "jet_transpose",
    "jet_matrix_inverse",
    "jexp",
    "jlog",
    "jsin",
    "jcos",
    "jsqrt",
    "jtanh",
    "jabs",
]


# --------------------------------------------------------------------------
# coordinate bookkeeping
# --------------------------------------------------------------------------

def coord_count(p: int, n: int) -> int:
    return p + n + n * p


def coord_index(p: int, n: int, cid) -> int:
    """Flattened variable index of a coordinate id.

    Coordinate ids are 0-based tuples: ("t", a), ("x", i) or ("xs", i, a).
    """
    kind = cid[0]
    if kind == "t":
        a = cid[1]
        if not 0 <= a < p:
            raise IndexError(f"temporal index {a} out of range for p={p}")
        return a
    if kind == "x":
        i = cid[1]
        if not 0 <= i < n:
            raise IndexError(f"spatial index {i} out of range for n={n}")
        return p + i
    if kind == "xs":
        i, a = cid[1], cid[2]
        if not (0 <= i < n and 0 <= a < p):
            raise IndexError(f"velocity index ({i},{a}) out of range")
        return p + n + i * p + a
    raise ValueError(f"unknown coordinate kind {kind!r}")


@dataclass(frozen=True)
class JetPoint:
    """A single sample point on the jet bundle: t (p,), x (n,), xs (n,p)."""

    t: np.ndarray
    x: np.ndarray
    xs: np.ndarray

    @staticmethod
    def of(t, x, xs) -> "JetPoint":
        t = np.asarray(t, dtype=float).reshape(-1)
        x = np.asarray(x, dtype=float).reshape(-1)
        xs = np.asarray(xs, dtype=float)
        if xs.ndim != 2 or xs.shape != (x.size, t.size):
            raise ValueError(
                f"xs must have shape (n,p)=({x.size},{t.size}); got {xs.shape}"
            )
        return JetPoint(t, x, xs)

    @property
    def dims(self):
        return len(self.t), len(self.x)

    def key(self) -> bytes:
        return self.t.tobytes() + self.x.tobytes() + self.xs.tobytes()

    def flat(self) -> np.ndarray:
        return np.concatenate([self.t, self.x, self.xs.reshape(-1)])


# --------------------------------------------------------------------------
# set partitions and subset placements (cached combinatorics)
# --------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _placements(k: int, j: int):
    return tuple(itertools.combinations(range(k), j))


def _partitions_of(elems):
    if not elems:
        yield ()
        return
    first, rest = elems[0], elems[1:]
    for part in _partitions_of(rest):
        yield ((first,),) + part
        for bi in range(len(part)):
            yield part[:bi] + ((first,) + part[bi],) + part[bi + 1:]


@lru_cache(maxsize=None)
def _set_partitions(k: int):
    return tuple(_partitions_of(tuple(range(k))))


# --------------------------------------------------------------------------
# the Jet class
# --------------------------------------------------------------------------

class Jet:
    """Truncated multivariate Taylor value; see module docstring."""

    __slots__ = ("nvars", "order", "coeffs")

    def __init__(self, nvars, order, coeffs):
        self.nvars = nvars
        self.order = order
        self.coeffs = coeffs  # list of ndarrays, coeffs[k]: shape + (nvars,)*k

    # -- constructors ------------------------------------------------------

    @staticmethod
    def constant(value, nvars, order) -> "Jet":
        value = np.asarray(value, dtype=float)
        coeffs = [value] + [
            np.zeros(value.shape + (nvars,) * k) for k in range(1, order + 1)
        ]
        return Jet(nvars, order, coeffs)

    @staticmethod
    def variables(values, var_indices, nvars, order) -> "Jet":
        """A jet whose components are coordinate variables themselves."""
        values = np.asarray(values, dtype=float)
        var_indices = np.asarray(var_indices, dtype=int)
        if var_indices.shape != values.shape:
            raise ValueError("values and var_indices must have the same shape")
        coeffs = [values.copy()]
        if order >= 1:
            first = np.zeros(values.shape + (nvars,))
            flat = first.reshape(-1, nvars)
            flat[np.arange(flat.shape[0]), var_indices.reshape(-1)] = 1.0
            coeffs.append(first)
        for k in range(2, order + 1):
            coeffs.append(np.zeros(values.shape + (nvars,) * k))
        return Jet(nvars, order, coeffs)

    # -- basic structure ---------------------------------------------------

    @property
    def shape(self):
        return self.coeffs[0].shape

    @property
    def value(self):
        return self.coeffs[0]

    def truncated(self, order) -> "Jet":
        if order > self.order:
            raise OrderExceededError(
                f"requested order {order} exceeds stored order {self.order}"
            )
        if order == self.order:
            return self
        return Jet(self.nvars, order, self.coeffs[: order + 1])

    def is_constant(self) -> bool:
        return all(not c.any() for c in self.coeffs[1:])

    def __getitem__(self, idx) -> "Jet":
        if not isinstance(idx, tuple):
            idx = (idx,)
        return Jet(self.nvars, self.order, [c[idx] for c in self.coeffs])

    def reshape_components(self, newshape) -> "Jet":
        out = []
        for k, c in enumerate(self.coeffs):
            out.append(c.reshape(tuple(newshape) + (self.nvars,) * k))
        return Jet(self.nvars, self.order, out)

    # -- derivatives -------------------------------------------------------

    def partial(self, var: int) -> "Jet":
        """Jet of the partial derivative with respect to variable ``var``."""
        if self.order < 1:
            raise OrderExceededError("cannot differentiate an order-0 jet")
        return Jet(
            self.nvars,
            self.order - 1,
            [self.coeffs[k + 1][..., var] for k in range(self.order)],
        )

    def dblock(self, var_slice, newshape=None) -> "Jet":
        """Partial derivatives over a contiguous variable block.

        Appends one component axis (reshaped to ``newshape`` when given) that
        ranges over the block, e.g. d/dt for all temporal coordinates at once.
        """
        if self.order < 1:
            raise OrderExceededError("cannot differentiate an order-0 jet")
        cn = self.coeffs[0].ndim
        out = []
        for k in range(self.order):
            c = self.coeffs[k + 1][..., var_slice]  # shape + (N,)*k + (G,)
            c = np.moveaxis(c, -1, cn)
            if newshape is not None:
                c = c.reshape(c.shape[:cn] + tuple(newshape) + (self.nvars,) * k)
            out.append(c)
        return Jet(self.nvars, self.order - 1, out)

    # -- arithmetic --------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, Jet):
            if other.nvars != self.nvars:
                raise ValueError("jets over different variable sets")
            return other
        if isinstance(other, (int, float, np.floating, np.integer, np.ndarray)):
            return Jet.constant(other, self.nvars, self.order)
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        K = min(self.order, o.order)
        return Jet(self.nvars, K, [self.coeffs[k] + o.coeffs[k] for k in range(K + 1)])

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        K = min(self.order, o.order)
        return Jet(self.nvars, K, [self.coeffs[k] - o.coeffs[k] for k in range(K + 1)])

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o.__sub__(self)

    def __neg__(self):
        return Jet(self.nvars, self.order, [-c for c in self.coeffs])

    def __mul__(self, other):
        if isinstance(other, (int, float, np.floating, np.integer)):
            return Jet(self.nvars, self.order, [c * float(other) for c in self.coeffs])
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        K = min(self.order, o.order)
        return Jet(self.nvars, K, _leibniz_mul(self.coeffs, o.coeffs, K))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, float, np.floating, np.integer)):
            if float(other) == 0.0:
                raise DerivativeDomainError("division by zero")
            return self * (1.0 / float(other))
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self * o._reciprocal()

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o * self._reciprocal()

    def _reciprocal(self) -> "Jet":
        c = self.coeffs[0]
        if np.any(c == 0.0):
            raise DerivativeDomainError("division by zero")
        derivs = []
        for m in range(self.order + 1):
            derivs.append(((-1.0) ** m) * math.factorial(m) * c ** (-(m + 1)))
        return self.compose(derivs)

    def __pow__(self, expo):
        if isinstance(expo, Jet):
            if expo.is_constant() and expo.value.ndim == 0:
                expo = float(expo.value)
            else:
                base = self.coeffs[0]
                if np.any(base <= 0.0):
                    raise DerivativeDomainError(
                        "power with a varying exponent needs a positive base"
                    )
                return jexp(expo * jlog(self))
        if isinstance(expo, (int, np.integer)) or (
            isinstance(expo, (float, np.floating)) and float(expo).is_integer()
        ):
            return self._int_pow(int(expo))
        e = float(expo)
        c = self.coeffs[0]
        if np.any(c <= 0.0):
            raise DerivativeDomainError(
                "non-integer power of a non-positive base"
            )
        derivs = []
        for m in range(self.order + 1):
            fac = 1.0
            for r in range(m):
                fac *= e - r
            derivs.append(fac * c ** (e - m))
        return self.compose(derivs)

    def _int_pow(self, e: int) -> "Jet":
        if e == 0:
            return Jet.constant(np.ones(self.shape), self.nvars, self.order)
        if e < 0:
            return self._int_pow(-e)._reciprocal()
        result = None
        base = self
        while e:
            if e & 1:
                result = base if result is None else result * base
            e >>= 1
            if e:
                base = base * base
        return result

    # -- composition (Faa di Bruno) ----------------------------------------

    def compose(self, derivs) -> "Jet":
        """Apply a scalar function given its derivatives at ``self.value``.

        ``derivs[m]`` must hold the m-th derivative of the outer function,
        evaluated elementwise at the jet's value, for m = 0..order.  Faa di
        Bruno over set partitions of the k differentiation slots.
        """
        K = self.order
        N = self.nvars
        cn = self.coeffs[0].ndim
        out = [np.array(np.asarray(derivs[0], dtype=float), copy=True)]
        for k in range(1, K + 1):
            acc = np.zeros(
                np.broadcast_shapes(
                    np.asarray(derivs[0]).shape, self.coeffs[0].shape
                )
                + (N,) * k
            )
            for part in _set_partitions(k):
                m = len(part)
                term = np.asarray(derivs[m], dtype=float)
                term = term.reshape(term.shape + (1,) * k)
                used = 0
                positions = []
                for block in part:
                    b = len(block)
                    blk = self.coeffs[b]
                    expand = blk.reshape(
                        blk.shape[:cn]
                        + (1,) * used
                        + blk.shape[cn:]
                        + (1,) * (k - used - b)
                    )
                    term = term * expand
                    positions.extend(block)
                    used += b
                if positions != sorted(positions):
                    src = [q - k for q in range(k)]
                    dst = [q - k for q in positions]
                    term = np.moveaxis(term, src, dst)
                acc = acc + term
            out.append(acc)
        return Jet(N, K, out)

    # -- misc ----------------------------------------------------------------

    def transpose(self, perm) -> "Jet":
        cn = self.coeffs[0].ndim
        if len(perm) != cn:
            raise ValueError("perm must cover all component axes")
        out = []
        for k, c in enumerate(self.coeffs):
            out.append(np.transpose(c, tuple(perm) + tuple(range(cn, cn + k))))
        return Jet(self.nvars, self.order, out)

    def __float__(self):
        if self.coeffs[0].ndim:
            raise TypeError("only scalar jets convert to float")
        return float(self.coeffs[0])

    def __repr__(self):
        return (
            f"Jet(order={self.order}, nvars={self.nvars}, "
            f"shape={self.shape}, value={self.value!r})"
        )


def _leibniz_mul(a, b, K):
    """Raw-coefficient product by the multilinear Leibniz rule.

    For each order k the k differentiation slots are split between the two
    factors in every possible way; ``moveaxis`` routes each factor's jet axes
    to its chosen subset of slots.
    """
    nvars = a[1].shape[-1] if K >= 1 else 0
    base_shape = np.broadcast_shapes(a[0].shape, b[0].shape)
    out = []
    for k in range(K + 1):
        acc = None
        for j in range(k + 1):
            A = a[j]
            B = b[k - j]
            if j and not A.any():
                continue
            if (k - j) and not B.any():
                continue
            A_e = A.reshape(A.shape + (1,) * (k - j))
            bc = B.ndim - (k - j)
            B_e = B.reshape(B.shape[:bc] + (1,) * j + B.shape[bc:])
            P = A_e * B_e
            for S in _placements(k, j):
                if S == tuple(range(j)):
                    term = P
                else:
                    term = np.moveaxis(
                        P, [m - k for m in range(j)], [s - k for s in S]
                    )
                acc = term if acc is None else acc + term
        if acc is None:
            acc = np.zeros(base_shape + (nvars,) * k)
        out.append(acc)
    return out


# --------------------------------------------------------------------------
# jet-aware tensor helpers
# --------------------------------------------------------------------------

_LETTERS = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"


def _as_jet(x, like: Jet) -> Jet:
    if isinstance(x, Jet):
        if x.nvars != like.nvars:
            raise ValueError("jets over different variable sets")
        return x
    return Jet.constant(x, like.nvars, like.order)


def jet_einsum(spec: str, a, b) -> Jet:
    """Two-operand einsum over component axes with the Leibniz rule on jets.

    ``spec`` addresses only the component axes, e.g. ``"gmb,im->gib"``.
    Either operand may be a plain ndarray (treated as a constant).
    """
    ins, outs = spec.split("->")
    sa, sb = ins.split(",")
    a_is_jet = isinstance(a, Jet)
    b_is_jet = isinstance(b, Jet)
    if not (a_is_jet or b_is_jet):
        raise TypeError("at least one operand must be a Jet")
    used = set(sa) | set(sb) | set(outs)
    pool = [c for c in _LETTERS if c not in used]
    if a_is_jet and not b_is_jet:
        K, N = a.order, a.nvars
        out = []
        for k in range(K + 1):
            ja = "".join(pool[:k])
            out.append(np.einsum(f"{sa}{ja},{sb}->{outs}{ja}", a.coeffs[k], b))
        return Jet(N, K, out)
    if b_is_jet and not a_is_jet:
        K, N = b.order, b.nvars
        out = []
        for k in range(K + 1):
            jb = "".join(pool[:k])
            out.append(np.einsum(f"{sa},{sb}{jb}->{outs}{jb}", a, b.coeffs[k]))
        return Jet(N, K, out)
    if a.nvars != b.nvars:
        raise ValueError("jets over different variable sets")
    K = min(a.order, b.order)
    N = a.nvars
    out = []
    for k in range(K + 1):
        acc = None
        for j in range(k + 1):
            A = a.coeffs[j]
            B = b.coeffs[k - j]
            if j and not A.any():
                continue
            if (k - j) and not B.any():
                continue
            ja = "".join(pool[:j])
            jb = "".join(pool[j:k])
            P = np.einsum(f"{sa}{ja},{sb}{jb}->{outs}{ja}{jb}", A, B)
            for S in _placements(k, j):
                if S == tuple(range(j)):
                    term = P
                else:
                    term = np.moveaxis(
                        P, [m - k for m in range(j)], [s - k for s in S]
                    )
                acc = term if acc is None else acc + term
        if acc is None:
            shape_probe = np.einsum(
                f"{sa},{sb}->{outs}", a.coeffs[0], b.coeffs[0]
            ).shape
            acc = np.zeros(shape_probe + (N,) * k)
        out.append(acc)
    return Jet(N, K, out)


def jet_linear(spec: str, a: Jet) -> Jet:
    """Single-operand einsum (trace, transpose, diagonal) applied per order."""
    ins, outs = spec.split("->")
    used = set(ins) | set(outs)
    pool = [c for c in _LETTERS if c not in used]
    out = []
    for k, c in enumerate(a.coeffs):
        j = "".join(pool[:k])
        out.append(np.einsum(f"{ins}{j}->{outs}{j}", c))
    return Jet(a.nvars, a.order, out)


def jet_stack(jets) -> Jet:
    """Stack scalar-compatible jets along a new leading component axis."""
    jets = list(jets)
    first = next(j for j in jets if isinstance(j, Jet))
    jets = [_as_jet(j, first) for j in jets]
    K = min(j.order for j in jets)
    out = [np.stack([j.coeffs[k] for j in jets]) for k in range(K + 1)]
    return Jet(first.nvars, K, out)


def jet_transpose(a: Jet, perm) -> Jet:
    return a.transpose(perm)


def jet_matrix_inverse(a: Jet, cond_limit=1e12) -> Jet:
    """Inverse of a jet-valued square matrix (component shape (m, m)).

    Newton iteration X <- X (2I - A X); the number of correct Taylor orders
    doubles each step, so ceil(log2(order+1)) steps suffice.
    """
    from .errors import SingularMetricError

    a0 = a.coeffs[0]
    if a0.ndim != 2 or a0.shape[0] != a0.shape[1]:
        raise ValueError("jet_matrix_inverse expects a square matrix jet")
    cond = np.linalg.cond(a0)
    if not np.isfinite(cond) or cond > cond_limit:
        raise SingularMetricError(
            f"matrix is singular or ill-conditioned (cond={cond:.3e})",
            determinant=float(np.linalg.det(a0)),
            condition=float(cond),
        )
    x = Jet.constant(np.linalg.inv(a0), a.nvars, a.order)
    if a.order == 0:
        return x
    eye = np.eye(a0.shape[0])
    steps = max(1, math.ceil(math.log2(a.order + 1)))
    for _ in range(steps):
        ax = jet_einsum("im,mj->ij", a, x)
        corr = Jet(ax.nvars, ax.order, [eye - ax.coeffs[0]] + [-c for c in ax.coeffs[1:]])
        x = x + jet_einsum("im,mj->ij", x, corr)
    return x


# --------------------------------------------------------------------------
# generic math that accepts floats or jets
# --------------------------------------------------------------------------

def jexp(x):
    if isinstance(x, Jet):
        e = np.exp(x.coeffs[0])
        return x.compose([e] * (x.order + 1))
    return math.exp(float(x))


def _require(cond, msg):
    if not cond:
        raise DerivativeDomainError(msg)


def jlog(x):
    if isinstance(x, Jet):
        c = x.coeffs[0]
        _require(np.all(c > 0.0), "log of a non-positive value")
        derivs = [np.log(c)]
        for m in range(1, x.order + 1):
            derivs.append(((-1.0) ** (m - 1)) * math.factorial(m - 1) * c ** (-m))
        return x.compose(derivs)
    xf = float(x)
    _require(xf > 0.0, "log of a non-positive value")
    return math.log(xf)


def jsin(x):
    if isinstance(x, Jet):
        c = x.coeffs[0]
        cycle = [np.sin(c), np.cos(c), -np.sin(c), -np.cos(c)]
        return x.compose([cycle[m % 4] for m in range(x.order + 1)])
    return math.sin(float(x))


def jcos(x):
    if isinstance(x, Jet):
        c = x.coeffs[0]
        cycle = [np.cos(c), -np.sin(c), -np.cos(c), np.sin(c)]
        return x.compose([cycle[m % 4] for m in range(x.order + 1)])
    return math.cos(float(x))


def jsqrt(x):
    if isinstance(x, Jet):
        c = x.coeffs[0]
        if x.order >= 1:
            _require(np.all(c > 0.0), "sqrt needs a positive argument")
        else:
            _require(np.all(c >= 0.0), "sqrt of a negative value")
        derivs = []
        for m in range(x.order + 1):
            fac = 1.0
            for r in range(m):
                fac *= 0.5 - r
            derivs.append(fac * c ** (0.5 - m))
        return x.compose(derivs)
    xf = float(x)
    _require(xf >= 0.0, "sqrt of a negative value")
    return math.sqrt(xf)


@lru_cache(maxsize=None)
def _tanh_poly(m: int):
    """Coefficients (low to high) of Q_m with tanh^(m) = Q_m(tanh)."""
    from numpy.polynomial import polynomial as P

    if m == 0:
        return (0.0, 1.0)
    prev = np.asarray(_tanh_poly(m - 1))
    dprev = P.polyder(prev)
    out = P.polymul(dprev, np.asarray((1.0, 0.0, -1.0)))
    return tuple(float(v) for v in out)


def jtanh(x):
    if isinstance(x, Jet):
        from numpy.polynomial import polynomial as P

        u = np.tanh(x.coeffs[0])
        derivs = [P.polyval(u, np.asarray(_tanh_poly(m))) for m in range(x.order + 1)]
        return x.compose(derivs)
    return math.tanh(float(x))


def jabs(x):
    if isinstance(x, Jet):
        c = x.coeffs[0]
        derivs = [np.abs(c), np.sign(c)] + [np.zeros_like(c)] * max(0, x.order - 1)
        return x.compose(derivs[: x.order + 1])
    return abs(float(x))


# --------------------------------------------------------------------------
# scalar fields and differentiation config
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class DiffConfig:
    """Differentiation settings.

    ``mode`` selects the default path of :func:`eval_derivs`; geometry always
    differentiates through Taylor arithmetic, finite differences exist as the
    independent cross-check.  ``max_order`` is the caller-facing derivative
    budget (1..3).
    """

    mode: str = "taylor"
    fd_step_1: float = 1e-5
    fd_step_2: float = 1e-4
    max_order: int = 3

    def __post_init__(self):
        if self.mode not in ("taylor", "central-fd"):
            raise ValueError(f"unknown differentiation mode {self.mode!r}")
        if not (self.fd_step_1 > 0 and self.fd_step_2 > 0):
            raise ValueError("finite-difference steps must be positive")
        if not 1 <= self.max_order <= 3:
            raise ValueError("max_order must be between 1 and 3")


class SeededPoint:
    """Coordinates handed to a scalar field: floats or scalar jets."""

    __slots__ = ("t", "x", "xs", "p", "n")

    def __init__(self, t, x, xs):
        self.t = t
        self.x = x
        self.xs = xs
        self.p = len(t)
        self.n = len(x)


class ScalarField:
    """A real-valued function of the jet coordinates.

    ``deps`` declares which coordinate groups the field may read ("t", "x",
    "xs").  Evaluation receives a :class:`SeededPoint` whose entries are
    floats or scalar jets; coordinates outside ``deps`` are seeded as
    constants, so their derivatives vanish identically.
    """

    deps: frozenset = frozenset(("t", "x", "xs"))

    def __call__(self, spt: SeededPoint):
        raise NotImplementedError

    @property
    def name(self) -> str:
        return getattr(self, "_name", self.__class__.__name__)


class PyField(ScalarField):
    """Wrap a plain python callable as a scalar field."""

    def __init__(self, fn, deps, name=None):
        self._fn = fn
        self.deps = frozenset(deps)
        bad = self.deps - {"t", "x", "xs"}
        if bad:
            raise ValueError(f"unknown dependency groups {sorted(bad)}")
        self._name = name or getattr(fn, "__name__", "field")

    def __call__(self, spt: SeededPoint):
        return self._fn(spt)


def seed_point(pt: JetPoint, order: int, deps=frozenset(("t", "x", "xs"))) -> SeededPoint:
    """Seed a point with scalar jets; non-dependency groups become constants."""
    p, n = pt.dims
    N = coord_count(p, n)

    def mk(value, cid, active):
        # at order 0 there is no first-order slot; everything is a constant
        if active and order >= 1:
            j = Jet.constant(value, N, order)
            j.coeffs[1][coord_index(p, n, cid)] = 1.0
            return j
        return Jet.constant(value, N, order)

    t = [mk(pt.t[a], ("t", a), "t" in deps) for a in range(p)]
    x = [mk(pt.x[i], ("x", i), "x" in deps) for i in range(n)]
    xs = [
        [mk(pt.xs[i, a], ("xs", i, a), "xs" in deps) for a in range(p)]
        for i in range(n)
    ]
    return SeededPoint(t, x, xs)


def float_point(pt: JetPoint) -> SeededPoint:
    p, n = pt.dims
    return SeededPoint(
        [float(v) for v in pt.t],
        [float(v) for v in pt.x],
        [[float(pt.xs[i, a]) for a in range(p)] for i in range(n)],
    )


def _field_value(res) -> float:
    if isinstance(res, Jet):
        return float(res.value)
    return float(res)


def eval_derivs(f: ScalarField, pt: JetPoint, wrt, config: DiffConfig) -> float:
    """Mixed partial of ``f`` at ``pt`` with respect to the coordinate ids in
    ``wrt`` (order = len(wrt)).  Exact in taylor mode, estimated in fd mode.
    """
    order = len(wrt)
    if order > config.max_order:
        raise OrderExceededError(
            f"derivative order {order} exceeds budget {config.max_order}"
        )
    if order == 0:
        return _field_value(f(float_point(pt)))
    if config.mode == "central-fd":
        return fd_partial(f, pt, wrt, config)
    p, n = pt.dims
    spt = seed_point(pt, order, f.deps)
    res = f(spt)
    if not isinstance(res, Jet):
        return 0.0
    cur = res
    for cid in wrt:
        cur = cur.partial(coord_index(p, n, cid))
    return float(cur.value)


def _shifted(pt: JetPoint, cid, delta) -> JetPoint:
    p, n = pt.dims
    t, x, xs = pt.t.copy(), pt.x.copy(), pt.xs.copy()
    kind = cid[0]
    if kind == "t":
        t[cid[1]] += delta
    elif kind == "x":
        x[cid[1]] += delta
    else:
        xs[cid[1], cid[2]] += delta
    return JetPoint(t, x, xs)


def _coord_value(pt: JetPoint, cid) -> float:
    kind = cid[0]
    if kind == "t":
        return float(pt.t[cid[1]])
    if kind == "x":
        return float(pt.x[cid[1]])
    return float(pt.xs[cid[1], cid[2]])


def fd_partial(f: ScalarField, pt: JetPoint, wrt, config: DiffConfig) -> float:
    """Central finite-difference estimate of a first or second partial.

    Steps are relative: step * max(1, |coordinate|).
    """
    order = len(wrt)
    if order not in (1, 2):
        raise OrderExceededError("finite differences support orders 1 and 2 only")

    def ev(q: JetPoint) -> float:
        return _field_value(f(float_point(q)))

    if order == 1:
        (cid,) = wrt
        h = config.fd_step_1 * max(1.0, abs(_coord_value(pt, cid)))
        return (ev(_shifted(pt, cid, h)) - ev(_shifted(pt, cid, -h))) / (2 * h)
    c1, c2 = wrt
    h1 = config.fd_step_2 * max(1.0, abs(_coord_value(pt, c1)))
    if c1 == c2:
        return (
            ev(_shifted(pt, c1, h1)) - 2 * ev(pt) + ev(_shifted(pt, c1, -h1))
        ) / (h1 * h1)
    h2 = config.fd_step_2 * max(1.0, abs(_coord_value(pt, c2)))
    fpp = ev(_shifted(_shifted(pt, c1, h1), c2, h2))
    fpm = ev(_shifted(_shifted(pt, c1, h1), c2, -h2))
    fmp = ev(_shifted(_shifted(pt, c1, -h1), c2, h2))
    fmm = ev(_shifted(_shifted(pt, c1, -h1), c2, -h2))
    return (fpp - fpm - fmp + fmm) / (4 * h1 * h2)


@dataclass
class AgreementReport:
    """Worst deviation between the Taylor and finite-difference paths."""

    max_rel_dev: float
    worst_point: int
    worst_wrt: tuple
    n_comparisons: int
    nan_flags: list


def _dep_coords(f: ScalarField, p: int, n: int):
    out = []
    if "t" in f.deps:
        out += [("t", a) for a in range(p)]
    if "x" in f.deps:
        out += [("x", i) for i in range(n)]
    if "xs" in f.deps:
        out += [("xs", i, a) for i in range(n) for a in range(p)]
    return out


def check_grad(f: ScalarField, pts, config: DiffConfig) -> AgreementReport:
    """Compare first and second partials between taylor and fd at each point."""
    worst = 0.0
    worst_pt = -1
    worst_wrt = ()
    count = 0
    nans = []
    tay = DiffConfig(mode="taylor", fd_step_1=config.fd_step_1,
                     fd_step_2=config.fd_step_2, max_order=config.max_order)
    for ip, pt in enumerate(pts):
        p, n = pt.dims
        coords = _dep_coords(f, p, n)
        probes = [(c,) for c in coords]
        probes += [
            (coords[i], coords[j])
            for i in range(len(coords))
            for j in range(i, len(coords))
        ]
        for wrt in probes:
            a = eval_derivs(f, pt, list(wrt), tay)
            b = fd_partial(f, pt, list(wrt), config)
            if not (np.isfinite(a) and np.isfinite(b)):
                nans.append((ip, wrt))
                continue
            dev = abs(a - b) / max(1.0, abs(a), abs(b))
            count += 1
            if dev > worst:
                worst, worst_pt, worst_wrt = dev, ip, wrt
    return AgreementReport(worst, worst_pt, worst_wrt, count, nans)
