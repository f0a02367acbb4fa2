"""Polynomial functions on (R^n, gamma_n) in the orthonormal Hermite basis.

``h_k = He_k / sqrt(k!)`` with ``He_k`` the probabilists' Hermite polynomials,
tensorized over coordinates.  In this basis the Ornstein-Uhlenbeck semigroup
multiplies ``c_alpha`` by ``exp(-t |alpha|)`` and ``d/dx_i`` sends ``h_alpha``
to ``sqrt(alpha_i) h_{alpha - e_i}``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from numpy.polynomial import hermite_e

from .errors import CapacityError, ConfigurationError, ParameterError, ParseError, PreconditionError
from .inequalities import InequalityReport, log_gain
from .spectral import BoundCheck

MAX_DIM = 6
MAX_DEGREE = 8
MAX_QUAD_ORDER = 40
DEFAULT_QUAD_ORDER = 24
# tensor grids are kept below this many nodes, line-exact L1 below this many lines
_GRID_BUDGET = 2_000_000
_LINE_BUDGET = 50_000


def _total_degree(shape: tuple) -> np.ndarray:
    grids = np.indices(shape)
    return grids.sum(axis=0)


class HermiteExpansion:
    """Finite Hermite expansion with total degree at most ``maxdeg``."""

    __slots__ = ("n", "maxdeg", "coeffs")

    def __init__(self, coeffs: np.ndarray, maxdeg: int | None = None):
        c = np.array(coeffs, dtype=np.float64)
        n = c.ndim
        if not 1 <= n <= MAX_DIM:
            raise CapacityError(f"Hermite expansions support 1 <= n <= {MAX_DIM}, got {n}")
        if len(set(c.shape)) != 1:
            raise PreconditionError(f"coefficient array must be cubic, got shape {c.shape}")
        side = c.shape[0] - 1
        maxdeg = side if maxdeg is None else maxdeg
        if not 0 <= maxdeg <= MAX_DEGREE or side != maxdeg:
            raise CapacityError(f"degree bound {maxdeg} outside 0..{MAX_DEGREE} or mismatched")
        if np.any(c[_total_degree(c.shape) > maxdeg] != 0):
            raise PreconditionError(f"coefficients beyond total degree {maxdeg}")
        if not np.all(np.isfinite(c)):
            raise PreconditionError("non-finite coefficient")
        c.flags.writeable = False
        self.n = n
        self.maxdeg = maxdeg
        self.coeffs = c

    @classmethod
    def zeros(cls, n: int, maxdeg: int) -> HermiteExpansion:
        if not 1 <= n <= MAX_DIM:
            raise CapacityError(f"Hermite expansions support 1 <= n <= {MAX_DIM}, got {n}")
        return cls(np.zeros((maxdeg + 1,) * n), maxdeg)

    @classmethod
    def from_dict(cls, terms: dict, n: int, maxdeg: int) -> HermiteExpansion:
        c = np.zeros((maxdeg + 1,) * n)
        for alpha, val in terms.items():
            alpha = tuple(int(a) for a in alpha)
            if len(alpha) != n or min(alpha) < 0 or sum(alpha) > maxdeg:
                raise PreconditionError(f"multi-index {alpha} invalid for n={n}, maxdeg={maxdeg}")
            c[alpha] += val
        return cls(c, maxdeg)

    @classmethod
    def from_monomials(cls, terms: dict, n: int, maxdeg: int | None = None) -> HermiteExpansion:
        """Convert ``{alpha: a}`` meaning ``sum a x^alpha`` into the Hermite basis."""
        deg = max(sum(a) for a in terms) if terms else 0
        maxdeg = deg if maxdeg is None else maxdeg
        c = np.zeros((maxdeg + 1,) * n)
        norms = np.sqrt([math.factorial(k) for k in range(maxdeg + 1)])
        for alpha, val in terms.items():
            if len(alpha) != n or sum(alpha) > maxdeg:
                raise PreconditionError(f"monomial {alpha} invalid for n={n}, maxdeg={maxdeg}")
            factor = np.array(val, dtype=np.float64)
            for a in alpha:
                he = hermite_e.poly2herme([0.0] * a + [1.0])
                axis = np.zeros(maxdeg + 1)
                axis[: he.size] = he * norms[: he.size]
                factor = np.multiply.outer(factor, axis)
            c += factor
        return cls(c, maxdeg)

    @classmethod
    def random(cls, n: int, maxdeg: int, seed: int = 0, decay: float = 0.0) -> HermiteExpansion:
        """Gaussian coefficients, scaled by ``exp(-decay |alpha|)``."""
        rng = np.random.Generator(np.random.Philox(seed))
        shape = (maxdeg + 1,) * n
        deg = _total_degree(shape)
        c = rng.standard_normal(shape) * np.exp(-decay * deg)
        c[deg > maxdeg] = 0.0
        return cls(c, maxdeg)

    def to_dict(self) -> dict:
        idx = np.argwhere(self.coeffs != 0)
        return {tuple(int(a) for a in row): float(self.coeffs[tuple(row)]) for row in idx}

    def mean(self) -> float:
        return float(self.coeffs[(0,) * self.n])

    def norm2_squared(self) -> float:
        return math.fsum(self.coeffs.ravel() ** 2)

    def variance(self) -> float:
        sq = self.coeffs.ravel() ** 2
        return math.fsum(sq[1:])

    def level_weights(self) -> np.ndarray:
        """``W[m] = sum_{|alpha| = m} c_alpha^2``."""
        deg = _total_degree(self.coeffs.shape).ravel()
        return np.bincount(deg, self.coeffs.ravel() ** 2, minlength=self.maxdeg + 1)[: self.maxdeg + 1]

    def __add__(self, other: HermiteExpansion) -> HermiteExpansion:
        if other.n != self.n:
            raise PreconditionError("dimension mismatch")
        d = max(self.maxdeg, other.maxdeg)
        return HermiteExpansion(_pad(self.coeffs, d) + _pad(other.coeffs, d), d)

    def __mul__(self, a: float) -> HermiteExpansion:
        return HermiteExpansion(self.coeffs * float(a), self.maxdeg)

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if not isinstance(other, HermiteExpansion):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.coeffs, other.coeffs)

    def __repr__(self) -> str:
        return f"HermiteExpansion(n={self.n}, maxdeg={self.maxdeg}, terms={len(self.to_dict())})"

    def evaluate(self, points) -> np.ndarray:
        """Values at an (M, n) array of points."""
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        if pts.shape[1] != self.n:
            raise PreconditionError(f"points must have {self.n} columns")
        acc = None
        for i in range(self.n):
            h = hermite_table(self.maxdeg, pts[:, i]).T  # (M, d+1)
            if acc is None:
                acc = np.tensordot(h, self.coeffs, axes=(1, 0))
            else:
                acc = np.einsum("mk,mk...->m...", h, acc)
        return acc

    def evaluate_grid(self, nodes: np.ndarray) -> np.ndarray:
        """Values on the tensor grid ``nodes x ... x nodes`` (shape (q,)*n)."""
        h = hermite_table(self.maxdeg, nodes)  # (d+1, q)
        acc = self.coeffs
        for _ in range(self.n):
            # contracting axis 0 and appending the node axis cycles through all axes
            acc = np.tensordot(acc, h, axes=(0, 0))
        return acc


def _pad(c: np.ndarray, d: int) -> np.ndarray:
    if c.shape[0] == d + 1:
        return c
    return np.pad(c, [(0, d + 1 - c.shape[0])] * c.ndim)


def hermite_table(maxdeg: int, x: np.ndarray) -> np.ndarray:
    """``H[k, m] = h_k(x_m)`` for k = 0..maxdeg via the three-term recurrence."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty((maxdeg + 1, x.size))
    out[0] = 1.0
    if maxdeg >= 1:
        out[1] = x
    for k in range(1, maxdeg):
        # He_{k+1} = x He_k - k He_{k-1}, rescaled to unit norm
        out[k + 1] = (x * out[k] - math.sqrt(k) * out[k - 1]) / math.sqrt(k + 1)
    return out


# ---------------------------------------------------------------------------
# calculus


def hermite_partial(f: HermiteExpansion, i: int) -> HermiteExpansion:
    """Exact ``d f / d x_i`` (degree bound unchanged)."""
    if not 1 <= i <= f.n:
        raise IndexError(f"coordinate {i} outside 1..{f.n}")
    return HermiteExpansion(_partial_array(f.coeffs, i - 1), f.maxdeg)


def _partial_array(c: np.ndarray, axis: int) -> np.ndarray:
    side = c.shape[axis]
    out = np.zeros_like(c)
    shape = [1] * c.ndim
    shape[axis] = side - 1
    w = np.sqrt(np.arange(1, side, dtype=np.float64)).reshape(shape)
    src = [slice(None)] * c.ndim
    dst = [slice(None)] * c.ndim
    src[axis] = slice(1, None)
    dst[axis] = slice(0, side - 1)
    out[tuple(dst)] = c[tuple(src)] * w
    return out


def ou_semigroup(f: HermiteExpansion, t: float) -> HermiteExpansion:
    if not t >= 0:
        raise ParameterError(f"time must be >= 0, got {t}")
    deg = _total_degree(f.coeffs.shape)
    return HermiteExpansion(f.coeffs * np.exp(-t * deg), f.maxdeg)


def ou_generator(f: HermiteExpansion) -> HermiteExpansion:
    """``L f = Delta f - x . grad f``, diagonal with eigenvalue ``-|alpha|``."""
    deg = _total_degree(f.coeffs.shape)
    return HermiteExpansion(-deg * f.coeffs, f.maxdeg)


def inner(f: HermiteExpansion, g: HermiteExpansion) -> float:
    d = max(f.maxdeg, g.maxdeg)
    return math.fsum((_pad(f.coeffs, d) * _pad(g.coeffs, d)).ravel())


def gradient_inner(f: HermiteExpansion, g: HermiteExpansion) -> float:
    """``int grad f . grad g d gamma`` through the ladder rule."""
    return math.fsum(inner(hermite_partial(f, i), hermite_partial(g, i)) for i in range(1, f.n + 1))


def derivative_multisets(f: HermiteExpansion, order: int):
    """Yield ``(multiset, multiplicity, coefficient array)`` for all order-k partials.

    A multiset is a nondecreasing tuple of 1-based coordinates; its
    multiplicity is the number of ordered tuples with that content.  Arrays
    shrink as the degree drops, so ``shape[0] - 1`` is the remaining degree.
    """
    level = {(): f.coeffs}
    for _ in range(order):
        nxt = {}
        for ms, arr in level.items():
            start = ms[-1] if ms else 1
            for i in range(start, f.n + 1):
                d = _partial_array(arr, i - 1)
                if d.shape[0] > 1:
                    d = d[(slice(0, -1),) * d.ndim]
                nxt[ms + (i,)] = d
        level = nxt
    fact = math.factorial(order)
    for ms, arr in level.items():
        counts = [ms.count(i) for i in set(ms)]
        mult = fact // math.prod(math.factorial(c) for c in counts)
        yield ms, mult, arr


def grad_moment(f: HermiteExpansion, k: int) -> float:
    """``|int nabla^k f d gamma|^2`` summed over ordered k-tuples.

    Equal to ``k! sum_{|alpha| = k} c_alpha^2``: a tuple's mean picks out
    ``sqrt(alpha!) c_alpha`` and ``k!/alpha!`` tuples share each alpha.
    """
    if k < 1:
        raise ParameterError(f"order must be >= 1, got {k}")
    if k > f.maxdeg:
        return 0.0
    return math.factorial(k) * float(f.level_weights()[k])


# ---------------------------------------------------------------------------
# the variance expansion


def remainder_time_integral(p: int, m: int) -> Fraction:
    """``int_0^inf e^{-2t} (1 - e^{-2t})^p e^{-2tm} dt`` by binomial expansion."""
    return sum(
        (Fraction((-1) ** j * math.comb(p, j), 2 * (1 + j + m)) for j in range(p + 1)),
        Fraction(0),
    )


@dataclass(frozen=True)
class TaylorReport:
    p: int
    variance: float
    moments: tuple  # (1/k!) |int nabla^k f|^2 for k = 1..p
    remainder: float

    @property
    def rhs(self) -> float:
        return math.fsum(self.moments) + self.remainder

    @property
    def residual(self) -> float:
        return abs(self.variance - self.rhs)


def variance_taylor_check(f: HermiteExpansion, p: int, tol: float = 1e-9) -> TaylorReport:
    """Evaluate both sides of the order-p variance expansion with remainder.

    The remainder ``(2/p!) int_0^inf e^{-2t} (1-e^{-2t})^p sum ||P_t d^{p+1} f||^2 dt``
    runs over ordered (p+1)-tuples of partials, each damped level by level.
    """
    if not 1 <= p <= MAX_DEGREE + 1:
        raise ParameterError(f"order p must lie in 1..{MAX_DEGREE + 1}, got {p}")
    moments = tuple(grad_moment(f, k) / math.factorial(k) for k in range(1, p + 1))
    acc = []
    for _, mult, arr in derivative_multisets(f, p + 1):
        sq = arr.ravel() ** 2
        deg = _total_degree(arr.shape).ravel()
        levels = np.bincount(deg, sq)
        for m, w in enumerate(levels):
            if w:
                acc.append(mult * w * float(remainder_time_integral(p, m)))
    remainder = 2.0 / math.factorial(p) * math.fsum(acc)
    rep = TaylorReport(p, f.variance(), moments, remainder)
    if rep.residual > tol * max(1.0, rep.variance):
        raise AssertionError(f"variance expansion residual {rep.residual:.3e} exceeds {tol}")
    return rep


def a_k_closed(k: int, t):
    return 2.0 / math.factorial(k) * np.exp(-2 * np.asarray(t)) * (1 - np.exp(-2 * np.asarray(t))) ** k


@dataclass(frozen=True)
class CoefficientReport:
    kmax: int
    recursion_residual: float
    scalar_residual: float
    scalars: tuple  # a_0 .. a_kmax
    time_integrals: tuple  # int_0^inf a_k(t) dt, equal to 1/(k+1)!

    @property
    def worst(self) -> float:
        return max(self.recursion_residual, self.scalar_residual)


def a_k_coefficients_check(kmax: int, grid=None) -> CoefficientReport:
    """Check ``a_k(t) = a_0(t) int_0^t a_{k-1}`` against the closed form on a
    time grid, and the scalars ``a_k = 1/k!``, by adaptive quadrature.

    The scalars follow ``a_1 = int_0^inf a_0(t) dt``: for k >= 1 the scalar
    ``a_k`` integrates ``a_{k-1}(t)``, and ``a_0 = int a_0(t) dt = 1``.
    """
    from scipy import integrate

    if not 0 <= kmax <= 10:
        raise ParameterError(f"kmax must lie in 0..10, got {kmax}")
    ts = np.linspace(0.0, 6.0, 25) if grid is None else np.asarray(grid, dtype=float)
    rec = 0.0
    for k in range(1, kmax + 1):
        for t in ts:
            inner_int, _ = integrate.quad(lambda u: float(a_k_closed(k - 1, u)), 0.0, t,
                                          epsabs=1e-14, epsrel=1e-13)
            rec = max(rec, abs(float(a_k_closed(0, t)) * inner_int - float(a_k_closed(k, t))))
    ints = []
    for k in range(kmax + 1):
        val, _ = integrate.quad(lambda u: float(a_k_closed(k, u)), 0.0, np.inf,
                                epsabs=1e-14, epsrel=1e-13, limit=200)
        ints.append(val)
    scalars = [ints[0]] + ints[: kmax]
    worst = max(abs(a - 1.0 / math.factorial(k)) for k, a in enumerate(scalars))
    return CoefficientReport(kmax, rec, worst, tuple(scalars), tuple(ints))


def inverse_poincare_check(f: HermiteExpansion, tol: float = 1e-12) -> BoundCheck:
    """``|int grad f d gamma|^2 <= Var(f)``, with equality exactly for affine f."""
    lhs = grad_moment(f, 1) if f.maxdeg >= 1 else 0.0
    var = f.variance()
    affine = bool(np.all(f.coeffs[_total_degree(f.coeffs.shape) >= 2] == 0))
    return BoundCheck("inverse_poincare", lhs, var, tol, {"affine": affine})


# ---------------------------------------------------------------------------
# quadrature and norms


@dataclass(frozen=True)
class QuadratureRule:
    """Tensor Gauss-Hermite rule with weights summing to one (standard Gaussian)."""

    n: int
    order: int
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    @classmethod
    def build(cls, n: int, order: int = DEFAULT_QUAD_ORDER) -> QuadratureRule:
        if not 1 <= order <= MAX_QUAD_ORDER:
            raise ParameterError(f"per-axis order must lie in 1..{MAX_QUAD_ORDER}, got {order}")
        if order**n > 4 * _GRID_BUDGET:
            raise CapacityError(f"{order}^{n} quadrature nodes is too many")
        x, w = hermite_e.hermegauss(order)
        return cls(n, order, x, w / w.sum())

    @classmethod
    def for_expansion(cls, f: HermiteExpansion, order: int = DEFAULT_QUAD_ORDER) -> QuadratureRule:
        """The default order, lowered to keep ``order^(n-1)`` grid lines within
        budget but never below exactness for degree ``2 * maxdeg``."""
        cap = order if f.n == 1 else int(math.floor(_LINE_BUDGET ** (1.0 / (f.n - 1)) + 1e-9))
        return cls.build(f.n, max(f.maxdeg + 1, min(order, cap)))

    @property
    def exact_degree(self) -> int:
        return 2 * self.order - 1

    def grid_weights(self) -> np.ndarray:
        w = self.weights
        out = w
        for _ in range(self.n - 1):
            out = np.multiply.outer(out, w)
        return out

    def integrate(self, grid_values: np.ndarray) -> float:
        return math.fsum((grid_values * self.grid_weights()).ravel())

    def lp_norm(self, f: HermiteExpansion, p: float) -> float:
        if not p >= 1:
            raise ParameterError(f"L^p norm needs p >= 1, got {p}")
        vals = np.abs(f.evaluate_grid(self.nodes))
        return self.integrate(vals**p) ** (1.0 / p)

    def l1_norm(self, f: HermiteExpansion) -> float:
        """``||f||_1``: exact along the last coordinate, tensor rule over the rest.

        On each grid line ``f`` is a polynomial in ``x_n``; splitting at its
        real roots and integrating with closed-form truncated Gaussian moments
        removes the kink of ``|f|``, so only the smoother line integrals meet
        the outer quadrature (exact when n = 1).
        """
        if f.n != self.n:
            raise ConfigurationError(f"rule dimension {self.n} differs from n={f.n}")
        d = f.maxdeg
        h = hermite_table(d, self.nodes)
        herm = f.coeffs
        for _ in range(f.n - 1):
            # contract the leading axis; node axes collect at the end
            herm = np.tensordot(herm, h, axes=(0, 0))
        herm = np.moveaxis(herm, 0, -1).reshape(-1, d + 1)  # (lines, d+1) in h_k
        mono = herm @ _hermite_to_monomial(d)
        line = _line_abs_integrals(mono)
        w = np.ones(1)
        for _ in range(f.n - 1):
            w = np.multiply.outer(w, self.weights)
        return math.fsum(line * np.ravel(w))

    def monomial_error(self, degree: int) -> float:
        """Max error integrating ``x_1^a`` for a <= degree against exact moments,
        relative to the absolute moment (odd moments cancel to rounding)."""
        worst = 0.0
        for a in range(degree + 1):
            exact = 0.0 if a % 2 else float(math.prod(range(a - 1, 0, -2)))
            terms = self.weights * self.nodes**a
            scale = max(1.0, math.fsum(np.abs(terms)))
            worst = max(worst, abs(math.fsum(terms) - exact) / scale)
        return worst


def _hermite_to_monomial(d: int) -> np.ndarray:
    """``B[k, j]``: coefficient of ``x^j`` in ``h_k``."""
    out = np.zeros((d + 1, d + 1))
    for k in range(d + 1):
        poly = hermite_e.herme2poly([0.0] * k + [1.0])
        out[k, : poly.size] = poly / math.sqrt(math.factorial(k))
    return out


def _gaussian_partial_moments(x: np.ndarray, d: int) -> np.ndarray:
    """``A[..., k] = int_{-inf}^x t^k phi(t) dt`` for k = 0..d (x may be +-inf)."""
    from scipy.special import ndtr

    finite = np.isfinite(x)
    xf = np.where(finite, x, 0.0)
    phi = np.where(finite, np.exp(-0.5 * xf * xf) / math.sqrt(2 * math.pi), 0.0)
    out = np.empty(x.shape + (d + 1,))
    out[..., 0] = ndtr(x)
    if d >= 1:
        out[..., 1] = -phi
    for k in range(2, d + 1):
        out[..., k] = -(xf ** (k - 1)) * phi + (k - 1) * out[..., k - 2]
    return out


def _line_abs_integrals(mono: np.ndarray) -> np.ndarray:
    """``int |p_l(x)| d gamma_1(x)`` for each row of monomial coefficients."""
    lines, size = mono.shape
    scale = np.max(np.abs(mono), axis=1, keepdims=True)
    live = np.any(np.abs(mono) > 1e-13 * np.maximum(scale, 1e-300), axis=0)
    deg = int(np.flatnonzero(live).max()) if live.any() else 0
    mono = mono[:, : deg + 1]
    if deg == 0:
        return np.abs(mono[:, 0])
    lead = mono[:, deg].copy()
    tiny = 1e-14 * np.maximum(scale[:, 0], 1e-300)
    # a vanishing leading coefficient sends that root to +-infinity
    lead = np.where(np.abs(lead) < tiny, np.where(lead < 0, -tiny, tiny), lead)
    comp = np.zeros((lines, deg, deg))
    comp[:, 0, :] = -mono[:, deg - 1::-1] / lead[:, None]
    comp[:, np.arange(1, deg), np.arange(deg - 1)] = 1.0
    roots = np.linalg.eigvals(comp)
    # keeping near-real pairs is harmless: |int| over a sign-constant piece adds up
    real = np.abs(roots.imag) <= 1e-6 * (1.0 + np.abs(roots.real))
    cuts = np.sort(np.where(real, roots.real, np.inf), axis=1)
    edges = np.concatenate([np.full((lines, 1), -np.inf), cuts, np.full((lines, 1), np.inf)], axis=1)
    anti = np.einsum("lek,lk->le", _gaussian_partial_moments(edges, deg), mono)
    return np.sum(np.abs(np.diff(anti, axis=1)), axis=1)


def ou_integral(f: HermiteExpansion, t: float, points, rule: QuadratureRule | None = None) -> np.ndarray:
    """``P_t f(x) = int f(e^{-t} x + sqrt(1 - e^{-2t}) y) d gamma(y)`` by quadrature (n <= 2)."""
    if f.n > 2:
        raise CapacityError("the quadrature form of P_t is limited to n <= 2")
    if not t >= 0:
        raise ParameterError(f"time must be >= 0, got {t}")
    rule = rule or QuadratureRule.build(f.n, MAX_QUAD_ORDER)
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    axes = np.meshgrid(*([rule.nodes] * f.n), indexing="ij")
    ys = np.stack([a.ravel() for a in axes], axis=1)
    w = rule.grid_weights().ravel()
    a, b = math.exp(-t), math.sqrt(-math.expm1(-2 * t))
    out = np.empty(pts.shape[0])
    for k, x in enumerate(pts):
        out[k] = math.fsum(w * f.evaluate(a * x + b * ys))
    return out


def nelson_check(f: HermiteExpansion, t: float, q: float, rule: QuadratureRule | None = None,
                 tol: float = 1e-8) -> BoundCheck:
    """``||P_t f||_q <= ||f||_p`` with ``p = 1 + (q - 1) e^{-2t}``, norms by quadrature."""
    if not q >= 1:
        raise ParameterError(f"q must be >= 1, got {q}")
    rule = rule or QuadratureRule.build(f.n, MAX_QUAD_ORDER if f.n == 1 else QuadratureRule.for_expansion(f).order)
    p = 1 + (q - 1) * math.exp(-2 * t)
    return BoundCheck("nelson", rule.lp_norm(ou_semigroup(f, t), q), rule.lp_norm(f, p), tol,
                      {"t": t, "q": q, "p": p})


# ---------------------------------------------------------------------------
# Gaussian inequality of order p


def gaussian_talagrand_report(f: HermiteExpansion, p: int = 1, rule: QuadratureRule | None = None) -> InequalityReport:
    """Remainder side of the order-p Gaussian inequality.

    ``lhs = Var(f) - sum_{k<=p} (1/k!) |int nabla^k f|^2`` and
    ``rhs = sum over ordered (p+1)-tuples ||d f||_2^2 / [1 + log(||d f||_2/||d f||_1)]^{p+1}``.
    Terms are keyed by the sorted tuple with the multiplicity folded in.
    L1 norms come from ``QuadratureRule.l1_norm``; outer-axis kinks make its
    error decay like 1/order, so ``params['quadrature_error']`` is the rhs
    change against the half-order rule, which matches that rate.
    """
    if p < 1:
        raise ParameterError(f"order must be >= 1, got {p}")
    rule = rule or QuadratureRule.for_expansion(f)
    if rule.n != f.n:
        raise ConfigurationError(f"rule dimension {rule.n} differs from n={f.n}")
    if rule.exact_degree < 2 * f.maxdeg:
        raise ConfigurationError(
            f"order-{rule.order} rule is exact to degree {rule.exact_degree} < {2 * f.maxdeg}")
    coarse = QuadratureRule.build(f.n, max(1, rule.order // 2))
    lhs = f.variance() - math.fsum(grad_moment(f, k) / math.factorial(k) for k in range(1, p + 1))
    terms, alt = {}, []
    for ms, mult, arr in derivative_multisets(f, p + 1):
        l2 = math.sqrt(math.fsum(arr.ravel() ** 2))
        if l2 == 0.0:
            continue
        g = HermiteExpansion(arr, arr.shape[0] - 1)
        # quadrature can land a hair above the L2 norm when |g| is constant
        l1 = min(rule.l1_norm(g), l2)
        terms[ms] = mult * l2 * l2 / log_gain(l2, l1) ** (p + 1)
        alt.append(mult * l2 * l2 / log_gain(l2, min(coarse.l1_norm(g), l2)) ** (p + 1))
    rhs = math.fsum(terms.values())
    params = {"p": p, "quadrature_order": rule.order,
              "quadrature_error": abs(rhs - math.fsum(alt)), "log": "natural"}
    return InequalityReport(f"gaussian_talagrand_p{p}", f.n, lhs, rhs, terms, params)


# ---------------------------------------------------------------------------
# text format


def format_expansion(f: HermiteExpansion) -> str:
    lines = [f"n={f.n} maxdeg={f.maxdeg}"]
    for alpha, c in sorted(f.to_dict().items(), key=lambda kv: (sum(kv[0]), kv[0])):
        lines.append(" ".join(str(a) for a in alpha) + f" {c!r}")
    return "\n".join(lines) + "\n"


def parse_expansion(text: str) -> HermiteExpansion:
    rows = [(k + 1, ln) for k, ln in enumerate(text.splitlines()) if ln.strip()]
    if not rows:
        raise ParseError("empty input", 1, 1)
    lineno, head = rows[0]
    fields = dict(tok.partition("=")[::2] for tok in head.split())
    try:
        n, maxdeg = int(fields["n"]), int(fields["maxdeg"])
    except (KeyError, ValueError):
        raise ParseError("expected header 'n=<k> maxdeg=<d>'", lineno, 1) from None
    if not 1 <= n <= MAX_DIM or not 0 <= maxdeg <= MAX_DEGREE:
        raise CapacityError(f"n={n}, maxdeg={maxdeg} outside n <= {MAX_DIM}, maxdeg <= {MAX_DEGREE}")
    terms: dict = {}
    for lineno, raw in rows[1:]:
        toks = raw.split()
        if len(toks) != n + 1:
            raise ParseError(f"expected {n} indices and a coefficient", lineno, 1)
        try:
            alpha = tuple(int(a) for a in toks[:n])
        except ValueError:
            raise ParseError("bad multi-index", lineno, 1) from None
        if min(alpha) < 0 or sum(alpha) > maxdeg:
            raise ParseError(f"multi-index {alpha} exceeds maxdeg={maxdeg}", lineno, 1)
        try:
            terms[alpha] = terms.get(alpha, 0.0) + float(toks[-1])
        except ValueError:
            raise ParseError(f"bad coefficient {toks[-1]!r}", lineno, raw.rindex(toks[-1]) + 1) from None
    return HermiteExpansion.from_dict(terms, n, maxdeg)
