"""Walsh-Fourier analysis and the Bonami-Beckner noise semigroup.

Characters are ``chi_S(x) = prod_{i in S} x_i`` with S encoded as a bit mask in
the same layout as cube indices.  The generator ``L = (1/2) sum_i D_i`` acts
on ``chi_S`` as ``-|S|``, so ``Q_t = exp(tL)`` multiplies ``f^(S)`` by
``exp(-t|S|)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .cube import (
    RealCubeFunction,
    _check_coord,
    _parse_header,
    check_dim,
    derivative_stack,
    discrete_derivative,
    fsum_mean,
    lp_norm,
    mean,
    variance,
)
from .errors import CapacityError, ParameterError, ParseError, PreconditionError

INTEGRAL_MAX_DIM = 10


def subset_sizes(n: int) -> np.ndarray:
    return np.bitwise_count(np.arange(1 << n, dtype=np.uint32)).astype(np.int64)


def hadamard(values: np.ndarray) -> np.ndarray:
    """Unnormalized Walsh-Hadamard transform along the last axis.

    Entry ``S`` of the result is ``sum_x v[x] (-1)^{popcount(x & S)}``.
    """
    v = np.array(values, dtype=np.float64, copy=True)
    size = v.shape[-1]
    lead = v.shape[:-1]
    h = 1
    while h < size:
        w = v.reshape(*lead, -1, 2, h)
        a = w[..., 0, :].copy()
        w[..., 0, :] += w[..., 1, :]
        w[..., 1, :] = a - w[..., 1, :]
        h *= 2
    return v


def _parity_signs(n: int) -> np.ndarray:
    # chi_S(x) = (-1)^|S| (-1)^popcount(x & S) because x_i = 2 b_i - 1
    return np.where(subset_sizes(n) % 2 == 0, 1.0, -1.0)


def spectrum_array(values: np.ndarray, n: int) -> np.ndarray:
    """Walsh coefficients of one table or a stack of tables (last axis)."""
    return hadamard(values) * (_parity_signs(n) / (1 << n))


@dataclass(frozen=True)
class FourierSpectrum:
    n: int
    coefficients: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=np.float64)
        if c.ndim != 1 or c.size != 1 << self.n:
            raise PreconditionError(f"spectrum length {c.size} does not match n={self.n}")
        c = c.copy()
        c.flags.writeable = False
        object.__setattr__(self, "coefficients", c)

    def __getitem__(self, mask: int) -> float:
        return float(self.coefficients[mask])

    def norm2_squared(self) -> float:
        return math.fsum(self.coefficients**2)

    def variance(self) -> float:
        return math.fsum(self.coefficients[1:] ** 2)

    def level_weights(self) -> np.ndarray:
        """``W[m] = sum_{|S| = m} f^(S)^2`` for m = 0..n."""
        return np.bincount(subset_sizes(self.n), self.coefficients**2, minlength=self.n + 1)

    def nonzero(self, tol: float = 0.0) -> list[tuple[int, float]]:
        idx = np.flatnonzero(np.abs(self.coefficients) > tol)
        return [(int(k), float(self.coefficients[k])) for k in idx]


def fwht(f: RealCubeFunction) -> FourierSpectrum:
    return FourierSpectrum(f.n, spectrum_array(f.values, f.n))


def inverse_fwht(spectrum: FourierSpectrum) -> RealCubeFunction:
    return RealCubeFunction(hadamard(spectrum.coefficients * _parity_signs(spectrum.n)))


def character(n: int, mask: int) -> RealCubeFunction:
    """The Walsh character ``chi_S`` as a +-1 table."""
    check_dim(n)
    if not 0 <= mask < 1 << n:
        raise IndexError(f"subset mask {mask:#x} outside the cube of dimension {n}")
    par = np.bitwise_count(np.arange(1 << n, dtype=np.uint32) & mask) % 2
    sign = (-1) ** bin(mask).count("1")
    return RealCubeFunction(sign * np.where(par == 0, 1.0, -1.0))


# ---------------------------------------------------------------------------
# semigroup


def _check_time(t: float) -> float:
    if not t >= 0:
        raise ParameterError(f"time must be >= 0, got {t}")
    return float(t)


def _noise_values(values: np.ndarray, n: int, t: float) -> np.ndarray:
    coef = spectrum_array(values, n) * np.exp(-t * subset_sizes(n))
    return hadamard(coef * _parity_signs(n))


def noise_kernel(n: int, t: float) -> np.ndarray:
    """Dense matrix of ``x, y -> 2^-n prod_i (1 + e^-t x_i y_i)``."""
    rho = math.exp(-t)
    idx = np.arange(1 << n, dtype=np.uint32)
    dist = np.bitwise_count(idx[:, None] ^ idx[None, :]).astype(np.float64)
    return (1 + rho) ** (n - dist) * (1 - rho) ** dist / (1 << n)


def bonami_beckner(f: RealCubeFunction, t: float, method: str = "spectral") -> RealCubeFunction:
    """Apply ``Q_t`` to ``f``.

    ``spectral`` damps Walsh coefficients (O(n 2^n)); ``integral`` sums the
    product kernel against ``f`` directly (O(4^n), n <= 10) and serves as an
    independent check of the first.
    """
    t = _check_time(t)
    if method == "spectral":
        return RealCubeFunction(_noise_values(f.values, f.n, t))
    if method == "integral":
        if f.n > INTEGRAL_MAX_DIM:
            raise CapacityError(f"integral semigroup limited to n <= {INTEGRAL_MAX_DIM}")
        return RealCubeFunction(noise_kernel(f.n, t) @ f.values)
    raise ParameterError(f"unknown semigroup method {method!r}")


@dataclass(frozen=True)
class SemigroupResiduals:
    composition: float
    invariance: float
    markov: float
    reversibility: float

    def worst(self) -> float:
        return max(self.composition, self.invariance, self.markov, self.reversibility)


def check_semigroup_laws(f: RealCubeFunction, s: float, t: float, others=()) -> SemigroupResiduals:
    """Residuals of ``Q_s Q_t = Q_{s+t}``, mean invariance, ``Q_t 1 = 1`` and
    reversibility ``int f Q_t g = int g Q_t f`` over the functions in ``others``.

    With no ``others`` the reflected table ``x -> f(-x)`` is used as partner.
    """
    s, t = _check_time(s), _check_time(t)
    qt = bonami_beckner(f, t)
    comp = np.max(np.abs(bonami_beckner(qt, s).values - bonami_beckner(f, s + t).values))
    inv = abs(mean(qt) - mean(f))
    one = RealCubeFunction.constant(1.0, f.n)
    markov = np.max(np.abs(bonami_beckner(one, t).values - 1.0))
    partners = list(others) or [RealCubeFunction(f.values[::-1])]
    rev = 0.0
    for g in partners:
        lhs = fsum_mean(f.values * bonami_beckner(g, t).values)
        rhs = fsum_mean(g.values * qt.values)
        rev = max(rev, abs(lhs - rhs))
    return SemigroupResiduals(float(comp), inv, float(markov), rev)


def check_commutation(f: RealCubeFunction, i: int, t: float) -> float:
    """Max pointwise ``|Q_t D_i f - D_i Q_t f|``."""
    _check_coord(i, f.n)
    a = bonami_beckner(discrete_derivative(f, i), t).values
    b = discrete_derivative(bonami_beckner(f, t), i).values
    return float(np.max(np.abs(a - b)))


def dirichlet_form(f: RealCubeFunction, g: RealCubeFunction) -> float:
    """``E(f, g) = int f (-L g) dmu = sum_S |S| f^(S) g^(S)``."""
    if f.n != g.n:
        raise PreconditionError(f"dimension mismatch {f.n} != {g.n}")
    sizes = subset_sizes(f.n)
    return math.fsum(sizes * spectrum_array(f.values, f.n) * spectrum_array(g.values, g.n))


def generator(f: RealCubeFunction) -> RealCubeFunction:
    """``L f = (1/2) sum_i D_i f`` computed pointwise."""
    return RealCubeFunction(0.5 * derivative_stack(f.values, f.n).sum(axis=0))


@dataclass(frozen=True)
class BoundCheck:
    """Outcome of checking ``lhs <= rhs`` up to ``tol``."""

    name: str
    lhs: float
    rhs: float
    tol: float
    params: dict = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs + self.tol

    @property
    def gap(self) -> float:
        return self.rhs - self.lhs


def exponential_decay_check(g: RealCubeFunction, t: float, tol: float = 1e-12) -> BoundCheck:
    """``||Q_t g||_2^2 <= e^{-2t} ||g||_2^2`` for centered ``g``."""
    t = _check_time(t)
    m = mean(g)
    if abs(m) > 1e-12 * max(1.0, float(np.max(np.abs(g.values)))):
        raise PreconditionError(f"input must be centered, mean is {m:.3e}")
    lhs = lp_norm(bonami_beckner(g, t), 2) ** 2
    rhs = math.exp(-2 * t) * lp_norm(g, 2) ** 2
    return BoundCheck("exponential_decay", lhs, rhs, tol, {"t": t})


def hypercontractive_exponent(t: float, q: float) -> float:
    return 1 + (q - 1) * math.exp(-2 * t)


def hypercontractivity_check(f: RealCubeFunction, t: float, q: float, tol: float = 1e-12) -> BoundCheck:
    """``||Q_t f||_q <= ||f||_p`` with ``p = 1 + (q - 1) e^{-2t}``."""
    t = _check_time(t)
    if not q >= 1:
        raise ParameterError(f"q must be >= 1, got {q}")
    p = hypercontractive_exponent(t, q)
    lhs = lp_norm(bonami_beckner(f, t), q)
    rhs = lp_norm(f, p)
    return BoundCheck("hypercontractivity", lhs, rhs, tol, {"t": t, "q": q, "p": p})


# ---------------------------------------------------------------------------
# exact semigroup identities


@dataclass(frozen=True)
class IdentityReport:
    """Measured constant in ``lhs = constant * integral``.

    ``integral`` is evaluated from a closed-form antiderivative and, as a
    cross-check, by adaptive quadrature (``quadrature``).
    """

    name: str
    n: int
    lhs: float
    integral: float
    quadrature: float
    params: dict = field(default_factory=dict)

    @property
    def degenerate(self) -> bool:
        return self.integral <= 1e-300

    @property
    def constant(self) -> float:
        return math.nan if self.degenerate else self.lhs / self.integral

    @property
    def quadrature_error(self) -> float:
        return abs(self.integral - self.quadrature)


def _level_weights(spectra: np.ndarray, n: int) -> np.ndarray:
    sq = (spectra**2).reshape(-1, 1 << n).sum(axis=0)
    return np.bincount(subset_sizes(n), sq, minlength=n + 1)


def _exp_integral(weights: np.ndarray, s: float) -> float:
    """``int_s^inf sum_m W_m e^{-2um} du`` for a weight vector with W_0 = 0."""
    m = np.arange(1, weights.size)
    return math.fsum(weights[1:] * np.exp(-2 * s * m) / (2 * m))


def _exp_quadrature(weights: np.ndarray, s: float) -> float:
    m = np.arange(weights.size)
    total = float(weights.sum())
    if total <= 0:
        return 0.0

    def integrand(u):
        return float(np.dot(weights, np.exp(-2 * u * m)))

    # the tail beyond s + horizon is below e^{-2 horizon} * total / 2 < 1e-12
    horizon = max(1.0, 0.5 * math.log(total / 1e-12))
    pieces = [s, s + 0.25, s + 1.0, s + 4.0, s + horizon]
    pieces = sorted(set(p for p in pieces if p <= s + horizon))
    acc = []
    for a, b in zip(pieces[:-1], pieces[1:]):
        val, _ = integrate.quad(integrand, a, b, epsabs=1e-14, epsrel=1e-12, limit=200)
        acc.append(val)
    return math.fsum(acc)


def variance_representation_check(f: RealCubeFunction) -> IdentityReport:
    """Compare ``Var(f)`` with ``J = int_0^inf sum_i ||Q_t D_i f||_2^2 dt``.

    The time integrand is built from the Walsh spectra of the actual
    derivatives ``D_i f``; with ``D_i f = f o tau_i - f`` the ratio is 1/2.
    """
    d1 = spectrum_array(derivative_stack(f.values, f.n), f.n)
    w = _level_weights(d1, f.n)
    return IdentityReport(
        "variance_representation",
        f.n,
        variance(f),
        _exp_integral(w, 0.0),
        _exp_quadrature(w, 0.0),
    )


def second_derivative_stack(values: np.ndarray, n: int) -> np.ndarray:
    """All ``D_i D_j f`` for i, j in 1..n: shape (n, n, 2^n), entry [i-1, j-1]."""
    d1 = derivative_stack(values, n)
    return np.stack([derivative_stack(d1[j], n) for j in range(n)], axis=1)


def tail_identity_check(f: RealCubeFunction, s: float) -> IdentityReport:
    """Compare ``K(s) = sum_i ||Q_s D_i f||^2`` with
    ``T(s) = sum_{i,j} int_s^inf ||Q_u D_ij f||^2 du`` (ratio 1/2)."""
    s = _check_time(s)
    n = f.n
    d1 = spectrum_array(derivative_stack(f.values, n), n)
    sizes = subset_sizes(n)
    k_s = math.fsum((d1**2 * np.exp(-2 * s * sizes)).ravel())
    w2 = _level_weights(spectrum_array(second_derivative_stack(f.values, n), n), n)
    return IdentityReport(
        "tail_identity",
        n,
        k_s,
        _exp_integral(w2, s),
        _exp_quadrature(w2, s),
        {"s": s},
    )


# ---------------------------------------------------------------------------
# text format


def format_spectrum(spectrum: FourierSpectrum, tol: float = 0.0) -> str:
    lines = [f"n={spectrum.n}"]
    lines += [f"{mask:#x} {coef!r}" for mask, coef in spectrum.nonzero(tol)]
    return "\n".join(lines) + "\n"


def parse_spectrum(text: str) -> FourierSpectrum:
    rows = [(k + 1, ln) for k, ln in enumerate(text.splitlines()) if ln.strip()]
    if not rows:
        raise ParseError("empty input", 1, 1)
    n = _parse_header(rows[0][1], rows[0][0])
    coef = np.zeros(1 << n)
    for lineno, raw in rows[1:]:
        parts = raw.split()
        if len(parts) != 2:
            raise ParseError("expected '<mask-hex> <coefficient>'", lineno, 1)
        try:
            mask = int(parts[0], 16)
        except ValueError:
            raise ParseError(f"bad subset mask {parts[0]!r}", lineno, 1) from None
        if not 0 <= mask < 1 << n:
            raise ParseError(f"subset mask {parts[0]} outside dimension {n}", lineno, 1)
        try:
            coef[mask] = float(parts[1])
        except ValueError:
            col = raw.index(parts[1]) + 1
            raise ParseError(f"bad coefficient {parts[1]!r}", lineno, col) from None
    return FourierSpectrum(n, coef)
