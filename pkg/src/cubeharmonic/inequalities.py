"""Evaluators for the influence inequalities on the discrete cube.

Every evaluator returns an ``InequalityReport`` whose ``rhs`` is the
functional without its universal constant, so ``ratio = lhs / rhs`` is the
constant a given function forces.  Logarithms are natural throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .cube import (
    BooleanFunction,
    RealCubeFunction,
    _check_coord,
    _swap_axis,
    derivative_stack,
    influence_profile,
    lp_norm,
    second_derivative,
    variance,
)
from .errors import CapacityError, ParameterError, PreconditionError

DEFAULT_S0 = 1.0 / 256
# sup over L >= 0 of (1 + L)^2 int_0^1 u exp(-2uL/(2-u)) du, approached as L -> inf
MAJORANT_CONSTANT = 1.0
_ROUND = 1e-12

INEQUALITIES = ("poincare", "talagrand1", "talagrand2", "kkl")


@dataclass(frozen=True)
class InequalityReport:
    name: str
    n: int
    lhs: float
    rhs: float
    terms: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)

    @property
    def degenerate(self) -> bool:
        return not self.rhs > 0

    @property
    def ratio(self) -> float:
        return math.nan if self.degenerate else self.lhs / self.rhs

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "n": self.n,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "ratio": None if self.degenerate else self.ratio,
            "degenerate": self.degenerate,
            "params": dict(self.params),
            "terms": [{"index": list(k), "value": v} for k, v in self.terms.items()],
        }

    def csv_row(self) -> list:
        return [self.name, self.n, self.params.get("s0", ""), self.lhs, self.rhs,
                "" if self.degenerate else self.ratio]


CSV_COLUMNS = ["name", "n", "param_s0", "lhs", "rhs", "ratio"]


def _as_real(f) -> RealCubeFunction:
    return f.to_real() if isinstance(f, BooleanFunction) else f


def log_gain(l2: float, l1: float) -> float:
    """``1 + log(l2 / l1)``, which is >= 1 because ``||g||_1 <= ||g||_2``."""
    if l2 < l1 * (1 - _ROUND):
        raise AssertionError(f"L1 norm {l1} exceeds L2 norm {l2}")
    return 1.0 + max(0.0, math.log(l2 / l1))


def _gain_term(l2: float, l1: float, power: int) -> float:
    # zero derivative contributes nothing; the limit of the term is 0
    if l2 == 0.0:
        return 0.0
    return l2 * l2 / log_gain(l2, l1) ** power


def _first_derivatives(f: RealCubeFunction) -> np.ndarray:
    return derivative_stack(f.values, f.n)


def poincare_report(f) -> InequalityReport:
    f = _as_real(f)
    d = _first_derivatives(f)
    terms = {(i + 1,): 0.25 * lp_norm(d[i], 2) ** 2 for i in range(f.n)}
    lhs = variance(f)
    rhs = math.fsum(terms.values())
    if lhs > rhs + 1e-12:
        raise AssertionError(f"Poincare inequality violated: {lhs} > {rhs}")
    return InequalityReport("poincare", f.n, lhs, rhs, terms, {"log": "natural"})


def talagrand1_report(f) -> InequalityReport:
    f = _as_real(f)
    d = _first_derivatives(f)
    terms = {(i + 1,): _gain_term(lp_norm(d[i], 2), lp_norm(d[i], 1), 1) for i in range(f.n)}
    return InequalityReport(
        "talagrand1", f.n, variance(f), math.fsum(terms.values()), terms, {"log": "natural"}
    )


def _check_s0(s0: float) -> float:
    if not 0 < s0 < 1.0 / 128:
        raise ParameterError(f"s0 must lie in (0, 1/128), got {s0}")
    return float(s0)


def eta_of_s0(s0: float) -> float:
    """Exponent gap with ``||D_i f||^2_{1+e^{-2 s0}} = I_i^{1 + eta}`` for Boolean f."""
    return 2.0 / (1.0 + math.exp(-2 * s0)) - 1.0


def talagrand2_report(f, s0: float = DEFAULT_S0) -> InequalityReport:
    """Second-order functional: ``sum_i ||D_i f||_p^2`` with ``p = 1 + e^{-2 s0}``
    plus ``sum_{i != j} ||D_ij f||_2^2 / [1 + log(||D_ij f||_2 / ||D_ij f||_1)]^2``."""
    s0 = _check_s0(s0)
    f = _as_real(f)
    p = 1.0 + math.exp(-2 * s0)
    d = _first_derivatives(f)
    terms: dict = {}
    for i in range(f.n):
        terms[(i + 1,)] = lp_norm(d[i], p) ** 2
    first = math.fsum(terms.values())
    second_terms = []
    for i in range(f.n):
        dd = derivative_stack(d[i], f.n)  # row j holds D_j D_i f
        for j in range(f.n):
            if i == j:
                continue
            val = _gain_term(lp_norm(dd[j], 2), lp_norm(dd[j], 1), 2)
            terms[(j + 1, i + 1)] = val
            second_terms.append(val)
    second = math.fsum(second_terms)
    params = {"s0": s0, "p": p, "eta": eta_of_s0(s0), "first_sum": first,
              "second_sum": second, "log": "natural"}
    return InequalityReport("talagrand2", f.n, variance(f), first + second, terms, params)


def kkl_report(f: BooleanFunction) -> InequalityReport:
    """``max_i I_i(f)`` against ``Var(f) log(n) / n``; the ratio is the implied constant.

    The right side is not a sum, so ``terms`` is empty; the influence vector
    is carried in ``params``.
    """
    if f.n < 2:
        raise PreconditionError("KKL report needs n >= 2")
    prof = influence_profile(f)
    var = variance(f)
    rhs = var * math.log(f.n) / f.n
    params = {"log": "natural", "influences": prof.first.tolist()}
    return InequalityReport("kkl", f.n, prof.max_first(), rhs, {}, params)


REPORTS = {
    "poincare": lambda f, s0: poincare_report(f),
    "talagrand1": lambda f, s0: talagrand1_report(f),
    "talagrand2": talagrand2_report,
    "kkl": lambda f, s0: kkl_report(f),
}


def report(name: str, f, s0: float = DEFAULT_S0) -> InequalityReport:
    try:
        fn = REPORTS[name]
    except KeyError:
        raise ParameterError(f"unknown inequality {name!r}") from None
    return fn(f, s0)


# ---------------------------------------------------------------------------
# the pair-influence alternative


@dataclass(frozen=True)
class AlternativeReport:
    """Both branches of the influence alternative for one Boolean function.

    ``c1`` and ``c2`` are the constants each branch achieves and ``branch``
    names the larger one.  ``dominant_sum_branch`` is the other natural case
    split: which of the two sums of the second-order functional, written in
    influences (``single_sum`` vs ``pair_sum``), is larger.
    """

    n: int
    s0: float
    eta: float
    variance: float
    max_influence: float
    max_pair_influence: float
    argmax_pair: tuple
    c1: float
    c2: float
    single_sum: float
    pair_sum: float

    @property
    def branch(self) -> str:
        return "single" if self.c1 >= self.c2 else "pair"

    @property
    def dominant_sum_branch(self) -> str:
        return "single" if self.single_sum >= self.pair_sum else "pair"

    def to_dict(self) -> dict:
        return {
            "name": "alternative", "n": self.n, "s0": self.s0, "eta": self.eta,
            "variance": self.variance, "max_influence": self.max_influence,
            "max_pair_influence": self.max_pair_influence,
            "argmax_pair": list(self.argmax_pair), "c1": self.c1, "c2": self.c2,
            "single_sum": self.single_sum, "pair_sum": self.pair_sum,
            "branch": self.branch, "dominant_sum_branch": self.dominant_sum_branch,
        }


def corollary_alternative_report(f: BooleanFunction, s0: float = DEFAULT_S0) -> AlternativeReport:
    s0 = _check_s0(s0)
    if f.n < 2:
        raise PreconditionError("the alternative needs n >= 2")
    if f.is_constant():
        raise PreconditionError("the alternative needs a non-constant function")
    n = f.n
    eta = eta_of_s0(s0)
    prof = influence_profile(f)
    var = variance(f)
    off = prof.pair.copy()
    np.fill_diagonal(off, -1.0)
    a, b = np.unravel_index(int(np.argmax(off)), off.shape)
    max_pair = float(off[a, b])
    c1 = prof.max_first() / (var / n) ** (1.0 / (1.0 + eta))
    c2 = max_pair / (var * (math.log(n) / n) ** 2)
    single = math.fsum(prof.first ** (1.0 + eta))
    pair_terms = []
    for i in range(n):
        for j in range(n):
            q = float(prof.pair[i, j])
            if i != j and q > 0:
                pair_terms.append(q / (1.0 + math.log(1.0 / math.sqrt(4 * q))) ** 2)
    return AlternativeReport(
        n, s0, eta, var, prof.max_first(), max_pair, (int(a) + 1, int(b) + 1),
        c1, c2, single, math.fsum(pair_terms),
    )


# ---------------------------------------------------------------------------
# second-derivative norm checks


@dataclass(frozen=True)
class NormEquivalence:
    i: int
    j: int
    l1: float
    l2_squared: float
    tol: float

    @property
    def lower_holds(self) -> bool:
        return self.l1 <= self.l2_squared + self.tol

    @property
    def upper_holds(self) -> bool:
        return self.l2_squared <= 2 * self.l1 + self.tol

    @property
    def holds(self) -> bool:
        return self.lower_holds and self.upper_holds


def norm_equivalence_check(f, i: int, j: int, tol: float = 1e-12) -> NormEquivalence:
    """``||D_ij f||_1 <= ||D_ij f||_2^2 <= 2 ||D_ij f||_1`` for i != j."""
    f = _as_real(f)
    _check_coord(i, f.n)
    _check_coord(j, f.n)
    if i == j:
        raise PreconditionError("the norm comparison is stated for i != j")
    d = second_derivative(f, i, j)
    return NormEquivalence(i, j, lp_norm(d, 1), lp_norm(d, 2) ** 2, tol)


@dataclass(frozen=True)
class HypercontractiveBound:
    i: int
    j: int
    integral: float
    majorant: float
    l1: float
    l2: float
    constant: float

    @property
    def holds(self) -> bool:
        return self.integral <= self.majorant * (1 + 1e-10)

    @property
    def ratio(self) -> float:
        return self.integral / self.majorant


def hypercontractive_bound_check(f, i: int, j: int, constant: float = MAJORANT_CONSTANT) -> HypercontractiveBound:
    """Compare ``int_1^2 (2 - v) ||D_ij f||_v^2 dv`` (adaptive quadrature) with
    ``constant * ||D_ij f||_2^2 / [1 + log(||D_ij f||_2 / ||D_ij f||_1)]^2``."""
    f = _as_real(f)
    _check_coord(i, f.n)
    _check_coord(j, f.n)
    if i == j:
        raise PreconditionError("the hypercontractive estimate is stated for i != j")
    d = second_derivative(f, i, j)
    l1, l2 = lp_norm(d, 1), lp_norm(d, 2)
    if l2 == 0.0:
        raise PreconditionError(f"D_{i}{j} f vanishes identically")
    val, _ = integrate.quad(lambda v: (2 - v) * lp_norm(d, v) ** 2, 1.0, 2.0,
                            epsabs=1e-13, epsrel=1e-11, limit=200)
    return HypercontractiveBound(i, j, val, constant * l2 * l2 / log_gain(l2, l1) ** 2, l1, l2, constant)


# ---------------------------------------------------------------------------
# batched Boolean evaluation (rows of a 2-D 0/1 array are truth tables)


@dataclass
class BooleanBatch:
    n: int
    variance: np.ndarray
    influence: np.ndarray  # (N, n)
    pair_l1: np.ndarray  # (N, n, n), ||D_ij f||_1, diagonal 2 I_i
    pair_l2sq: np.ndarray  # (N, n, n), ||D_ij f||_2^2, diagonal 4 I_i


def boolean_batch(tables: np.ndarray, pairs: bool = True) -> BooleanBatch:
    t = np.asarray(tables).astype(bool)
    size = t.shape[-1]
    n = size.bit_length() - 1
    mean = t.mean(axis=1)
    flips = [_swap_axis(t, i) for i in range(1, n + 1)]
    infl = np.stack([(t ^ fl).mean(axis=1) for fl in flips], axis=1)
    l1 = np.zeros((t.shape[0], n, n))
    l2 = np.zeros((t.shape[0], n, n))
    idx = np.arange(n)
    l1[:, idx, idx] = 2 * infl
    l2[:, idx, idx] = 4 * infl
    if pairs:
        for i in range(n):
            for j in range(i + 1, n):
                b, c = flips[i], flips[j]
                d = _swap_axis(b, j + 1)
                ones = (t ^ b ^ c ^ d).mean(axis=1)
                twos = ((t == d) & (b == c) & (t != b)).mean(axis=1)
                l1[:, i, j] = l1[:, j, i] = ones + 2 * twos
                l2[:, i, j] = l2[:, j, i] = ones + 4 * twos
    return BooleanBatch(n, mean * (1 - mean), infl, l1, l2)


def _batch_gain(l2sq: np.ndarray, l1: np.ndarray, power: int) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        gain = 1.0 + np.maximum(0.0, np.log(np.sqrt(l2sq) / l1))
        out = l2sq / gain**power
    return np.where(l2sq > 0, out, 0.0)


def batch_lhs_rhs(tables: np.ndarray, name: str, s0: float = DEFAULT_S0) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized ``(lhs, rhs)`` of a named report over many Boolean tables."""
    b = boolean_batch(tables, pairs=(name == "talagrand2"))
    infl = b.influence
    if name == "poincare":
        return b.variance, 0.25 * infl.sum(axis=1)
    if name == "talagrand1":
        return b.variance, _batch_gain(infl, infl, 1).sum(axis=1)
    if name == "talagrand2":
        p = 1.0 + math.exp(-2 * _check_s0(s0))
        first = (infl ** (2.0 / p)).sum(axis=1)
        off = ~np.eye(b.n, dtype=bool)
        second = _batch_gain(b.pair_l2sq, b.pair_l1, 2)[:, off].sum(axis=1)
        return b.variance, first + second
    if name == "kkl":
        return infl.max(axis=1), b.variance * math.log(b.n) / b.n
    raise ParameterError(f"unknown inequality {name!r}")


def batch_ratios(tables: np.ndarray, name: str, s0: float = DEFAULT_S0) -> np.ndarray:
    """Ratios ``lhs / rhs``; degenerate rows (rhs = 0) give NaN."""
    lhs, rhs = batch_lhs_rhs(tables, name, s0)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(rhs > 0, lhs / rhs, np.nan)


# ---------------------------------------------------------------------------
# empirical search for the worst-case constant


@dataclass
class SearchResult:
    inequality: str
    n: int
    seed: int
    budget: int
    best_ratio: float
    best: BooleanFunction
    evaluations: int
    restarts: int
    trace: list  # (evaluations so far, best ratio) at each improvement

    def to_dict(self) -> dict:
        return {
            "inequality": self.inequality, "n": self.n, "seed": self.seed,
            "budget": self.budget, "best_ratio": self.best_ratio,
            "best_table": self.best.to_string(), "evaluations": self.evaluations,
            "restarts": self.restarts,
            "trace": [{"evaluations": e, "ratio": r} for e, r in self.trace],
        }


def random_start(rng: np.random.Generator, n: int) -> np.ndarray:
    """A Bernoulli table (density drawn uniformly) or, with probability 1/2, a
    random junta on a geometric(1/2) number of coordinates."""
    size = 1 << n
    if rng.random() < 0.5:
        return rng.random(size) < rng.random()
    r = int(min(n, rng.geometric(0.5)))
    coords = rng.choice(n, r, replace=False)
    small = rng.random(1 << r) < rng.random()
    idx = np.arange(size)
    sub = np.zeros(size, dtype=np.int64)
    for k, c in enumerate(coords):
        sub |= ((idx >> c) & 1) << k
    return small[sub]


def constant_search(inequality: str, n: int, budget: int, seed: int = 0,
                    s0: float = DEFAULT_S0, sampler=None) -> SearchResult:
    """Maximize ``lhs / rhs`` over Boolean tables on n coordinates.

    Starts from a sampled table (``sampler(rng) -> 0/1 array``, default
    ``random_start``) and climbs by the best single-bit flip; when no
    flip improves, restarts from a fresh sample.  Each candidate table counts
    as one evaluation.  Deterministic given ``seed`` (Philox generator).
    """
    if budget < 1:
        raise ParameterError("budget must be >= 1")
    if inequality not in INEQUALITIES:
        raise ParameterError(f"unknown inequality {inequality!r}")
    if not 1 <= n <= 12:
        raise CapacityError(f"constant search supports 1 <= n <= 12, got {n}")
    size = 1 << n
    rng = np.random.Generator(np.random.Philox(seed))
    draw = sampler or (lambda g: random_start(g, n))

    def score(tables):
        r = batch_ratios(tables, inequality, s0)
        return np.where(np.isnan(r), -np.inf, r)

    best_ratio, best_table = -math.inf, None
    evaluations, restarts, trace = 0, 0, []
    flips = np.eye(size, dtype=bool)
    while evaluations < budget:
        cur = np.asarray(draw(rng), dtype=bool)
        cur_ratio = float(score(cur[None, :])[0])
        evaluations += 1
        restarts += 1
        while True:
            if cur_ratio > best_ratio:
                best_ratio, best_table = cur_ratio, cur.copy()
                trace.append((evaluations, best_ratio))
            room = budget - evaluations
            if room <= 0:
                break
            cand = cur[None, :] ^ flips[:room]
            scores = score(cand)
            evaluations += cand.shape[0]
            k = int(np.argmax(scores))
            if not scores[k] > cur_ratio:
                break
            cur, cur_ratio = cand[k], float(scores[k])
    if best_table is None:
        best_table = cur
    return SearchResult(inequality, n, seed, budget, best_ratio,
                        BooleanFunction.from_bits(best_table.astype(np.uint8)),
                        evaluations, restarts, trace)
