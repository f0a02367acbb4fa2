"""Verification batteries behind ``cubeharmonic verify``.

Each battery returns a list of ``CheckResult``; a check fails when any of
its cases exceeds the tolerance.  All randomness comes from one seed.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .cube import BooleanFunction, RealCubeFunction, derivative_stack, discrete_derivative, fsum_mean, lp_norm, variance
from .errors import PreconditionError
from .hermite import (
    HermiteExpansion,
    QuadratureRule,
    a_k_coefficients_check,
    gaussian_talagrand_report,
    gradient_inner,
    hermite_partial,
    inner,
    inverse_poincare_check,
    nelson_check,
    ou_generator,
    ou_integral,
    ou_semigroup,
    variance_taylor_check,
)
from .inequalities import (
    DEFAULT_S0,
    batch_lhs_rhs,
    boolean_batch,
    corollary_alternative_report,
    hypercontractive_bound_check,
    kkl_report,
    norm_equivalence_check,
    poincare_report,
    talagrand1_report,
    talagrand2_report,
)
from .spectral import (
    INTEGRAL_MAX_DIM,
    bonami_beckner,
    check_commutation,
    check_semigroup_laws,
    dirichlet_form,
    exponential_decay_check,
    fwht,
    generator,
    hypercontractivity_check,
    inverse_fwht,
    tail_identity_check,
    variance_representation_check,
)
from .zoo import function_corpus, tribes, tribes_influence_closed_form, tribes_pair_influence_closed_form

SUITES = ("identities", "inequalities", "gaussian")


@dataclass
class CheckResult:
    name: str
    tol: float
    cases: int = 0
    failures: int = 0
    worst: float = 0.0
    first_failure: str = ""
    observed: dict = field(default_factory=dict)

    def record(self, value: float, case: str = "", ok: bool | None = None) -> None:
        """Log one case; ``value`` is a residual compared against ``tol``
        unless ``ok`` is given explicitly."""
        self.cases += 1
        value = float(value)
        if math.isnan(value):
            value = math.inf
        self.worst = max(self.worst, value)
        passed = value <= self.tol if ok is None else ok
        if not passed:
            self.failures += 1
            if not self.first_failure:
                self.first_failure = case

    @property
    def passed(self) -> bool:
        return self.failures == 0 and self.cases > 0

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "cases": self.cases,
                "failures": self.failures, "worst": self.worst, "tol": self.tol,
                "first_failure": self.first_failure, "observed": dict(self.observed)}

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = "".join(f" {k}={v:.12g}" if isinstance(v, float) else f" {k}={v}"
                        for k, v in self.observed.items())
        line = f"{status} {self.name}: cases={self.cases} failures={self.failures} worst={self.worst:.3e} tol={self.tol:.0e}{extra}"
        if self.first_failure:
            line += f" first_failure=[{self.first_failure}]"
        return line


def _rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=[seed, stream]))


def _random_real(rng: np.random.Generator, n: int) -> RealCubeFunction:
    return RealCubeFunction(rng.standard_normal(1 << n))


def _scale(*arrays) -> float:
    return max([1.0] + [float(np.max(np.abs(a))) for a in arrays])


# ---------------------------------------------------------------------------
# cube identities


def identities_battery(n_max: int = 8, seed: int = 0) -> list[CheckResult]:
    rng = _rng(seed, 1)
    dims = range(1, n_max + 1)
    out = []

    fw = CheckResult("fwht_roundtrip_parseval", 1e-10)
    for n in dims:
        for k in range(5):
            f = _random_real(rng, n)
            spec = fwht(f)
            back = np.max(np.abs(inverse_fwht(spec).values - f.values))
            pars = abs(spec.norm2_squared() - fsum_mean(f.values**2))
            fw.record(max(back, pars) / _scale(f.values), f"n={n} k={k}")
    out.append(fw)

    sg = CheckResult("semigroup_spectral_vs_integral", 1e-10)
    for n in range(1, min(n_max, INTEGRAL_MAX_DIM) + 1):
        for k in range(3):
            f = _random_real(rng, n)
            for t in (0.1, 0.5, 1.0, 2.0):
                a = bonami_beckner(f, t).values
                b = bonami_beckner(f, t, method="integral").values
                sg.record(np.max(np.abs(a - b)), f"n={n} k={k} t={t}")
    out.append(sg)

    laws = CheckResult("semigroup_laws", 1e-10)
    comm = CheckResult("derivative_commutation", 1e-10)
    dirich = CheckResult("dirichlet_form_three_ways", 1e-10)
    for n in dims:
        f, g = _random_real(rng, n), _random_real(rng, n)
        for s, t in ((0.1, 0.3), (0.5, 1.0), (1.0, 2.0)):
            laws.record(check_semigroup_laws(f, s, t, others=[g]).worst(), f"n={n} s={s} t={t}")
            comm.record(max(check_commutation(f, i, t) for i in range(1, n + 1)), f"n={n} t={t}")
        spectral = dirichlet_form(f, g)
        by_generator = -fsum_mean(f.values * generator(g).values)
        df, dg = derivative_stack(f.values, n), derivative_stack(g.values, n)
        by_derivatives = 0.25 * math.fsum(fsum_mean(df[i] * dg[i]) for i in range(n))
        dirich.record(max(abs(spectral - by_generator), abs(spectral - by_derivatives)), f"n={n}")
    out.extend([laws, comm, dirich])

    kappa = CheckResult("variance_constant", 1e-8)
    kappa2 = CheckResult("tail_constant", 1e-8)
    quad = CheckResult("identity_quadrature", 1e-6)
    corpus = [(label, f.to_real()) for label, f in function_corpus(min(n_max, 10), seed)]
    corpus += [(f"gaussian n={n} k={k}", _random_real(rng, n))
               for n in range(1, min(n_max, 10) + 1) for k in range(3)]
    k_seen, k2_seen = [], []
    for label, f in corpus:
        if variance(f) <= 0:
            continue
        rep = variance_representation_check(f)
        kappa.record(abs(rep.constant - 0.5), label)
        quad.record(rep.quadrature_error, label)
        k_seen.append(rep.constant)
        for s in (0.0, 0.1, 1.0):
            tail = tail_identity_check(f, s)
            if tail.degenerate:
                continue
            kappa2.record(abs(tail.constant - 0.5), f"{label} s={s}")
            quad.record(tail.quadrature_error, f"{label} s={s}")
            k2_seen.append(tail.constant)
    kappa.observed["kappa"] = float(np.median(k_seen)) if k_seen else math.nan
    kappa2.observed["kappa2"] = float(np.median(k2_seen)) if k2_seen else math.nan
    out.extend([kappa, kappa2, quad])

    hc = CheckResult("hypercontractivity", 1e-12)
    decay = CheckResult("exponential_decay", 1e-12)
    for n in range(1, min(n_max, 10) + 1):
        for k in range(4):
            f = _random_real(rng, n)
            for t in (0.1, 0.5, 1.0):
                for q in (2.0, 3.0, 4.0):
                    c = hypercontractivity_check(f, t, q)
                    hc.record(max(0.0, c.lhs - c.rhs), f"n={n} k={k} t={t} q={q}")
                g = RealCubeFunction(f.values - f.values.mean())
                c = exponential_decay_check(g, t, tol=1e-10)
                decay.record(max(0.0, c.lhs - c.rhs), f"n={n} k={k} t={t}")
    out.extend([hc, decay])
    return out


# ---------------------------------------------------------------------------
# cube inequalities


def all_tables(n: int) -> np.ndarray:
    """Every Boolean table on n <= 4 coordinates as rows of a 0/1 array."""
    if n > 4:
        raise PreconditionError("exhaustive enumeration is limited to n <= 4")
    size = 1 << n
    codes = np.arange(1 << size, dtype=np.uint32)
    return ((codes[:, None] >> np.arange(size, dtype=np.uint32)) & 1).astype(bool)


def _norm_comparison_violation(l1: np.ndarray, l2sq: np.ndarray) -> np.ndarray:
    """Per-row worst excess in ``l1 <= l2sq <= 2 l1`` over off-diagonal pairs."""
    off = ~np.eye(l1.shape[-1], dtype=bool)
    lo = (l1 - l2sq)[:, off]
    hi = (l2sq - 2 * l1)[:, off]
    return np.maximum(lo.max(axis=1, initial=0.0), hi.max(axis=1, initial=0.0))


def inequalities_battery(n_max: int = 8, seed: int = 0, table=None, s0: float = DEFAULT_S0) -> list[CheckResult]:
    rng = _rng(seed, 2)
    out = []

    ex_p = CheckResult("poincare_exhaustive", 1e-12)
    ex_n = CheckResult("norm_comparison_exhaustive", 1e-12)
    for n in range(1, min(4, n_max) + 1):
        tabs = all_tables(n)
        lhs, rhs = batch_lhs_rhs(tabs, "poincare")
        for k in np.flatnonzero(lhs - rhs > 1e-12)[:1]:
            ex_p.first_failure = f"n={n} table={int(k)}"
        ex_p.cases += tabs.shape[0]
        ex_p.failures += int(np.count_nonzero(lhs - rhs > 1e-12))
        ex_p.worst = max(ex_p.worst, float(np.max(lhs - rhs, initial=0.0)))
        if n >= 2:
            b = boolean_batch(tabs)
            viol = _norm_comparison_violation(b.pair_l1, b.pair_l2sq)
            ex_n.cases += tabs.shape[0]
            ex_n.failures += int(np.count_nonzero(viol > 1e-12))
            ex_n.worst = max(ex_n.worst, float(viol.max()))
    out.extend([ex_p, ex_n])

    rn = CheckResult("norm_comparison_random", 1e-12)
    rp = CheckResult("poincare_random", 1e-12)
    for n in sorted({min(n_max, d) for d in (6, 8, 10)}):
        tabs = rng.random((500, 1 << n)) < rng.random((500, 1))
        b = boolean_batch(tabs)
        viol = _norm_comparison_violation(b.pair_l1, b.pair_l2sq)
        rn.cases += tabs.shape[0]
        rn.failures += int(np.count_nonzero(viol > 1e-12))
        rn.worst = max(rn.worst, float(viol.max()))
        lhs, rhs = batch_lhs_rhs(tabs, "poincare")
        rp.cases += tabs.shape[0]
        rp.failures += int(np.count_nonzero(lhs - rhs > 1e-12))
        rp.worst = max(rp.worst, float(np.max(lhs - rhs, initial=0.0)))
    out.extend([rn, rp])

    sums = CheckResult("report_terms_sum_to_rhs", 1e-10)
    ratios = {name: CheckResult(f"{name}_ratio_finite", 1.0 if name == "poincare" else math.inf)
              for name in ("poincare", "talagrand1", "talagrand2")}
    majorant = CheckResult("hypercontractive_majorant", 0.0)
    for label, f in function_corpus(min(n_max, 10), seed):
        reps = [poincare_report(f), talagrand1_report(f), talagrand2_report(f, s0)]
        for rep in reps:
            sums.record(abs(math.fsum(rep.terms.values()) - rep.rhs) / max(1.0, rep.rhs), f"{label} {rep.name}")
            if not rep.degenerate:
                ratios[rep.name].record(rep.ratio, f"{label} {rep.name}", ok=math.isfinite(rep.ratio)
                                        and (rep.name != "poincare" or rep.ratio <= 1 + 1e-12))
        if f.n >= 2:
            kkl_report(f)
            for i, j in itertools.combinations(range(1, min(f.n, 4) + 1), 2):
                try:
                    hb = hypercontractive_bound_check(f, i, j)
                except PreconditionError:
                    continue
                majorant.record(max(0.0, hb.integral - hb.majorant), f"{label} ({i},{j})")
    for name, res in ratios.items():
        res.observed["max_ratio"] = res.worst
    out.append(sums)
    out.extend(ratios.values())
    out.append(majorant)

    closed = CheckResult("tribes_closed_forms", 0.0)
    alt = CheckResult("alternative_selects_pair_on_tribes", 0.0)
    for k in range(1, n_max + 1):
        for m in range(1, n_max // k + 1):
            f = tribes(k, m)
            got = f.to_real()
            first = discrete_derivative(got, 1)
            closed.record(abs(lp_norm(first, 1) - float(tribes_influence_closed_form(k, m))),
                          f"k={k} m={m}")
            if m >= 2:
                d = derivative_stack(derivative_stack(got.values, f.n)[k], f.n)[0]  # D_1 D_{k+1}
                closed.record(abs(0.5 * float(np.mean(np.abs(d)))
                                  - float(tribes_pair_influence_closed_form(k, m, False))), f"k={k} m={m} pair")
            if k >= 2 and m >= 2:
                rep = corollary_alternative_report(f, s0)
                alt.record(0.0, f"k={k} m={m}", ok=rep.branch == "pair" and rep.c2 > 0)
    out.extend([closed, alt])

    if table is not None:
        inj = CheckResult("supplied_table", 1e-12)
        real = table.to_real() if isinstance(table, BooleanFunction) else table
        rep = poincare_report(real)
        inj.record(max(0.0, rep.lhs - rep.rhs), "poincare")
        for i, j in itertools.permutations(range(1, real.n + 1), 2):
            c = norm_equivalence_check(real, i, j)
            inj.record(max(0.0, c.l1 - c.l2_squared, c.l2_squared - 2 * c.l1), f"norm comparison ({i},{j})")
        for rep in (talagrand1_report(real), talagrand2_report(real, s0)):
            inj.record(0.0, rep.name, ok=rep.rhs >= 0 and math.isfinite(rep.rhs))
        out.append(inj)
    return out


# ---------------------------------------------------------------------------
# Gaussian side


def _random_expansion(rng: np.random.Generator, n_max: int = 3, deg_max: int = 5) -> HermiteExpansion:
    n = int(rng.integers(1, n_max + 1))
    deg = int(rng.integers(1, deg_max + 1))
    return HermiteExpansion.random(n, deg, seed=int(rng.integers(2**63)))


def gaussian_battery(seed: int = 0, count: int = 100) -> list[CheckResult]:
    rng = _rng(seed, 3)
    out = []

    tay = CheckResult("variance_taylor", 1e-9)
    inv = CheckResult("inverse_poincare", 1e-12)
    expansions = [_random_expansion(rng) for _ in range(count)]
    for k, f in enumerate(expansions):
        for p in (1, 2, 3):
            rep = variance_taylor_check(f, p, tol=math.inf)
            tay.record(rep.residual / max(1.0, rep.variance), f"expansion {k} p={p}")
        c = inverse_poincare_check(f)
        inv.record(max(0.0, c.lhs - c.rhs), f"expansion {k}")
    out.extend([tay, inv])

    ex = CheckResult("taylor_worked_examples", 1e-12)
    x1 = HermiteExpansion.from_monomials({(1,): 1.0}, 1)
    r = variance_taylor_check(x1, 1)
    ex.record(abs(r.remainder) + abs(r.moments[0] - 1.0), "x1 p=1")
    x1x2 = HermiteExpansion.from_monomials({(1, 1): 1.0}, 2)
    r = variance_taylor_check(x1x2, 1)
    ex.record(abs(r.remainder - 1.0) + abs(r.moments[0]), "x1x2 p=1")
    sq = HermiteExpansion.from_monomials({(2,): 1.0}, 1)
    r = variance_taylor_check(sq, 2)
    ex.record(abs(r.moments[1] - 2.0) + abs(r.variance - 2.0), "x1^2 p=2")
    out.append(ex)

    ak = CheckResult("a_k_coefficients", 1e-8)
    rep = a_k_coefficients_check(10)
    ak.record(rep.worst, "kmax=10")
    out.append(ak)

    ou = CheckResult("ou_quadrature_vs_spectral", 1e-8)
    laws = CheckResult("ou_laws", 1e-10)
    for k in range(10):
        n = 1 + k % 2
        f = HermiteExpansion.random(n, int(rng.integers(1, 7)), seed=int(rng.integers(2**63)))
        pts = rng.standard_normal((4, n))
        for t in (0.1, 0.5, 1.0, 2.0):
            diff = np.max(np.abs(ou_integral(f, t, pts) - ou_semigroup(f, t).evaluate(pts)))
            ou.record(diff / max(1.0, math.sqrt(f.norm2_squared())), f"n={n} k={k} t={t}")
    for k, f in enumerate(expansions[:30]):
        g = expansions[-1 - k] if expansions[-1 - k].n == f.n else f
        comp = np.max(np.abs(ou_semigroup(ou_semigroup(f, 0.3), 0.7).coeffs - ou_semigroup(f, 1.0).coeffs))
        mean_kept = abs(ou_semigroup(f, 0.5).mean() - f.mean())
        ipp = abs(-inner(f, ou_generator(g)) - gradient_inner(f, g))
        comm = max(
            float(np.max(np.abs(hermite_partial(ou_semigroup(f, 0.4), i).coeffs
                                - math.exp(-0.4) * ou_semigroup(hermite_partial(f, i), 0.4).coeffs)))
            for i in range(1, f.n + 1)
        )
        laws.record(max(comp, mean_kept, ipp, comm) / max(1.0, f.norm2_squared()), f"expansion {k}")
    out.extend([ou, laws])

    gt = CheckResult("gaussian_talagrand_x1x2", 1e-6)
    rep = gaussian_talagrand_report(x1x2, 1)
    gt.record(abs(rep.lhs - 1.0) + abs(rep.rhs - 2.0), "x1x2 p=1")
    gt.observed["rhs"] = rep.rhs
    out.append(gt)

    gr = CheckResult("gaussian_talagrand_reports", 0.0)
    for k, f in enumerate(expansions[:20]):
        for p in (1, 2):
            rep = gaussian_talagrand_report(f, p)
            gr.record(0.0, f"expansion {k} p={p}", ok=rep.rhs >= 0 and math.isfinite(rep.rhs)
                      and (rep.degenerate or math.isfinite(rep.ratio)))
    out.append(gr)

    nel = CheckResult("nelson_hypercontractivity", 1e-8)
    rule = QuadratureRule.build(1, 40)
    for k in range(10):
        f = HermiteExpansion.random(1, int(rng.integers(1, 6)), seed=int(rng.integers(2**63)))
        for t in (0.1, 0.5, 1.0):
            for q in (2.0, 3.0, 4.0):
                c = nelson_check(f, t, q, rule)
                nel.record(max(0.0, c.lhs - c.rhs), f"k={k} t={t} q={q}")
    out.append(nel)

    qe = CheckResult("quadrature_exactness", 1e-10)
    for order in (4, 8, 16, 24, 40):
        qe.record(QuadratureRule.build(1, order).monomial_error(2 * order - 1), f"order={order}")
    out.append(qe)
    return out


def run_suite(suite: str, n_max: int = 8, seed: int = 0, table=None, s0: float = DEFAULT_S0) -> list[CheckResult]:
    if suite == "identities":
        return identities_battery(n_max, seed)
    if suite == "inequalities":
        return inequalities_battery(n_max, seed, table, s0)
    if suite == "gaussian":
        return gaussian_battery(seed)
    if suite == "all":
        return (identities_battery(n_max, seed) + inequalities_battery(n_max, seed, table, s0)
                + gaussian_battery(seed))
    raise PreconditionError(f"unknown suite {suite!r}")
