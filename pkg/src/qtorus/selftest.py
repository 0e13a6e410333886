"""Randomized invariant suites behind the ``selftest`` subcommand.

Every check takes the product as a parameter so that a deliberately broken
multiplication can be injected and shown to be caught.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .algebra import (
    DeformationMatrix,
    TorusPolynomial,
    adjoint,
    derive,
    l2_norm,
    make_monomial,
    trace,
    twisted_mul,
)
from .lemmas import lemma_suite
from .reps import grid_trace, rep_for, schatten_norms, symbol_matrix, trace_via_gns
from .riesz import RieszConstruction, make_schedule, riesz_factor, riesz_product, spectrum_sets

Mul = Callable[[TorusPolynomial, TorusPolynomial, DeformationMatrix], TorusPolynomial]

THETAS = (Fraction(0), Fraction(1, 3), Fraction(1, 5), Fraction(2, 7), Fraction(5, 12))


def flipped_phase_mul(a: TorusPolynomial, b: TorusPolynomial, theta: DeformationMatrix) -> TorusPolynomial:
    """Mutation fixture: the product with the sign of every phase reversed."""
    out = {}
    for alpha, ca in a.items():
        for beta, cb in b.items():
            key = tuple(x + y for x, y in zip(alpha, beta))
            out[key] = out.get(key, 0) + ca * cb * theta.phase(alpha, beta).conjugate()
    return TorusPolynomial(a.d, out)


def random_poly(rng: np.random.Generator, d: int = 2, terms: int = 5, deg: int = 3,
                integer: bool = False) -> TorusPolynomial:
    """Sparse random polynomial; ``integer`` draws Gaussian-integer coefficients,
    for which floating-point sums are exact in any order."""
    coeffs = {}
    for _ in range(terms):
        alpha = tuple(int(x) for x in rng.integers(-deg, deg + 1, size=d))
        if integer:
            coeffs[alpha] = complex(*rng.integers(-9, 10, size=2))
        else:
            coeffs[alpha] = complex(*rng.normal(size=2))
    return TorusPolynomial(d, coeffs)


def random_theta(rng: np.random.Generator, d: int = 2) -> DeformationMatrix:
    if d == 2:
        return DeformationMatrix.scalar(THETAS[int(rng.integers(len(THETAS)))])
    M = [[Fraction(0)] * d for _ in range(d)]
    for k in range(d):
        for l in range(k + 1, d):
            q = int(rng.integers(1, 13))
            M[k][l] = Fraction(int(rng.integers(0, q)), q)
            M[l][k] = (-M[k][l]) % 1
    return DeformationMatrix(M)


def convolve(a: TorusPolynomial, b: TorusPolynomial) -> TorusPolynomial:
    """Plain Laurent-polynomial product, the commutative oracle."""
    out = {}
    for alpha, ca in a.items():
        for beta, cb in b.items():
            key = tuple(x + y for x, y in zip(alpha, beta))
            out[key] = out.get(key, 0) + ca * cb
    return TorusPolynomial(a.d, out)


@dataclass
class CheckResult:
    name: str
    trials: int = 0
    failures: int = 0
    worst: float = 0.0
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.failures == 0

    def record(self, err: float, tol: float) -> None:
        self.trials += 1
        self.worst = max(self.worst, float(err))
        if not err <= tol:
            self.failures += 1

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "trials": self.trials,
                "failures": self.failures, "worst": self.worst, "detail": self.detail}


# algebra laws

def check_commutation(mul: Mul, rng, trials: int) -> CheckResult:
    """``U_k U_l = e^{2 pi i theta_kl} U_l U_k`` on generators, d in {2, 3}."""
    res = CheckResult("commutation_relation")
    for _ in range(trials):
        d = int(rng.integers(2, 4))
        th = random_theta(rng, d)
        for k in range(d):
            for l in range(d):
                ek = tuple(int(i == k) for i in range(d))
                el = tuple(int(i == l) for i in range(d))
                lhs = mul(make_monomial(ek), make_monomial(el), th)
                t = th.entries[k][l]
                rhs = mul(make_monomial(el), make_monomial(ek), th) * cmath.exp(2j * math.pi * float(t))
                res.record(lhs.max_abs_diff(rhs), 1e-12)
    return res


def check_associativity(mul: Mul, rng, trials: int) -> CheckResult:
    res = CheckResult("associativity")
    for _ in range(trials):
        d = int(rng.integers(2, 4))
        th = random_theta(rng, d)
        a, b, c = (random_poly(rng, d) for _ in range(3))
        res.record(mul(mul(a, b, th), c, th).max_abs_diff(mul(a, mul(b, c, th), th)), 1e-12)
    return res


def check_commutative_convolution(mul: Mul, rng, trials: int) -> CheckResult:
    res = CheckResult("theta0_convolution")
    for _ in range(trials):
        d = int(rng.integers(2, 4))
        a, b = random_poly(rng, d, integer=True), random_poly(rng, d, integer=True)
        res.record(mul(a, b, DeformationMatrix.zero(d)).max_abs_diff(convolve(a, b)), 0.0)
    return res


def check_traciality(mul: Mul, rng, trials: int) -> CheckResult:
    res = CheckResult("traciality")
    for _ in range(trials):
        th = random_theta(rng)
        a, b = random_poly(rng), random_poly(rng)
        res.record(abs(trace(mul(a, b, th)) - trace(mul(b, a, th))), 1e-12)
    return res


def check_adjoint(mul: Mul, rng, trials: int) -> CheckResult:
    """Anti-homomorphism, involution and positivity of the trace."""
    res = CheckResult("adjoint_laws")
    for _ in range(trials):
        th = random_theta(rng)
        a, b = random_poly(rng), random_poly(rng)
        err = adjoint(mul(a, b, th), th).max_abs_diff(mul(adjoint(b, th), adjoint(a, th), th))
        err = max(err, adjoint(adjoint(a, th), th).max_abs_diff(a))
        t = trace(mul(adjoint(a, th), a, th))
        err = max(err, abs(t - l2_norm(a) ** 2))
        res.record(err, 1e-12)
    return res


def check_derivations(mul: Mul, rng, trials: int) -> CheckResult:
    res = CheckResult("derivations")
    for _ in range(trials):
        th = random_theta(rng)
        a, b = random_poly(rng), random_poly(rng)
        err = 0.0
        for j in (1, 2):
            lhs = derive(mul(a, b, th), j)
            rhs = mul(derive(a, j), b, th) + mul(a, derive(b, j), th)
            err = max(err, lhs.max_abs_diff(rhs) / max(1.0, l2_norm(lhs)), abs(trace(derive(a, j))))
        err = max(err, derive(derive(a, 1), 2).max_abs_diff(derive(derive(a, 2), 1)))
        res.record(err, 1e-12)
    return res


def check_fourier_roundtrip(mul: Mul, rng, trials: int) -> CheckResult:
    res = CheckResult("fourier_roundtrip")
    for _ in range(trials):
        th = random_theta(rng)
        a = random_poly(rng)
        for alpha, c in a.items():
            mono = make_monomial(alpha)
            got = trace(mul(adjoint(mono, th), a, th))
            res.record(abs(got - c), 1e-12)
    return res


# Riesz products

def check_riesz_laws(mul: Mul, rng, trials: int, N_max: int = 4) -> CheckResult:
    """Magnitude law, support and trace of products built with ``mul``."""
    res = CheckResult("riesz_magnitude_law")
    for _ in range(trials):
        th = random_theta(rng)
        N = int(rng.integers(1, N_max + 1))
        sched = make_schedule("geometric", 3, N)
        spec = spectrum_sets(sched)
        P = TorusPolynomial(2, {(0, 0): 1.0})
        for j in range(1, N + 1):
            P = mul(riesz_factor(j, sched, th), P, th)
        err = abs(trace(P) - 1)
        err = max(err, 1.0 if set(P.coeffs) != spec.indices() else 0.0)
        for e in spec.entries:
            for k in (e.k, tuple(-x for x in e.k)):
                err = max(err, abs(abs(P[k]) - 2.0 ** -e.weight))
        res.record(err, 1e-12)
    return res


def check_derivative_identities(rng, trials: int, N_max: int = 4) -> CheckResult:
    res = CheckResult("derivative_identities")
    for _ in range(trials):
        th = random_theta(rng)
        N = int(rng.integers(1, N_max + 1))
        c = RieszConstruction.build(make_schedule("geometric", 3, N), N, th)
        I = TorusPolynomial(2, {(0, 0): 1.0})
        d22 = derive(derive(c.W, 2), 2)
        d11 = derive(derive(c.W, 1), 1)
        d12 = derive(derive(c.W, 1), 2)
        err = max(d22.max_abs_diff(c.P - I), d11.max_abs_diff(c.B + c.P - I),
                  d12.max_abs_diff(c.E + c.G))
        res.record(err, 1e-13)
    return res


# representation oracles

def check_symbol_multiplicativity(mul: Mul, rng, trials: int) -> CheckResult:
    res = CheckResult("symbol_multiplicativity")
    for _ in range(trials):
        th = random_theta(rng)
        rep = rep_for(th)
        a, b = random_poly(rng), random_poly(rng)
        x, y = rng.random(2)
        lhs = symbol_matrix(mul(a, b, th), x, y, rep)
        rhs = symbol_matrix(a, x, y, rep) @ symbol_matrix(b, x, y, rep)
        res.record(float(np.abs(lhs - rhs).max()), 1e-10)
    return res


def check_gns_trace(rng, trials: int) -> CheckResult:
    res = CheckResult("gns_trace")
    for _ in range(trials):
        th = random_theta(rng)
        a = random_poly(rng, deg=2)
        res.record(abs(trace_via_gns(a, th.theta) - trace(a)), 0.0)
    return res


def check_quadrature(rng, trials: int) -> CheckResult:
    """Grid ``L^2`` against the coefficient norm, and the grid trace."""
    res = CheckResult("quadrature_l2_trace")
    for _ in range(trials):
        th = random_theta(rng)
        rep = rep_for(th)
        a = random_poly(rng, deg=2)
        G = rep.q * 2 * (2 * a.degree + 2)
        rpt = schatten_norms(a, rep, (2,), G0=G, G_max=2 * G)
        err = max(abs(rpt.l2 - l2_norm(a)), abs(grid_trace(a, rep, G) - trace(a)))
        res.record(err, 1e-9)
    return res


def check_hoelder(rng, trials: int) -> CheckResult:
    res = CheckResult("hoelder_chain")
    for _ in range(trials):
        th = random_theta(rng)
        rep = rep_for(th)
        P = riesz_product(make_schedule("geometric", 3, 2), 2, th)
        r = schatten_norms(P, rep, (1, 2, "inf"), G_max=1024)
        slack = (r.convergence_delta or 0.0) + 1e-9
        res.record(max(r.l1 - r.l2 - slack * r.l2, r.l2 - r.op - slack * r.op, 0.0), 0.0)
    return res


@dataclass
class SelftestSummary:
    seed: int
    quick: bool
    checks: list[CheckResult] = field(default_factory=list)
    lemmas: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks) and all(
            v["violations"] == 0 for v in self.lemmas.values())

    def to_dict(self) -> dict:
        return {"seed": self.seed, "quick": self.quick, "passed": self.passed,
                "checks": [c.to_dict() for c in self.checks], "lemmas": self.lemmas}


def run_selftest(seed: int, quick: bool = False, mul: Mul = twisted_mul) -> SelftestSummary:
    """Run every suite with one seeded generator; ``quick`` trims the trial counts."""
    rng = np.random.default_rng(seed)
    n = 10 if quick else 50
    summary = SelftestSummary(seed, quick)
    summary.checks = [
        check_commutation(mul, rng, n),
        check_commutative_convolution(mul, rng, n),
        check_associativity(mul, rng, n),
        check_traciality(mul, rng, n),
        check_adjoint(mul, rng, n),
        check_derivations(mul, rng, n),
        check_fourier_roundtrip(mul, rng, n),
        check_riesz_laws(mul, rng, max(3, n // 5)),
        check_derivative_identities(rng, max(3, n // 5)),
        check_symbol_multiplicativity(mul, rng, n),
        check_gns_trace(rng, n),
        check_quadrature(rng, max(3, n // 5)),
        check_hoelder(rng, 2 if quick else 5),
    ]
    summary.lemmas = lemma_suite(200 if quick else 1000, seed)
    return summary


__all__ = ["flipped_phase_mul", "random_poly", "random_theta", "convolve", "CheckResult",
           "SelftestSummary", "run_selftest"]
