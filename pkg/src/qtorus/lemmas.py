"""Operator-norm perturbation bounds for powers and polynomials of operators.

Each ``check_*`` evaluates both sides of an inequality on concrete matrices
and reports whether ``lhs <= rhs + slack`` holds.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np
from scipy.stats import unitary_group

from .algebra import TorusPolynomial
from .reps import clock_shift

SLACK = 1e-9
UNITARY_TOL = 1e-10


class NotUnitaryError(ValueError):
    pass


@dataclass(frozen=True)
class BoundReport:
    lhs: float
    rhs: float
    passed: bool

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs


def opnorm(M: np.ndarray) -> float:
    return float(np.linalg.norm(M, 2))


def _require_unitary(*mats):
    for M in mats:
        M = np.asarray(M)
        err = np.abs(M.conj().T @ M - np.eye(M.shape[0])).max()
        if err > UNITARY_TOL:
            raise NotUnitaryError(f"matrix is not unitary (deviation {err:.2e})")


def _report(lhs, rhs, slack=SLACK):
    return BoundReport(float(lhs), float(rhs), bool(lhs <= rhs + slack))


def unitary_power(U: np.ndarray, n: int) -> np.ndarray:
    if n < 0:
        return np.linalg.matrix_power(U.conj().T, -n)
    return np.linalg.matrix_power(U, n)


def check_unitary_power_gap(U, V, n: int) -> BoundReport:
    """``||U^n - V^n|| <= |n| ||U - V||`` for unitaries and any integer ``n``."""
    U, V = np.asarray(U), np.asarray(V)
    _require_unitary(U, V)
    lhs = opnorm(unitary_power(U, n) - unitary_power(V, n))
    return _report(lhs, abs(n) * opnorm(U - V))


def check_unitary_poly_gap(U, V, coeffs: Mapping[int, complex]) -> BoundReport:
    """``||P(U) - P(V)|| <= ||U - V|| sum_j |j a_j|`` for a Laurent polynomial ``P``."""
    U, V = np.asarray(U), np.asarray(V)
    _require_unitary(U, V)
    PU = sum(c * unitary_power(U, j) for j, c in coeffs.items())
    PV = sum(c * unitary_power(V, j) for j, c in coeffs.items())
    rhs = opnorm(U - V) * sum(abs(j * c) for j, c in coeffs.items())
    return _report(opnorm(PU - PV), rhs)


def check_bounded_power_gap(Q, R, n: int) -> BoundReport:
    """``||Q^n - R^n|| <= ||Q - R|| sum_{j<n} ||Q||^{n-j-1} ||R||^j`` for ``n >= 1``."""
    if n < 1:
        raise ValueError("n must be a natural number")
    Q, R = np.asarray(Q), np.asarray(R)
    nq, nr = opnorm(Q), opnorm(R)
    lhs = opnorm(np.linalg.matrix_power(Q, n) - np.linalg.matrix_power(R, n))
    rhs = opnorm(Q - R) * sum(nq ** (n - j - 1) * nr**j for j in range(n))
    return _report(lhs, rhs)


def check_bounded_poly_gap(Q, R, coeffs) -> BoundReport:
    """Polynomial version with coefficients ``a_0, ..., a_d``."""
    Q, R = np.asarray(Q), np.asarray(R)
    nq, nr = opnorm(Q), opnorm(R)
    n = Q.shape[0]
    PQ = sum(c * np.linalg.matrix_power(Q, j) for j, c in enumerate(coeffs)) + 0 * np.eye(n)
    PR = sum(c * np.linalg.matrix_power(R, j) for j, c in enumerate(coeffs)) + 0 * np.eye(n)
    rhs = opnorm(Q - R) * sum(
        abs(c) * nq ** (j - k - 1) * nr**k for j, c in enumerate(coeffs) for k in range(j)
    )
    return _report(opnorm(PQ - PR), rhs)


def evaluate_normal_ordered(p: TorusPolynomial, U, V) -> np.ndarray:
    """``sum p(m, n) U^m V^n`` with the ``U`` power on the left."""
    if p.d != 2:
        raise ValueError("two-variable polynomial expected")
    out = np.zeros_like(np.asarray(U), dtype=complex)
    for (m, n), c in p.items():
        out += c * unitary_power(U, m) @ unitary_power(V, n)
    return out


def check_two_variable_gap(p: TorusPolynomial, U1, V1, U2, V2) -> BoundReport:
    """``||p(U1,V1) - p(U2,V2)|| <= (||U1-U2|| + ||V1-V2||) N sum_{(m,n) != 0} |p(m,n)|``.

    ``N`` is the degree of ``p``; the constant term cancels on the left and is
    left out of the sum.
    """
    U1, V1, U2, V2 = map(np.asarray, (U1, V1, U2, V2))
    _require_unitary(U1, V1, U2, V2)
    lhs = opnorm(evaluate_normal_ordered(p, U1, V1) - evaluate_normal_ordered(p, U2, V2))
    mass = sum(abs(c) for alpha, c in p.items() if alpha != (0, 0))
    rhs = (opnorm(U1 - U2) + opnorm(V1 - V2)) * p.degree * mass
    return _report(lhs, rhs)


# randomized suites

def random_unitary(q: int, rng: np.random.Generator) -> np.ndarray:
    if q == 1:
        return np.array([[np.exp(2j * np.pi * rng.random())]])
    return unitary_group.rvs(q, random_state=rng)


def nearby_unitary(U: np.ndarray, eps: float, rng: np.random.Generator) -> np.ndarray:
    q = U.shape[0]
    A = rng.normal(size=(q, q)) + 1j * rng.normal(size=(q, q))
    Hm = (A + A.conj().T) / 2
    w, Vecs = np.linalg.eigh(Hm)
    return U @ (Vecs * np.exp(1j * eps * w)) @ Vecs.conj().T


def clock_shift_pair(q: int, rng: np.random.Generator):
    """``(e(x) S, e(y) C)`` for a random ``p`` coprime to ``q`` and random ``(x, y)``."""
    candidates = [p for p in range(q) if np.gcd(p, q) == 1] or [0]
    rep = clock_shift(int(rng.choice(candidates)), q)
    x, y = rng.random(2)
    return np.exp(2j * np.pi * x) * rep.S, np.exp(2j * np.pi * y) * rep.C


def _unitary_pair(q, rng):
    kind = rng.integers(3)
    if kind == 0:
        return random_unitary(q, rng), random_unitary(q, rng)
    if kind == 1:
        U = random_unitary(q, rng)
        return U, nearby_unitary(U, 10.0 ** rng.uniform(-4, 0), rng)
    U, _ = clock_shift_pair(q, rng)
    V, _ = clock_shift_pair(q, rng)
    return U, V


def _random_poly(rng, max_deg=4, terms=6):
    deg = int(rng.integers(1, max_deg + 1))
    coeffs = {}
    for _ in range(terms):
        alpha = tuple(int(x) for x in rng.integers(-deg, deg + 1, size=2))
        coeffs[alpha] = complex(*rng.normal(size=2))
    return TorusPolynomial(2, coeffs)


def lemma_suite(trials: int, seed: int, q_max: int = 16, n_max: int = 50) -> dict:
    """Run the three randomized bound suites; returns violation counts and worst margins."""
    rng = np.random.default_rng(seed)
    stats = {}

    def record(name, rep):
        s = stats.setdefault(name, {"trials": 0, "violations": 0, "worst_margin": np.inf})
        s["trials"] += 1
        s["violations"] += int(not rep.passed)
        s["worst_margin"] = min(s["worst_margin"], rep.margin)

    for _ in range(trials):
        q = int(rng.integers(1, q_max + 1))
        U, V = _unitary_pair(q, rng)
        n = int(rng.integers(-n_max, n_max + 1))
        record("unitary_power", check_unitary_power_gap(U, V, n))

        scale_q, scale_r = rng.uniform(0.3, 1.1, size=2)
        A = rng.normal(size=(q, q)) + 1j * rng.normal(size=(q, q))
        Q = scale_q * A / opnorm(A)
        if rng.random() < 0.5:
            E = rng.normal(size=(q, q)) + 1j * rng.normal(size=(q, q))
            R = Q + 10.0 ** rng.uniform(-4, -1) * E / opnorm(E)
        else:
            B = rng.normal(size=(q, q)) + 1j * rng.normal(size=(q, q))
            R = scale_r * B / opnorm(B)
        record("bounded_power", check_bounded_power_gap(Q, R, int(rng.integers(1, n_max + 1))))

        U1, V1 = _unitary_pair(q, rng)
        if rng.random() < 0.5:
            U2, V2 = nearby_unitary(U1, 10.0 ** rng.uniform(-4, 0), rng), nearby_unitary(V1, 10.0 ** rng.uniform(-4, 0), rng)
        else:
            U2, V2 = _unitary_pair(q, rng)
        record("two_variable", check_two_variable_gap(_random_poly(rng), U1, V1, U2, V2))
    for s in stats.values():
        s["worst_margin"] = float(s["worst_margin"])
    return stats
