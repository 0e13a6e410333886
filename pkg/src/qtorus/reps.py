"""Finite-dimensional representations and numerical non-commutative norms.

For rational ``theta = p/q`` the quantum torus is realised by ``q x q``
matrix-valued functions on the ordinary 2-torus:
``U -> e(x) S``, ``V -> e(y) C`` with ``S C = exp(2 pi i p/q) C S``. The
canonical trace becomes the torus average of ``tr(.)/q``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Number

import numpy as np

from .algebra import DeformationMatrix, TorusPolynomial, root_of_unity
from .parallel import chunks, concat, ordered_map, pairwise_sum

DEFAULT_TOL = 1e-4
DEFAULT_G_MAX = 8192
REFINE_FACTOR = 8
CHUNK_POINTS = 8192


class TruncationWarning(UserWarning):
    """The GNS box is too small for the polynomial's degree."""


@dataclass(frozen=True)
class ClockShiftRep:
    p: int
    q: int
    C: np.ndarray = field(repr=False)
    S: np.ndarray = field(repr=False)

    @property
    def theta(self) -> Fraction:
        return Fraction(self.p, self.q)

    @property
    def omega(self) -> complex:
        return root_of_unity(self.p, self.q)

    def monomial(self, alpha) -> np.ndarray:
        """Matrix of ``S^{a} C^{b}``: it sends ``e_k`` to ``omega^{b k} e_{k-a}``."""
        a, b = alpha
        q = self.q
        k = np.arange(q)
        M = np.zeros((q, q), dtype=complex)
        M[(k - a) % q, k] = [root_of_unity(self.p * b * int(kk), q) for kk in k]
        return M


def clock_shift(p: int, q: int) -> ClockShiftRep:
    if q < 1:
        raise ValueError("q must be positive")
    if math.gcd(p, q) != 1:
        raise ValueError(f"p={p} and q={q} are not coprime")
    p %= q
    C = np.diag([root_of_unity(p * k, q) for k in range(q)])
    S = np.zeros((q, q), dtype=complex)
    S[(np.arange(q) - 1) % q, np.arange(q)] = 1.0
    return ClockShiftRep(p, q, C, S)


def rep_for(theta) -> ClockShiftRep:
    """Clock/shift representation for a rational ``theta`` (Fraction, str or DeformationMatrix)."""
    if isinstance(theta, DeformationMatrix):
        if theta.d != 2 or not theta.exact:
            raise ValueError("clock/shift representations need a rational two-dimensional theta")
        theta = theta.theta
    t = Fraction(theta) % 1
    return clock_shift(t.numerator, t.denominator)


def _check_d2(a: TorusPolynomial):
    if a.d != 2:
        raise ValueError("numerical symbols are implemented for d = 2 only")


def _e(n: np.ndarray, G: int) -> np.ndarray:
    # exp(2 pi i n / G) from the integer residue
    return np.exp(2j * np.pi * (np.asarray(n) % G) / G)


def symbol_matrix(a: TorusPolynomial, x: float, y: float, rep: ClockShiftRep) -> np.ndarray:
    """``T(x, y) = sum_alpha a_alpha e(alpha_1 x + alpha_2 y) S^{alpha_1} C^{alpha_2}``."""
    return symbol_matrices(a, np.array([x]), np.array([y]), rep)[0]


def symbol_matrices(a: TorusPolynomial, xs, ys, rep: ClockShiftRep) -> np.ndarray:
    """Symbols at the points ``(xs[i], ys[i])``; shape ``(n, q, q)``."""
    _check_d2(a)
    xs = np.asarray(xs, dtype=float).ravel()
    ys = np.asarray(ys, dtype=float).ravel()
    q = rep.q
    out = np.zeros((xs.size, q, q), dtype=complex)
    for alpha, c in a.items():
        ph = np.exp(2j * np.pi * (alpha[0] * xs + alpha[1] * ys))
        out += (c * ph)[:, None, None] * rep.monomial(alpha)[None]
    return out


def commutative_grid(a: TorusPolynomial, G: int) -> np.ndarray:
    """Values of a scalar trigonometric polynomial on the ``G x G`` uniform grid."""
    _check_d2(a)
    F = np.zeros((G, G), dtype=complex)
    for (a1, a2), c in a.items():
        F[a1 % G, a2 % G] += c
    return np.fft.ifft2(F, norm="forward")


def symbol_grid(a: TorusPolynomial, rep: ClockShiftRep, H: int) -> np.ndarray:
    """Symbols on the fundamental cell of the uniform grid with ``G = q H`` points per axis.

    Returns shape ``(H, H, q, q)``; entry ``[g, h]`` is ``T(g/G, h/G)``. Singular
    values are invariant under shifts by ``1/q`` in either variable, so the
    cell carries the full grid average.
    """
    _check_d2(a)
    q = rep.q
    G = q * H
    if q == 1:
        vals = commutative_grid(a, G)
        return vals[:, :, None, None]
    by_res: list[dict[int, dict[int, complex]]] = [dict() for _ in range(q)]
    for (a1, a2), c in a.items():
        row = by_res[a1 % q].setdefault(a1, {})
        row[a2 % G] = row.get(a2 % G, 0) + c
    g = np.arange(H)
    F = np.zeros((q, H, G), dtype=complex)
    for r, rows in enumerate(by_res):
        if not rows:
            continue
        a1s = sorted(rows)
        Y = np.zeros((len(a1s), G), dtype=complex)
        for i, a1 in enumerate(a1s):
            for col, c in rows[a1].items():
                Y[i, col] += c
        Y = np.fft.ifft(Y, axis=1, norm="forward")
        E = _e(np.outer(g, a1s), G)
        F[r] = E @ Y
    i = np.arange(q)
    res = (i[None, :] - i[:, None]) % q            # [i, k] -> (k - i) mod q
    shift = (np.arange(H)[:, None] + i[None, :] * rep.p * H) % G   # [h, k]
    return F[res[None, None, :, :], g[:, None, None, None], shift[None, :, None, :]]


@dataclass
class PointStats:
    l1: np.ndarray
    l2sq: np.ndarray
    op: np.ndarray


def _point_stats(T: np.ndarray) -> PointStats:
    """Per-point sums of singular values, of their squares, and the largest one."""
    n = T.shape[0]
    if T.shape[1] == 1:
        s = np.abs(T[:, 0, 0])
        return PointStats(s, s * s, s)
    TT = np.matmul(np.conj(np.swapaxes(T, 1, 2)), T)
    ev = np.linalg.eigvalsh(TT)
    ev = np.clip(ev, 0.0, None)
    s = np.sqrt(ev)
    return PointStats(s.sum(axis=1), ev.sum(axis=1), s[:, -1] if n else s)


def grid_stats(a: TorusPolynomial, rep: ClockShiftRep, H: int, n_jobs: int = 1):
    """Evaluate the symbol on the cell grid and gather per-point statistics."""
    T = symbol_grid(a, rep, H).reshape(H * H, rep.q, rep.q)
    parts = ordered_map(lambda sl: _point_stats(T[sl]), chunks(T.shape[0], CHUNK_POINTS), n_jobs)
    return PointStats(concat(p.l1 for p in parts), concat(p.l2sq for p in parts),
                      concat(p.op for p in parts))


@dataclass
class NormReport:
    l1: float | None
    l2: float | None
    op: float | None
    grid_used: int
    convergence_delta: float | None     # None when no doubling step fitted under G_max
    theta: str
    converged: bool = True
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "theta": self.theta,
            "l1": self.l1,
            "l2": self.l2,
            "op": self.op,
            "grid": self.grid_used,
            "delta": self.convergence_delta,
            "converged": self.converged,
        }


def _parse_exponents(exponents) -> set:
    if isinstance(exponents, str):
        exponents = exponents.split(",")
    out = set()
    for e in exponents:
        e = str(e).strip().lower()
        if e in ("1", "l1"):
            out.add(1)
        elif e in ("2", "l2"):
            out.add(2)
        elif e in ("inf", "op", "oo", "linf"):
            out.add("inf")
        else:
            raise ValueError(f"unsupported exponent {e!r}; choose from 1, 2, inf")
    return out


def _refine_op(a, rep, G, flat_index, H, current):
    g, h = divmod(int(flat_index), H)
    step = 1.0 / G
    offs = np.linspace(-step, step, 2 * REFINE_FACTOR + 1)
    X, Y = np.meshgrid(g * step + offs, h * step + offs, indexing="ij")
    T = symbol_matrices(a, X, Y, rep)
    s = np.linalg.svd(T, compute_uv=False)
    return max(current, float(s.max()))


def _evaluate(a, rep, H, want, n_jobs):
    G = rep.q * H
    st = grid_stats(a, rep, H, n_jobs)
    npts = H * H
    out = {}
    if 1 in want:
        out[1] = pairwise_sum(st.l1) / (npts * rep.q)
    if 2 in want:
        out[2] = math.sqrt(max(pairwise_sum(st.l2sq), 0.0) / (npts * rep.q))
    if "inf" in want:
        idx = int(np.argmax(st.op))
        out["inf"] = _refine_op(a, rep, G, idx, H, float(st.op[idx]))
    return out


def schatten_norms(a: TorusPolynomial, rep: ClockShiftRep, exponents=(1, 2, "inf"),
                   tol: float = DEFAULT_TOL, G_max: int = DEFAULT_G_MAX,
                   G0: int | None = None, n_jobs: int = 1) -> NormReport:
    """Non-commutative ``L^1``, ``L^2`` and operator norms by grid quadrature.

    The grid starts at ``G0 = 4 (2 deg + 1)`` points per axis (rounded up to a
    multiple of ``q``) and doubles until the relative change of the ``L^1``
    and operator norms drops below ``tol`` or ``G_max`` would be exceeded.
    The ``L^2`` value is exact once ``G > 2 deg``. ``G`` is kept even.
    """
    _check_d2(a)
    want = _parse_exponents(exponents)
    q = rep.q
    if G0 is None:
        G0 = 4 * (2 * a.degree + 1)
    G0 = max(min(G0, G_max // 2), q)
    H = max(2, -(-G0 // q))
    # odd G and 2G give identical rules for integrands of period 1/2
    H += H % 2
    notes = []
    prev = _evaluate(a, rep, H, want | {1}, n_jobs)
    delta = math.inf
    converged = False
    while 2 * q * H <= G_max:
        H *= 2
        cur = _evaluate(a, rep, H, want | {1}, n_jobs)
        delta = max(_rel(cur[k], prev[k]) for k in cur if k != 2)
        prev = cur
        if delta < tol:
            converged = True
            break
    G = q * H
    if not converged:
        notes.append(f"grid limit G_max={G_max} reached; relative change {delta:.3g} >= tol {tol:g}")
    if 2 in want and G <= 2 * a.degree:
        notes.append("grid too coarse for exact L2 quadrature")
    return NormReport(
        l1=prev[1] if 1 in want else None,
        l2=prev.get(2),
        op=prev.get("inf"),
        grid_used=G,
        convergence_delta=None if delta == math.inf else delta,
        theta=f"{rep.p}/{rep.q}",
        converged=converged,
        notes=notes,
    )


def _rel(x: float, y: float) -> float:
    scale = max(abs(x), abs(y))
    return 0.0 if scale == 0 else abs(x - y) / scale


def grid_trace(a: TorusPolynomial, rep: ClockShiftRep, G: int) -> complex:
    """Full-grid average of ``tr(T)/q``; equals the canonical trace once ``G > deg``."""
    H = -(-G // rep.q)
    T = symbol_grid(a, rep, H)
    diag = np.trace(T, axis1=2, axis2=3).ravel()
    return complex(pairwise_sum(diag.real), pairwise_sum(diag.imag)) / (H * H * rep.q)


# lattice representation on l^2(Z^2)

def _theta_value(theta):
    if isinstance(theta, DeformationMatrix):
        theta = theta.theta
    if isinstance(theta, (Fraction, int)):
        return Fraction(theta) % 1
    if isinstance(theta, str):
        return Fraction(theta) % 1
    if isinstance(theta, Number):
        return float(theta) % 1.0
    raise TypeError(f"unsupported theta {theta!r}")


def gns_matrix(a: TorusPolynomial, theta, R: int) -> np.ndarray:
    """Matrix of ``a`` on ``span{e_{m,n}: |m|, |n| <= R}``.

    ``U e_{m,n} = e_{m+1,n}`` and ``V e_{m,n} = exp(-2 pi i m theta) e_{m,n+1}``;
    images leaving the box are dropped. The basis index of ``e_{m,n}`` is
    ``(m + R)(2R + 1) + (n + R)``.
    """
    _check_d2(a)
    if R < a.degree:
        warnings.warn(f"box radius {R} below degree {a.degree}: lattice truncation affects the trace",
                      TruncationWarning, stacklevel=2)
    t = _theta_value(theta)
    side = 2 * R + 1
    M = np.zeros((side * side, side * side), dtype=complex)
    rng = range(-R, R + 1)
    for (u, v), c in a.items():
        for m in rng:
            mm = m + u
            if abs(mm) > R:
                continue
            if isinstance(t, Fraction):
                ph = root_of_unity(-m * v * t.numerator, t.denominator)
            else:
                s = (-m * v * t) % 1.0
                ph = complex(math.cos(2 * math.pi * s), math.sin(2 * math.pi * s))
            for n in rng:
                nn = n + v
                if abs(nn) > R:
                    continue
                M[(mm + R) * side + nn + R, (m + R) * side + n + R] += c * ph
    return M


def vacuum_index(R: int) -> int:
    side = 2 * R + 1
    return R * side + R


def trace_via_gns(a: TorusPolynomial, theta, R: int | None = None) -> complex:
    """``<a e_0, e_0>`` in the lattice representation."""
    if R is None:
        R = a.degree
    M = gns_matrix(a, theta, R)
    i = vacuum_index(R)
    return complex(M[i, i])
