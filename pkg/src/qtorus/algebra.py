"""Twisted trigonometric polynomials on the d-dimensional quantum torus.

Elements are finite sums ``sum_alpha c_alpha U^alpha`` where
``U^alpha = U_1^{alpha_1} ... U_d^{alpha_d}`` is the normal-ordered monomial
and the generators obey ``U_k U_l = exp(2 pi i theta_kl) U_l U_k``.
"""
from __future__ import annotations

import json
import math
from fractions import Fraction
from functools import lru_cache
from numbers import Number
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

TWO_PI = 2.0 * math.pi

MultiIndex = tuple[int, ...]


@lru_cache(maxsize=65536)
def root_of_unity(r: int, q: int) -> complex:
    """``exp(2 pi i r / q)`` evaluated from the reduced residue ``r mod q``.

    Quarter turns are returned exactly so that trivial phases never pick up
    rounding noise.
    """
    r %= q
    if r == 0:
        return 1.0 + 0.0j
    if 4 * r % q == 0:
        return (1j, -1.0 + 0.0j, -1j)[4 * r // q - 1]
    # symmetric residue keeps the angle small
    if 2 * r > q:
        r -= q
    angle = TWO_PI * r / q
    return complex(math.cos(angle), math.sin(angle))


def _as_phase(value) -> Fraction | float:
    if isinstance(value, Fraction):
        return value % 1
    if isinstance(value, int):
        return Fraction(0)
    if isinstance(value, str):
        return Fraction(value) % 1
    return float(value) % 1.0


class DeformationMatrix:
    """Skew-symmetric phase matrix ``Theta`` with entries taken modulo 1.

    In exact mode every entry is a :class:`~fractions.Fraction` and phases are
    computed as residues modulo the common denominator. Floating mode accepts
    arbitrary reals.
    """

    __slots__ = ("d", "entries", "exact", "_den", "_num")

    def __init__(self, entries: Sequence[Sequence]):
        d = len(entries)
        if d < 2 or any(len(row) != d for row in entries):
            raise ValueError("deformation matrix must be square with d >= 2")
        vals = [[_as_phase(x) for x in row] for row in entries]
        exact = all(isinstance(x, Fraction) for row in vals for x in row)
        if not exact:
            vals = [[float(x) for x in row] for row in vals]
        for k in range(d):
            if vals[k][k] != 0:
                raise ValueError(f"diagonal entry theta[{k}][{k}] must vanish")
            for l in range(k):
                s = (vals[k][l] + vals[l][k]) % 1
                if exact and s != 0:
                    raise ValueError(f"theta[{k}][{l}] is not -theta[{l}][{k}] mod 1")
                if not exact and min(s, 1.0 - s) > 1e-12:
                    raise ValueError(f"theta[{k}][{l}] is not -theta[{l}][{k}] mod 1")
        self.d = d
        self.exact = exact
        self.entries = tuple(tuple(row) for row in vals)
        if exact:
            den = 1
            for row in vals:
                for x in row:
                    den = den * x.denominator // math.gcd(den, x.denominator)
            self._den = den
            self._num = tuple(tuple(int(x * den) for x in row) for row in vals)
        else:
            self._den = None
            self._num = None

    @classmethod
    def scalar(cls, theta) -> "DeformationMatrix":
        """The d = 2 case ``U V = exp(2 pi i theta) V U``."""
        t = _as_phase(theta)
        return cls([[0 * t, t], [-t, 0 * t]])

    @classmethod
    def zero(cls, d: int = 2) -> "DeformationMatrix":
        return cls([[Fraction(0)] * d for _ in range(d)])

    @property
    def theta(self) -> Fraction | float:
        """Scalar rotation ``theta_12`` (first off-diagonal entry)."""
        return self.entries[0][1]

    @property
    def denominator(self) -> int | None:
        return self._den

    def phase(self, alpha: MultiIndex, beta: MultiIndex) -> complex:
        """Normal-ordering phase: ``U^alpha U^beta = phase * U^(alpha+beta)``."""
        d = self.d
        if self.exact:
            num = self._num
            r = 0
            for k in range(1, d):
                ak = alpha[k]
                if ak:
                    row = num[k]
                    for l in range(k):
                        if beta[l]:
                            r += row[l] * ak * beta[l]
            return root_of_unity(r, self._den)
        s = 0.0
        for k in range(1, d):
            ak = alpha[k]
            if ak:
                row = self.entries[k]
                for l in range(k):
                    if beta[l]:
                        s += (row[l] * (ak * beta[l])) % 1.0
        s %= 1.0
        if s == 0.0:
            return 1.0 + 0.0j
        return complex(math.cos(TWO_PI * s), math.sin(TWO_PI * s))

    def as_json(self):
        if self.d == 2:
            t = self.theta
            return f"{t.numerator}/{t.denominator}" if self.exact else t
        return [[f"{x.numerator}/{x.denominator}" if self.exact else x for x in row]
                for row in self.entries]

    def __eq__(self, other):
        return isinstance(other, DeformationMatrix) and self.entries == other.entries

    def __hash__(self):
        return hash(self.entries)

    def __repr__(self):
        return f"DeformationMatrix({self.as_json()!r})"


class TorusPolynomial:
    """Sparse map ``multi-index -> complex coefficient``; immutable.

    Only literal zeros are pruned. Arithmetic that needs the deformation
    (products, adjoints) lives in module-level functions.
    """

    __slots__ = ("d", "_coeffs")

    def __init__(self, d: int, coeffs: Mapping[Sequence[int], Number] | None = None):
        if d < 1:
            raise ValueError("dimension must be positive")
        self.d = d
        clean: dict[MultiIndex, complex] = {}
        for alpha, c in (coeffs or {}).items():
            key = tuple(int(a) for a in alpha)
            if len(key) != d:
                raise ValueError(f"multi-index {alpha} does not have length {d}")
            c = complex(c)
            if c != 0:
                clean[key] = clean.get(key, 0) + c
        self._coeffs = {k: v for k, v in clean.items() if v != 0}

    @property
    def coeffs(self) -> Mapping[MultiIndex, complex]:
        return MappingProxyType(self._coeffs)

    def __getitem__(self, alpha) -> complex:
        return self._coeffs.get(tuple(alpha), 0j)

    def __len__(self):
        return len(self._coeffs)

    def __iter__(self):
        return iter(sorted(self._coeffs))

    def items(self):
        return sorted(self._coeffs.items())

    def support(self) -> frozenset[MultiIndex]:
        return frozenset(self._coeffs)

    @property
    def degree(self) -> int:
        return max((max(abs(a) for a in alpha) for alpha in self._coeffs), default=0)

    def _check(self, other: "TorusPolynomial"):
        if not isinstance(other, TorusPolynomial):
            return NotImplemented
        if other.d != self.d:
            raise ValueError(f"dimension mismatch: {self.d} vs {other.d}")
        return None

    def __add__(self, other):
        if isinstance(other, Number):
            other = identity(self.d, other)
        if self._check(other) is NotImplemented:
            return NotImplemented
        out = dict(self._coeffs)
        for k, v in other._coeffs.items():
            out[k] = out.get(k, 0) + v
        return TorusPolynomial(self.d, out)

    __radd__ = __add__

    def __neg__(self):
        return TorusPolynomial(self.d, {k: -v for k, v in self._coeffs.items()})

    def __sub__(self, other):
        if isinstance(other, Number):
            other = identity(self.d, other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, scalar):
        if not isinstance(scalar, Number):
            return NotImplemented
        return TorusPolynomial(self.d, {k: v * scalar for k, v in self._coeffs.items()})

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        if not isinstance(scalar, Number):
            return NotImplemented
        return TorusPolynomial(self.d, {k: v / scalar for k, v in self._coeffs.items()})

    def __eq__(self, other):
        if not isinstance(other, TorusPolynomial):
            return NotImplemented
        return self.d == other.d and self._coeffs == other._coeffs

    def __hash__(self):
        return hash((self.d, frozenset(self._coeffs.items())))

    def max_abs_diff(self, other: "TorusPolynomial") -> float:
        """Largest coefficient-wise absolute difference."""
        self._check(other)
        keys = set(self._coeffs) | set(other._coeffs)
        return max((abs(self[k] - other[k]) for k in keys), default=0.0)

    def allclose(self, other: "TorusPolynomial", atol: float = 1e-12) -> bool:
        return self.max_abs_diff(other) <= atol

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "terms": [
                {"alpha": list(alpha), "re": c.real, "im": c.imag}
                for alpha, c in self.items()
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def from_dict(cls, data: Mapping) -> "TorusPolynomial":
        d = int(data["d"])
        return cls(d, {tuple(t["alpha"]): complex(t["re"], t["im"]) for t in data["terms"]})

    @classmethod
    def from_json(cls, text: str) -> "TorusPolynomial":
        return cls.from_dict(json.loads(text))

    def __repr__(self):
        terms = ", ".join(f"{alpha}: {c:.6g}" for alpha, c in self.items()[:6])
        more = ", ..." if len(self) > 6 else ""
        return f"TorusPolynomial(d={self.d}, {{{terms}{more}}})"


def make_monomial(alpha: Sequence[int], c: Number = 1.0, d: int | None = None) -> TorusPolynomial:
    """``c * U^alpha``; ``d`` defaults to ``len(alpha)``."""
    if d is None:
        d = len(alpha)
    if len(alpha) != d:
        raise ValueError(f"multi-index {tuple(alpha)} does not have length {d}")
    return TorusPolynomial(d, {tuple(alpha): c})


def identity(d: int = 2, c: Number = 1.0) -> TorusPolynomial:
    return TorusPolynomial(d, {(0,) * d: c})


def _check_dims(theta: DeformationMatrix, *polys: TorusPolynomial):
    for p in polys:
        if p.d != theta.d:
            raise ValueError(f"dimension mismatch: polynomial d={p.d}, deformation d={theta.d}")


def twisted_mul(a: TorusPolynomial, b: TorusPolynomial, theta: DeformationMatrix) -> TorusPolynomial:
    """Product ``a b`` in the quantum torus, returned in normal order."""
    _check_dims(theta, a, b)
    out: dict[MultiIndex, complex] = {}
    phase = theta.phase
    bitems = list(b.coeffs.items())
    for alpha, ca in a.coeffs.items():
        for beta, cb in bitems:
            key = tuple(x + y for x, y in zip(alpha, beta))
            out[key] = out.get(key, 0) + ca * cb * phase(alpha, beta)
    return TorusPolynomial(a.d, out)


def product(factors: Iterable[TorusPolynomial], theta: DeformationMatrix) -> TorusPolynomial:
    """Ordered product ``f_1 f_2 ... f_n`` (``I`` for an empty sequence)."""
    result = identity(theta.d)
    for f in factors:
        result = twisted_mul(result, f, theta)
    return result


def inverse_phase(alpha: MultiIndex, theta: DeformationMatrix) -> complex:
    """Phase ``c`` with ``(U^alpha)^{-1} = c U^{-alpha}``."""
    neg = tuple(-x for x in alpha)
    return theta.phase(neg, alpha).conjugate()


def adjoint(a: TorusPolynomial, theta: DeformationMatrix) -> TorusPolynomial:
    _check_dims(theta, a)
    out = {}
    for alpha, c in a.coeffs.items():
        out[tuple(-x for x in alpha)] = c.conjugate() * inverse_phase(alpha, theta)
    return TorusPolynomial(a.d, out)


def trace(a: TorusPolynomial) -> complex:
    """Canonical trace: the coefficient of the identity."""
    return a[(0,) * a.d]


def fourier_coeff(a: TorusPolynomial, alpha: Sequence[int], theta: DeformationMatrix) -> complex:
    """``tau((U^alpha)^* a)`` computed through the product."""
    mono = make_monomial(alpha, 1.0, d=theta.d)
    return trace(twisted_mul(adjoint(mono, theta), a, theta))


def derive(a: TorusPolynomial, j: int) -> TorusPolynomial:
    """Derivation ``delta_j`` (axes numbered from 1): ``U^alpha -> 2 pi i alpha_j U^alpha``."""
    if not 1 <= j <= a.d:
        raise ValueError(f"axis {j} out of range 1..{a.d}")
    return TorusPolynomial(
        a.d, {alpha: c * complex(0.0, TWO_PI * alpha[j - 1]) for alpha, c in a.coeffs.items()}
    )


def derive_multi(a: TorusPolynomial, alpha: Sequence[int]) -> TorusPolynomial:
    """``D^alpha = delta_1^{alpha_1} ... delta_d^{alpha_d}``."""
    if len(alpha) != a.d:
        raise ValueError(f"multi-index {tuple(alpha)} does not have length {a.d}")
    if any(x < 0 for x in alpha):
        raise ValueError("derivation orders must be non-negative")
    out = a
    for j in range(a.d, 0, -1):
        for _ in range(alpha[j - 1]):
            out = derive(out, j)
    return out


def l2_norm(a: TorusPolynomial) -> float:
    return math.sqrt(math.fsum(abs(c) ** 2 for c in a.coeffs.values()))


def l1_coeff_norm(a: TorusPolynomial) -> float:
    """Sum of coefficient magnitudes; dominates every L^p norm."""
    return math.fsum(abs(c) for c in a.coeffs.values())


def is_self_adjoint(a: TorusPolynomial, theta: DeformationMatrix, atol: float = 1e-12) -> bool:
    return a.allclose(adjoint(a, theta), atol)


def dump_json(a: TorusPolynomial, path) -> None:
    with open(path, "w") as fh:
        fh.write(a.to_json())
        fh.write("\n")
