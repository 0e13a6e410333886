"""Finite non-commutative Riesz products and their modified companions.

The two-dimensional products use the frequency vectors
``v_j = ((-1)^(j-1) m_j, m_j)``; factor ``j`` is ``I + a_j/2 (U^{v_j} + (U^{v_j})^*)``
and the product multiplies each new factor on the left.
"""
from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .algebra import (
    DeformationMatrix,
    MultiIndex,
    TorusPolynomial,
    adjoint,
    identity,
    make_monomial,
    twisted_mul,
)

INT64_MAX = 2**63 - 1
INV_FOUR_PI_SQ = 1.0 / (4.0 * math.pi**2)


class SpectrumError(ValueError):
    """Frequencies are not lacunary enough for unique spectral indices."""


@dataclass(frozen=True)
class FrequencySchedule:
    """Lacunary frequencies ``m_1 < m_2 < ...`` with ``m_{j+1} >= 3 m_j``."""

    m: tuple[int, ...]
    kind: str = "explicit"
    ratio: int | None = None

    def __post_init__(self):
        if not self.m:
            raise ValueError("schedule must contain at least one frequency")
        if any(int(x) != x or x < 1 for x in self.m):
            raise ValueError("frequencies must be natural numbers")
        for a, b in zip(self.m, self.m[1:]):
            if b < 3 * a:
                raise ValueError(f"lacunary condition violated: {b}/{a} < 3")

    @property
    def N(self) -> int:
        return len(self.m)

    def truncate(self, N: int) -> "FrequencySchedule":
        if not 1 <= N <= self.N:
            raise ValueError(f"N={N} outside 1..{self.N}")
        return FrequencySchedule(self.m[:N], self.kind, self.ratio)

    def vector(self, j: int) -> tuple[int, int]:
        """Frequency vector of level ``j`` (1-based)."""
        mj = self.m[j - 1]
        return ((-1) ** (j - 1) * mj, mj)

    def as_json(self) -> dict:
        return {"kind": self.kind, "ratio": self.ratio, "m": list(self.m)}


def make_schedule(kind: str = "geometric", ratio: int | None = 3, N: int = 1) -> FrequencySchedule:
    """Build a geometric (``m_j = ratio^(j-1)``) or proof-faithful schedule.

    The proof-faithful schedule has ``m_1 = 1`` and ``m_{j+1} = 3^(2N) m_j``.
    """
    if N < 1:
        raise ValueError("N must be at least 1")
    if kind == "geometric":
        if ratio is None or int(ratio) != ratio or ratio < 3:
            raise ValueError(f"geometric ratio must be an integer >= 3, got {ratio}")
        ratio = int(ratio)
        return FrequencySchedule(tuple(ratio**j for j in range(N)), "geometric", ratio)
    if kind in ("proof-faithful", "proof_faithful"):
        step = 3 ** (2 * N)
        top = step ** (N - 1)
        if top > INT64_MAX:
            raise OverflowError(f"proof-faithful m_N = 3^{2 * N * (N - 1)} exceeds 64-bit range")
        return FrequencySchedule(tuple(step**j for j in range(N)), "proof-faithful", step)
    raise ValueError(f"unknown schedule kind {kind!r}")


@dataclass(frozen=True)
class SpectrumEntry:
    j: int
    xi: tuple[int, ...]
    k: tuple[int, ...]
    weight: int

    @property
    def sign(self) -> int:
        """``(-1)^(j-1)``, the sign carried by level ``j``."""
        return 1 if self.j % 2 == 1 else -1


@dataclass
class RieszSpectrum:
    """All spectral indices ``k in M_j`` (positive representatives)."""

    vectors: tuple[tuple[int, ...], ...]
    entries: list[SpectrumEntry]
    schedule: FrequencySchedule | None = None
    _lookup: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        for e in self.entries:
            neg = tuple(-x for x in e.k)
            if e.k in self._lookup or neg in self._lookup:
                raise SpectrumError(f"spectral index {e.k} is not uniquely represented")
            self._lookup[e.k] = (e, 1)
            self._lookup[neg] = (e, -1)

    @property
    def N(self) -> int:
        return len(self.vectors)

    def level(self, j: int) -> list[SpectrumEntry]:
        return [e for e in self.entries if e.j == j]

    def lookup(self, k: Sequence[int]) -> tuple[SpectrumEntry, int] | None:
        """``(entry, +1)`` for ``k in M_j``, ``(entry, -1)`` for ``k in -M_j``."""
        return self._lookup.get(tuple(k))

    def indices(self) -> frozenset[MultiIndex]:
        """``{0} U (+-M_j)`` over all levels."""
        d = len(self.vectors[0])
        return frozenset(self._lookup) | {(0,) * d}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["j", "xi", *[f"k{i + 1}" for i in range(len(self.vectors[0]))], "weight"])
        for e in self.entries:
            w.writerow([e.j, ";".join(str(x) for x in e.xi), *e.k, e.weight])
        return buf.getvalue()


def spectrum_from_vectors(vectors: Sequence[Sequence[int]]) -> RieszSpectrum:
    """Enumerate ``k = v_j + sum_{l<j} xi_l v_l`` with weight ``1 + sum |xi_l|``."""
    vecs = tuple(tuple(int(x) for x in v) for v in vectors)
    entries = []
    for j in range(1, len(vecs) + 1):
        for xi in itertools.product((-1, 0, 1), repeat=j - 1):
            k = list(vecs[j - 1])
            for l, x in enumerate(xi):
                if x:
                    k = [a + x * b for a, b in zip(k, vecs[l])]
            entries.append(SpectrumEntry(j, xi, tuple(k), 1 + sum(map(abs, xi))))
    return RieszSpectrum(vecs, entries)


def spectrum_sets(schedule: FrequencySchedule, N: int | None = None) -> RieszSpectrum:
    if N is None:
        N = schedule.N
    sched = schedule.truncate(N)
    spec = spectrum_from_vectors([sched.vector(j) for j in range(1, N + 1)])
    spec.schedule = sched
    return spec


def cosine_factor(v: Sequence[int], theta: DeformationMatrix, amplitude: float = 1.0) -> TorusPolynomial:
    """``I + a/2 (U^v + (U^v)^*)``, self-adjoint by construction."""
    if abs(amplitude) > 1:
        raise ValueError(f"amplitude {amplitude} outside [-1, 1]")
    x = make_monomial(tuple(v), amplitude / 2, d=theta.d)
    return identity(theta.d) + x + adjoint(x, theta)


def riesz_factor(j: int, schedule: FrequencySchedule, theta: DeformationMatrix,
                 amplitude: float = 1.0) -> TorusPolynomial:
    """Factor ``p_{theta,j}``; its second term is ``V^{-m_j} U^{(-1)^j m_j}`` in normal order."""
    if theta.d != 2:
        raise ValueError("riesz_factor is two-dimensional")
    if not 1 <= j <= schedule.N:
        raise ValueError(f"level {j} outside 1..{schedule.N}")
    if abs(amplitude) > 1:
        raise ValueError(f"amplitude {amplitude} outside [-1, 1]")
    u, m = schedule.vector(j)
    first = make_monomial((u, m), amplitude / 2)
    # V^{-m} U^{-u}, reordered by the product itself
    second = twisted_mul(make_monomial((0, -m), amplitude / 2), make_monomial((-u, 0)), theta)
    return identity(2) + first + second


def _chain(factors, theta):
    """Multiply each new factor on the left: ``f_n ... f_2 f_1``."""
    P = identity(theta.d)
    for f in factors:
        P = twisted_mul(f, P, theta)
    return P


def riesz_product(schedule: FrequencySchedule, N: int | None, theta: DeformationMatrix,
                  amplitudes: Sequence[float] | None = None) -> TorusPolynomial:
    """``P_{theta,N} = p_N p_{N-1} ... p_1``."""
    if N is None:
        N = schedule.N
    if not 1 <= N <= schedule.N:
        raise ValueError(f"N={N} outside 1..{schedule.N}")
    amps = _amplitudes(amplitudes, N)
    return _chain((riesz_factor(j, schedule, theta, amps[j - 1]) for j in range(1, N + 1)), theta)


def riesz_product_right(schedule: FrequencySchedule, N: int, theta: DeformationMatrix) -> TorusPolynomial:
    """The reversed order ``p_1 p_2 ... p_N``; kept only for comparison."""
    P = identity(2)
    for j in range(1, N + 1):
        P = twisted_mul(P, riesz_factor(j, schedule, theta), theta)
    return P


def general_riesz_product(m: Sequence[int], n: Sequence[int], theta: DeformationMatrix,
                          amplitudes: Sequence[float] | None = None) -> TorusPolynomial:
    """Products with factors ``I + a_j/2 (U^{m_j} V^{n_j} + V^{-n_j} U^{-m_j})``.

    Signed frequencies are accepted; lacunarity is checked on absolute values,
    so the alternating-sign main case is an instance.
    """
    if len(m) != len(n) or not m:
        raise ValueError("frequency sequences must be non-empty and of equal length")
    for seq in (m, n):
        seq = [abs(int(x)) for x in seq]
        if 0 in seq:
            raise ValueError("frequencies must be non-zero")
        for a, b in zip(seq, seq[1:]):
            if b < 3 * a:
                raise ValueError(f"lacunary condition violated: {b}/{a} < 3")
    amps = _amplitudes(amplitudes, len(m))
    return _chain((cosine_factor((mj, nj), theta, a) for mj, nj, a in zip(m, n, amps)), theta)


def product_from_vectors(vectors: Sequence[Sequence[int]], theta: DeformationMatrix,
                         amplitudes: Sequence[float] | None = None) -> TorusPolynomial:
    """d-dimensional product ``prod_{j=N..1} (I + a_j/2 (U^{m_j} + (U^{m_j})^{-1}))``."""
    amps = _amplitudes(amplitudes, len(vectors))
    return _chain((cosine_factor(v, theta, a) for v, a in zip(vectors, amps)), theta)


def _amplitudes(amplitudes, N):
    if amplitudes is None:
        return [1.0] * N
    amps = [float(a) for a in amplitudes]
    if len(amps) < N:
        raise ValueError(f"need {N} amplitudes, got {len(amps)}")
    if any(abs(a) > 1 for a in amps):
        raise ValueError("amplitudes must lie in [-1, 1]")
    return amps


def _check_support(P: TorusPolynomial, spectrum: RieszSpectrum):
    allowed = spectrum.indices()
    stray = [k for k in P.coeffs if k not in allowed]
    if stray:
        raise SpectrumError(f"coefficients outside the spectrum, e.g. at {stray[0]}")


def modified_W(P: TorusPolynomial, spectrum: RieszSpectrum,
               theta: DeformationMatrix | None = None) -> TorusPolynomial:
    """``W`` with ``W^(+-k) = -(4 pi^2)^{-1} k_2^{-2} P^(+-k)``; no constant term."""
    _check_support(P, spectrum)
    out = {}
    for k, c in P.coeffs.items():
        if spectrum.lookup(k) is None:
            continue
        out[k] = -INV_FOUR_PI_SQ * c / (k[1] * k[1])
    return TorusPolynomial(P.d, out)


def polys_BEG(P: TorusPolynomial, spectrum: RieszSpectrum,
              theta: DeformationMatrix | None = None) -> tuple[TorusPolynomial, TorusPolynomial, TorusPolynomial]:
    """Auxiliary polynomials with ``delta_1^2 W = B + P - I`` and ``delta_12 W = E + G``."""
    _check_support(P, spectrum)
    B, E, G = {}, {}, {}
    for k, c in P.coeffs.items():
        hit = spectrum.lookup(k)
        if hit is None:
            continue
        entry, _ = hit
        k1, k2 = k
        assert k2 != 0, "spectral index with vanishing second coordinate"
        ratio = Fraction(k1, k2)
        B[k] = float(ratio * ratio - 1) * c
        E[k] = float(ratio - entry.sign) * c
        G[k] = entry.sign * c
    d = P.d
    return TorusPolynomial(d, B), TorusPolynomial(d, E), TorusPolynomial(d, G)


@dataclass
class RieszConstruction:
    """All polynomials attached to one ``(schedule, N, theta)`` cell."""

    schedule: FrequencySchedule
    theta: DeformationMatrix
    spectrum: RieszSpectrum
    P: TorusPolynomial
    W: TorusPolynomial
    B: TorusPolynomial
    E: TorusPolynomial
    G: TorusPolynomial

    @classmethod
    def build(cls, schedule: FrequencySchedule, N: int, theta: DeformationMatrix,
              amplitudes: Sequence[float] | None = None) -> "RieszConstruction":
        sched = schedule.truncate(N)
        spectrum = spectrum_sets(sched)
        P = riesz_product(sched, N, theta, amplitudes)
        W = modified_W(P, spectrum, theta)
        B, E, G = polys_BEG(P, spectrum, theta)
        return cls(sched, theta, spectrum, P, W, B, E, G)
