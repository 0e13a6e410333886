"""Desk-scale experiments: norm sweeps, small-theta trends, Weyl rescaling,
positivity scans and the anisotropic coefficient-level construction."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from .algebra import (
    DeformationMatrix,
    TorusPolynomial,
    derive_multi,
    is_self_adjoint,
    l1_coeff_norm,
)
from .parallel import chunks, concat, ordered_map
from .reps import (
    DEFAULT_G_MAX,
    DEFAULT_TOL,
    REFINE_FACTOR,
    CHUNK_POINTS,
    ClockShiftRep,
    rep_for,
    schatten_norms,
    symbol_grid,
    symbol_matrices,
)
from .riesz import (
    FrequencySchedule,
    RieszConstruction,
    make_schedule,
    product_from_vectors,
    spectrum_from_vectors,
)
from .theta import ThetaSpec, parse_theta

FORMAT_VERSION = "1.0"

SCALE_NOTE = (
    "scale substitution: geometric lacunary frequencies with small N replace the "
    "3^(2N) growth and N = O(exp(M^2)) regime; only the growth trend of the mixed "
    "derivative norm against bounded pure derivative norms is measured"
)

CSV_HEADER = ("theta", "N", "norm_d1d1", "norm_d2d2", "norm_d1d2", "norm_B",
              "norm_E", "norm_G", "norm_P", "grid", "delta", "converged")

NORM_TARGETS = {
    "norm_d1d1": lambda c: derive_multi(c.W, (2, 0)),
    "norm_d2d2": lambda c: derive_multi(c.W, (0, 2)),
    "norm_d1d2": lambda c: derive_multi(c.W, (1, 1)),
    "norm_B": lambda c: c.B,
    "norm_E": lambda c: c.E,
    "norm_G": lambda c: c.G,
    "norm_P": lambda c: c.P,
}


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return repr(x)
    return str(x)


# Ornstein sweep

@dataclass
class SweepConfig:
    kind: str = "geometric"
    ratio: int = 3
    N_max: int = 5
    thetas: list[ThetaSpec] = field(default_factory=lambda: [parse_theta("0")])
    norms: tuple[str, ...] = ("l1",)
    tol: float = DEFAULT_TOL
    G_max: int = DEFAULT_G_MAX
    G0: int | None = None
    workers: int = 1

    def __post_init__(self):
        if self.N_max < 1:
            raise ValueError("N_max must be at least 1")
        if self.kind == "geometric" and (self.ratio is None or self.ratio < 3):
            raise ValueError(f"ratio must be >= 3, got {self.ratio}")
        if not self.thetas:
            raise ValueError("at least one theta is required")

    def schedule(self) -> FrequencySchedule:
        return make_schedule(self.kind, self.ratio, self.N_max)

    def as_json(self) -> dict:
        return {
            "kind": self.kind,
            "ratio": self.ratio,
            "N_max": self.N_max,
            "thetas": [t.as_json() for t in self.thetas],
            "norms": list(self.norms),
            "grid_tol": self.tol,
            "grid_max": self.G_max,
            "grid_start": self.G0,
        }


@dataclass
class ExperimentRecord:
    theta: str
    N: int
    norm_d1d1: float
    norm_d2d2: float
    norm_d1d2: float
    norm_B: float
    norm_E: float
    norm_G: float
    norm_P: float
    grid: int
    delta: float
    converged: bool

    @property
    def theta_value(self) -> Fraction:
        return Fraction(self.theta)

    def row(self) -> list[str]:
        return [_fmt(getattr(self, name)) for name in CSV_HEADER]

    def fN_d1d2(self) -> float:
        """Mixed derivative norm of ``W / (||d1^2 W||_1 + ||d2^2 W||_1)``."""
        return self.norm_d1d2 / (self.norm_d1d1 + self.norm_d2d2)


def sweep_cell(schedule: FrequencySchedule, N: int, theta: Fraction,
               tol: float = DEFAULT_TOL, G_max: int = DEFAULT_G_MAX,
               G0: int | None = None) -> ExperimentRecord:
    """All ``L^1`` norms of one ``(theta, N)`` cell."""
    dm = DeformationMatrix.scalar(Fraction(theta))
    rep = rep_for(dm)
    cell = RieszConstruction.build(schedule, N, dm)
    values, grids, deltas, ok = {}, [], [], True
    for name, target in NORM_TARGETS.items():
        rpt = schatten_norms(target(cell), rep, (1,), tol=tol, G_max=G_max, G0=G0)
        values[name] = rpt.l1
        grids.append(rpt.grid_used)
        deltas.append(math.inf if rpt.convergence_delta is None else rpt.convergence_delta)
        ok = ok and rpt.converged
    return ExperimentRecord(theta=f"{rep.p}/{rep.q}", N=N, grid=max(grids), delta=max(deltas),
                            converged=ok, **values)


def ornstein_sweep(config: SweepConfig) -> list[ExperimentRecord]:
    """Records for every ``N <= N_max`` and every theta, sorted by ``(theta, N)``."""
    schedule = config.schedule()
    cells = sorted({(t.value, N) for t in config.thetas for N in range(1, config.N_max + 1)})
    records = ordered_map(
        lambda c: sweep_cell(schedule, c[1], c[0], config.tol, config.G_max, config.G0),
        cells, config.workers)
    return sorted(records, key=lambda r: (r.theta_value, r.N))


def sweep_summary(records: Sequence[ExperimentRecord]) -> dict:
    """Empirical maxima of the pure derivative norms and the ``f_N`` trend."""
    comm = [max(r.norm_d1d1, r.norm_d2d2) for r in records if r.theta_value == 0]
    nonc = [max(r.norm_d1d1, r.norm_d2d2) for r in records if r.theta_value != 0]
    return {
        "K1_empirical_commutative": max(comm) if comm else None,
        "K_empirical_noncommutative": max(nonc) if nonc else None,
        "all_converged": all(r.converged for r in records),
        "fN_trend": [
            {"theta": r.theta, "N": r.N, "norm_d1d2_fN": r.fN_d1d2(),
             "sqrt_log_N": math.sqrt(math.log(r.N))}
            for r in records
        ],
    }


def _comment_lines(config: dict) -> str:
    lines = [
        f"# format_version: {FORMAT_VERSION}",
        "# config: " + json.dumps(config, sort_keys=True),
        "# " + SCALE_NOTE,
    ]
    return "\n".join(lines) + "\n"


def records_to_csv(records: Sequence[ExperimentRecord], config: dict) -> str:
    buf = io.StringIO()
    buf.write(_comment_lines(config))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in records:
        w.writerow(r.row())
    return buf.getvalue()


def records_to_json(records: Sequence[ExperimentRecord], config: dict) -> str:
    doc = {
        "format_version": FORMAT_VERSION,
        "config": config,
        "note": SCALE_NOTE,
        "columns": list(CSV_HEADER),
        "rows": [{k: (None if isinstance(v, float) and math.isinf(v) else v)
                  for k, v in asdict(r).items()} for r in records],
        "summary": sweep_summary(records),
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def read_records_csv(text: str) -> list[dict]:
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    return list(csv.DictReader(lines))


PLOT_STUB = '''"""Line plots of the sweep norms against N.

Reads the whitespace-separated data file written next to this script.
Any plotting tool can read that file; this stub uses matplotlib.
"""
import os
import sys
from collections import defaultdict

import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
path = sys.argv[1] if len(sys.argv) > 1 else os.path.join(here, "{data}")
series = defaultdict(list)
with open(path) as fh:
    cols = fh.readline().split()
    for line in fh:
        row = dict(zip(cols, line.split()))
        series[row["theta"]].append(row)
fig, ax = plt.subplots()
for theta, rows in sorted(series.items()):
    ns = [int(r["N"]) for r in rows]
    ax.plot(ns, [float(r["norm_d1d2"]) for r in rows], "o-", label=f"d1d2, theta={{theta}}")
    ax.plot(ns, [float(r["norm_d2d2"]) for r in rows], "s--", label=f"d2d2, theta={{theta}}")
ax.set_xlabel("N")
ax.set_ylabel("L1 norm")
ax.legend()
fig.savefig(path.rsplit(".", 1)[0] + ".png", dpi=120)
'''


def write_plot_stub(records: Sequence[ExperimentRecord], data_path, script_path) -> None:
    """Plain whitespace-separated data plus a small plotting script."""
    with open(data_path, "w") as fh:
        fh.write(" ".join(CSV_HEADER) + "\n")
        for r in records:
            fh.write(" ".join(r.row()) + "\n")
    with open(script_path, "w") as fh:
        fh.write(PLOT_STUB.format(data=Path(data_path).name))


# small-theta trend

@dataclass
class ConvergenceRow:
    q: int
    theta: str
    commutator_dist: float
    gap_P: float
    gap_d1d1: float
    gap_d2d2: float
    gap_d1d2: float
    converged: bool


def theta_convergence(schedule: FrequencySchedule, N: int, qs: Sequence[int],
                      tol: float = DEFAULT_TOL, G_max: int = DEFAULT_G_MAX,
                      workers: int = 1) -> list[ConvergenceRow]:
    """Gaps between the ``theta = 1/q`` norms and the commutative ones."""
    qs = list(qs)
    if qs != sorted(qs):
        raise ValueError("q-list must be ascending")
    keys = ("norm_P", "norm_d1d1", "norm_d2d2", "norm_d1d2")
    cells = [Fraction(0)] + [Fraction(1, q) for q in qs]
    recs = ordered_map(lambda t: sweep_cell(schedule, N, t, tol, G_max), cells, workers)
    base = recs[0]
    rows = []
    for q, r in zip(qs, recs[1:]):
        gaps = [abs(getattr(r, k) - getattr(base, k)) for k in keys]
        rows.append(ConvergenceRow(q, r.theta, float(abs(1 - np.exp(2j * np.pi / q))), *gaps,
                                   converged=r.converged and base.converged))
    return rows


# Weyl rescaling

class WeylSearchError(RuntimeError):
    """No admissible ``M_0`` below the search cap."""


@dataclass
class WeylResult:
    theta: str
    theta0: str
    M0: int
    theta_tilde: Fraction
    dist: Fraction
    verified: bool
    warnings: list[str] = field(default_factory=list)

    @property
    def exponents(self) -> dict:
        """Exponents of the rescaled generators ``U^{M0}`` and ``V^{M0}``."""
        return {"U": self.M0, "V": self.M0}

    def to_dict(self) -> dict:
        return {
            "theta": self.theta,
            "theta0": self.theta0,
            "M0": self.M0,
            "theta_tilde": float(self.theta_tilde),
            "dist": float(self.dist),
            "verified": self.verified,
            "exponents": self.exponents,
            "warnings": list(self.warnings),
        }


def weyl_rescale(theta, theta0, cap: int = 10**7, rational: bool | None = None) -> WeylResult:
    """Smallest ``M`` with ``dist(M^2 theta, Z) < theta0`` and the signed residue.

    ``theta`` is a :class:`ThetaSpec` (its full-precision value is used), a
    Fraction, or anything :func:`parse_theta` accepts. The search is exact:
    ``M^2 theta`` is tracked as an integer residue modulo the denominator.
    """
    if isinstance(theta, ThetaSpec):
        spec = theta
    elif isinstance(theta, Fraction):
        spec = ThetaSpec(str(theta), theta, theta, True, None)
    else:
        spec = parse_theta(str(theta))
    t0 = theta0 if isinstance(theta0, Fraction) else Fraction(str(theta0))
    if not 0 < t0 < Fraction(1, 2):
        raise ValueError("theta0 must lie in (0, 1/2)")
    if rational is None:
        rational = spec.rational_input
    x = spec.high_precision % 1
    A, D = x.numerator, x.denominator
    a0, d0 = t0.numerator, t0.denominator
    s = 0
    for M in range(1, cap + 1):
        s = (s + (2 * M - 1) * A) % D      # M^2 A mod D
        if min(s, D - s) * d0 < a0 * D:
            break
    else:
        raise WeylSearchError(f"no M <= {cap} with dist(M^2 theta, Z) < {theta0}")
    tilde = Fraction(s, D) if 2 * s <= D else Fraction(s - D, D)
    check = (M * M * x) % 1
    dist = min(check, 1 - check)
    warnings = []
    if rational:
        warnings.append(f"theta = {x} is rational; the rescaling is degenerate")
    return WeylResult(spec.text, str(theta0), M, tilde, dist, dist < t0 and abs(tilde) == dist,
                      warnings)


# positivity

@dataclass
class PositivityResult:
    min_eigenvalue: float
    witness: tuple[float, float]
    grid: int
    hermitian_part_taken: bool

    def to_dict(self) -> dict:
        return {"min_eigenvalue": self.min_eigenvalue, "witness": list(self.witness),
                "grid": self.grid, "hermitian_part_taken": self.hermitian_part_taken}


def _min_eig(T: np.ndarray) -> np.ndarray:
    Hm = (T + np.conj(np.swapaxes(T, 1, 2))) / 2
    return np.linalg.eigvalsh(Hm)[:, 0]


def positivity_scan(a: TorusPolynomial, rep: ClockShiftRep, G: int = 256,
                    theta: DeformationMatrix | None = None, refine: bool = True,
                    n_jobs: int = 1) -> PositivityResult:
    """Smallest eigenvalue of the Hermitian part of the symbol over the grid.

    Shifts by ``1/q`` conjugate the symbol by a unitary, so the fundamental
    cell suffices. One local refinement pass around the minimiser follows.
    """
    if theta is None:
        theta = DeformationMatrix.scalar(rep.theta)
    herm = not is_self_adjoint(a, theta)
    H = max(1, -(-G // rep.q))
    G = rep.q * H
    T = symbol_grid(a, rep, H).reshape(H * H, rep.q, rep.q)
    ev = concat(ordered_map(lambda sl: _min_eig(T[sl]), chunks(T.shape[0], CHUNK_POINTS), n_jobs))
    idx = int(np.argmin(ev))
    g, h = divmod(idx, H)
    best, wx, wy = float(ev[idx]), g / G, h / G
    if refine:
        offs = np.linspace(-1.0 / G, 1.0 / G, 2 * REFINE_FACTOR + 1)
        X, Y = np.meshgrid(wx + offs, wy + offs, indexing="ij")
        loc = _min_eig(symbol_matrices(a, X, Y, rep))
        j = int(np.argmin(loc))
        if loc[j] < best:
            best, wx, wy = float(loc[j]), float(X.ravel()[j] % 1), float(Y.ravel()[j] % 1)
    return PositivityResult(best, (wx, wy), G, herm)


# anisotropic construction

def _dot(u, v) -> int:
    return sum(int(a) * int(b) for a, b in zip(u, v))


@dataclass
class AnisotropicSpec:
    d: int
    alphas: list[tuple[int, ...]]
    beta: tuple[int, ...]
    weights: tuple[int, ...]
    parity: tuple[int, ...]
    theta: DeformationMatrix
    reference: int | None = None

    def __post_init__(self):
        self.alphas = [tuple(int(x) for x in a) for a in self.alphas]
        self.beta = tuple(int(x) for x in self.beta)
        self.weights = tuple(int(x) for x in self.weights)
        self.parity = tuple(int(x) for x in self.parity)
        self.validate()

    def validate(self) -> None:
        d = self.d
        if d < 2:
            raise ValueError("d must be at least 2")
        if not self.alphas:
            raise ValueError("at least one multi-index alpha is required")
        for name, v in [("beta", self.beta), ("weights", self.weights),
                        ("parity", self.parity)] + [(f"alpha_{i + 1}", a) for i, a in enumerate(self.alphas)]:
            if len(v) != d:
                raise ValueError(f"{name} has length {len(v)}, expected {d}")
        if any(x < 0 for a in self.alphas + [self.beta] for x in a):
            raise ValueError("multi-indices must have non-negative entries")
        if any(w < 1 for w in self.weights):
            raise ValueError("weights must be natural numbers")
        if any(x not in (0, 1) for x in self.parity):
            raise ValueError("parity vector must lie in {0,1}^d")
        if self.theta.d != d:
            raise ValueError("deformation matrix dimension mismatch")
        level = _dot(self.beta, self.weights)
        for i, a in enumerate(self.alphas):
            if _dot(a, self.weights) != level:
                raise ValueError(f"<alpha_{i + 1}, weights> != <beta, weights>")
        p1 = _dot(self.alphas[0], self.parity) % 2
        if _dot(self.beta, self.parity) % 2 == p1:
            raise ValueError("<beta, parity> must differ from <alpha_1, parity> mod 2")
        for i, a in enumerate(self.alphas[1:], start=2):
            if _dot(a, self.parity) % 2 != p1:
                raise ValueError(f"<alpha_{i}, parity> must agree with <alpha_1, parity> mod 2")
        ref = len(self.alphas) if self.reference is None else self.reference
        if not 1 <= ref <= len(self.alphas):
            raise ValueError("reference index out of range")

    @property
    def reference_alpha(self) -> tuple[int, ...]:
        ref = len(self.alphas) if self.reference is None else self.reference
        return self.alphas[ref - 1]

    def frequency(self, j: int, m: int) -> tuple[int, ...]:
        """``((-1)^{(j-1) xi_i} m^{lambda_i})_i``."""
        return tuple((-1) ** ((j - 1) * x) * m**lam for x, lam in zip(self.parity, self.weights))

    def as_json(self) -> dict:
        return {"d": self.d, "alphas": [list(a) for a in self.alphas], "beta": list(self.beta),
                "weights": list(self.weights), "parity": list(self.parity),
                "theta": self.theta.as_json(), "reference": self.reference}


def _multiplier(k, alpha) -> complex:
    out = 1.0 + 0j
    for kj, aj in zip(k, alpha):
        out *= (2j * math.pi * kj) ** aj
    return out


@dataclass
class AnisotropicResult:
    spec: AnisotropicSpec
    vectors: list[tuple[int, ...]]
    P: TorusPolynomial
    f: TorusPolynomial
    f_N: TorusPolynomial
    derivatives: dict[str, TorusPolynomial]
    norms: dict[str, float]
    norm_kind: str
    scale: float

    def coefficient_tables(self) -> dict[str, list[dict]]:
        return {name: p.to_dict()["terms"] for name, p in self.derivatives.items()}

    def report(self) -> dict:
        return {"spec": self.spec.as_json(), "vectors": [list(v) for v in self.vectors],
                "norm_kind": self.norm_kind, "norms": self.norms, "scale": self.scale}


def anisotropic_build(spec: AnisotropicSpec, schedule: FrequencySchedule, N: int,
                      tol: float = DEFAULT_TOL, G_max: int = DEFAULT_G_MAX) -> AnisotropicResult:
    """d-dimensional Riesz product and its normalised companion ``f_N``.

    ``f`` has Fourier coefficients ``P^(k) / m(k)`` off the origin, where
    ``m(k)`` is the multiplier of ``D^{alpha_ref}``; for
    ``alpha = [(2,0), (0,2)]`` this is the modified product ``W``.
    ``f_N = f / sum_j ||D^{alpha_j} f||_1``. Norms are numerical ``L^1``
    norms when ``d = 2`` and coefficient ``l^1`` upper bounds otherwise.
    """
    spec.validate()
    sched = schedule.truncate(N)
    vectors = [spec.frequency(j, m) for j, m in enumerate(sched.m, start=1)]
    spectrum = spectrum_from_vectors(vectors)
    P = product_from_vectors(vectors, spec.theta)
    ref = spec.reference_alpha
    coeffs = {}
    for k, c in P.items():
        if not any(k):
            continue
        if spectrum.lookup(k) is None:
            raise ValueError(f"coefficient outside the spectrum at {k}")
        mult = _multiplier(k, ref)
        if mult == 0:
            raise ValueError(f"reference derivative vanishes at spectral index {k}")
        coeffs[k] = c / mult
    f = TorusPolynomial(spec.d, coeffs)
    names = [f"alpha_{i + 1}" for i in range(len(spec.alphas))]
    raw = {n: derive_multi(f, a) for n, a in zip(names, spec.alphas)}
    raw["beta"] = derive_multi(f, spec.beta)
    if spec.d == 2:
        rep = rep_for(spec.theta)
        kind = "L1"

        def norm(p):
            return schatten_norms(p, rep, (1,), tol=tol, G_max=G_max).l1
    else:
        kind = "coefficient_l1_upper_bound"
        norm = l1_coeff_norm
    raw_norms = {n: norm(p) for n, p in raw.items()}
    total = sum(raw_norms[n] for n in names)
    scale = 1.0 / total
    derivs = {n: p * scale for n, p in raw.items()}
    norms = {n: v * scale for n, v in raw_norms.items()}
    return AnisotropicResult(spec, vectors, P, f, f * scale, derivs, norms, kind, scale)


__all__ = [
    "FORMAT_VERSION", "SCALE_NOTE", "CSV_HEADER", "SweepConfig", "ExperimentRecord",
    "sweep_cell", "ornstein_sweep", "sweep_summary", "records_to_csv", "records_to_json",
    "read_records_csv", "write_plot_stub", "ConvergenceRow", "theta_convergence",
    "WeylSearchError", "WeylResult", "weyl_rescale", "PositivityResult", "positivity_scan",
    "AnisotropicSpec", "AnisotropicResult", "anisotropic_build"
]
