from __future__ import annotations

import json
import math
from fractions import Fraction

import mpmath
import pytest

from qtorus.algebra import DeformationMatrix, identity, trace
from qtorus.experiments import (
    CSV_HEADER,
    AnisotropicSpec,
    SweepConfig,
    WeylSearchError,
    anisotropic_build,
    ornstein_sweep,
    positivity_scan,
    read_records_csv,
    records_to_csv,
    records_to_json,
    sweep_cell,
    sweep_summary,
    theta_convergence,
    weyl_rescale,
    write_plot_stub,
)
from qtorus.reps import rep_for, schatten_norms
from qtorus.riesz import RieszConstruction, make_schedule, riesz_product, spectrum_from_vectors
from qtorus.theta import parse_theta

# oracle value from an independent numpy eigen-scan of the Hermitian part,
# computed before the package code existed
EIG_ORACLE_FIFTH = -0.13326600221212148


def weyl_oracle(x: mpmath.mpf, theta0: float, limit: int = 100000) -> int:
    """Plain scan of M = 1, 2, ... at 60 digits."""
    with mpmath.workdps(60):
        t0 = mpmath.mpf(str(theta0))
        for M in range(1, limit):
            f = mpmath.frac(M * M * x)
            if min(f, 1 - f) < t0:
                return M
    raise AssertionError("oracle scan exhausted")


# Weyl rescaling

@pytest.mark.parametrize("name,expr", [("sqrt2m1", lambda: mpmath.sqrt(2) - 1),
                                       ("golden", lambda: (mpmath.sqrt(5) - 1) / 2)])
@pytest.mark.parametrize("theta0", [0.1, 0.05, 0.01, 0.001])
def test_weyl_matches_oracle(name, expr, theta0):
    with mpmath.workdps(60):
        x = expr()
    res = weyl_rescale(parse_theta(name), str(theta0))
    assert res.M0 == weyl_oracle(x, theta0)
    assert res.verified and float(res.dist) < theta0
    assert abs(res.theta_tilde) == res.dist
    assert res.exponents == {"U": res.M0, "V": res.M0}
    assert not res.warnings


def test_weyl_rational_degenerate():
    res = weyl_rescale(parse_theta("0.25"), "0.05")
    assert res.M0 == 2 and res.theta_tilde == 0
    assert res.warnings
    res = weyl_rescale(parse_theta("1/4"), "0.05")
    assert res.M0 == 2 and res.warnings


def test_weyl_signed_residue():
    res = weyl_rescale(Fraction(3, 10), "0.2")
    # 1 * 0.3 is not < 0.2; 4 * 0.3 = 1.2 -> 0.2 not < 0.2; 9 * 0.3 = 2.7 -> -0.3; 16 * 0.3 = 4.8 -> -0.2
    # 25 * 0.3 = 7.5; 36 * 0.3 = 10.8 -> -0.2; 49 * 0.3 = 14.7; 64 * 0.3 = 19.2; 81 * 0.3 = 24.3; 100 -> 30
    assert res.M0 == 10 and res.theta_tilde == 0


def test_weyl_cap_and_validation():
    with pytest.raises(WeylSearchError):
        weyl_rescale(parse_theta("golden"), "0.00001", cap=50)
    with pytest.raises(ValueError):
        weyl_rescale(parse_theta("golden"), "0.6")


# positivity

def test_positivity_identity():
    r = positivity_scan(identity(2), rep_for(Fraction(1, 3)), 32)
    assert r.min_eigenvalue == pytest.approx(1, abs=1e-14)


@pytest.mark.parametrize("N", [1, 2, 3, 4])
def test_commutative_products_nonnegative(N):
    P = riesz_product(make_schedule("geometric", 3, N), N, DeformationMatrix.zero(2))
    r = positivity_scan(P, rep_for(0), 256)
    assert r.min_eigenvalue >= -1e-9
    assert not r.hermitian_part_taken


def test_fifth_turn_product_not_positive():
    th = DeformationMatrix.scalar(Fraction(1, 5))
    P = riesz_product(make_schedule("geometric", 3, 2), 2, th)
    r = positivity_scan(P, rep_for(th), 300)
    assert r.hermitian_part_taken
    assert r.min_eigenvalue == pytest.approx(EIG_ORACLE_FIFTH, abs=1e-9)
    assert r.min_eigenvalue < -0.01
    assert 0 <= r.witness[0] < 1 and 0 <= r.witness[1] < 1


# sweep

@pytest.fixture(scope="module")
def small_sweep():
    cfg = SweepConfig(N_max=3, thetas=[parse_theta("1/5"), parse_theta("0")])
    return cfg, ornstein_sweep(cfg)


def test_sweep_rows_sorted(small_sweep):
    _, recs = small_sweep
    assert [(r.theta, r.N) for r in recs] == [("0/1", 1), ("0/1", 2), ("0/1", 3),
                                            ("1/5", 1), ("1/5", 2), ("1/5", 3)]
    assert all(r.converged for r in recs)


def test_sweep_identity_three(small_sweep):
    _, recs = small_sweep
    for r in recs:
        c = RieszConstruction.build(make_schedule("geometric", 3, r.N), r.N,
                                    DeformationMatrix.scalar(r.theta_value))
        PmI = schatten_norms(c.P - identity(2), rep_for(r.theta_value), (1,))
        assert r.norm_d2d2 == pytest.approx(PmI.l1, abs=2 * (r.delta + PmI.convergence_delta) * PmI.l1)


def test_sweep_commutative_values(small_sweep):
    _, recs = small_sweep
    first = recs[0]
    assert first.norm_d1d2 == pytest.approx(2 / math.pi, abs=1e-4)
    assert first.norm_G == first.norm_d1d2 and first.norm_E == 0
    for r in recs[:3]:
        assert r.norm_P == pytest.approx(1, abs=1e-6)


def test_sweep_outputs(small_sweep, tmp_path):
    cfg, recs = small_sweep
    text = records_to_csv(recs, cfg.as_json())
    assert text.startswith("# format_version")
    rows = read_records_csv(text)
    assert list(rows[0]) == list(CSV_HEADER)
    assert len(rows) == 6
    doc = json.loads(records_to_json(recs, cfg.as_json()))
    assert doc["columns"] == list(CSV_HEADER)
    assert [r["norm_d1d2"] for r in doc["rows"]] == [float(r["norm_d1d2"]) for r in rows]
    summary = sweep_summary(recs)
    assert summary["K1_empirical_commutative"] == max(max(r.norm_d1d1, r.norm_d2d2) for r in recs[:3])
    write_plot_stub(recs, tmp_path / "d.dat", tmp_path / "p.py")
    assert (tmp_path / "d.dat").read_text().splitlines()[0].split() == list(CSV_HEADER)
    compile((tmp_path / "p.py").read_text(), "p.py", "exec")


def test_sweep_worker_invariance():
    cfg1 = SweepConfig(N_max=2, thetas=[parse_theta("1/3"), parse_theta("2/7")], workers=1)
    cfg4 = SweepConfig(N_max=2, thetas=[parse_theta("1/3"), parse_theta("2/7")], workers=4)
    a = records_to_csv(ornstein_sweep(cfg1), cfg1.as_json())
    b = records_to_csv(ornstein_sweep(cfg4), cfg4.as_json())
    assert a == b


def test_sweep_config_validation():
    with pytest.raises(ValueError):
        SweepConfig(N_max=0)
    with pytest.raises(ValueError):
        SweepConfig(ratio=2)


def test_commutative_cell_matches_brute_force():
    """theta = 0 mixed norm against a plain numpy evaluation of W_N."""
    import numpy as np
    N = 3
    rec = sweep_cell(make_schedule("geometric", 3, N), N, Fraction(0))
    G = 2048
    x = np.arange(G) / G
    X, Y = np.meshgrid(x, x, indexing="ij")
    F = np.ones((G, G))
    for j, m in enumerate((1, 3, 9), start=1):
        F *= 1 + np.cos(2 * np.pi * ((-1) ** (j - 1) * m * X + m * Y))
    # d1 d2 W has Fourier coefficients (k1 / k2) P^(k) off the origin
    coef = np.fft.fft2(F)
    k = np.fft.fftfreq(G, 1 / G)
    K1, K2 = np.meshgrid(k, k, indexing="ij")
    with np.errstate(divide="ignore", invalid="ignore"):
        mult = np.where(K2 != 0, K1 / K2, 0.0)
    vals = np.fft.ifft2(coef * mult)
    assert rec.norm_d1d2 == pytest.approx(np.abs(vals).mean(), rel=2e-4)


# small-theta trend

def test_theta_convergence_rows():
    rows = theta_convergence(make_schedule("geometric", 3, 1), 1, [1, 2, 5])
    assert rows[0].q == 1 and rows[0].gap_P == 0
    for r in rows:
        assert r.gap_P < 1e-3       # a single factor is positive for every theta
        assert r.converged
    with pytest.raises(ValueError):
        theta_convergence(make_schedule("geometric", 3, 1), 1, [5, 3])


# anisotropic construction

def test_anisotropic_reduces_to_main_case():
    th = DeformationMatrix.scalar(Fraction(1, 5))
    spec = AnisotropicSpec(2, [(2, 0), (0, 2)], (1, 1), (1, 1), (1, 0), th)
    res = anisotropic_build(spec, make_schedule("geometric", 3, 3), 3)
    c = RieszConstruction.build(make_schedule("geometric", 3, 3), 3, th)
    assert res.f.max_abs_diff(c.W) < 1e-18
    assert res.P == c.P
    assert res.norm_kind == "L1"
    assert res.norms["alpha_1"] + res.norms["alpha_2"] == pytest.approx(1, abs=1e-12)
    assert res.derivatives["beta"].max_abs_diff((c.E + c.G) * res.scale) < 1e-15


@pytest.mark.parametrize("bad", [
    dict(beta=(2, 1)),                     # weights mismatch
    dict(parity=(0, 0)),                   # beta parity equals alpha_1 parity
    dict(alphas=[(2, 0), (1, 1)]),         # alpha_2 parity differs from alpha_1
    dict(weights=(0, 1)),
    dict(parity=(2, 0)),
])
def test_anisotropic_rejections(bad):
    base = dict(d=2, alphas=[(2, 0), (0, 2)], beta=(1, 1), weights=(1, 1), parity=(1, 0),
                theta=DeformationMatrix.zero(2))
    base.update(bad)
    with pytest.raises(ValueError):
        AnisotropicSpec(**base)


def test_anisotropic_d3_magnitude_law():
    th = DeformationMatrix([[0, Fraction(1, 5), Fraction(2, 7)],
                            [Fraction(4, 5), 0, Fraction(1, 3)],
                            [Fraction(5, 7), Fraction(2, 3), 0]])
    spec = AnisotropicSpec(3, [(2, 0, 0), (0, 2, 0), (0, 0, 2)], (1, 1, 0), (1, 1, 1), (1, 0, 0), th)
    res = anisotropic_build(spec, make_schedule("geometric", 3, 4), 4)
    spectrum = spectrum_from_vectors(res.vectors)
    assert res.P.support() == spectrum.indices()
    assert trace(res.P) == 1
    for e in spectrum.entries:
        for k in (e.k, tuple(-x for x in e.k)):
            assert abs(abs(res.P[k]) - 2.0**-e.weight) < 1e-12
    assert res.norm_kind == "coefficient_l1_upper_bound"
    assert sum(res.norms[f"alpha_{i}"] for i in (1, 2, 3)) == pytest.approx(1, abs=1e-12)
    tables = res.coefficient_tables()
    assert set(tables) == {"alpha_1", "alpha_2", "alpha_3", "beta"}
    json.dumps(res.report())


def test_anisotropic_weighted_frequencies():
    spec = AnisotropicSpec(2, [(1, 0)], (0, 2), (2, 1), (1, 0), DeformationMatrix.zero(2))
    res = anisotropic_build(spec, make_schedule("geometric", 3, 2), 2)
    assert res.vectors == [(1, 1), (-9, 3)]


def test_theta_convergence_trend_beyond_desk_grid():
    """The gap only shrinks once 6 theta = det(v_1, v_2) theta is itself small."""
    qs = [34, 55, 89, 144]
    gaps = [r.gap_P for r in theta_convergence(make_schedule("geometric", 3, 2), 2, qs)]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    assert all(g < 0.05 for g in gaps[1:])


def test_third_turn_factors_commute():
    """At theta = 1/3 the two factors of m = (1, 3) commute, so their product is positive."""
    from qtorus.algebra import twisted_mul
    from qtorus.riesz import riesz_factor
    th = DeformationMatrix.scalar(Fraction(1, 3))
    sched = make_schedule("geometric", 3, 2)
    p1, p2 = riesz_factor(1, sched, th), riesz_factor(2, sched, th)
    assert twisted_mul(p1, p2, th).max_abs_diff(twisted_mul(p2, p1, th)) < 1e-15
    r = positivity_scan(twisted_mul(p2, p1, th), rep_for(th), 240)
    assert r.min_eigenvalue > -1e-12
