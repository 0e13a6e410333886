"""Twisted-polynomial algebra, Riesz products and numerical norms on the quantum torus."""
from .algebra import (
    DeformationMatrix,
    TorusPolynomial,
    adjoint,
    derive,
    derive_multi,
    fourier_coeff,
    identity,
    l2_norm,
    make_monomial,
    trace,
    twisted_mul,
)
from .reps import ClockShiftRep, NormReport, clock_shift, gns_matrix, schatten_norms, trace_via_gns
from .riesz import (
    FrequencySchedule,
    RieszSpectrum,
    make_schedule,
    modified_W,
    polys_BEG,
    riesz_factor,
    riesz_product,
    spectrum_sets,
)
from .theta import parse_theta

__version__ = "0.1.0"
