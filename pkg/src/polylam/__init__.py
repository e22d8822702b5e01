"""Rank-one connections, infinite-rank laminates and attainable spectra for
the cone of rotated multiples of a fixed anisotropic 3x3 spectrum."""

__version__ = "0.1.0"

from .errors import InfeasibleError, PolylamError, ValidationError
from .linalg import (
    CrystalSpectrum,
    PlanePoint,
    Spectrum,
    SymMat3,
    conjugate,
    eigendecompose_sym3,
    eigvals_sym3,
    lift_unit_trace,
    project_unit_trace,
)
from .rank_one import admissible_lambdas, build_connection, in_t1, normal_squares
from .t2set import F_eval, sample_t2_curve, solve_double_connection
from .laminate import (
    LaminateMeasure,
    barycenter,
    build_sequence,
    classify_support,
    make_schedule,
    moment,
    segment_point,
    split,
    validate_laminate,
)
from .attainable import (
    boundary_angles,
    check_inclusion,
    contains,
    full_boundary,
    gamma_curve,
    identity_suite,
    nm_region,
    straight_line_witness,
    uniaxial_points,
)
from .polycrystal import g_closure_slice, polycrystal_problem, s_from_sigma, sigma_star, solve_theta

__all__ = [name for name in dir() if not name.startswith("_")]
