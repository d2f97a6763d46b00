"""Symplectic and Hamiltonian deformations of Gaussian Gabor frames.

Phase-space primitives, metaplectic transport of Gaussian windows through the
Siegel half-space, numerical frame-bound estimation, symplectic integrators,
and the weak (nearby-orbit) deformation scheme with its exact invariance
checks.
"""

__version__ = "0.1.0"

from .symplectic import (
    AffineSymplectic,
    GeneratingFunctionData,
    Lattice,
    PhasePoint,
    affine_compose,
    affine_inverse,
    from_generating_function,
    is_symplectic,
    lattice_map,
    lattice_points,
    make_generator,
    rotation,
    separable_lattice,
    standard_j,
    symplectic_form,
)
from .gaussians import (
    GaussianMixture,
    GaussianState,
    SampledWindow,
    heisenberg_weyl_apply,
    inner_product,
    metaplectic_apply,
    quadratic_fourier_apply,
    rescale_window,
    sample_state,
    siegel_action,
    standard_gaussian,
    stft,
)
from .frames import (
    EstimationConfig,
    FrameReport,
    GaborSystem,
    covariance_check,
    frame_bounds,
    frame_sum,
    gaussian_frame_criterion,
    rescaling_check,
    translation_check,
)
from .dynamics import (
    Hamiltonian,
    Trajectory,
    builtin_hamiltonian,
    compose_hamiltonians,
    groupoid_check,
    hamiltonian_from_isotopy,
    hamiltonian_from_linear_path,
    integrate,
    invert_hamiltonian,
    quadratic_flow,
    suspended_flow,
    symplectic_euler_step,
    verlet_step,
)
from .deformation import (
    DeformationConfig,
    DeformationResult,
    deform_sweep,
    gaussian_corollary_check,
    invariance_check,
    weak_deform,
)
from .expressions import (
    ParseError,
    eval_with_derivatives,
    expression_hamiltonian,
    parse_hamiltonian,
    to_source,
)

__all__ = [name for name in dir() if not name.startswith("_")]
