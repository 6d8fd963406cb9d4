"""Bilinear decoupling of respiratory and angular variation in rotational X-ray scans.

The package trains a bilinear projection model from a stack of forward
projections of phase-binned volumes, interpolates the rotational weights
along the trajectory with a B-spline, and estimates respiratory weights for
a single projection at a known angle by a pseudo-inverse solve.  A synthetic
breathing phantom and a parallel-beam projector provide end-to-end test data.
"""

from .bilinear import (
    AngleModelMatrix,
    BilinearModel,
    angle_model,
    build_data_tensor,
    estimate_respiratory,
    solve_respiratory,
    synthesize,
    train_bilinear,
)
from .bspline import SplineCurve, basis_functions, eval_spline, fit_spline
from .errors import (
    ConfigurationError,
    DegenerateModelError,
    DimensionError,
    DomainError,
    InputError,
)
from .phantom import PhantomSpec, generate, generate_4d, phase_label
from .projector import (
    DetectorGeometry,
    ProjectionImage,
    Trajectory,
    Volume,
    detector_for_volume,
    project,
    project_stack,
)
from .regression import RegressionMap, fit_regression, predict
from .ssm import ShapeModel, explained_variance, reconstruct, train_ssm
from .tensor3 import (
    HosvdResult,
    ModeSvd,
    Tensor3,
    compose,
    fold,
    hosvd,
    mode_product,
    mode_svd,
    unfold,
)

__version__ = "0.1.0"
