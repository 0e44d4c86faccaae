"""High-dimensional changepoint estimation by sparse projection of CUSUM statistics."""

__version__ = "0.1.0"

from .cusum import PiecewiseMeanSpec, cusum_transform, gamma_vector  # noqa: E402
from .exceptions import (  # noqa: E402
    CombinatorialGuardError,
    InspectError,
    InvalidInputError,
    SolverError,
    ThresholdTooLargeError,
)
from .metrics import Segmentation, adjusted_rand_index, hausdorff, wasserstein1  # noqa: E402
from .projection import SolverConfig, admm_solve, closed_form_s2, solve  # noqa: E402
from .single import (  # noqa: E402
    default_lambda,
    estimate_noise_mad,
    inspect_single,
    inspect_single_split,
    normalize,
)
from .simulate import NoiseModel, generate, overlap_signal, simulate, standard_signal  # noqa: E402
from .spatial import DependenceModel, inspect_single_spatial  # noqa: E402
from .wbs import InspectConfig, calibrate_threshold, draw_intervals, inspect_wbs  # noqa: E402
from .pipeline import RunReport, detect  # noqa: E402

__all__ = [
    "__version__",
    "PiecewiseMeanSpec",
    "cusum_transform",
    "gamma_vector",
    "InspectError",
    "InvalidInputError",
    "SolverError",
    "ThresholdTooLargeError",
    "CombinatorialGuardError",
    "Segmentation",
    "adjusted_rand_index",
    "hausdorff",
    "wasserstein1",
    "SolverConfig",
    "admm_solve",
    "closed_form_s2",
    "solve",
    "default_lambda",
    "estimate_noise_mad",
    "inspect_single",
    "inspect_single_split",
    "normalize",
    "NoiseModel",
    "generate",
    "overlap_signal",
    "simulate",
    "standard_signal",
    "DependenceModel",
    "inspect_single_spatial",
    "InspectConfig",
    "calibrate_threshold",
    "draw_intervals",
    "inspect_wbs",
    "RunReport",
    "detect",
]
