"""driftgauge: floor displacement from noisy accelerometers, with
zero-velocity correction, and the sensor-noise cost in post-event building
damage classification."""

__version__ = "0.1.0"

from .catalog import CatalogError, MICRO_G, bundled_data_path, load_catalog
from .classification import (
    ClassLabel,
    ClassificationMatrix,
    DriftThresholds,
    QuadratureError,
    RelativeDisplacementModel,
    classify,
    conditional_matrix,
    idr,
    overall_pe,
    relative_error_std,
)
from .kinematics import (
    AccelTrace,
    DisplacementEstimate,
    EosDetection,
    EosNotFoundError,
    ZuptCoefficients,
    apply_zupt,
    detect_eos,
    double_integrate,
    error_variance,
    read_trace,
    remove_bias,
    write_trace,
    zupt_coefficients,
)
from .noise import (
    AutocovarianceSequence,
    NoiseModelError,
    NoiseRealization,
    NoiseSpec,
    ShapingFilter,
    autocovariance,
    build_shaping_filters,
    derive_seed,
    fit_noise_spec,
    psd_of_model,
    resolve_densities,
    synthesize_noise,
    toeplitz_quadratics,
    welch_asd,
)
from .scenario import (
    HAZARD_NAMES,
    DurationDistribution,
    HazardLevel,
    PeCurve,
    expected_pe,
    load_duration_cdf,
    load_hazards,
    pe_curve,
    sigma_x_for,
)

__all__ = [
    "__version__",
    "CatalogError",
    "MICRO_G",
    "bundled_data_path",
    "load_catalog",
    "ClassLabel",
    "ClassificationMatrix",
    "DriftThresholds",
    "QuadratureError",
    "RelativeDisplacementModel",
    "classify",
    "conditional_matrix",
    "idr",
    "overall_pe",
    "relative_error_std",
    "AccelTrace",
    "DisplacementEstimate",
    "EosDetection",
    "EosNotFoundError",
    "ZuptCoefficients",
    "apply_zupt",
    "detect_eos",
    "double_integrate",
    "error_variance",
    "read_trace",
    "remove_bias",
    "write_trace",
    "zupt_coefficients",
    "AutocovarianceSequence",
    "NoiseModelError",
    "NoiseRealization",
    "NoiseSpec",
    "ShapingFilter",
    "autocovariance",
    "build_shaping_filters",
    "derive_seed",
    "fit_noise_spec",
    "psd_of_model",
    "resolve_densities",
    "synthesize_noise",
    "toeplitz_quadratics",
    "welch_asd",
    "HAZARD_NAMES",
    "DurationDistribution",
    "HazardLevel",
    "PeCurve",
    "expected_pe",
    "load_duration_cdf",
    "load_hazards",
    "pe_curve",
    "sigma_x_for",
]
