"""Adaptive random Fourier feature training and its experiment tooling.

The package splits into a small set of layers:

- :mod:`arffkit.lsq`        feature matrices and regularized least squares
- :mod:`arffkit.targets`    the rotated Si(x1/alpha) benchmark family
- :mod:`arffkit.arff`       the adaptive Metropolis / resampling sampler
- :mod:`arffkit.mlp`        dense networks, Adam, and the sampled-layer export
- :mod:`arffkit.kde`        Gaussian kernel density estimates for frequencies
- :mod:`arffkit.images`     image regression datasets and pipelines
- :mod:`arffkit.serialize`  deterministic CSV / JSON / npz round trips
- :mod:`arffkit.experiments` multi-run sweeps with aggregation
- :mod:`arffkit.cli`        the ``arffkit`` command line
"""

from .exceptions import (
    ConfigError,
    DegenerateDataError,
    QuadratureError,
    SingularGramWarning,
    SingularSystemError,
)
from .arff import (
    ArffConfig,
    ResampleRule,
    TrainResult,
    TrainTrace,
    VARIANTS,
    effective_sample_size,
    probability_mass,
    train,
    variant_rules,
)
from .lsq import (
    COMPLEX_EXP,
    COSINE_BIAS,
    assemble_design,
    data_residual,
    residual_metric,
    solve_regularized,
)
from .targets import (
    Dataset,
    TargetSpec,
    default_spec,
    error_bound_constant,
    generate_dataset,
    normalize,
    sine_integral,
    target_f,
)

__version__ = "0.1.0"

__all__ = [
    "ArffConfig",
    "COMPLEX_EXP",
    "COSINE_BIAS",
    "ConfigError",
    "Dataset",
    "DegenerateDataError",
    "QuadratureError",
    "ResampleRule",
    "SingularGramWarning",
    "SingularSystemError",
    "TargetSpec",
    "TrainResult",
    "TrainTrace",
    "VARIANTS",
    "assemble_design",
    "data_residual",
    "default_spec",
    "effective_sample_size",
    "error_bound_constant",
    "generate_dataset",
    "normalize",
    "probability_mass",
    "residual_metric",
    "sine_integral",
    "solve_regularized",
    "target_f",
    "train",
    "variant_rules",
    "__version__",
]
