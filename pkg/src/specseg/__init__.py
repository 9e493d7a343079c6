"""Segmentation of multivariate stationary time series by spectral coherence."""

from .errors import (DegenerateSpectrumError, EigenSolverError, InputError,
                     NumericalError, SingularRegressorError, SpecSegError)
from .forecasting import (ForecastConfig, VarModel, evaluate_forecasts, fit_var,
                          forecast_pipeline, forecast_var)
from .metrics import (SubspaceReport, eigengap, evaluate_segmentation,
                      subspace_distance, subspace_recovery)
from .segmentation import (SegmentationResult, SegmentConfig, coherence_pvalue,
                           coherence_statistic, fdr_adjust, segment)
from .series import (FrequencyBand, FrequencyGrid, MultivariateSeries, demean,
                     fourier_grid, load_csv, write_csv)
from .simgen import (ArmaSpec, LatentModelSpec, build_model, random_orthogonal,
                     run_study, simulate_arma)
from .spectral import (KernelSpec, SpectralEstimate, kernel_constants, kernel_value,
                       periodogram, smooth_spectral)

__version__ = "0.1.0"
