"""morphlab: desk-scale laboratory for self-transitional robust training
under label noise — two-phase training with automatic transition detection,
GMM-based noise-rate estimation, and maximal-safe-set evolution."""

from .data import (NoisyDataset, TransitionMatrix, asymmetric_matrix, augment,
                   inject_noise, load_csv, make_benchmark_pair, make_blobs,
                   save_csv, symmetric_matrix)
from .errors import (ConfigurationError, DatasetParseError, DegenerateFitError,
                     DimensionError, InsufficientDataError, MorphlabError,
                     NotReadyError, NumericalFailureError)
from .memorization import (PredictionHistory, SelectionReport, label_metrics,
                           mr_mp)
from .nn import (ForwardResult, MlpModel, OptimizerState, backward_and_step,
                 cosine_lr, forward, gradient_check, mlp_init, sgd_init)
from .noise_estimator import (AulAccumulator, GmmFit, estimate_tau, gmm_fit_em,
                              posterior_large)
from .runlog import (CSV_HEADER, EpochMetrics, read_metrics_csv,
                     write_metrics_csv)
from .safe_set import MaximalSafeSet, evolve, init_safe_set
from .training import (RunResult, TrainConfig, phase2_step, ramp_weight,
                       run_default, run_morph, run_small_loss)

__version__ = "0.1.0"
