"""Single-pass streaming anomaly detection.

Records are embedded with (optionally gradient-refined) random Fourier
features; a density matrix over the embeddings tracks the stream's
density as an exponential moving average; records whose density score
falls below a threshold learned on the initialization window are flagged
and never absorbed.
"""

from .checkpoint import load_feature_map, load_state, save_feature_map, save_state
from .data import (
    ANOMALY,
    NORMAL,
    MinMaxTransform,
    StreamRecord,
    generate_synthetic,
    load_csv,
    normalize_minmax,
)
from .density import (
    DensityMatrix,
    init_density,
    measure,
    reconstruct_weights,
    update,
    update_inplace,
)
from .detector import (
    DetectorParams,
    DetectorState,
    fit,
    process,
    score_only,
    threshold_by_auc,
    threshold_by_quantile,
)
from .errors import (
    CsvParseError,
    DegenerateLabelsError,
    PSDViolationError,
    TrainingDivergedError,
)
from .evaluate import (
    BenchReport,
    EvalReport,
    bench_scoring,
    evaluate_stream,
    fast_forward_state,
    grid_search,
)
from .features import FeatureMap, embed, gaussian_kernel, sample_rff
from .metrics import auc_roc, friedman_q, nemenyi, roc_points
from .training import (
    TrainConfig,
    augment_training_set,
    kernel_mse,
    kernel_mse_grad,
    sample_pairs,
    train_aff,
)

__version__ = "0.1.0"
