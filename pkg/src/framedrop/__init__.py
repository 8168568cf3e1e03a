"""Frame-loss simulation and robustness evaluation for emotion labels.

The toolkit samples keep/drop masks from a two-state Markov channel,
applies them jointly to audio and per-frame emotion labels, prepares
datasets under the four training regimes, and scores predictions with the
concordance correlation coefficient over concatenated tracks.
"""

__version__ = "0.1.0"

from .errors import FramedropError
from .loss_model import (
    LossParams,
    ParamCategory,
    ParamKind,
    classify,
    expected_loss_fraction,
    sample_mask,
    sample_params,
)
from .mask_ops import BinaryMask, MaskRecord, apply, drop_rate, expand
from .metrics import CccReport, EmotionSeries, ccc, ccc_loss, evaluate_concat, overlap_rate
from .datasets import (
    Manifest,
    SynthConfig,
    Track,
    corrupt_track,
    median_pool,
    rate_ratio,
    segment,
    synth_corpus,
)
from .experiments import (
    RegimeConfig,
    RegimeKind,
    ResultRecord,
    TestGrid,
    plan_batch_params,
    run_grid,
    select_model,
)
from .rng import SplitMix64

__all__ = [
    "__version__",
    "FramedropError",
    "SplitMix64",
    "LossParams",
    "ParamCategory",
    "ParamKind",
    "classify",
    "expected_loss_fraction",
    "sample_mask",
    "sample_params",
    "BinaryMask",
    "MaskRecord",
    "apply",
    "drop_rate",
    "expand",
    "CccReport",
    "EmotionSeries",
    "ccc",
    "ccc_loss",
    "evaluate_concat",
    "overlap_rate",
    "Manifest",
    "SynthConfig",
    "Track",
    "corrupt_track",
    "median_pool",
    "rate_ratio",
    "segment",
    "synth_corpus",
    "RegimeConfig",
    "RegimeKind",
    "ResultRecord",
    "TestGrid",
    "plan_batch_params",
    "run_grid",
    "select_model",
]
