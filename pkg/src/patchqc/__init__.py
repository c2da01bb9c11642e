"""Patch-overlap segmentation fusion with disagreement maps and
uncertainty-guided human review for dynamic image series."""

from .backends import (ExternalProbsBackend, InferContext, IntensityBandBackend,
                       NoiseProfile, OracleNoiseBackend, external_probs_load,
                       intensity_band_infer, noisy_oracle_infer)
from .dqc import (SENTINEL_MAX, FrameDiagnostics, QcSeries, binarize, build_qc_series,
                  compute_dqc_map, count_components, dice, frame_diagnostics,
                  q_frame, q_pixel, q_slice)
from .errors import (BoundsError, ConfigError, ConflictError, CoverageError,
                     DegenerateError, EmptySegmentationError, FormatError, IoError,
                     PatchQcError, ShapeError)
from .experiments import (BaselineRun, SliceOutcome, load_run, make_backend,
                          run_baseline, run_difficulty_auc, run_hitl_comparison,
                          write_corrections, write_referrals)
from .hitl import (SOURCE_HUMAN, SOURCE_ORACLE, CorrectionRecord, ReferralPlan,
                   apply_corrections, evaluate_masks, monte_carlo_random,
                   oracle_correct, plan_referrals, selected_frame_stats)
from .overlay import gray_png, heatmap_png, mask_contour, overlay_png
from .patching import OverlapAccumulator, PatchGrid, build_grid, extract_patch
from .phantom import GammaVariate, PhantomSpec, generate_dataset, generate_slice
from .service import RunSession, make_server
from .rle import decode_rle, encode_rle
from .stats import RocResult, auc, format_mean_std, paired_permutation_test, summarize
from .volumes import (DynamicVolume, SegmentationMask, SliceRecord, read_dataset,
                      read_mask, read_volume, write_dataset, write_volume)

__version__ = "0.1.0"
