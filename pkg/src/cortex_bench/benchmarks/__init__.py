"""Brain-likeness benchmarks, composite scoring and analysis protocols."""
from .behavioral import BehaviorResult, behavioral_predictivity, false_alarm_rates, normalized_dprime
from .composite import REFERENCE_ROWS, ReferenceRow, composite, reference_table
from .mapping import MappingResult, map_layers, recording_points, select_point
from .neural import NeuralConfig, NeuralResult, neural_predictivity, permutation_null
from .ost import (DecoderConfig, OSTConfig, OSTRecord, OSTResult, i1_dprime, ost_benchmark, ost_from_trajectory,
                  timestep_trajectory)
from .scorecard import ScoreCard
from .suite import BehaviorConfig, BenchmarkConfig, score_features
from .targets import SyntheticTargets, load_targets, save_targets, stimulus_latents, synth_targets
from .sweep import ABLATION_AXES, SweepBudget, SweepTable, ablation_sweep, expand_axes, with_n_areas
from .timebins import TimeBinnedResult, timebinned_predictivity
from .transfer import TransferResult, c_grid, transfer_probe

__all__ = [
    "BehaviorResult", "behavioral_predictivity", "false_alarm_rates", "normalized_dprime",
    "REFERENCE_ROWS", "ReferenceRow", "composite", "reference_table",
    "MappingResult", "map_layers", "recording_points", "select_point",
    "NeuralConfig", "NeuralResult", "neural_predictivity", "permutation_null",
    "DecoderConfig", "OSTConfig", "OSTRecord", "OSTResult", "i1_dprime", "ost_benchmark", "ost_from_trajectory",
    "timestep_trajectory",
    "ScoreCard", "BehaviorConfig", "BenchmarkConfig", "score_features",
    "SyntheticTargets", "load_targets", "save_targets", "stimulus_latents", "synth_targets",
    "ABLATION_AXES", "SweepBudget", "SweepTable", "ablation_sweep", "expand_axes", "with_n_areas",
    "TimeBinnedResult", "timebinned_predictivity", "TransferResult", "c_grid", "transfer_probe",
]
