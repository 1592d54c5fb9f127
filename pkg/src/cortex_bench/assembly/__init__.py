"""Assemblies, stimulus sets and behavioral matrices: data model, files, generators."""
from .data import BehavioralMatrix, NeuroidAssembly, StimulusSet, timestep_time_bins
from .io import (
    load_assembly,
    load_behavior_csv,
    load_ost_csv,
    load_stimuli,
    save_assembly,
    save_behavior_csv,
    save_ost_csv,
    save_stimuli,
)
from .synth import SHAPES, attainable_r, pair_accuracies, synth_behavior, synth_neuroids, synth_stimuli

__all__ = [
    "NeuroidAssembly", "StimulusSet", "BehavioralMatrix", "timestep_time_bins",
    "save_assembly", "load_assembly", "save_stimuli", "load_stimuli",
    "save_behavior_csv", "load_behavior_csv", "save_ost_csv", "load_ost_csv",
    "SHAPES", "synth_stimuli", "synth_neuroids", "synth_behavior", "pair_accuracies", "attainable_r",
]
