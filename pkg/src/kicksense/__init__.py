"""kicksense: pressure-array sensing of swimmer leg kicks.

Simulates a three-sensor pressure array watching a two-leg kick model,
then recognises the kick pattern and localises the kicking legs from
sliding windows of the signals, using a dual-branch neural network with
attention fusion plus classical baselines.
"""

from .kinematics import KickPattern, KickStyle, LegState, leg_deflection, pattern_by_id, pattern_set
from .flowsim import SensorGeometry, SimConfig, SimRun, simulate_run, sweep_experiment
from .signal import PressureWindow, Spectrogram, sliding_windows, spectrogram, standardize, stft
from .models import ModelHyperparams, build_model
from .data import WindowDataset, build_dataset, export_dataset, ingest_manifest, split_dataset
from .training import (
    TrainSettings,
    load_model,
    save_model,
    train_classifier,
    train_model,
    train_regressor,
)
from .evaluate import evaluate_classifier, evaluate_regressor

__version__ = "0.1.0"

__all__ = [
    "KickPattern",
    "KickStyle",
    "LegState",
    "ModelHyperparams",
    "PressureWindow",
    "SensorGeometry",
    "SimConfig",
    "SimRun",
    "Spectrogram",
    "TrainSettings",
    "WindowDataset",
    "build_dataset",
    "build_model",
    "evaluate_classifier",
    "evaluate_regressor",
    "export_dataset",
    "ingest_manifest",
    "leg_deflection",
    "load_model",
    "pattern_by_id",
    "pattern_set",
    "save_model",
    "simulate_run",
    "sliding_windows",
    "spectrogram",
    "split_dataset",
    "standardize",
    "stft",
    "sweep_experiment",
    "train_classifier",
    "train_model",
    "train_regressor",
    "__version__",
]
