"""Shared fixtures: the full default dataset and trained-model suites.

The expensive artifacts (600-run dataset, multi-seed training suites)
are session-scoped so the acceptance criteria share one set of runs.
"""

import time

import numpy as np
import pytest

from kicksense.data import build_dataset, split_dataset
from kicksense.evaluate import ablation_suite
from kicksense.flowsim import SimConfig
from kicksense.models import ModelHyperparams
from kicksense.training import TrainSettings

ACCEPTANCE_SEEDS = (0, 1, 2)


@pytest.fixture(scope="session")
def default_sim_config():
    return SimConfig()


@pytest.fixture(scope="session")
def default_dataset(default_sim_config):
    """Full experiment matrix at default settings: 600 runs, stride 5."""
    return build_dataset(config=default_sim_config)


@pytest.fixture(scope="session")
def default_splits(default_dataset):
    return split_dataset(default_dataset)


@pytest.fixture(scope="session")
def default_settings():
    return TrainSettings()


@pytest.fixture(scope="session")
def classification_nn_suite(default_splits, default_settings):
    """fusion/time/freq classifiers across the acceptance seeds.

    Returns (suite, wall_seconds): the suite keeps its trained models so
    later criteria (baseline comparison, streaming) reuse them.
    """
    t0 = time.perf_counter()
    suite = ablation_suite(
        default_splits,
        kinds=("fusion", "time", "freq"),
        seeds=ACCEPTANCE_SEEDS,
        settings=default_settings,
        keep_models=True,
    )
    return suite, time.perf_counter() - t0


@pytest.fixture(scope="session")
def classification_baseline_suite(default_splits, default_settings):
    return ablation_suite(
        default_splits,
        kinds=("fft_mlp", "stats_mlp"),
        seeds=ACCEPTANCE_SEEDS,
        settings=default_settings,
        keep_models=False,
    )


@pytest.fixture(scope="session")
def localization_suite(default_splits, default_settings):
    """fusion + both baselines on the localization task, all seeds."""
    return ablation_suite(
        default_splits,
        kinds=("fusion", "fft_mlp", "stats_mlp"),
        seeds=ACCEPTANCE_SEEDS,
        settings=default_settings,
        task="localization",
        keep_models=False,
    )


@pytest.fixture(scope="session")
def trained_fusion_classifier(classification_nn_suite):
    suite, _ = classification_nn_suite
    for rec in suite.records:
        if rec.kind == "fusion" and rec.seed == ACCEPTANCE_SEEDS[0]:
            return rec.model
    raise RuntimeError("fusion classifier missing from suite")


def mean_metric(suite, kind, key):
    vals = suite.metric_table(key)[kind]
    return float(np.mean(vals))


@pytest.fixture(scope="session")
def default_hyperparams():
    return ModelHyperparams()
