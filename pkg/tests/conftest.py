import pathlib
import sys

import pytest

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent))

from synth import synthetic_corpus  # noqa: E402

from adcpred.curation import write_dataset  # noqa: E402
from adcpred.experiments import ExperimentPlan, run_benchmark  # noqa: E402
from adcpred.model import TrainConfig  # noqa: E402


def fast_train_config(**overrides) -> TrainConfig:
    """Small config that converges on the synthetic corpus in seconds."""
    base = dict(hidden_dim=64, max_epochs=60, patience=15)
    base.update(overrides)
    return TrainConfig(**base)


@pytest.fixture(scope="session")
def corpus400():
    return synthetic_corpus(400, seed=7)


@pytest.fixture(scope="session")
def corpus_path(corpus400, tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "synthetic.jsonl"
    write_dataset(corpus400, path)
    return path


@pytest.fixture(scope="session")
def fast_plan(corpus_path):
    return ExperimentPlan(
        dataset=str(corpus_path),
        use_fallback_features=True,
        seeds=(0, 1, 2),
        train=fast_train_config(),
    )


@pytest.fixture(scope="session")
def benchmark_run(fast_plan, tmp_path_factory):
    """One 3-seed benchmark shared by every test that needs a trained
    checkpoint or its result table."""
    out = tmp_path_factory.mktemp("bench")
    table = run_benchmark(fast_plan, out_dir=out)
    return table, out
