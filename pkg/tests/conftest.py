import numpy as np
import pytest

from greedynet.dataset import SplitSpec, apply_normalization, load_digits_dataset, normalize, split
from greedynet.network import NS_SPLIT, derive_seed
from greedynet.trainer import PipelineConfig, run_pipeline


@pytest.fixture(scope="session")
def digits():
    return load_digits_dataset()


@pytest.fixture(scope="session")
def digits_splits(digits):
    """seed -> (normalized train, test normalized with train bounds)."""

    def make(seed: int, test_frac: float = 0.3):
        spec = SplitSpec(test_frac, derive_seed(seed, NS_SPLIT))
        train_raw, test_raw = split(digits, spec)
        train = normalize(train_raw)
        test = apply_normalization(test_raw, train.norm)
        return train, test

    return make


@pytest.fixture(scope="session")
def pipeline_runner(digits_splits):
    """Memoized full-protocol runs so acceptance criteria share work."""
    cache: dict = {}

    def run(algorithm: str, seed: int, **overrides):
        overrides.setdefault("amnesia", 0.4)
        key = (algorithm, seed, tuple(sorted(overrides.items())))
        if key not in cache:
            cfg = PipelineConfig(algorithm=algorithm, arch=(40, 30), seed=seed, **overrides)
            train, test = digits_splits(seed)
            cache[key] = run_pipeline(cfg, train, test)[0]
        return cache[key]

    return run


@pytest.fixture
def rng():
    return np.random.default_rng(42)
