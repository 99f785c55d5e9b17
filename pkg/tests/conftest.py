import numpy as np
import pytest

from dqcalib.synth import NoiseSpec, add_noise, generate, random_rig

ACCEPTANCE_LINES = []


def make_pairs(seed=0, alphas=(1.0,), n=100, noise=(0.0, 0.0), **kw):
    rig = random_rig(seed, alphas, n, **kw)
    pairs, gt = generate(rig)
    pairs = add_noise(pairs, NoiseSpec(*noise), seed=seed)
    return pairs, gt


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def clean_rig():
    return make_pairs(seed=3, alphas=(10.0,), n=100)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
