import os
import random
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

import bvlab
from bvlab.cli.dsl import mode_context, parse_expression
from bvlab.fock.modes import load_modes

settings.register_profile(
    "bvlab",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
    derandomize=True,
)
settings.load_profile(os.environ.get("BVLAB_HYPOTHESIS_PROFILE", "bvlab"))

DATA = Path(bvlab.__file__).parent / "cli" / "data"


def data_file(name: str) -> Path:
    return DATA / name


@pytest.fixture(scope="session")
def kt_toy():
    return load_modes(data_file("kt-toy.modes"))


@pytest.fixture(scope="session")
def oscillator():
    return load_modes(data_file("oscillator.modes"))


@pytest.fixture(scope="session")
def pair_system():
    return load_modes(data_file("pair.modes"))


@pytest.fixture
def rng():
    return random.Random(20240917)


def modes_expr(system, text: str):
    return parse_expression(text, mode_context(system))
