from pathlib import Path

import numpy as np
import pytest

from spheric_radial.dto import dto
from spheric_radial.utils.problem.loader import Problem, build_problem
from spheric_radial.utils.problem.registry import corpus_specs
from spheric_radial.utils.settings import AppSettings, settings

PROBLEMS_DIR = Path(__file__).resolve().parents[1] / "problems"

CORPUS = {spec.name: spec for spec in corpus_specs()}
SMOOTH_CORPUS = ["half_space", "slab", "product_half_spaces"]


def corpus_problem(name: str) -> Problem:
    return build_problem(CORPUS[name].model_copy(deep=True))


def make_problem(*components, n: int = 1, m: int = 2, mean=None, covariance=None) -> Problem:
    return build_problem(dto.ProblemSpec(n=n, m=m, mean=mean, covariance=covariance, components=list(components)))


def expr(src: str) -> dto.ExprComponentSpec:
    return dto.ExprComponentSpec(src=src)


def config(**overrides) -> AppSettings:
    return settings.model_copy(update=overrides)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture
def half_space() -> Problem:
    return corpus_problem("half_space")


@pytest.fixture
def nonlipschitz() -> Problem:
    return corpus_problem("nonlipschitz_example")
