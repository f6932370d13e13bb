import json

import numpy as np
import pytest

from spheric_radial.dto import dto
from spheric_radial.models import enums
from spheric_radial.models.errors import ParseError, ProblemError, UnknownIdentifier
from spheric_radial.utils.problem.loader import (CorpusProblemLoader, LocalProblemLoader, get_problem_loader,
                                                 load_problem)
from spheric_radial.utils.problem.registry import CORPUS_VERSION, ProblemRegistry

from .conftest import CORPUS, PROBLEMS_DIR


def _write(tmp_path, payload) -> str:
    path = tmp_path / "problem.json"
    path.write_text(payload if isinstance(payload, str) else json.dumps(payload))
    return str(path)


def _minimal(**overrides) -> dict:
    payload = {"n": 1, "m": 2, "components": [{"kind": "expr", "src": "z1 - x1"}]}
    payload.update(overrides)
    return payload


@pytest.mark.parametrize("name", sorted(CORPUS))
async def test_problem_files_match_corpus(name):
    problem = await load_problem(str(PROBLEMS_DIR / f"{name}.json"))
    assert problem.spec == CORPUS[name]
    assert problem.name == name
    assert problem.system.p == len(CORPUS[name].components)


async def test_corpus_reference():
    problem = await load_problem("corpus:slab")
    assert problem.system.p == 2
    assert problem.system.value([1.0], [0.5, 0.0]) == pytest.approx(-0.5)


def test_factory_picks_loader():
    assert isinstance(get_problem_loader("corpus:ball"), CorpusProblemLoader)
    assert isinstance(get_problem_loader("problems/ball.json"), LocalProblemLoader)


async def test_unknown_corpus_problem():
    with pytest.raises(ProblemError, match="not found"):
        await load_problem("corpus:cube")


async def test_defaults_fill_standard_normal(tmp_path):
    problem = await load_problem(_write(tmp_path, _minimal()))
    assert problem.name == "unnamed"
    assert np.array_equal(problem.model.mean, [0.0, 0.0])
    assert np.array_equal(problem.model.cholesky, np.eye(2))


async def test_correlated_covariance(tmp_path):
    problem = await load_problem(_write(tmp_path, _minimal(mean=[1.0, -1.0], covariance=[[4.0, 2.0], [2.0, 2.0]])))
    half = np.sqrt(0.5)
    assert problem.model.scale == pytest.approx(np.array([0.5, half]))
    assert problem.model.cholesky == pytest.approx(np.array([[1.0, 0.0], [half, half]]))


async def test_missing_file(tmp_path):
    with pytest.raises(ProblemError, match="Cannot read"):
        await load_problem(str(tmp_path / "absent.json"))


async def test_invalid_json(tmp_path):
    with pytest.raises(ProblemError, match="not valid JSON"):
        await load_problem(_write(tmp_path, "{\"n\": 1,"))


@pytest.mark.parametrize("payload", [
    _minimal(components=[{"kind": "polytope", "src": "z1"}]),
    _minimal(mean=[0.0]),
    _minimal(covariance=[[1.0, 0.0]]),
    _minimal(tolerance=1e-3),
    _minimal(components=[]),
    _minimal(reference_x=[1.0, 2.0]),
    _minimal(components=[{"kind": "affine", "w": [1.0], "c": [1.0]}]),
    _minimal(components=[{"kind": "separable", "a_expr": "x1", "q": [1.0, -1.0]}]),
    _minimal(n=2, components=[{"kind": "nonlipschitz_example"}]),
])
async def test_schema_errors(tmp_path, payload):
    with pytest.raises(ProblemError, match="Invalid problem"):
        await load_problem(_write(tmp_path, payload))


@pytest.mark.parametrize("kind", ["paper_example", "nonlipschitz_example"])
async def test_example_component_tags(tmp_path, kind):
    problem = await load_problem(_write(tmp_path, _minimal(components=[{"kind": kind}], reference_x=[0.0])))
    assert problem.system.components[0].kind == enums.ComponentKind.NONLIPSCHITZ_EXAMPLE
    assert problem.system.value([0.0], [0.0, 0.0]) == -1.0
    assert problem.spec.components[0].kind == kind


async def test_bad_expression_reports_offset(tmp_path):
    with pytest.raises(ParseError) as info:
        await load_problem(_write(tmp_path, _minimal(components=[{"kind": "expr", "src": "z1 - * x1"}])))
    assert info.value.offset == 5


async def test_coordinate_beyond_dimension(tmp_path):
    with pytest.raises(UnknownIdentifier) as info:
        await load_problem(_write(tmp_path, _minimal(components=[{"kind": "expr", "src": "z3 - x1"}])))
    assert info.value.name == "z3"


async def test_registry():
    registry = ProblemRegistry()
    assert registry.version == CORPUS_VERSION == "1"
    assert len(await registry.list_problems()) == 6
    spec = dto.ProblemSpec(name="shifted", n=1, m=2, components=[dto.ExprComponentSpec(src="z1 + 1 - x1")])
    assert await registry.register_problem(spec)
    assert not await registry.register_problem(spec)
    assert await registry.is_registered("shifted")
    with pytest.raises(KeyError):
        await registry.get_problem("cube")
    with pytest.raises(ValueError):
        await registry.register_problem(spec.model_copy(update={"name": None}))


async def test_registry_hands_out_copies():
    registry = ProblemRegistry()
    first = await registry.get_problem("half_space")
    first.reference_x[0] = 5.0
    assert (await registry.get_problem("half_space")).reference_x == [1.0]
