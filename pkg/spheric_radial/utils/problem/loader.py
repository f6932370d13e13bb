import json
from abc import ABC, abstractmethod
from dataclasses import dataclass

import aiofiles
from pydantic import ValidationError

from ...dto import dto
from ...models.errors import ProblemError
from ..gaussian_model import GaussianModel, build_model
from ..logger_setup import Logger
from . import expression as ex
from .registry import problem_registry
from .system import (AffineComponent, BallComponent, Component, ExpressionComponent, InequalitySystem,
                     NonLipschitzExampleComponent, SeparableComponent)

logger = Logger(__name__)

CORPUS_PREFIX = "corpus:"


@dataclass(frozen=True, eq=False)
class Problem:
    spec: dto.ProblemSpec
    system: InequalitySystem
    model: GaussianModel

    @property
    def name(self) -> str:
        return self.spec.name or "unnamed"


class ProblemLoader(ABC):
    """Abstract base class for loading problem definitions."""

    def __init__(self, source: str):
        self.source = source

    async def load(self) -> Problem:
        """Load, validate and build the problem."""
        raw = await self._load_problem_data()
        try:
            spec = dto.ProblemSpec.model_validate(raw)
        except ValidationError as e:
            raise ProblemError(f"Invalid problem {self.source}: {e}") from e
        problem = build_problem(spec)
        logger.info(f"Loaded problem {problem.name} (n={spec.n}, m={spec.m}, p={problem.system.p}) from {self.source}")
        return problem

    @abstractmethod
    async def _load_problem_data(self) -> dict:
        """
        Load the raw problem dictionary.

        Must be implemented by subclasses.
        """
        pass


class LocalProblemLoader(ProblemLoader):
    """Problem loader for JSON files on the local file system."""

    async def _load_problem_data(self) -> dict:
        try:
            async with aiofiles.open(self.source, mode="r") as f:
                content = await f.read()
        except OSError as e:
            raise ProblemError(f"Cannot read problem file {self.source}: {e}") from e
        try:
            return json.loads(content)
        except json.JSONDecodeError as e:
            raise ProblemError(f"Problem file {self.source} is not valid JSON: {e}") from e


class CorpusProblemLoader(ProblemLoader):
    """Problem loader for the built-in regression corpus (`corpus:<name>`)."""

    async def _load_problem_data(self) -> dict:
        name = self.source[len(CORPUS_PREFIX):] if self.source.startswith(CORPUS_PREFIX) else self.source
        try:
            spec = await problem_registry.get_problem(name)
        except KeyError as e:
            raise ProblemError(str(e.args[0])) from e
        return spec.model_dump(exclude_none=True)


def get_problem_loader(source: str) -> ProblemLoader:
    """
    Factory function to create the appropriate problem loader.

    Args:
        source: a path to a problem JSON file, or `corpus:<name>` for a corpus problem

    Returns:
        CorpusProblemLoader for corpus references, otherwise LocalProblemLoader
    """
    if source.startswith(CORPUS_PREFIX):
        return CorpusProblemLoader(source)
    return LocalProblemLoader(source)


def _build_component(spec: dto.ComponentSpec, n: int, m: int) -> Component:
    if isinstance(spec, dto.ExprComponentSpec):
        return ExpressionComponent(ex.parse_expression(spec.src, n, m), n, m, convex=spec.convex)
    if isinstance(spec, dto.AffineComponentSpec):
        return AffineComponent(spec.w, spec.c, spec.d)
    if isinstance(spec, dto.BallComponentSpec):
        return BallComponent(ex.parse_expression(spec.radius_expr, n, m), n, m)
    if isinstance(spec, dto.SeparableComponentSpec):
        return SeparableComponent(ex.parse_expression(spec.a_expr, n, m), spec.q, n)
    if isinstance(spec, dto.NonLipschitzExampleSpec):
        return NonLipschitzExampleComponent()
    raise ProblemError(f"Unsupported component kind {spec.kind}")


def build_problem(spec: dto.ProblemSpec) -> Problem:
    """Turn a validated problem file into a system and its Gaussian model."""
    system = InequalitySystem(spec.n, spec.m, [_build_component(c, spec.n, spec.m) for c in spec.components])
    model = build_model(spec.mean, spec.covariance)
    return Problem(spec=spec, system=system, model=model)


async def load_problem(source: str) -> Problem:
    return await get_problem_loader(source).load()
