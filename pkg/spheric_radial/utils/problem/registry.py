import asyncio
from typing import List

from ...dto import dto

CORPUS_VERSION = "1"


def corpus_specs() -> List[dto.ProblemSpec]:
    return [
        dto.ProblemSpec(
            name="half_space",
            description="g(x, z) = z1 - x1; phi(x) = Phi(x)",
            n=1, m=2,
            components=[dto.ExprComponentSpec(src="z1 - x1")],
            reference_x=[1.0],
        ),
        dto.ProblemSpec(
            name="slab",
            description="g = max(z1 - x1, -z1 - x1); phi(x) = 2 Phi(x) - 1",
            n=1, m=2,
            components=[dto.ExprComponentSpec(src="z1 - x1"), dto.ExprComponentSpec(src="-z1 - x1")],
            reference_x=[1.0],
        ),
        dto.ProblemSpec(
            name="ball",
            description="g = |z| - 2; phi = F_chi(2)",
            n=1, m=2,
            components=[dto.BallComponentSpec(radius_expr="2")],
            reference_x=[0.0],
        ),
        dto.ProblemSpec(
            name="product_half_spaces",
            description="g = max(z1 - x1, z2 - x1); phi(x) = Phi(x)^2",
            n=1, m=2,
            components=[dto.ExprComponentSpec(src="z1 - x1"), dto.ExprComponentSpec(src="z2 - x1")],
            reference_x=[1.0],
        ),
        dto.ProblemSpec(
            name="duplicated",
            description="g = max(z1 - x1, z1 - x1); ties on every finite direction",
            n=1, m=2,
            components=[dto.ExprComponentSpec(src="z1 - x1"), dto.ExprComponentSpec(src="z1 - x1")],
            reference_x=[1.0],
        ),
        dto.ProblemSpec(
            name="nonlipschitz_example",
            description="g = alpha(x) exp(h(z1)) + z2 - 1; phi is not locally Lipschitz at 0",
            n=1, m=2,
            components=[dto.NonLipschitzExampleSpec()],
            reference_x=[0.0],
        ),
    ]


class ProblemRegistry:
    def __init__(self, version: str = CORPUS_VERSION):
        self.version = version
        self._problems: dict[str, dto.ProblemSpec] = {}
        self._lock = asyncio.Lock()
        for spec in corpus_specs():
            self._problems[spec.name] = spec

    async def register_problem(self, spec: dto.ProblemSpec) -> bool:
        """
        Register a problem in the registry.

        Args:
            spec: The problem to register; it must carry a name

        Returns:
            True if the problem was registered, False if the name is taken
        """
        if not spec.name:
            raise ValueError("Only named problems can be registered")
        async with self._lock:
            if spec.name in self._problems:
                return False
            self._problems[spec.name] = spec
            return True

    async def is_registered(self, name: str) -> bool:
        async with self._lock:
            return name in self._problems

    async def list_problems(self) -> List[str]:
        async with self._lock:
            return list(self._problems)

    async def get_problem(self, name: str) -> dto.ProblemSpec:
        """
        Get a registered problem by name.

        Raises:
            KeyError: If the problem is not registered
        """
        async with self._lock:
            if name not in self._problems:
                raise KeyError(f"Problem {name} not found in corpus version {self.version}. "
                               f"Known problems: {', '.join(self._problems)}")
            return self._problems[name].model_copy(deep=True)


problem_registry = ProblemRegistry()
