import math

import pytest

from spheric_radial.models.errors import OutOfRange, SlaterViolation
from spheric_radial.service.estimators import EstimatorService, EstimatorServiceParams
from spheric_radial.service.nonlipschitz_example import (example_model, example_phi_closed_form, example_problem,
                                                         example_system, nonsmoothness_witness, witness_epsilon)
from spheric_radial.utils.distributions import normal_cdf

from .conftest import config

PHI_ONE = 0.8413447460685429
GRID = [1e-1, 1e-2, 1e-3, 1e-4]


def test_system_at_origin():
    system = example_system()
    assert system.value([0.0], [0.0, 0.0]) == -1.0
    assert system.value([-2.0], [5.0, 0.25]) == -0.75
    assert example_model().dim == 2
    assert example_problem().spec.reference_x == [0.0]


def test_epsilon():
    assert witness_epsilon() == pytest.approx(normal_cdf(1.0) - normal_cdf(1.0 - math.exp(-1.0)), rel=1e-15)
    assert witness_epsilon() == pytest.approx(0.10497, abs=1e-4)


@pytest.mark.parametrize("t", [-1.0, -0.1, 0.0])
def test_closed_form_is_constant_for_nonpositive_levels(t):
    assert example_phi_closed_form(t) == pytest.approx(PHI_ONE, abs=1e-6)


def test_closed_form_is_continuous_from_the_right():
    gaps = [PHI_ONE - example_phi_closed_form(t) for t in (1e-2, 1e-3, 1e-4)]
    assert all(gap > 0.0 for gap in gaps)
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[2] < 0.05


def test_closed_form_rejects_bad_tolerance():
    with pytest.raises(ValueError):
        example_phi_closed_form(0.1, quad_tol=0.0)


def test_witness_table():
    table = nonsmoothness_witness(reversed(GRID))
    assert [row.t for row in table.rows] == GRID
    assert table.phi_zero == pytest.approx(PHI_ONE, abs=1e-12)
    assert table.epsilon == pytest.approx(witness_epsilon())
    for row in table.rows:
        assert row.phi_gap >= row.eps_sqrt_t
        assert row.ratio == pytest.approx(row.phi_gap / row.t)
    ratios = [row.ratio for row in table.rows]
    assert all(later > earlier for earlier, later in zip(ratios, ratios[1:]))
    assert table.gap_bound_holds
    assert table.ratio_diverges


def test_witness_table_csv():
    lines = nonsmoothness_witness([0.1, 0.01]).to_csv().splitlines()
    assert lines[0] == "t,phi_gap,eps_sqrt_t,ratio"
    assert len(lines) == 3
    assert lines[1].startswith("0.1,")


@pytest.mark.parametrize("grid", [[], [0.0], [-0.1, 0.1], [1.0], [0.5, 2.0]])
def test_witness_grid_must_lie_in_unit_interval(grid):
    with pytest.raises(OutOfRange):
        nonsmoothness_witness(grid)


@pytest.mark.parametrize("t", [-1.0, -0.5, -0.1, 0.0, 0.1, 0.3])
async def test_spheric_radial_matches_closed_form(t):
    problem = example_problem()
    service = EstimatorService(EstimatorServiceParams(problem.system, problem.model, config(samples=2 ** 14)))
    estimate = await service.estimate_probability([t])
    assert abs(estimate.value - example_phi_closed_form(t)) <= max(2e-3, 3.0 * estimate.stderr)


async def test_no_slater_point_beyond_threshold():
    # α(t) e^{h(0)} = t² · 16/e reaches 1 at t ≈ 0.41
    problem = example_problem()
    service = EstimatorService(EstimatorServiceParams(problem.system, problem.model, config(samples=64)))
    with pytest.raises(SlaterViolation):
        await service.estimate_probability([0.5])
    oracle = await service.oracle_probability_mc([0.5], 100_000, seed=5)
    assert abs(oracle.value - example_phi_closed_form(0.5)) <= 3.0 * oracle.stderr + 1e-9
