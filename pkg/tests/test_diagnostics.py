import math

import numpy as np
import pytest

from spheric_radial.dto import dto
from spheric_radial.models import enums
from spheric_radial.service import diagnostics
from spheric_radial.service.diagnostics import DiagnosticsService, DiagnosticsServiceParams
from spheric_radial.service.estimators import CONE_TERM_NONTRIVIAL, CONE_TERM_ZERO
from spheric_radial.utils.distributions import normal_cdf
from spheric_radial.utils.gaussian_model import build_model
from spheric_radial.utils.radial.sphere_sampler import sample_qmc

from .conftest import config, corpus_problem, make_problem

WITNESS_RATIO = 2.0 * math.exp(-1.0 - 4.0 * math.log(1.0 - normal_cdf(1.0))) / math.exp(0.5)


def _service(problem, **overrides) -> DiagnosticsService:
    settings = config(samples=1024, growth_probes=300, **overrides)
    return DiagnosticsService(DiagnosticsServiceParams(problem.system, problem.model, settings))


def test_slater_check():
    system = corpus_problem("half_space").system
    assert diagnostics.check_slater(system, [1.0]).model_dump() == {"ok": True, "value": -1.0, "component": 0}
    failed = diagnostics.check_slater(system, [0.0])
    assert not failed.ok
    assert failed.value == 0.0
    slab = diagnostics.check_slater(corpus_problem("slab").system, [-0.5])
    assert (slab.ok, slab.value) == (False, 0.5)
    assert diagnostics.check_slater(corpus_problem("nonlipschitz_example").system, [0.0]).value == -1.0


def test_growth_envelopes():
    assert diagnostics.growth_envelope(1.0, 1.0, 2, 1.0) == pytest.approx(math.exp(0.5))
    assert diagnostics.growth_envelope(2.0, 0.5, 2, 1.0) == pytest.approx(0.5 * 0.25 * math.exp(2.0))
    exponential = diagnostics.growth_envelope(2.0, 1.0, 2, 1.0, enums.GrowthEnvelope.EXPONENTIAL)
    assert exponential == pytest.approx(math.exp(2.0))


@pytest.mark.parametrize("name", ["half_space", "slab", "product_half_spaces", "ball"])
def test_growth_condition_holds_for_smooth_corpus(name):
    problem = corpus_problem(name)
    growth = diagnostics.check_growth(problem.system, problem.model, problem.spec.reference_x, 1.0, 500, 0)
    assert growth.ok
    assert growth.witness is None
    assert growth.worst_ratio < 1.0
    assert growth.probes == 500 + 3 * 4


def test_growth_condition_fails_for_nonlipschitz_example(nonlipschitz):
    growth = diagnostics.check_growth(nonlipschitz.system, nonlipschitz.model, [0.0], 1.0, 200, 0)
    assert not growth.ok
    witness = growth.witness
    assert witness.y == [1.0]
    assert witness.z == [1.0, 0.0]
    assert witness.component == 0
    assert witness.ratio == pytest.approx(WITNESS_RATIO, rel=1e-9)
    assert witness.ratio > 100.0
    assert growth.worst_ratio >= witness.ratio


def test_nice_directions_of_nonlipschitz_example(nonlipschitz):
    args = (nonlipschitz.system, nonlipschitz.model, [0.0])
    downhill = diagnostics.probe_nice_direction(*args, [-1.0], 1.0, 200, 0)
    assert downhill.ok
    assert downhill.worst_ratio == 0.0
    uphill = diagnostics.probe_nice_direction(*args, [1.0], 1.0, 200, 0)
    assert not uphill.ok
    assert uphill.witness.y == [1.0]
    assert uphill.witness.z == [1.0, 0.0]
    assert uphill.witness.ratio > 100.0


def test_nice_direction_must_be_nonzero(half_space):
    with pytest.raises(ValueError):
        diagnostics.probe_nice_direction(half_space.system, half_space.model, [1.0], [0.0], 1.0, 10, 0)


def test_k_star_and_constant_r():
    identity = build_model([0.0, 0.0], np.eye(2))
    assert diagnostics.k_star(identity) == pytest.approx(1.0)
    correlated = build_model([0.0, 0.0], [[1.0, 0.5], [0.5, 1.0]])
    assert diagnostics.k_star(correlated) == pytest.approx(2.0)
    assert diagnostics.constant_r(identity, 1.0, -1.0) == pytest.approx(2.0)
    assert diagnostics.constant_r(correlated, 0.5, -2.0) == pytest.approx(1.0)


@pytest.mark.parametrize("growth_ok,all_finite,ties,verdict", [
    (True, False, 0.0, enums.DifferentiabilityVerdict.STRICT_DIFFERENTIABLE),
    (False, True, 0.0, enums.DifferentiabilityVerdict.STRICT_DIFFERENTIABLE),
    (True, True, 0.25, enums.DifferentiabilityVerdict.LIPSCHITZ_ONLY),
    (False, False, 0.0, enums.DifferentiabilityVerdict.UNKNOWN),
])
def test_classify_differentiability(growth_ok, all_finite, ties, verdict):
    assert diagnostics.classify_differentiability(growth_ok, all_finite, ties) == verdict


async def test_full_report_for_half_space(half_space):
    report = await _service(half_space).run([1.0])
    assert report.slater.ok
    assert report.growth_ok
    assert report.convexity_ok
    assert report.gradient_check_error < 1e-6
    assert [probe.direction for probe in report.nice_directions] == [[1.0], [-1.0]]
    assert all(probe.ok for probe in report.nice_directions)
    assert report.bound.directions > 0
    assert report.bound.violations == 0
    assert report.bound.denominator_violations == 0
    assert report.tie_fraction == 0.0
    assert not report.all_directions_finite
    assert report.constant_r == pytest.approx(2.0)
    assert report.cone_term == CONE_TERM_ZERO
    assert report.differentiability_verdict == enums.DifferentiabilityVerdict.STRICT_DIFFERENTIABLE


async def test_ball_has_only_finite_directions():
    report = await _service(corpus_problem("ball")).run([0.0])
    assert report.all_directions_finite
    assert report.infinite_fraction == 0.0
    assert report.differentiability_verdict == enums.DifferentiabilityVerdict.STRICT_DIFFERENTIABLE


async def test_duplicated_constraint_is_lipschitz_only():
    report = await _service(corpus_problem("duplicated")).run([1.0])
    assert report.tie_fraction > 0.4
    assert report.differentiability_verdict == enums.DifferentiabilityVerdict.LIPSCHITZ_ONLY


async def test_nonlipschitz_example_report(nonlipschitz):
    report = await _service(nonlipschitz).run([0.0])
    assert report.slater.ok
    assert not report.growth_ok
    assert report.growth.witness.z == [1.0, 0.0]
    assert report.cone_term == CONE_TERM_NONTRIVIAL
    assert report.differentiability_verdict == enums.DifferentiabilityVerdict.UNKNOWN
    by_direction = {probe.direction[0]: probe.ok for probe in report.nice_directions}
    assert by_direction == {1.0: False, -1.0: True}


async def test_exponential_envelope_drops_the_ball_term():
    report = await _service(corpus_problem("ball")).run([0.0], envelope=enums.GrowthEnvelope.EXPONENTIAL)
    assert report.growth.envelope == enums.GrowthEnvelope.EXPONENTIAL
    assert report.growth_ok
    assert report.constant_r == 0.0


async def test_report_stops_after_slater_failure(half_space):
    report = await _service(half_space).run([0.0])
    assert not report.slater.ok
    assert report.growth is None
    assert report.nice_directions == []
    assert report.differentiability_verdict == enums.DifferentiabilityVerdict.UNKNOWN


async def test_custom_nice_directions_and_level():
    problem = make_problem(dto.ExprComponentSpec(src="z1 + z2 - 3*x1"))
    report = await _service(problem).run([1.0], level=0.5, directions=[[2.0]])
    assert [probe.direction for probe in report.nice_directions] == [[2.0]]
    assert report.growth.level == 0.5


async def test_module_level_wrapper_passes_the_envelope():
    problem = corpus_problem("ball")
    report = await diagnostics.run_diagnostics(
        problem.system, problem.model, [0.0], directions=[[1.0]], envelope=enums.GrowthEnvelope.EXPONENTIAL,
        config=config(growth_probes=100), sample=sample_qmc(2, 256),
    )
    assert report.growth.envelope == enums.GrowthEnvelope.EXPONENTIAL
    assert report.constant_r == 0.0
    assert report.bound is not None
    assert report.all_directions_finite
    assert [probe.direction for probe in report.nice_directions] == [[1.0]]
