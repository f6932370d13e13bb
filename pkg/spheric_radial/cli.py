import argparse
import asyncio
import csv
import io
import json
import math
import sys
from typing import List, Optional, Sequence, TextIO, Tuple

from pydantic import ValidationError

from . import __version__
from .dto import dto, dto_diagnostics
from .models import enums
from .models.errors import ConfigError, NumericalError, SlaterViolation, SphericRadialError
from .service import diagnostics, nonlipschitz_example
from .service.estimators import EstimatorService, EstimatorServiceParams
from .utils import logger_setup
from .utils.problem.loader import Problem, load_problem
from .utils.settings import AppSettings, settings

log = logger_setup.Logger(__name__)

_CSV_COMMANDS = (enums.Command.EVAL, enums.Command.GRAD, enums.Command.SUBDIFF, enums.Command.EXAMPLE)


class _ArgumentParser(argparse.ArgumentParser):
    """Flag errors become ConfigError so they share the input-error exit code."""

    def error(self, message: str):
        raise ConfigError(message)


def _floats(text: str, flag: str) -> List[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise ConfigError(f"{flag} expects comma-separated numbers, got {text!r}") from e


def _build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(
        prog="spheric-radial",
        description="Gaussian probability functions, gradients and subdifferentials via spheric-radial decomposition.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument(
        "command",
        choices=[c.value for c in enums.Command],
        help="eval: probability; grad: gradient; subdiff: tie-policy enclosure; oracle: direct MC and finite "
             "differences; check: regularity diagnostics; example: non-Lipschitz witness table",
    )
    parser.add_argument("--problem", type=str, help="Problem JSON file, or corpus:<name>")
    parser.add_argument("--x", type=str, help="Decision vector, e.g. \"1.0,0.5\" (default: the problem's reference_x)")
    parser.add_argument("--sampler", choices=[s.value for s in enums.SamplerKind], default=settings.sampler.value)
    parser.add_argument("--samples", type=int, default=settings.samples, help="Number of sphere directions N")
    parser.add_argument("--seed", type=int, default=settings.seed)
    parser.add_argument("--replicates", type=int, default=settings.replicates,
                        help="Independently scrambled QMC replicates (>= 2 reports the replicate spread as stderr)")
    parser.add_argument("--sequence", type=int, default=settings.sequence, help="QMC block offset")
    parser.add_argument("--format", choices=[f.value for f in enums.OutputFormat], default=None,
                        help="Output format (default: csv for example, json otherwise)")
    parser.add_argument("--l", type=float, default=settings.growth_level, dest="growth_level",
                        help="Growth level l for check and subdiff")
    parser.add_argument("--envelope", choices=[e.value for e in enums.GrowthEnvelope],
                        default=enums.GrowthEnvelope.NICE.value)
    parser.add_argument("--directions", type=str, default=None,
                        help="Nice-direction probes for check, ';'-separated vectors, e.g. \"1;-1\"")
    parser.add_argument("--policies", type=str, default=None,
                        help="Comma-separated tie policies for subdiff: lowest,highest,max,min")
    parser.add_argument("--oracle-samples", type=int, default=100_000)
    parser.add_argument("--workers", type=int, default=settings.workers)
    parser.add_argument("--t-grid", type=str, default=None, help="Witness grid for example, e.g. \"0.1,0.01\"")
    parser.add_argument("--tie-tolerance", type=float, default=None)
    parser.add_argument("--root-tolerance", type=float, default=None)
    parser.add_argument("--fd-step", type=float, default=None)
    parser.add_argument("--log-level", type=str, default=None)
    return parser


def parse_config(argv: Optional[Sequence[str]] = None) -> dto.RunConfig:
    args = _build_parser().parse_args(argv)
    values = dict(
        command=args.command,
        problem=args.problem,
        sampler=args.sampler,
        samples=args.samples,
        seed=args.seed,
        replicates=args.replicates,
        sequence=args.sequence,
        output_format=args.format,
        growth_level=args.growth_level,
        envelope=args.envelope,
        oracle_samples=args.oracle_samples,
        workers=args.workers,
        tie_tolerance=args.tie_tolerance,
        root_tolerance=args.root_tolerance,
        fd_step=args.fd_step,
        log_level=args.log_level,
    )
    if args.x is not None:
        values["x"] = _floats(args.x, "--x")
    if args.directions is not None:
        values["directions"] = [_floats(part, "--directions") for part in args.directions.split(";") if part.strip()]
    if args.policies is not None:
        values["policies"] = [part.strip() for part in args.policies.split(",") if part.strip()]
    if args.t_grid is not None:
        values["t_grid"] = _floats(args.t_grid, "--t-grid")
    try:
        return dto.RunConfig.model_validate(values)
    except ValidationError as e:
        raise ConfigError(f"Invalid arguments: {e}") from e


def _effective_settings(config: dto.RunConfig) -> AppSettings:
    effective = settings.model_copy(update=config.settings_overrides())
    if config.log_level:
        logger_setup.set_level(config.log_level)
    return effective


def _decision(config: dto.RunConfig, problem: Problem) -> List[float]:
    x = config.x if config.x is not None else problem.spec.reference_x
    if x is None:
        raise ConfigError(f"--x is required: problem {problem.name} has no reference_x")
    if len(x) != problem.spec.n:
        raise ConfigError(f"--x has {len(x)} entries, problem {problem.name} expects n={problem.spec.n}")
    if not all(math.isfinite(value) for value in x):
        raise ConfigError(f"--x must be finite, got {x}")
    return x


def _agree(first: dto.Estimate, second: dto.Estimate) -> bool:
    return abs(first.value - second.value) <= 3.0 * (first.stderr + second.stderr)


async def _execute(config: dto.RunConfig, effective: AppSettings) -> Tuple[object, int, Optional[List[float]]]:
    if config.command == enums.Command.EXAMPLE:
        for t in config.t_grid:
            if not 0.0 < t < 1.0:
                raise ConfigError(f"--t-grid values must lie in (0, 1), got {t}")
        return nonlipschitz_example.nonsmoothness_witness(config.t_grid, effective.quad_tolerance), 0, None

    problem = await load_problem(config.problem)
    x = _decision(config, problem)
    service = EstimatorService(EstimatorServiceParams(problem.system, problem.model, effective))

    if config.command == enums.Command.EVAL:
        return await service.estimate_probability(x), 0, x
    if config.command == enums.Command.GRAD:
        return await service.estimate_gradient(x), 0, x
    if config.command == enums.Command.SUBDIFF:
        slater = diagnostics.check_slater(service.standardized, x)
        if not slater.ok:
            raise SlaterViolation(slater.value, slater.component)
        growth = diagnostics.check_growth(service.standardized, problem.model, x, config.growth_level,
                                          effective.growth_probes, effective.seed, config.envelope, effective)
        radius = diagnostics.constant_r(problem.model, config.growth_level, slater.value)
        if config.envelope == enums.GrowthEnvelope.EXPONENTIAL:
            radius = 0.0
        enclosure = await service.estimate_subdifferential(x, policies=config.policies, growth=growth,
                                                           constant_r=radius)
        return enclosure, 0, x
    if config.command == enums.Command.ORACLE:
        probability = await service.oracle_probability_mc(x, config.oracle_samples, effective.seed)
        if not diagnostics.check_slater(service.standardized, x).ok:
            return dto.OracleReport(probability=probability), 0, x
        estimate = await service.estimate_probability(x)
        report = dto.OracleReport(probability=probability, spheric_radial=estimate,
                                  agreement=_agree(probability, estimate))
        if problem.system.smooth_in_x:
            report.gradient = await service.estimate_gradient(x)
            report.gradient_fd = await service.oracle_gradient_fd(x)
        return report, 0, x

    service = diagnostics.DiagnosticsService(diagnostics.DiagnosticsServiceParams(problem.system, problem.model,
                                                                                  effective))
    report = await service.run(x, config.growth_level, config.directions or None, config.envelope)
    return report, 0 if report.slater.ok else SlaterViolation.exit_code, x


def _estimate_rows(estimate: dto.Estimate) -> List[List[object]]:
    values = estimate.value if isinstance(estimate.value, list) else [estimate.value]
    errors = estimate.stderr if isinstance(estimate.stderr, list) else [estimate.stderr]
    return [[j, repr(v), repr(e), estimate.samples, estimate.sampler, repr(estimate.tie_fraction),
             repr(estimate.infinite_fraction)] for j, (v, e) in enumerate(zip(values, errors))]


def csv_provenance(provenance: dto.Provenance) -> str:
    """Provenance and effective settings as `# key=value` lines preceding the CSV table."""
    fields = provenance.model_dump(mode="json", by_alias=True, exclude={"settings"})
    fields.update(provenance.settings)
    return "".join(f"# {key}={value if isinstance(value, str) else json.dumps(value)}\n"
                   for key, value in fields.items())


def to_csv(result) -> str:
    if isinstance(result, dto_diagnostics.WitnessTable):
        return result.to_csv()
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    if isinstance(result, dto.Estimate):
        writer.writerow(["coordinate", "value", "stderr", "N", "sampler", "tie_fraction", "infinite_fraction"])
        writer.writerows(_estimate_rows(result))
    elif isinstance(result, dto.SubdiffEnclosure):
        writer.writerow(["policy", "selected_coordinate", "coordinate", "value", "stderr", "hull_lower", "hull_upper"])
        for gradient in result.policies:
            for j, (v, e) in enumerate(zip(gradient.value, gradient.stderr)):
                writer.writerow([gradient.policy.value, "" if gradient.coordinate is None else gradient.coordinate,
                                 j, repr(v), repr(e), repr(result.hull_lower[j]), repr(result.hull_upper[j])])
    else:
        raise ConfigError(f"csv output is not available for {type(result).__name__}")
    return buffer.getvalue()


def run(config: dto.RunConfig, out: Optional[TextIO] = None) -> int:
    """Execute one command and write its report; returns the process exit code."""
    out = out or sys.stdout
    try:
        output_format = config.resolved_format
        if output_format == enums.OutputFormat.CSV and config.command not in _CSV_COMMANDS:
            raise ConfigError(f"csv output is available for {', '.join(c.value for c in _CSV_COMMANDS)}")
        effective = _effective_settings(config)
        result, exit_code, x = asyncio.run(_execute(config, effective))
        try:
            report = dto.RunReport(
                provenance=dto.Provenance(
                    version=__version__,
                    command=config.command,
                    problem=config.problem,
                    x=x,
                    sampler=effective.sampler.value,
                    samples=effective.samples,
                    seed=effective.seed,
                    replicates=effective.replicates,
                    workers=effective.workers,
                    settings=effective.model_dump(mode="json"),
                ),
                result=result,
            )
        except ValidationError as e:
            raise NumericalError(f"Report rejected: {e}") from e
    except SphericRadialError as e:
        log.error(f"{config.command.value} failed: {e}")
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code

    if output_format == enums.OutputFormat.CSV:
        out.write(csv_provenance(report.provenance))
        out.write(to_csv(report.result))
    else:
        out.write(report.model_dump_json(by_alias=True, indent=2))
        out.write("\n")
    return exit_code


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        config = parse_config(argv)
    except SphericRadialError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
