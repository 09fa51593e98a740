"""
Command-line entry point: ``singularlab <subcommand>`` or ``python -m singularlab``.

Results go to stdout (or ``--output``) as deterministic JSON embedding the
resolved config, the version and the horizon; wall-clock lives in the
``<output>.run.json`` sidecar.
"""
import json
import logging
import sys
import time
from datetime import datetime, timezone
from fractions import Fraction
from itertools import combinations, product
from pathlib import Path

import click
from tqdm import tqdm

from settings import settings
from singularlab import __version__
from singularlab.config import Config, configure_logging, load_config
from singularlab.dioph import (
    SingularityQuery, best_affine_approx, cf_oracle, omega_hat_estimate, singular_test,
)
from singularlab.exceptions import InputError, RationalDegenerate, SingularLabError
from singularlab.experiment import (
    CurveSampler, SurveyReport, SurveySpec, UniformSampler, compare_surveys, run_survey,
)
from singularlab.exterior import (
    MultiVector, c_decompose, flow_action, flow_matrix, matrix_action, project_pi, wedge,
)
from singularlab.flow import FlowParams, delta_profile
from singularlab.numeric import parse_scalar, quad
from singularlab.subspace import (
    ConditionQuery, SubspaceParam, condition_check, everything_witness, lastp_identity, theorem_main3_pipeline,
)

logger = logging.getLogger(__name__)


def parse_matrix_text(text: str, prec: int) -> tuple:
    """
    Inline grammar ``"a,b;c,d"`` (rows split on ';', entries on ','), or a
    path to a JSON file holding a list of rows or ``{"A": rows}``.
    """
    path = Path(text)
    if text.endswith(".json") and path.is_file():
        payload = json.loads(path.read_text())
        rows = payload.get("A", payload.get("matrix")) if isinstance(payload, dict) else payload
        if not isinstance(rows, list) or not rows or not all(isinstance(row, list) for row in rows):
            raise InputError(f"{path} must hold a list of rows")
        return tuple(tuple(parse_scalar(str(x), prec) for x in row) for row in rows)
    rows = [row for row in text.split(";") if row.strip()]
    if not rows:
        raise InputError("empty matrix")
    return tuple(tuple(parse_scalar(x, prec) for x in row.split(",")) for row in rows)


def parse_vector_text(text: str, prec: int) -> tuple:
    rows = parse_matrix_text(text, prec)
    if len(rows) != 1:
        raise InputError("expected a single vector, got a matrix")
    return rows[0]


def parse_schedule(text: str | None) -> list[int] | None:
    if text is None:
        return None
    try:
        return [int(part) for part in text.replace(";", ",").split(",") if part.strip()]
    except ValueError as exc:
        raise InputError(f"cannot parse schedule {text!r}") from exc


def _rational(text: str | None) -> Fraction | None:
    if text is None:
        return None
    value = parse_scalar(text)
    if not isinstance(value, Fraction):
        raise InputError(f"{text!r} must be rational")
    return value


def _resolve(ctx: click.Context, **overrides) -> Config:
    return load_config(ctx.obj["config_path"], threads=ctx.obj["threads"], **overrides)


def _dump(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, indent=2, separators=(",", ": "))


def emit(result: dict, config: Config, horizon: dict, output: str | None, started: float):
    """Write the result with config, version and horizon embedded; add the wall-clock sidecar."""
    document = {"result": result, "config": config.model_dump(mode="json"), "version": __version__,
                "horizon": horizon}
    if output is None:
        click.echo(_dump(document))
        return
    target = Path(output)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(_dump(document) + "\n")
    if config.record_wallclock:
        finished = time.time()
        manifest = {
            "output": str(target),
            "config": config.model_dump(mode="json"),
            "version": __version__,
            "horizon": horizon,
            "started": datetime.fromtimestamp(started, timezone.utc).isoformat(),
            "finished": datetime.fromtimestamp(finished, timezone.utc).isoformat(),
            "elapsed_seconds": round(finished - started, 3),
        }
        Path(f"{target}.run.json").write_text(_dump(manifest) + "\n")
    click.echo(f"wrote {target}")


@click.group()
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="Plain-text KEY=value run config (falls back to SINGULARLAB_CONFIG).")
@click.option("--threads", type=click.IntRange(min=1), default=None, help="Worker thread budget.")
@click.option("--verbose", is_flag=True, help="Log per-item detail.")
@click.version_option(__version__, prog_name="singularlab")
@click.pass_context
def cli(ctx, config_path, threads, verbose):
    """Lattice dynamics and singular vectors at desk scale."""
    configure_logging(verbose)
    ctx.obj = {"config_path": config_path, "threads": threads}


@cli.command("delta-profile")
@click.option("--x", "x_text", required=True, help='Point x, e.g. "sqrt(2)" or "1/3,2/5".')
@click.option("--n", "n", type=click.IntRange(min=1), default=None, help="Dimension check for x.")
@click.option("--k-max", "--kmax", "k_max", type=click.IntRange(min=1), default=None)
@click.option("--eps", default=None, help="Decay threshold (rational).")
@click.option("--base", default=None, help="Flow base b > 1.")
@click.option("--csv", "csv_path", type=click.Path(), default=None, help="Plot-ready CSV output.")
@click.option("-o", "--output", "--out", "output", type=click.Path(), default=None)
@click.pass_context
def delta_profile_command(ctx, x_text, n, k_max, eps, base, csv_path, output):
    """delta(g_k u_x Z^{n+1}) for k = 0..k_max and the divergence verdict."""
    started = time.time()
    if output and output.endswith(".csv") and not csv_path:
        csv_path, output = output, None
    config = _resolve(ctx, k_max=k_max, eps=_rational(eps), flow_base=_rational(base))
    x = parse_vector_text(x_text, config.precision_bits)
    if n is not None and n != len(x):
        raise InputError(f"--n {n} does not match x of length {len(x)}")
    profile = delta_profile(x, FlowParams.from_config(len(x), config), config)
    if csv_path:
        with open(csv_path, "w", newline="") as stream:
            profile.write_csv(stream)
    emit(profile.to_json(), config, profile.horizon, output, started)


def _matrix_option(x_text, matrix_text, prec):
    if (x_text is None) == (matrix_text is None):
        raise click.UsageError("give exactly one of --x and --matrix")
    if x_text is not None:
        return (parse_vector_text(x_text, prec),)
    return parse_matrix_text(matrix_text, prec)


def _schedule_to(config: Config, qmax: int | None) -> list[int]:
    if qmax is None:
        return list(config.schedule)
    schedule = [Q for Q in config.schedule if Q < qmax]
    return schedule + [qmax]


@cli.command("singular-test")
@click.option("--x", "x_text", default=None, help="Vector x (the 1 x n matrix [x], omega = n).")
@click.option("--matrix", "matrix_text", default=None, help='Matrix A, e.g. "sqrt(2),1/3;0,1".')
@click.option("--c", "c_text", required=True, help="Constant c > 0.")
@click.option("--qmax", type=click.IntRange(min=1), default=None, help="Cut the schedule at this Q.")
@click.option("--schedule", "--qschedule", "schedule_text", default=None, help="Comma-separated Q schedule.")
@click.option("--omega", default=None, help="Exponent (defaults to columns / rows).")
@click.option("--box-factor", default=None, help="Use the strict box ||q|| < box_factor * Q.")
@click.option("-o", "--output", "--out", "output", type=click.Path(), default=None)
@click.pass_context
def singular_test_command(ctx, x_text, matrix_text, c_text, qmax, schedule_text, omega, box_factor, output):
    """Horizon verdict for ||Aq + p|| < c / Q^omega."""
    started = time.time()
    config = _resolve(ctx, schedule=parse_schedule(schedule_text))
    A = _matrix_option(x_text, matrix_text, config.precision_bits)
    query = SingularityQuery(
        matrix=A,
        c=parse_scalar(c_text),
        schedule=_schedule_to(config, qmax),
        omega=_rational(omega),
        box_factor=parse_scalar(box_factor) if box_factor else None,
        onset_fraction=config.onset_fraction,
    )
    verdict = singular_test(query, config)
    emit(verdict.to_json(), config, verdict.horizon, output, started)


@cli.command("omega-hat")
@click.option("--x", "x_text", default=None)
@click.option("--matrix", "matrix_text", default=None)
@click.option("--schedule", "--qschedule", "schedule_text", default=None)
@click.option("-o", "--output", "--out", "output", type=click.Path(), default=None)
@click.pass_context
def omega_hat_command(ctx, x_text, matrix_text, schedule_text, output):
    """Horizon estimate of the uniform exponent."""
    started = time.time()
    config = _resolve(ctx, schedule=parse_schedule(schedule_text))
    A = _matrix_option(x_text, matrix_text, config.precision_bits)
    try:
        report = omega_hat_estimate(A, config.schedule, config)
    except RationalDegenerate as exc:
        click.echo(_dump({**exc.to_dict(), "estimates": [
            {"Q": Q, "omega": str(w)} for Q, w in exc.estimates
        ]}), err=True)
        raise
    emit(report.to_json(), config, {"schedule": list(config.schedule), "onset": report.onset}, output, started)


@cli.command("check2star")
@click.option("--A", "a_text", required=True, help='Parametrizing matrix, e.g. "sqrt(2);sqrt(3)".')
@click.option("--c", "c_text", default=None)
@click.option("--schedule", "--qschedule", "schedule_text", default=None)
@click.option("--j", "j_values", type=int, multiple=True, help="Grades to check (default 1..n-s).")
@click.option("--projection", type=click.Choice(["pi_bullet", "pi"]), default="pi_bullet")
@click.option("--mode", type=click.Choice(["two_star", "omega"]), default="two_star")
@click.option("--omega", default=None)
@click.option("--sensitivity", is_flag=True, help="Report conservative box sizes for constants 1 and 2.")
@click.option("-o", "--output", "--out", "output", type=click.Path(), default=None)
@click.pass_context
def check2star_command(ctx, a_text, c_text, schedule_text, j_values, projection, mode, omega, sensitivity, output):
    """No-small-solution condition for L_A on every (Q, j) cell."""
    started = time.time()
    config = _resolve(ctx, c=_rational(c_text), schedule=parse_schedule(schedule_text))
    query = ConditionQuery(
        param=SubspaceParam.from_matrix(parse_matrix_text(a_text, config.precision_bits)),
        c=config.c,
        schedule=config.schedule,
        j_range=j_values or None,
        projection=projection,
        mode=mode,
        omega=_rational(omega),
        onset_fraction=config.onset_fraction,
        sensitivity=sensitivity,
    )
    report = condition_check(query, config)
    emit(report.to_json(), config, report.horizon, output, started)


@cli.command("main3")
@click.option("--A", "a_text", required=True)
@click.option("--c", "c_text", default=None)
@click.option("--schedule", "--qschedule", "schedule_text", default=None)
@click.option("-o", "--output", "--out", "output", type=click.Path(), default=None)
@click.pass_context
def main3_command(ctx, a_text, c_text, schedule_text, output):
    """Reduction chain for A with rationally dependent rows or columns."""
    started = time.time()
    config = _resolve(ctx, c=_rational(c_text), schedule=parse_schedule(schedule_text))
    P = SubspaceParam.from_matrix(parse_matrix_text(a_text, config.precision_bits))
    report = theorem_main3_pipeline(P, config.c, config.schedule, config)
    horizon = {"c": str(config.c), "schedule": list(config.schedule)}
    emit(report.to_json(), config, horizon, output, started)


@cli.command("survey")
@click.option("--A", "a_text", required=True)
@click.option("--samples", type=click.IntRange(min=1), required=True)
@click.option("--sampler", type=click.Choice(["uniform", "curve"]), default="uniform")
@click.option("--low", default="0")
@click.option("--high", default="1")
@click.option("--curve", "curve_text", default=None,
              help='Parameter polynomials, one per row, constant term first, e.g. "0,1".')
@click.option("--offset", "offset_text", default=None, help="Quadratic-irrational offset of the parameters.")
@click.option("--c", "c_text", default=None)
@click.option("--schedule", "--qschedule", "schedule_text", default=None)
@click.option("--seed", type=click.IntRange(min=0, max=2 ** 64 - 1), default=None)
@click.option("--csv", "csv_path", type=click.Path(), default=None)
@click.option("-o", "--output", "--out", "output", type=click.Path(), default=None)
@click.pass_context
def survey_command(ctx, a_text, samples, sampler, low, high, curve_text, offset_text, c_text, schedule_text,
                   seed, csv_path, output):
    """Classify sampled points of L_A at the horizon."""
    started = time.time()
    config = _resolve(ctx, c=_rational(c_text), schedule=parse_schedule(schedule_text), seed=seed)
    P = SubspaceParam.from_matrix(parse_matrix_text(a_text, config.precision_bits))
    offset = parse_vector_text(offset_text, config.precision_bits) if offset_text else None
    if sampler == "curve":
        polys = parse_matrix_text(curve_text, config.precision_bits) if curve_text else [["0", "1"]] * P.s
        chosen = CurveSampler.along(P, polys, low=_rational(low), high=_rational(high), offset=offset)
    else:
        chosen = UniformSampler(_rational(low), _rational(high), offset)
    spec = SurveySpec.from_config(P, chosen, samples, config)

    if settings.CELERY_BROKER_URL:
        from singularlab.tasks import run_survey_distributed
        report = run_survey_distributed(spec, config)
    else:
        with tqdm(total=samples, desc="survey", file=sys.stderr, disable=None) as bar:
            report = run_survey(spec, config, progress=bar.update)
    if csv_path:
        with open(csv_path, "w", newline="") as stream:
            report.write_csv(stream)
    emit(report.to_json(), config, report.horizon, output, started)


@cli.command("compare")
@click.argument("first", type=click.Path(exists=True))
@click.argument("second", type=click.Path(exists=True))
@click.option("--tolerance", default=None, help="Flag deltas above this (default survey_tolerance).")
@click.pass_context
def compare_command(ctx, first, second, tolerance):
    """Per-verdict fraction deltas between two survey outputs."""
    started = time.time()
    config = _resolve(ctx)
    reports = []
    for path in (first, second):
        payload = json.loads(Path(path).read_text())
        reports.append(SurveyReport.from_json(payload.get("result", payload)))
    diff = compare_surveys(*reports, tolerance=_rational(tolerance), config=config)
    emit(diff.to_json(), config, diff.horizon, None, started)


def _suite(checks) -> dict:
    checked = failures = 0
    for ok in checks:
        checked += 1
        failures += not ok
    return {"checked": checked, "failures": failures}


def _small_multivectors(dim: int, grade: int, values=(-1, 0, 1)):
    index_sets = list(combinations(range(dim), grade))
    for coeffs in product(values, repeat=len(index_sets)):
        yield MultiVector(dim, grade, dict(zip(index_sets, coeffs)))


def _sides_agree(pair) -> bool:
    return pair[0] == pair[1]


def _exact_witness(found) -> bool:
    return found is not None and found.certified and found.error == 0


def run_selftest(config: Config) -> dict:
    """Small exhaustive oracle suites; every suite must report zero failures."""
    sqrt2 = quad(0, 1, 2)
    xs = [Fraction(0), Fraction(1, 2), Fraction(-1, 3)]
    suites = {}
    suites["flow_action"] = _suite(
        flow_action(w, x, k) == matrix_action(flow_matrix(n, k, 2, x), w)
        for n in (1, 2)
        for grade in range(1, n + 2)
        for w in _small_multivectors(n + 1, grade)
        for x in product(xs, repeat=n)
        for k in (0, 1)
    )
    e0 = {n: MultiVector.basis(n + 1, (0,)) for n in (1, 2)}
    suites["reconstruction"] = _suite(
        wedge(e0[n], c_decompose(w).parts[0]) + project_pi(w) == w
        for n in (1, 2)
        for grade in range(1, n + 2)
        for w in _small_multivectors(n + 1, grade)
    )
    suites["cf_oracle"] = _suite(
        best_affine_approx(((sqrt2,),), Q, config).err == cf_oracle(sqrt2, Q)[2] for Q in range(1, 101)
    )
    zero_row = SubspaceParam(2, 1, ((Fraction(0),), (Fraction(1, 2),)))
    suites["lastp"] = _suite(
        _sides_agree(lastp_identity(zero_row, w))
        for grade in (1, 2)
        for w in _small_multivectors(3, grade)
        if not w.is_zero()
    )
    rational = SubspaceParam.from_matrix(((Fraction(1, 2),), (Fraction(1, 3),)))
    suites["everything"] = _suite(
        _exact_witness(everything_witness(rational, (x,), 6, config.c, config))
        for x in xs
    )
    return suites


@cli.command("selftest")
@click.pass_context
def selftest_command(ctx):
    """Exhaustive small-case oracle suites."""
    started = time.time()
    config = _resolve(ctx)
    suites = run_selftest(config)
    emit(suites, config, {}, None, started)
    failed = [name for name, result in suites.items() if result["failures"]]
    if failed:
        raise click.ClickException(f"selftest failures in: {', '.join(failed)}")


def main(argv=None) -> int:
    """Run the CLI and map errors to exit codes: 1 input or domain, 2 budget overflow."""
    try:
        cli.main(args=argv, prog_name="singularlab", standalone_mode=False)
    except SingularLabError as exc:
        click.echo(_dump(exc.to_dict()), err=True)
        return exc.exit_code
    except click.exceptions.Abort:
        click.echo("Aborted!", err=True)
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    return 0
