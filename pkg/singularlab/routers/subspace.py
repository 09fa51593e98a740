from fastapi import APIRouter, Depends

from singularlab.config import Config
from singularlab.dependencies.config import get_config
from singularlab.routers.tools import domain_errors, parse_fraction, parse_matrix, resolve_config
from singularlab.schemas.schemas_subspace import Check2StarRequest, ConditionReportOut, Main3Out, Main3Request
from singularlab.subspace import ConditionQuery, SubspaceParam, condition_check, theorem_main3_pipeline

router = APIRouter(prefix="/subspace")


@router.post("/check2star", response_model=ConditionReportOut)
async def check_two_star(request: Check2StarRequest, config: Config = Depends(get_config)):
    """
    Check the no-small-solution condition for L_A on every (Q, j) cell of the horizon.

    Args:
        request (Check2StarRequest): The parametrizing matrix A, c, schedule, grades, projection and mode.
        config (Config): The injected run configuration.

    Returns:
        ConditionReportOut: SATISFIED, VIOLATED or INCONCLUSIVE, per-cell tables and certificates.

    Raises:
        HTTPException: 413 with BOX_OVERFLOW when a cell exceeds the enumeration budget.
    """
    with domain_errors():
        config = resolve_config(config, request.c, request.schedule)
        query = ConditionQuery(
            param=SubspaceParam.from_matrix(parse_matrix(request.A, config.precision_bits)),
            c=config.c,
            schedule=config.schedule,
            j_range=request.j_range,
            projection=request.projection,
            mode=request.mode,
            omega=parse_fraction(request.omega),
            onset_fraction=config.onset_fraction,
            sensitivity=request.sensitivity,
        )
        report = condition_check(query, config)

    return report.to_json()


@router.post("/main3", response_model=Main3Out)
async def run_main3(request: Main3Request, config: Config = Depends(get_config)):
    """
    Run the reduction chain for A whose rows or columns are rational multiples of one.

    Args:
        request (Main3Request): The parametrizing matrix A, and optional c and schedule.
        config (Config): The injected run configuration.

    Returns:
        Main3Out: The shape, every step with its status, the consistency flag and the conclusion.

    Raises:
        HTTPException: 400 with NOT_APPLICABLE when A has neither shape.
    """
    with domain_errors():
        config = resolve_config(config, request.c, request.schedule)
        P = SubspaceParam.from_matrix(parse_matrix(request.A, config.precision_bits))
        report = theorem_main3_pipeline(P, config.c, config.schedule, config)

    return report.to_json()
