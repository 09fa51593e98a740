from fastapi import APIRouter, Depends

from singularlab.config import Config
from singularlab.dependencies.config import get_config
from singularlab.dioph import SingularityQuery, omega_hat_estimate, singular_test
from singularlab.numeric import parse_scalar
from singularlab.routers.tools import domain_errors, parse_fraction, parse_matrix, resolve_config
from singularlab.schemas.schemas_dioph import HorizonVerdictOut, OmegaHatOut, OmegaHatRequest, SingularTestRequest

router = APIRouter(prefix="/dioph")


@router.post("/singular-test", response_model=HorizonVerdictOut)
async def run_singular_test(request: SingularTestRequest, config: Config = Depends(get_config)):
    """
    Test ||Aq + p|| < c / Q^omega on the Q schedule and aggregate the horizon verdict.

    Args:
        request (SingularTestRequest): The matrix A, the constant c and optional schedule, omega and box factor.
        config (Config): The injected run configuration.

    Returns:
        HorizonVerdictOut: WITNESSED, REFUTED or INCONCLUSIVE with every per-Q record.

    Raises:
        HTTPException: 422 for malformed input, 400 for other domain errors.
    """
    with domain_errors():
        config = resolve_config(config, schedule=request.schedule)
        query = SingularityQuery(
            matrix=parse_matrix(request.matrix, config.precision_bits),
            c=parse_scalar(request.c),
            schedule=config.schedule,
            omega=parse_fraction(request.omega),
            box_factor=parse_scalar(request.box_factor) if request.box_factor else None,
            onset_fraction=config.onset_fraction,
        )
        verdict = singular_test(query, config)

    return verdict.to_json()


@router.post("/omega-hat", response_model=OmegaHatOut)
async def estimate_omega_hat(request: OmegaHatRequest, config: Config = Depends(get_config)):
    """
    Estimate the uniform exponent of A as the schedule-tail infimum of -log(err) / log(Q).

    Args:
        request (OmegaHatRequest): The matrix A and an optional schedule.
        config (Config): The injected run configuration.

    Returns:
        OmegaHatOut: Per-Q estimates, the tail summary and the onset index.

    Raises:
        HTTPException: 400 with RATIONAL_DEGENERATE when an exact solution makes the exponent infinite.
    """
    with domain_errors():
        config = resolve_config(config, schedule=request.schedule)
        report = omega_hat_estimate(parse_matrix(request.matrix, config.precision_bits), config.schedule, config)

    return report.to_json()
