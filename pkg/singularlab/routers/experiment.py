from fastapi import APIRouter, Depends

from singularlab.config import Config
from singularlab.dependencies.config import get_config
from singularlab.experiment import CurveSampler, SurveySpec, UniformSampler, run_survey
from singularlab.numeric import parse_scalar
from singularlab.routers.tools import domain_errors, parse_fraction, parse_matrix, resolve_config
from singularlab.schemas.schemas_experiment import SurveyOut, SurveyRequest
from singularlab.subspace import SubspaceParam

router = APIRouter(prefix="/experiment")


@router.post("/survey", response_model=SurveyOut)
async def survey(request: SurveyRequest, config: Config = Depends(get_config)):
    """
    Sample exact points on L_A and classify each with the horizon singularity test.

    Args:
        request (SurveyRequest): The parametrizing matrix A, the sampler, the sample count and horizon overrides.
        config (Config): The injected run configuration.

    Returns:
        SurveyOut: Per-sample verdicts and the aggregate fractions.

    Raises:
        HTTPException: 422 when the sampler is malformed or a curve leaves L_A.
    """
    with domain_errors():
        config = resolve_config(config, request.c, request.schedule)
        if request.seed is not None:
            config = config.merged(seed=request.seed)
        P = SubspaceParam.from_matrix(parse_matrix(request.A, config.precision_bits))

        # Building the sampler
        sampler_in = request.sampler
        offset = [parse_scalar(t) for t in sampler_in.offset] if sampler_in.offset else None
        low, high = parse_fraction(sampler_in.low), parse_fraction(sampler_in.high)
        if sampler_in.kind == "curve":
            polys = sampler_in.param_polys or [["0", "1"]] * P.s
            sampler = CurveSampler.along(P, polys, low=low, high=high, offset=offset)
        else:
            sampler = UniformSampler(low, high, offset)

        report = run_survey(SurveySpec.from_config(P, sampler, request.sample_count, config), config)

    return report.to_json()
