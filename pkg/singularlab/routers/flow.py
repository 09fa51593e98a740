from fastapi import APIRouter, Depends

from singularlab.config import Config
from singularlab.dependencies.config import get_config
from singularlab.flow import FlowParams, delta_profile
from singularlab.numeric import parse_scalar
from singularlab.routers.tools import domain_errors
from singularlab.schemas.schemas_flow import DeltaProfileOut, DeltaProfileRequest

router = APIRouter(prefix="/flow")


@router.post("/delta-profile", response_model=DeltaProfileOut)
async def compute_delta_profile(request: DeltaProfileRequest, config: Config = Depends(get_config)):
    """
    Compute the delta-profile of the trajectory g_k u_x Z^{n+1} for k = 0..k_max.

    Args:
        request (DeltaProfileRequest): The point x, and optional k_max, eps and flow base overrides.
        config (Config): The injected run configuration.

    Returns:
        DeltaProfileOut: Every delta_k with its shortest vector and the horizon classification.

    Raises:
        HTTPException: 422 for malformed scalars, 413 when the lattice exceeds the enumeration cap.
    """
    with domain_errors():
        # Resolving the flow parameters
        x = [parse_scalar(t, config.precision_bits) for t in request.x]
        params = FlowParams(
            n=len(x),
            base=parse_scalar(request.base) if request.base else config.flow_base,
            k_max=request.k_max or config.k_max,
            eps=parse_scalar(request.eps) if request.eps else config.eps,
        )

        # Computing the profile
        profile = delta_profile(x, params, config)

    return profile.to_json()
