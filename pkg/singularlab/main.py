from fastapi import FastAPI
from singularlab.routers.flow import router as flow
from singularlab.routers.dioph import router as dioph
from singularlab.routers.subspace import router as subspace
from singularlab.routers.experiment import router as experiment

app = FastAPI()
app.include_router(router=flow)
app.include_router(router=dioph)
app.include_router(router=subspace)
app.include_router(router=experiment)


@app.get("/")
async def echo(message: str = "singularlab: lattice dynamics and singular vectors"):
    return {"message": message}
