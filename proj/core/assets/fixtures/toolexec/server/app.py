"""Application entry point."""

from fastapi import FastAPI

from server.rest_api.routers import tools

app = FastAPI(title="Agent Tool Server", openapi_url="/openapi.json")
app.include_router(tools.router)


@app.get("/v1/health")
def health() -> dict:
    return {"status": "ok"}
