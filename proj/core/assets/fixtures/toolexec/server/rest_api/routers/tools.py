"""HTTP routes for tool management and ad-hoc tool execution."""

from fastapi import APIRouter, HTTPException

from server.schemas.tool import ToolRunRequest, ToolRunResult, validate_tool_source
from server.services.tool_sandbox import ToolSandbox

router = APIRouter(prefix="/v1/tools", tags=["tools"])


@router.post("/run", response_model=ToolRunResult)
def run_tool_from_source(request: ToolRunRequest) -> ToolRunResult:
    """Run a tool supplied inline, without registering it first."""
    function_name = validate_tool_source(request.source_code, request.name)
    sandbox = ToolSandbox(
        tool_name=function_name,
        source_code=request.source_code,
        args=request.args,
        env_vars=request.env_vars or {},
    )
    try:
        return sandbox.run()
    except SyntaxError as exc:
        raise HTTPException(status_code=400, detail=f"could not compile tool: {exc}")
