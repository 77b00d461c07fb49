"""Request and response models for tool execution."""

import ast
from typing import Any, Dict, List, Optional

from fastapi import HTTPException
from pydantic import BaseModel


class ToolRunRequest(BaseModel):
    source_code: str
    args: Dict[str, Any]
    name: str
    json_schema: Dict[str, Any]
    env_vars: Optional[Dict[str, str]] = None
    source_type: Optional[str] = "python"
    args_json_schema: Optional[Dict[str, Any]] = None


class ToolRunResult(BaseModel):
    status: str
    func_return: Optional[Any] = None
    stdout: List[str] = []
    stderr: List[str] = []


def validate_tool_source(source_code: str, name: str) -> str:
    """Return the function defined in source_code, enforcing tool conventions."""
    tree = ast.parse(source_code)
    functions = [n for n in tree.body if isinstance(n, ast.FunctionDef)]
    if not functions:
        raise HTTPException(status_code=400, detail="source_code must define a function")
    func = functions[0]
    if func.name != name:
        raise HTTPException(
            status_code=400,
            detail=f"tool name '{name}' does not match function '{func.name}' defined in source_code",
        )
    if ast.get_docstring(func) is None:
        raise HTTPException(status_code=400, detail=f"function {func.name} is missing a docstring")
    return func.name
