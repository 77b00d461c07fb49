"""Local execution of user-supplied tool code."""

import os
import tempfile
from typing import Any, Dict

from server.schemas.tool import ToolRunResult


class ToolSandbox:
    def __init__(self, tool_name: str, source_code: str, args: Dict[str, Any], env_vars: Dict[str, str]):
        self.tool_name = tool_name
        self.source_code = source_code
        self.args = args
        self.env_vars = env_vars

    def run(self) -> ToolRunResult:
        temp_file_path = self._write_source()
        try:
            return self._run_local(temp_file_path)
        finally:
            os.unlink(temp_file_path)

    def _write_source(self) -> str:
        fd, path = tempfile.mkstemp(suffix=".py")
        with os.fdopen(fd, "w", encoding="utf-8") as f:
            f.write(self.source_code)
        return path

    def _run_local(self, temp_file_path: str) -> ToolRunResult:
        globals_dict: Dict[str, Any] = {"__name__": "__tool__"}
        os.environ.update(self.env_vars)
        with open(temp_file_path, "r", encoding="utf-8") as f:
            source = f.read()
        code_obj = compile(source, temp_file_path, "exec")
        exec(code_obj, globals_dict)
        result = globals_dict[self.tool_name](**self.args)
        return ToolRunResult(status="success", func_return=result)
