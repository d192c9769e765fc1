import json
import math
from dataclasses import dataclass
from typing import Any, Dict, Optional


def _json_safe(value: Any) -> Any:
    """Non-finite floats become strings; JSON has no NaN or infinity."""
    if isinstance(value, float) and not math.isfinite(value):
        return "nan" if math.isnan(value) else ("inf" if value > 0 else "-inf")
    if isinstance(value, dict):
        return {key: _json_safe(v) for key, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    return value


@dataclass
class BaseResponse:
    """Base response model."""

    status: str
    command: Optional[str] = None
    message: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        result = {"status": self.status}
        if self.command is not None:
            result["command"] = self.command
        if self.message is not None:
            result["message"] = self.message
        return result

    def to_json(self) -> str:
        return json.dumps(_json_safe(self.to_dict()), indent=2)


@dataclass
class SuccessResponse(BaseResponse):
    """Result of a command."""

    status: str = "success"
    data: Optional[Dict[str, Any]] = None

    def to_dict(self) -> Dict[str, Any]:
        result = super().to_dict()
        if self.data is not None:
            result["data"] = self.data
        return result


@dataclass
class ErrorResponse(BaseResponse):
    """Failure of a command, printed on stderr."""

    status: str = "error"
    error_type: Optional[str] = None
    exit_code: int = 1

    def to_dict(self) -> Dict[str, Any]:
        result = super().to_dict()
        if self.error_type is not None:
            result["error_type"] = self.error_type
        result["exit_code"] = self.exit_code
        return result

    @classmethod
    def from_exception(cls, e: Exception, command: Optional[str], exit_code: int) -> "ErrorResponse":
        return cls(command=command, message=str(e), error_type=type(e).__name__, exit_code=exit_code)
