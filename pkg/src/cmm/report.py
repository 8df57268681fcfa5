"""Machine-readable report records."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np

VERSION = "0.1.0"


def jsonable(obj: Any) -> Any:
    """Convert numpy scalars/arrays, tuples, complex numbers and dict keys to JSON types."""
    if isinstance(obj, dict):
        return {str(k) if not isinstance(k, str) else k: jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else str(f)
    if isinstance(obj, (complex, np.complexfloating)):
        z = complex(obj)
        return [z.real, z.imag]
    if obj is None or isinstance(obj, str):
        return obj
    if hasattr(obj, "to_dict"):
        return jsonable(obj.to_dict())
    return repr(obj)


@dataclass
class ReportRecord:
    """One command invocation: what went in and what came out."""

    model_digest: str
    command: str
    inputs: dict
    outputs: Any
    version: str = VERSION
    seed: int | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        self.inputs = jsonable(self.inputs)
        self.outputs = jsonable(self.outputs)
        self.extra = jsonable(self.extra)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "ReportRecord":
        return cls(**json.loads(text))
