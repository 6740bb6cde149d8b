from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any


@dataclass
class Verdict:
    """Outcome of a check: a boolean plus whatever explains it."""

    ok: bool
    name: str = ""
    witness: Any = None
    detail: dict = field(default_factory=dict)
    certification: str | None = None

    def __bool__(self) -> bool:
        return self.ok

    def to_json(self) -> dict:
        out = {"name": self.name, "ok": self.ok}
        if self.witness is not None:
            out["witness"] = jsonable(self.witness)
        if self.detail:
            out["detail"] = jsonable(self.detail)
        if self.certification:
            out["certification"] = self.certification
        return out


def label(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, tuple):
        return "(" + ",".join(label(y) for y in x) + ")"
    return str(x)


def jsonable(x):
    if isinstance(x, Verdict):
        return x.to_json()
    if hasattr(x, "to_json"):
        return x.to_json()
    if isinstance(x, dict):
        return {label(k) if not isinstance(k, str) else k: jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, set, frozenset)):
        items = [jsonable(v) for v in x]
        if isinstance(x, (set, frozenset)):
            items.sort(key=lambda v: repr(v))
        return items
    if isinstance(x, (bool, int, float, str)) or x is None:
        return x
    return label(x)
