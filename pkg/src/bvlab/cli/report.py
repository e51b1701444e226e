"""Verification reports: structured checks, deterministic JSON and a
one-line-per-check human rendering."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from ..expr.polynomial import Polynomial
from ..expr.series import HbarSeries
from ..expr.variables import registry

SCHEMA = "bvlab.report/1"


def _poly_terms(p: Polynomial) -> list:
    by_id = registry.by_id
    rows = [[[by_id[v].text for v in mono], str(c)] for mono, c in p.terms.items()]
    rows.sort(key=lambda r: (len(r[0]), r[0], r[1]))
    return rows


def to_data(value: Any) -> Any:
    """JSON-ready form of polynomials, series and containers of them."""
    if isinstance(value, Polynomial):
        return {"text": value.to_text(), "terms": _poly_terms(value)}
    if isinstance(value, HbarSeries):
        return {
            "order": value.order,
            "coefficients": {str(k): to_data(value.coeffs[k]) for k in sorted(value.coeffs)},
        }
    if isinstance(value, dict):
        return {str(k): to_data(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_data(v) for v in value]
    if isinstance(value, (bool, int, str)) or value is None:
        return value
    return str(value)


def _render(value: Any) -> str:
    if isinstance(value, Polynomial):
        return value.to_text()
    if isinstance(value, HbarSeries):
        return " + ".join(f"hbar^{k}*({value.coeffs[k].to_text()})" for k in sorted(value.coeffs)) or "0"
    if isinstance(value, dict):
        return "{" + ", ".join(f"{k}: {_render(v)}" for k, v in value.items()) + "}"
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_render(v) for v in value) + "]"
    return str(value)


def _short(value: Any, limit: int = 160) -> str:
    text = _render(value)
    return text if len(text) <= limit else text[: limit - 3] + "..."


def _is_zero(value: Any) -> bool:
    if isinstance(value, (Polynomial, HbarSeries)):
        return not value
    if isinstance(value, dict):
        return all(_is_zero(v) for v in value.values())
    if isinstance(value, (list, tuple)):
        return all(_is_zero(v) for v in value)
    return not value


@dataclass
class Check:
    id: str
    passed: bool
    residual: Any = None
    detail: str = ""


@dataclass
class Report:
    command: str
    config: dict = field(default_factory=dict)
    inputs: list = field(default_factory=list)
    checks: list[Check] = field(default_factory=list)
    values: dict = field(default_factory=dict)

    def add_input(self, path: Path) -> None:
        digest = hashlib.sha256(Path(path).read_bytes()).hexdigest()
        self.inputs.append({"name": Path(path).name, "sha256": digest})

    def check(self, check_id: str, passed: bool | None = None, residual: Any = None, detail: str = "") -> bool:
        """Record a check; when ``passed`` is omitted the residual must vanish."""
        ok = _is_zero(residual) if passed is None else bool(passed)
        self.checks.append(Check(check_id, ok, residual, detail))
        return ok

    def value(self, key: str, value: Any) -> None:
        self.values[key] = value

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_json(self) -> str:
        from .. import __version__

        data = {
            "schema": SCHEMA,
            "version": __version__,
            "command": self.command,
            "inputs": self.inputs,
            "config": to_data(self.config),
            "checks": [
                {
                    "id": c.id,
                    "status": "pass" if c.passed else "fail",
                    "residual": to_data(c.residual),
                    **({"detail": c.detail} if c.detail else {}),
                }
                for c in self.checks
            ],
            "values": to_data(self.values),
            "passed": self.passed,
        }
        return json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False) + "\n"

    def to_text(self) -> str:
        lines = [f"{self.command}: {'PASS' if self.passed else 'FAIL'} ({sum(c.passed for c in self.checks)}/{len(self.checks)} checks)"]
        for c in self.checks:
            tail = f"  {c.detail}" if c.detail else ""
            if c.passed:
                lines.append(f"  pass  {c.id}{tail}")
            else:
                lines.append(f"  FAIL  {c.id}{tail}  residual: {_short(c.residual)}")
        for key in sorted(self.values):
            lines.append(f"  {key} = {_short(self.values[key])}")
        return "\n".join(lines) + "\n"
