"""Run reports and the on-disk resolution cache."""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any

from .algebras import AlgebraMap, AlgebraPresentation, Monomial, Polynomial, RealizedAlgebra, realize
from .exactla import Field
from .exceptions import CacheError
from .logging_config import get_logger, log_function_call
from .models import Certificate, TaskResult
from .resolutions import KilledClass, Resolution

logger = get_logger(__name__)

REPORT_FORMAT_VERSION = 1


def jsonable(value: Any) -> Any:
    """Plain JSON data: string keys, exact scalars as strings, tuples as lists."""
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, bool) or value is None or isinstance(value, (int, str)):
        return value
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass
class ReportDocument:
    """
    Everything a workspace run produced.

    The JSON form is a pure function of the workspace, the field and the engine version:
    keys are sorted and nothing time-dependent is recorded.
    """

    engine_version: str
    input_digest: str
    field: str
    tasks: list[TaskResult] = field(default_factory=list)
    format_version: int = REPORT_FORMAT_VERSION

    @property
    def failed(self) -> list[TaskResult]:
        return [t for t in self.tasks if not t.ok]

    @property
    def passed(self) -> bool:
        return not self.failed

    def to_dict(self) -> dict[str, Any]:
        return {
            "format_version": self.format_version,
            "engine_version": self.engine_version,
            "input_digest": self.input_digest,
            "field": self.field,
            "tasks": [jsonable(t.to_dict()) for t in self.tasks],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def write(self, path: str | Path) -> None:
        p = Path(path)
        if p.parent and not p.parent.exists():
            p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(self.to_json(), encoding="utf-8")
        logger.info(f"report written to {p}")

    def render(self) -> str:
        """Human-readable summary, one block per task."""
        lines = [f"opalg {self.engine_version}  field {self.field}  input {self.input_digest[:12]}"]
        for t in self.tasks:
            mark = {"ok": "✅", "failed": "❌", "error": "⚠️"}.get(t.status, "?")
            lines.append("")
            lines.append(f"{mark} [{t.index}] {t.command} {t.target}: {t.status}")
            if t.message:
                lines.append(f"    {t.message}")
            if t.trusted:
                trusted = ", ".join(f"{k}={_short(v)}" for k, v in sorted(t.trusted.items()))
                lines.append(f"    trusted: {trusted}")
            for name, table in sorted(t.tables.items()):
                lines.extend(_render_table(name, table))
        bad = len(self.failed)
        lines.append("")
        lines.append(f"{len(self.tasks) - bad}/{len(self.tasks)} tasks passed")
        return "\n".join(lines)


def _short(value: Any) -> str:
    if isinstance(value, (list, tuple)):
        return "..".join(str(v) for v in value) if len(value) == 2 else ", ".join(map(str, value))
    return str(value)


def _render_table(name: str, table: Any) -> list[str]:
    if isinstance(table, dict) and table and all(not isinstance(v, (dict, list)) for v in table.values()):
        cells = "  ".join(f"{k}:{v}" for k, v in table.items())
        return [f"    {name}: {cells}"]
    if isinstance(table, list) and table and all(isinstance(r, dict) for r in table):
        out = [f"    {name}:"]
        for row in table:
            out.append("      " + "  ".join(f"{k}={v}" for k, v in row.items()))
        return out
    if isinstance(table, dict) and "passed" in table and "checks" in table:
        verdict = "passed" if table["passed"] else f"FAILED ({table.get('failure')})"
        return [f"    {name}: {verdict}; checks {table['checks']}; skipped {table.get('skipped', 0)}"]
    return [f"    {name}: {json.dumps(jsonable(table), sort_keys=True)}"]


# -- canonical forms ------------------------------------------------------------------------


def polynomial_to_json(poly: Polynomial, f: Field) -> list[list[Any]]:
    return [[list(m.generators), m.operation, f.format(c)] for m, c in sorted(poly.items()) if c]


def polynomial_from_json(data: list[list[Any]], f: Field) -> Polynomial:
    return {Monomial(tuple(gens), op): f.parse(c) for gens, op, c in data}


def presentation_to_json(p: AlgebraPresentation) -> dict[str, Any]:
    f = p.field
    return {
        "name": p.name,
        "operad": p.operad.name,
        "max_arity": p.operad.max_arity,
        "field": f.spec,
        "weight_cap": p.weight_cap,
        "generators": [
            {"name": g.name, "degree": g.degree, "weight": g.weight, "d": polynomial_to_json(g.differential, f)}
            for g in p.generators
        ],
        "relations": [polynomial_to_json(r, f) for r in p.relations],
    }


def presentation_from_json(data: dict[str, Any], like: AlgebraPresentation) -> AlgebraPresentation:
    """Rebuild a cached presentation over the operad of ``like``."""
    f = like.field
    p = AlgebraPresentation(like.operad, data["weight_cap"], data["name"])
    for g in data["generators"]:
        p.add_generator(g["name"], g["degree"], polynomial_from_json(g["d"], f), g["weight"])
    for r in data["relations"]:
        p.add_relation(polynomial_from_json(r, f))
    return p


def algebra_digest(p: AlgebraPresentation) -> str:
    text = json.dumps(presentation_to_json(p), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


# -- resolution cache -----------------------------------------------------------------------


class ResolutionCache:
    """
    Resolutions stored as JSON files keyed by algebra digest, engine version and parameters.

    A corrupt entry is reported, recomputed by the caller and overwritten.
    """

    def __init__(self, cache_dir: str | Path, engine_version: str):
        self.cache_dir = Path(cache_dir)
        self.engine_version = engine_version

    def cache_key(self, p: AlgebraPresentation, degree_floor: int, mode: str, stage_cap: int) -> str:
        raw = f"{algebra_digest(p)}|{self.engine_version}|{degree_floor}|{mode}|{stage_cap}|{p.field.spec}"
        return hashlib.sha256(raw.encode("utf-8")).hexdigest()[:32]

    def cache_file(self, key: str) -> Path:
        return self.cache_dir / f"resolution_{key}.json"

    def is_cache_file_valid(self, path: Path) -> bool:
        return path.exists() and path.stat().st_size > 0

    def get_cached_resolution(self, key: str, b: RealizedAlgebra, workers: int = 1) -> Resolution | None:
        path = self.cache_file(key)
        if not self.is_cache_file_valid(path):
            return None
        try:
            resolution = self.load_resolution(path, b, workers)
        except CacheError as e:
            logger.warning(f"Ignoring corrupt cache entry {path.name}: {e.message}")
            return None
        logger.debug(f"cache hit {path.name}")
        return resolution

    def load_resolution(self, path: Path, b: RealizedAlgebra, workers: int = 1) -> Resolution:
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
            if data.get("engine_version") != self.engine_version:
                raise CacheError(f"Entry written by engine {data.get('engine_version')}", path=str(path))
            f = b.field
            p = presentation_from_json(data["presentation"], b.presentation)
            algebra = realize(p, workers=workers)
            images = {g: polynomial_from_json(poly, f) for g, poly in data["epsilon"].items()}
            epsilon = AlgebraMap(algebra, b, images, name="epsilon")
            certificate = Certificate(**data["certificate"])
            killed = [KilledClass(**k) for k in data["killed"]]
            return Resolution(p, algebra, epsilon, certificate, killed, list(data["unresolved"]))
        except CacheError:
            raise
        except (OSError, ValueError, KeyError, TypeError) as e:
            raise CacheError(f"Unreadable entry: {e}", path=str(path)) from e

    @log_function_call
    def cache_resolution(self, key: str, resolution: Resolution) -> bool:
        path = self.cache_file(key)
        f = resolution.algebra.field
        src = resolution.presentation
        data = {
            "engine_version": self.engine_version,
            "presentation": presentation_to_json(src),
            "epsilon": {
                g.name: polynomial_to_json(resolution.epsilon.images[i], f) for i, g in enumerate(src.generators)
            },
            "certificate": jsonable(resolution.certificate.to_dict()),
            "killed": [asdict(k) for k in resolution.killed],
            "unresolved": jsonable(resolution.unresolved),
        }
        try:
            self.cache_dir.mkdir(parents=True, exist_ok=True)
            tmp = path.with_suffix(".tmp")
            tmp.write_text(json.dumps(data, sort_keys=True), encoding="utf-8")
            os.replace(tmp, path)
            return True
        except OSError as e:
            logger.warning(f"Could not write cache entry {path.name}: {e.strerror}")
            return False

    def clear(self) -> int:
        """Delete every cache entry; returns the number removed."""
        deleted_count = 0
        if not self.cache_dir.exists():
            return 0
        try:
            for entry in self.cache_dir.glob("resolution_*.json"):
                try:
                    entry.unlink()
                    deleted_count += 1
                except OSError:
                    continue
        except OSError:
            pass
        return deleted_count
