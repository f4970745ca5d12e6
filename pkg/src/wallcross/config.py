"""JSON input files.

A config is a single self-describing object; rationals are strings such as
``"1/3"`` and piece indices are 1-based::

    {
      "dimension": 2,
      "h11_rank": 2,
      "intersection": [{"index": [1, 1], "value": "1"},
                       {"index": [2, 2], "value": "-1"}],
      "omega": ["1", "0"],
      "pieces": [{"rank": 1, "c1": ["1", "1"]},
                 {"rank": 1, "c1": ["1", "-1"]}],
      "edges": [[1, 2]],
      "magnitudes": {"1,2": 1.0}
    }
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .bundle import GradedBundle, Piece, validate
from .cohomology import CohClass, IntersectionForm

FIELDS = {"dimension", "h11_rank", "intersection", "omega", "pieces", "edges", "magnitudes"}
REQUIRED = FIELDS - {"magnitudes"}


class ConfigError(ValueError):
    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass(frozen=True)
class BundleConfig:
    dimension: int
    h11_rank: int
    intersection: dict[tuple[int, ...], Fraction]
    omega: tuple[Fraction, ...]
    pieces: tuple[tuple[int, tuple[Fraction, ...]], ...]
    edges: tuple[tuple[int, int], ...]
    magnitudes: dict[tuple[int, int], float] = field(default_factory=dict)

    def to_bundle(self) -> GradedBundle:
        form = IntersectionForm(
            self.dimension, self.h11_rank, {tuple(i - 1 for i in k): v for k, v in self.intersection.items()}
        )
        return GradedBundle(
            form,
            CohClass(self.omega),
            tuple(Piece(r, CohClass(c1)) for r, c1 in self.pieces),
            tuple((i - 1, j - 1) for i, j in self.edges),
        )

    def edge_magnitudes(self) -> dict[tuple[int, int], float]:
        """Magnitudes keyed by 0-based edges."""
        return {(i - 1, j - 1): v for (i, j), v in self.magnitudes.items()}

    def to_dict(self) -> dict:
        """Canonical JSON-ready form; parsing it back gives an equal config."""
        out = {
            "dimension": self.dimension,
            "h11_rank": self.h11_rank,
            "intersection": [
                {"index": list(k), "value": str(v)} for k, v in sorted(self.intersection.items())
            ],
            "omega": [str(v) for v in self.omega],
            "pieces": [{"rank": r, "c1": [str(v) for v in c1]} for r, c1 in self.pieces],
            "edges": [list(e) for e in self.edges],
        }
        if self.magnitudes:
            out["magnitudes"] = {f"{i},{j}": v for (i, j), v in sorted(self.magnitudes.items())}
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def digest(self) -> str:
        return hashlib.sha256(self.dumps().encode("utf-8")).hexdigest()


def _rational(value, path: str, errors: list[str]):
    if isinstance(value, bool) or not isinstance(value, (str, int)):
        errors.append(f"{path}: expected a rational string like \"a/b\"")
        return None
    try:
        return Fraction(value.strip() if isinstance(value, str) else value)
    except (ValueError, ZeroDivisionError):
        errors.append(f"{path}: malformed rational {value!r}")
        return None


def _int(value, path: str, errors: list[str]):
    if isinstance(value, bool) or not isinstance(value, int):
        errors.append(f"{path}: expected an integer")
        return None
    return value


def _rational_list(value, path: str, length, errors: list[str]):
    if not isinstance(value, list):
        errors.append(f"{path}: expected a list")
        return None
    out = [_rational(v, f"{path}[{k}]", errors) for k, v in enumerate(value)]
    if length is not None and len(out) != length:
        errors.append(f"{path}: expected {length} entries, got {len(out)}")
    return tuple(out)


def config_from_dict(data) -> BundleConfig:
    """Validate a decoded JSON object; raises ConfigError listing every problem."""
    errors: list[str] = []
    if not isinstance(data, dict):
        raise ConfigError(["<root>: expected a JSON object"])
    for key in sorted(set(data) - FIELDS):
        errors.append(f"{key}: unknown field")
    for key in sorted(REQUIRED - set(data)):
        errors.append(f"{key}: missing field")
    if errors:
        raise ConfigError(errors)

    n = _int(data["dimension"], "dimension", errors)
    p = _int(data["h11_rank"], "h11_rank", errors)
    if n is not None and n < 1:
        errors.append("dimension: must be positive")
    if p is not None and p < 1:
        errors.append("h11_rank: must be positive")
    if errors:
        raise ConfigError(errors)

    intersection: dict[tuple[int, ...], Fraction] = {}
    if not isinstance(data["intersection"], list):
        errors.append("intersection: expected a list")
    else:
        for k, item in enumerate(data["intersection"]):
            path = f"intersection[{k}]"
            if not isinstance(item, dict) or set(item) != {"index", "value"}:
                errors.append(f"{path}: expected an object with exactly 'index' and 'value'")
                continue
            idx = item["index"]
            if not isinstance(idx, list) or any(isinstance(i, bool) or not isinstance(i, int) for i in idx):
                errors.append(f"{path}.index: expected a list of integers")
                continue
            if len(idx) != n:
                errors.append(f"{path}.index: expected {n} indices, got {len(idx)}")
                continue
            if any(i < 1 or i > p for i in idx):
                errors.append(f"{path}.index: indices must lie in 1..{p}")
                continue
            if idx != sorted(idx):
                errors.append(f"{path}.index: must be sorted")
                continue
            if tuple(idx) in intersection:
                errors.append(f"{path}.index: duplicate multi-index {idx}")
                continue
            v = _rational(item["value"], f"{path}.value", errors)
            if v is not None:
                intersection[tuple(idx)] = v

    omega = _rational_list(data["omega"], "omega", p, errors)

    pieces = []
    if not isinstance(data["pieces"], list) or not data["pieces"]:
        errors.append("pieces: expected a nonempty list")
    else:
        for k, item in enumerate(data["pieces"]):
            path = f"pieces[{k}]"
            if not isinstance(item, dict) or set(item) != {"rank", "c1"}:
                errors.append(f"{path}: expected an object with exactly 'rank' and 'c1'")
                continue
            r = _int(item["rank"], f"{path}.rank", errors)
            if r is not None and r <= 0:
                errors.append(f"{path}.rank: must be a positive integer, got {r}")
            c1 = _rational_list(item["c1"], f"{path}.c1", p, errors)
            pieces.append((r, c1))
    ell = len(pieces)

    edges = []
    if not isinstance(data["edges"], list):
        errors.append("edges: expected a list")
    else:
        for k, e in enumerate(data["edges"]):
            path = f"edges[{k}]"
            if not (isinstance(e, list) and len(e) == 2 and all(isinstance(i, int) and not isinstance(i, bool) for i in e)):
                errors.append(f"{path}: expected a pair of integers")
                continue
            i, j = e
            if not (1 <= i <= ell and 1 <= j <= ell):
                errors.append(f"{path}: indices must lie in 1..{ell}")
            elif i >= j:
                errors.append(f"{path}: edge must satisfy i < j, got [{i}, {j}]")
            elif (i, j) in edges:
                errors.append(f"{path}: duplicate edge [{i}, {j}]")
            else:
                edges.append((i, j))

    magnitudes: dict[tuple[int, int], float] = {}
    raw = data.get("magnitudes", {})
    if not isinstance(raw, dict):
        errors.append("magnitudes: expected an object")
    else:
        for key, v in raw.items():
            path = f"magnitudes.{key}"
            try:
                i, j = (int(s) for s in key.split(","))
            except ValueError:
                errors.append(f"{path}: key must look like \"i,j\"")
                continue
            if (i, j) not in edges:
                errors.append(f"{path}: not an edge")
                continue
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not v > 0:
                errors.append(f"{path}: must be a positive number")
                continue
            magnitudes[(i, j)] = float(v)

    if errors:
        raise ConfigError(errors)
    cfg = BundleConfig(n, p, intersection, omega, tuple(pieces), tuple(sorted(edges)), magnitudes)
    violations = validate(cfg.to_bundle())
    if violations:
        raise ConfigError([f"{v.kind}: {v.message}" for v in violations])
    return cfg


def parse_config(path) -> BundleConfig:
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"<root>: invalid JSON ({exc})"]) from exc
    return config_from_dict(data)
