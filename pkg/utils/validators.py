"""
Experiment config parsing and validation.

Configs are a flat TOML-compatible subset: ``[section]`` headers,
``key = value`` lines, integers, floats, double-quoted strings,
``true``/``false``, one-line lists of scalars and ``#`` comments.
Every problem found is reported with its line number; nothing is
silently ignored. See docs/formats.md for the full key reference.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Any, Callable

from config import (GATE, LATTICE, LATTICE_KS, MOTIF_KS, REPEAT_THRESHOLD, ROBUSTNESS,
                    SOUP, WORLD1D, WORLD2D)
from engines.norms import NormId, NormMapError, make_norm_map, parse_patch
from utils.rng import derive_seeds

KINDS = ("run1d", "run2d", "runbool", "dnasoup", "dnaca", "robustness")
FORMATS = ("csv", "ppm", "bin")
DEFAULT_FORMATS = ("csv", "ppm")
U64_MAX = 2**64 - 1

# the section each run kind reads its substrate parameters from
KIND_SECTION = {
    "run1d": "core1d",
    "run2d": "engine2d",
    "runbool": "boolca",
    "dnasoup": "dnasoup",
    "dnaca": "dnaca",
    "robustness": "robustness",
}


@dataclass(frozen=True)
class ConfigIssue:
    line: int
    key: str
    message: str

    def __str__(self) -> str:
        where = f"line {self.line}" if self.line else "config"
        return f"{where}: {self.key}: {self.message}" if self.key else f"{where}: {self.message}"


class ConfigError(ValueError):
    def __init__(self, issues: list[ConfigIssue]):
        self.issues = list(issues)
        super().__init__("\n".join(str(i) for i in self.issues))


# ---------------- Scalar grammar ----------------

_INT = re.compile(r"^[+-]?\d[\d_]*$")
_FLOAT = re.compile(r"^[+-]?(\d[\d_]*)?(\.\d+)?([eE][+-]?\d+)?$")
_KEY = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


def _strip_comment(line: str) -> str:
    in_string = False
    escaped = False
    for i, ch in enumerate(line):
        if escaped:
            escaped = False
        elif ch == "\\" and in_string:
            escaped = True
        elif ch == '"':
            in_string = not in_string
        elif ch == "#" and not in_string:
            return line[:i]
    return line


def _parse_string(text: str) -> str:
    body = text[1:-1]
    out = []
    i = 0
    while i < len(body):
        ch = body[i]
        if ch == "\\":
            if i + 1 >= len(body) or body[i + 1] not in '"\\nt':
                raise ValueError(f"bad escape in string {text}")
            out.append({"n": "\n", "t": "\t"}.get(body[i + 1], body[i + 1]))
            i += 2
            continue
        if ch == '"':
            raise ValueError(f"unescaped quote in string {text}")
        out.append(ch)
        i += 1
    return "".join(out)


def _split_list(body: str) -> list[str]:
    items, current, in_string, escaped = [], [], False, False
    for ch in body:
        if escaped:
            escaped = False
        elif ch == "\\" and in_string:
            escaped = True
        elif ch == '"':
            in_string = not in_string
        elif ch == "," and not in_string:
            items.append("".join(current).strip())
            current = []
            continue
        current.append(ch)
    tail = "".join(current).strip()
    # a trailing comma is allowed, an empty slot is not
    if tail:
        items.append(tail)
    if any(item == "" for item in items):
        raise ValueError("empty list element")
    return items


def parse_value(text: str) -> Any:
    text = text.strip()
    if not text:
        raise ValueError("missing value")
    if text.startswith("["):
        if not text.endswith("]"):
            raise ValueError("lists must open and close on one line")
        return [parse_value(item) for item in _split_list(text[1:-1])]
    if text.startswith('"'):
        if len(text) < 2 or not text.endswith('"'):
            raise ValueError(f"unterminated string {text}")
        return _parse_string(text)
    if text in ("true", "false"):
        return text == "true"
    if _INT.match(text):
        return int(text.replace("_", ""))
    if _FLOAT.match(text) and any(c.isdigit() for c in text):
        return float(text.replace("_", ""))
    raise ValueError(f"cannot read value {text!r}")


@dataclass
class RawEntry:
    value: Any
    line: int


def parse_document(text: str) -> tuple[dict[str, dict[str, RawEntry]], list[ConfigIssue]]:
    """Sections -> key -> entry; the top level is the section ``""``."""
    sections: dict[str, dict[str, RawEntry]] = {"": {}}
    issues: list[ConfigIssue] = []
    current = ""
    seen_headers: set[str] = set()

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw).strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]") or not _KEY.match(line[1:-1].strip()):
                issues.append(ConfigIssue(lineno, "", f"bad section header {line!r}"))
                continue
            current = line[1:-1].strip()
            if current in seen_headers:
                issues.append(ConfigIssue(lineno, current, "duplicate section"))
            seen_headers.add(current)
            sections.setdefault(current, {})
            continue
        if "=" not in line:
            issues.append(ConfigIssue(lineno, "", f"expected key = value, got {line!r}"))
            continue
        key, _, value_text = line.partition("=")
        key = key.strip()
        if not _KEY.match(key):
            issues.append(ConfigIssue(lineno, key, "bad key name"))
            continue
        qualified = f"{current}.{key}" if current else key
        if key in sections[current]:
            first = sections[current][key].line
            issues.append(ConfigIssue(lineno, qualified, f"duplicate key (first set on line {first})"))
            continue
        try:
            sections[current][key] = RawEntry(parse_value(value_text), lineno)
        except ValueError as e:
            issues.append(ConfigIssue(lineno, qualified, str(e)))
    return sections, issues


# ---------------- Schema ----------------

Check = Callable[[Any], str | None]


@dataclass(frozen=True)
class Field:
    kind: str  # int | float | str | bool | int_list | str_list
    default: Any
    check: Check | None = None


def _range(lo: float | None = None, hi: float | None = None) -> Check:
    def check(value):
        values = value if isinstance(value, list) else [value]
        for v in values:
            if lo is not None and v < lo:
                return f"must be >= {lo}, got {v}"
            if hi is not None and v > hi:
                return f"must be <= {hi}, got {v}"
        return None
    return check


def _choice(*valid: str) -> Check:
    def check(value):
        values = value if isinstance(value, list) else [value]
        for v in values:
            if v not in valid:
                return f"{v!r} is not one of {'|'.join(valid)}"
        return None
    return check


def _norm_check(value):
    try:
        NormId.parse(value)
    except ValueError as e:
        return str(e)
    return None


def _nonzero(value):
    if any(v == 0 for v in value):
        return "genes cannot be 0"
    return None


SOUP_FIELDS = {
    "condition": Field("str", "B", _choice("A", "B", "a", "b")),
    "mutation_rate": Field("float", SOUP["mutation_rate"], _range(0.0, 1.0)),
    "min_overlap": Field("int", SOUP["min_overlap"], _range(1)),
    "split_min_len": Field("int", SOUP["split_min_len"], _range(1)),
    "initial_length": Field("int", SOUP["initial_length"], _range(1)),
    "elongation_prob": Field("float", SOUP["elongation_prob"], _range(0.0, 1.0)),
    "extend_overhangs": Field("bool", SOUP["extend_overhangs"]),
}

SCHEMA: dict[str, dict[str, Field]] = {
    "": {
        "kind": Field("str", None, _choice(*KINDS)),
        "seed": Field("int", None, _range(0, U64_MAX)),
        "seeds": Field("int_list", None, _range(0, U64_MAX)),
        "master_seed": Field("int", None, _range(0, U64_MAX)),
        "seed_count": Field("int", None, _range(1)),
        "jobs": Field("int", None, _range(1)),
    },
    "output": {
        "formats": Field("str_list", list(DEFAULT_FORMATS), _choice(*FORMATS)),
        "frames": Field("bool", False),
        "frame_every": Field("int", 1, _range(1)),
    },
    "core1d": {
        "length": Field("int", WORLD1D["length"], _range(2)),
        "generations": Field("int", WORLD1D["generations"], _range(1)),
        "boundary": Field("str", WORLD1D["boundary"], _choice("periodic", "bounded")),
        "norm": Field("str", WORLD1D["norm"], _norm_check),
        "patches": Field("str_list", None),
        "init": Field("str", "sparse", _choice("sparse", "dense", "explicit")),
        "genes": Field("int", WORLD1D["genes"], _range(0)),
        "fill": Field("float", WORLD1D["fill"], _range(0.0, 1.0)),
        "value_min": Field("int", WORLD1D["value_min"], _range(1)),
        "value_max": Field("int", WORLD1D["value_max"], _range(1)),
        "region": Field("int_list", None, _range(0)),
        "region_width": Field("int", WORLD1D["region_width"], _range(1)),
        "values": Field("int_list", None, _nonzero),
        "positions": Field("int_list", None, _range(0)),
        "offset": Field("int", None, _range(0)),
    },
    "engine2d": {
        "width": Field("int", WORLD2D["width"], _range(2)),
        "height": Field("int", WORLD2D["height"], _range(1)),
        "generations": Field("int", WORLD2D["generations"], _range(1)),
        "norm": Field("str", WORLD2D["norm"], _choice("zero", "d")),
        "fill": Field("float", WORLD2D["fill"], _range(0.0, 1.0)),
        "value_max": Field("int", WORLD2D["value_max"], _range(1)),
    },
    "boolca": {
        "length": Field("int", GATE["length"], _range(5)),
        "generations": Field("int", GATE["generations"], _range(1)),
        "rule": Field("int", GATE["rule"], _range(0, 255)),
        "threshold": Field("int", GATE["threshold"], _range(0, 5)),
        "density": Field("float", GATE["density"], _range(0.0, 1.0)),
    },
    "dnasoup": {
        **SOUP_FIELDS,
        "cycles": Field("int", SOUP["cycles"], _range(0)),
        "pool_per_base": Field("int", SOUP["pool_per_base"], _range(0)),
        "initial_strands": Field("int", SOUP["initial_strands"], _range(0)),
        "association_pairs": Field("int", SOUP["association_pairs"], _range(0)),
        "ks": Field("int_list", list(MOTIF_KS), _range(1)),
        "tau": Field("float", REPEAT_THRESHOLD, _range(0.0, 1.0)),
    },
    "dnaca": {
        **SOUP_FIELDS,
        "min_overlap": Field("int", LATTICE["min_overlap"], _range(1)),
        "split_min_len": Field("int", LATTICE["split_min_len"], _range(1)),
        "initial_length": Field("int", LATTICE["initial_length"], _range(1)),
        "elongation_prob": Field("float", LATTICE["elongation_prob"], _range(0.0, 1.0)),
        "canonical": Field("bool", LATTICE["canonical"]),
        "sites": Field("int", LATTICE["sites"], _range(3)),
        "cycles": Field("int", LATTICE["cycles"], _range(1)),
        "diffusion_rate": Field("float", LATTICE["diffusion_rate"], _range(0.0, 0.5)),
        "initial_budget": Field("float", LATTICE["initial_budget"], _range(0.0)),
        "occupancy": Field("float", LATTICE["occupancy"], _range(0.0, 1.0)),
        "top_m": Field("int", LATTICE["top_m"], _range(1, 12)),
        "ks": Field("int_list", list(LATTICE_KS), _range(1)),
        "domain_width": Field("int", 4, _range(1)),
        "domain_cycles": Field("int", 32, _range(1)),
    },
    "robustness": {
        "length": Field("int", ROBUSTNESS["length"], _range(4)),
        "generations": Field("int", ROBUSTNESS["generations"], _range(2)),
        "boundary": Field("str", ROBUSTNESS["boundary"], _choice("periodic", "bounded")),
        "norm": Field("str", ROBUSTNESS["norm"], _norm_check),
        "organism": Field("int_list", list(ROBUSTNESS["organism"]), _nonzero),
        "values": Field("int_list", list(ROBUSTNESS["values"]), _nonzero),
        "distances": Field("int_list", list(ROBUSTNESS["distances"]), _range(0)),
        "survival_from": Field("float", 0.5, _range(0.0, 1.0)),
    },
}


def _typed(value: Any, kind: str) -> tuple[Any, str | None]:
    if kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            return None, "expected an integer"
        return value, None
    if kind == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            return None, "expected a number"
        return float(value), None
    if kind == "str":
        return (value, None) if isinstance(value, str) else (None, "expected a quoted string")
    if kind == "bool":
        return (value, None) if isinstance(value, bool) else (None, "expected true or false")
    if kind in ("int_list", "str_list"):
        if not isinstance(value, list):
            return None, "expected a list"
        inner = "int" if kind == "int_list" else "str"
        out = []
        for item in value:
            typed, err = _typed(item, inner)
            if err:
                return None, f"list element {item!r}: {err}"
            out.append(typed)
        return out, None
    raise AssertionError(kind)


# ---------------- Validated config ----------------

@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    seeds: tuple[int, ...]
    jobs: int | None
    formats: tuple[str, ...]
    frames: bool
    frame_every: int
    params: dict[str, Any] = field(default_factory=dict)
    text: str = ""

    @property
    def section(self) -> str:
        return KIND_SECTION[self.kind]

    def with_seeds(self, seeds: list[int]) -> "ExperimentConfig":
        return ExperimentConfig(self.kind, tuple(seeds), self.jobs, self.formats, self.frames,
                                self.frame_every, self.params, self.text)

    def with_formats(self, formats: list[str]) -> "ExperimentConfig":
        return ExperimentConfig(self.kind, self.seeds, self.jobs, tuple(dict.fromkeys(formats)),
                                self.frames, self.frame_every, self.params, self.text)


def _cross_checks(kind: str, params: dict[str, Any], lines: dict[str, int]) -> list[ConfigIssue]:
    issues = []

    def issue(key, message):
        issues.append(ConfigIssue(lines.get(key, 0), f"{KIND_SECTION[kind]}.{key}", message))

    if kind == "run1d":
        length = params["length"]
        if params["value_min"] > params["value_max"]:
            issue("value_min", "value_min exceeds value_max")
        if params["init"] != "explicit" and params["value_max"] >= length:
            issue("value_max", f"must be < length ({length})")
        if params["init"] == "sparse":
            if params["region"] is not None:
                region = params["region"]
                if len(region) != 2 or not 0 <= region[0] < region[1] <= length:
                    issue("region", f"must be [start, end] within [0, {length}]")
                elif params["genes"] > region[1] - region[0]:
                    issue("genes", "more genes than region cells")
            elif params["genes"] > min(params["region_width"], length):
                issue("genes", "more genes than region cells")
        if params["init"] == "explicit":
            values = params["values"]
            if not values:
                issue("values", "explicit init needs a non-empty values list")
            else:
                if any(abs(v) >= length for v in values):
                    issue("values", f"every |gene| must be < length ({length})")
                positions = params["positions"]
                if positions is not None:
                    if len(positions) != len(values):
                        issue("positions", "positions and values differ in length")
                    elif any(p >= length for p in positions):
                        issue("positions", f"positions must be < length ({length})")
                else:
                    offset = params["offset"] if params["offset"] is not None else (length - len(values)) // 2
                    if offset + len(values) > length:
                        issue("offset", "explicit genes run past the end of the grid")
        if params["patches"] is not None:
            try:
                make_norm_map(length, [parse_patch(p) for p in params["patches"]])
            except (NormMapError, ValueError) as e:
                issue("patches", str(e))
    elif kind in ("dnasoup", "dnaca"):
        if not params["ks"]:
            issue("ks", "need at least one motif length")
    elif kind == "robustness":
        length = params["length"]
        organism = params["organism"]
        if not organism:
            issue("organism", "organism pattern is empty")
        elif any(abs(v) >= length for v in organism + params["values"]):
            issue("values", f"every |gene| must be < length ({length})")
        else:
            start = (length - len(organism)) // 2
            last = start + len(organism) - 1
            room = length - len(organism) if params["boundary"] == "periodic" else length - 1 - last
            too_far = [d for d in params["distances"] if d > room]
            if too_far:
                issue("distances", f"distances {too_far} leave no room for the intruder")
        if not params["values"] or not params["distances"]:
            issue("values", "the sweep grid is empty")
    return issues


def parse_config(text: str, expected_kind: str | None = None) -> ExperimentConfig:
    """
    Validated config, or ConfigError listing every problem found.

    ``expected_kind`` stands in for a missing ``kind`` key and must match
    it when both are given.
    """
    sections, issues = parse_document(text)

    for name, entries in sections.items():
        if name not in SCHEMA:
            line = min((e.line for e in entries.values()), default=0)
            issues.append(ConfigIssue(line, name, f"unknown section, expected one of "
                                                  f"{'|'.join(s for s in SCHEMA if s)}"))
            continue
        for key, entry in entries.items():
            qualified = f"{name}.{key}" if name else key
            spec = SCHEMA[name].get(key)
            if spec is None:
                issues.append(ConfigIssue(entry.line, qualified, "unknown key"))
                continue
            typed, err = _typed(entry.value, spec.kind)
            if err is None and spec.check is not None:
                err = spec.check(typed)
            if err:
                issues.append(ConfigIssue(entry.line, qualified, err))
            else:
                entry.value = typed

    top = sections.get("", {})
    kind_entry = top.get("kind")
    if kind_entry is None and expected_kind is None:
        issues.append(ConfigIssue(0, "kind", f"missing required field (one of {'|'.join(KINDS)})"))
    elif kind_entry is not None and expected_kind is not None and kind_entry.value != expected_kind:
        issues.append(ConfigIssue(kind_entry.line, "kind",
                                  f"config is for {kind_entry.value}, not {expected_kind}"))
    if issues:
        raise ConfigError(issues)

    kind = kind_entry.value if kind_entry is not None else expected_kind
    section = KIND_SECTION[kind]
    for other in sections:
        if other and other != "output" and other != section:
            line = min((e.line for e in sections[other].values()), default=0)
            issues.append(ConfigIssue(line, other, f"section not used by kind {kind}"))

    given = sections.get(section, {})
    params = {key: (given[key].value if key in given else spec.default)
              for key, spec in SCHEMA[section].items()}
    if kind in ("dnasoup", "dnaca"):
        params["condition"] = params["condition"].upper()
    issues.extend(_cross_checks(kind, params, {k: e.line for k, e in given.items()}))

    seed_keys = [k for k in ("seed", "seeds", "master_seed") if k in top]
    if len(seed_keys) > 1:
        issues.append(ConfigIssue(top[seed_keys[1]].line, seed_keys[1],
                                  f"conflicts with {seed_keys[0]}; give one seed source"))
    if ("seed_count" in top) != ("master_seed" in top):
        key = "seed_count" if "seed_count" in top else "master_seed"
        issues.append(ConfigIssue(top[key].line, key, "master_seed and seed_count go together"))
    if "seeds" in top and not top["seeds"].value:
        issues.append(ConfigIssue(top["seeds"].line, "seeds", "seed list is empty"))
    if issues:
        raise ConfigError(issues)

    if "seeds" in top:
        seeds = list(top["seeds"].value)
    elif "master_seed" in top:
        seeds = derive_seeds(top["master_seed"].value, top["seed_count"].value)
    elif "seed" in top:
        seeds = [top["seed"].value]
    else:
        seeds = [0]

    output = sections.get("output", {})
    out_params = {key: (output[key].value if key in output else spec.default)
                  for key, spec in SCHEMA["output"].items()}
    formats = tuple(dict.fromkeys(out_params["formats"]))
    return ExperimentConfig(
        kind=kind,
        seeds=tuple(seeds),
        jobs=top["jobs"].value if "jobs" in top else None,
        formats=formats,
        frames=out_params["frames"],
        frame_every=out_params["frame_every"],
        params=params,
        text=text,
    )


def parse_config_file(path: str, expected_kind: str | None = None) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as f:
            text = f.read()
    except FileNotFoundError:
        raise ConfigError([ConfigIssue(0, "", f"config file not found: {path}")]) from None
    except (OSError, UnicodeDecodeError) as e:
        raise ConfigError([ConfigIssue(0, "", f"cannot read {path}: {e}")]) from None
    return parse_config(text, expected_kind)
