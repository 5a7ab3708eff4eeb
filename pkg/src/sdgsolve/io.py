"""Reading and writing instances and outcomes.

Instance JSON::

    {"agents": 4, "edges": [[0, 1], [1, 2]], "scoring": [1, -1],
     "open": false, "labels": {"0": "alice"}}

``labels`` is optional and may be a list (one name per agent) or a mapping
from agent id to name; agents missing from a mapping keep their id as label.
An optional ``meta`` object (generator provenance, thresholds) is carried
along but not interpreted.
Edge-list text has an ``n m`` header followed by ``m`` lines ``a b``; blank
lines and ``#`` comments are ignored. Its scoring vector comes from the
caller.
"""

from __future__ import annotations

import json
from pathlib import Path

from .model import NEG_INF, Instance, Outcome, make_outcome

__all__ = [
    "FormatError",
    "instance_to_json",
    "instance_from_json",
    "parse_edge_list",
    "load_instance",
    "save_instance",
    "outcome_from_json",
    "load_outcome",
    "save_json",
    "encode_welfare",
]


class FormatError(ValueError):
    """A file could not be parsed into the expected structure."""


def instance_to_json(instance: Instance) -> dict:
    out = {
        "agents": instance.n,
        "edges": [list(e) for e in sorted(instance.edges)],
        "scoring": list(instance.scoring.entries),
        "open": instance.open_mode,
    }
    if instance.labels is not None:
        out["labels"] = {str(i): name for i, name in enumerate(instance.labels)}
    return out


def _labels(raw, n):
    if raw is None:
        return None
    if isinstance(raw, list):
        return raw
    if isinstance(raw, dict):
        names = [str(i) for i in range(n)]
        for k, v in raw.items():
            try:
                i = int(k)
            except (TypeError, ValueError):
                raise FormatError(f"label key {k!r} is not an agent id") from None
            if not 0 <= i < n:
                raise FormatError(f"label key {k!r} is out of range")
            names[i] = str(v)
        return names
    raise FormatError("labels must be a list or an object")


def instance_from_json(data) -> Instance:
    if not isinstance(data, dict):
        raise FormatError("instance JSON must be an object")
    unknown = set(data) - {"agents", "edges", "scoring", "open", "labels", "meta"}
    if unknown:
        raise FormatError(f"unknown instance fields: {sorted(unknown)}")
    for key in ("agents", "edges", "scoring"):
        if key not in data:
            raise FormatError(f"instance JSON lacks {key!r}")
    edges = data["edges"]
    if not isinstance(edges, list) or not all(isinstance(e, list) and len(e) == 2 for e in edges):
        raise FormatError("edges must be a list of [a, b] pairs")
    if not isinstance(data["scoring"], list):
        raise FormatError("scoring must be a list of integers")
    try:
        return Instance(
            data["agents"],
            [tuple(e) for e in edges],
            tuple(data["scoring"]),
            open_mode=bool(data.get("open", False)),
            labels=_labels(data.get("labels"), data["agents"]),
        )
    except FormatError:
        raise
    except (TypeError, ValueError) as exc:
        raise FormatError(str(exc)) from exc


def parse_edge_list(text: str, scoring, open_mode: bool = False) -> Instance:
    rows = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            rows.append(line.split())
    if not rows:
        raise FormatError("empty edge list")
    try:
        header = [int(x) for x in rows[0]]
        body = [tuple(int(x) for x in r) for r in rows[1:]]
    except ValueError as exc:
        raise FormatError(f"non-integer token in edge list: {exc}") from exc
    if len(header) != 2:
        raise FormatError("edge list header must be 'n m'")
    n, m = header
    if len(body) != m or any(len(e) != 2 for e in body):
        raise FormatError(f"edge list declares {m} edges but has {len(body)} pair lines")
    try:
        return Instance(n, body, tuple(scoring), open_mode=open_mode)
    except (TypeError, ValueError) as exc:
        raise FormatError(str(exc)) from exc


def load_instance(path, scoring=None, open_mode: bool | None = None) -> Instance:
    """Read JSON or edge-list text; ``scoring``/``open_mode`` override the file's."""
    text = Path(path).read_text()
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise FormatError(f"invalid JSON: {exc}") from exc
        inst = instance_from_json(data)
        if scoring is not None or open_mode is not None:
            inst = inst.with_scoring(scoring if scoring is not None else inst.scoring, open_mode)
        return inst
    if scoring is None:
        raise FormatError("edge-list input needs a scoring vector (--scoring)")
    return parse_edge_list(text, scoring, bool(open_mode))


def save_json(data, path=None, pretty: bool = False) -> str:
    text = json.dumps(data, indent=2 if pretty else None, sort_keys=False)
    if path is not None:
        Path(path).write_text(text + "\n")
    return text


def save_instance(instance: Instance, path) -> None:
    save_json(instance_to_json(instance), path, pretty=True)


def outcome_from_json(instance: Instance, data) -> Outcome:
    """Outcome from ``{"coalitions": [...]}`` (any recorded welfare is recomputed)."""
    if isinstance(data, list):
        coalitions = data
    elif isinstance(data, dict) and "coalitions" in data:
        coalitions = data["coalitions"]
    else:
        raise FormatError("outcome JSON must have a 'coalitions' list")
    if not isinstance(coalitions, list) or not all(isinstance(c, list) for c in coalitions):
        raise FormatError("coalitions must be a list of lists")
    return make_outcome(instance, coalitions)


def load_outcome(instance: Instance, path) -> Outcome:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON: {exc}") from exc
    return outcome_from_json(instance, data)


def encode_welfare(w):
    return "-inf" if w is NEG_INF else w
