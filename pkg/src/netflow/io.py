"""File formats: network JSON, topology and endpoint files, atomic writes."""

from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .errors import FormatError
from .network import ENDPOINT, JUNCTION, Network, NetworkTopology, build_network
from .trajectory import fmt

NETWORK_VERSION = 1


def atomic_write_text(path: str | Path, text: str) -> None:
    """Write ``text`` to a temporary file in the target directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dumps(obj: Any, indent: int = 1, _level: int = 0) -> str:
    """JSON text with every float written using 17 significant digits.

    Arrays of numbers are kept on one line so sample lists stay readable.
    """
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (np.floating,)):
        obj = float(obj)
    if isinstance(obj, (np.integer,)):
        obj = int(obj)
    if obj is None or isinstance(obj, (bool, str)):
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return json.dumps(obj)
        return fmt(obj)
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, Mapping):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        flat = all(
            isinstance(v, (int, float, np.floating, np.integer))
            or (isinstance(v, (list, tuple)) and all(isinstance(w, (int, float)) for w in v))
            for v in obj
        )
        if flat:
            return "[" + ", ".join(dumps(v, indent, _level + 1) for v in obj) + "]"
        if not obj:
            return "[]"
        return "[\n" + ",\n".join(pad + dumps(v, indent, _level + 1) for v in obj) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def write_json(path: str | Path, obj: Any) -> None:
    atomic_write_text(path, dumps(obj) + "\n")


def read_json(path: str | Path) -> Any:
    path = Path(path)
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from None


def _check_version(data: Mapping, what: str) -> None:
    if not isinstance(data, Mapping) or data.get("version") != NETWORK_VERSION:
        raise FormatError(f"{what} must carry \"version\": {NETWORK_VERSION}")


# ----------------------------------------------------------------------
# network file
# ----------------------------------------------------------------------


def network_to_dict(network: Network) -> dict:
    topo = network.topology
    vertices = []
    for v in topo.vertices:
        d: dict[str, Any] = {"id": v.id, "kind": v.kind}
        if v.kind == ENDPOINT:
            d["position"] = [float(c) for c in network.endpoint_positions[v.id]]
        vertices.append(d)
    edges = [
        {"id": e.id, "v0": e.v0, "v1": e.v1, "samples": network.curves[i].samples.tolist()}
        for i, e in enumerate(topo.edges)
    ]
    return {"version": NETWORK_VERSION, "vertices": vertices, "edges": edges}


def topology_from_dict(data: Mapping) -> NetworkTopology:
    try:
        verts = [(v["id"], v["kind"]) for v in data["vertices"]]
        edges = [(e["id"], e["v0"], e["v1"]) for e in data["edges"]]
    except (KeyError, TypeError) as exc:
        raise FormatError(f"malformed topology: missing {exc}") from None
    return NetworkTopology(verts, edges)


def network_from_dict(data: Mapping, tol: float = 1e-10) -> Network:
    """Build and validate a network from its JSON representation."""
    _check_version(data, "network file")
    topo = topology_from_dict(data)
    for v in data["vertices"]:
        has = "position" in v
        if v["kind"] == ENDPOINT and not has:
            raise FormatError(f"endpoint {v['id']!r} lacks a position")
        if v["kind"] == JUNCTION and has:
            raise FormatError(f"junction {v['id']!r} must not carry a position")
    try:
        curves = [np.array(e["samples"], dtype=float) for e in data["edges"]]
    except (KeyError, ValueError, TypeError) as exc:
        raise FormatError(f"malformed samples: {exc}") from None
    net = build_network(topo, curves, tol=tol)
    for v in data["vertices"]:
        if v["kind"] == ENDPOINT:
            pos = np.array(v["position"], dtype=float)
            if float(np.max(np.abs(pos - net.endpoint_positions[v["id"]]))) > tol:
                raise FormatError(f"endpoint {v['id']!r}: position disagrees with edge samples")
    return net


def write_network(path: str | Path, network: Network) -> None:
    write_json(path, network_to_dict(network))


def read_network(path: str | Path, tol: float = 1e-10) -> Network:
    return network_from_dict(read_json(path), tol=tol)


# ----------------------------------------------------------------------
# topology and endpoint files (inputs of the minimizer)
# ----------------------------------------------------------------------


def read_topology(path: str | Path) -> NetworkTopology:
    data = read_json(path)
    _check_version(data, "topology file")
    return topology_from_dict(data)


def read_endpoints(path: str | Path) -> tuple[dict[str, np.ndarray], dict[str, np.ndarray] | None]:
    """Read ``{"version": 1, "positions": {...}, "init": {...}?}``.

    ``init`` optionally provides starting junction positions.
    """
    data = read_json(path)
    _check_version(data, "endpoints file")
    try:
        pos = {k: np.array(v, dtype=float) for k, v in data["positions"].items()}
    except (KeyError, AttributeError, ValueError) as exc:
        raise FormatError(f"malformed endpoints file: {exc}") from None
    init = data.get("init")
    if init is not None:
        init = {k: np.array(v, dtype=float) for k, v in init.items()}
    return pos, init
