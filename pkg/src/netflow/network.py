"""Network topology, sampled curves and pointwise geometry.

A network is an abstract graph whose interior vertices (junctions) have
exactly three incident edge-ends, together with one sampled planar curve per
edge.  All curves share the same uniform parameter grid ``x_j = j / M``.
"""

from __future__ import annotations

import math

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    ConcurrencyViolation,
    DegenerateSegment,
    NotAClosedWalk,
    TopologyError,
)

ENDPOINT = "endpoint"
JUNCTION = "junction"

DEFAULT_CONCURRENCY_TOL = 1e-10

# counterclockwise quarter rotation
ROT90 = np.array([[0.0, -1.0], [1.0, 0.0]])


def rotate90(v: np.ndarray) -> np.ndarray:
    """Apply the counterclockwise quarter rotation to the last axis of ``v``."""
    v = np.asarray(v, dtype=float)
    out = np.empty_like(v)
    out[..., 0] = -v[..., 1]
    out[..., 1] = v[..., 0]
    return out


@dataclass(frozen=True)
class Vertex:
    id: str
    kind: str


@dataclass(frozen=True)
class Edge:
    id: str
    v0: str
    v1: str


@dataclass(frozen=True)
class EdgeEnd:
    """An edge index together with the parameter value (0 or 1) of the end."""

    edge: int
    end: int


class NetworkTopology:
    """Abstract regular graph with derived junction and endpoint incidence.

    Parameters
    ----------
    vertices : sequence of (id, kind) pairs or :class:`Vertex`
    edges : sequence of (id, v0, v1) triples or :class:`Edge`
        ``v0`` is the vertex at parameter 0, ``v1`` the vertex at parameter 1.

    Raises
    ------
    TopologyError
        If a junction does not have exactly three incident edge-ends, an
        endpoint does not have exactly one, an edge is a loop, ids repeat, or
        the graph is disconnected.
    """

    def __init__(self, vertices: Iterable, edges: Iterable):
        self.vertices: tuple[Vertex, ...] = tuple(
            v if isinstance(v, Vertex) else Vertex(str(v[0]), str(v[1])) for v in vertices
        )
        self.edges: tuple[Edge, ...] = tuple(
            e if isinstance(e, Edge) else Edge(str(e[0]), str(e[1]), str(e[2])) for e in edges
        )
        self._validate_and_index()

    def _validate_and_index(self) -> None:
        ids = [v.id for v in self.vertices]
        if len(set(ids)) != len(ids):
            raise TopologyError("duplicate vertex id")
        eids = [e.id for e in self.edges]
        if len(set(eids)) != len(eids):
            raise TopologyError("duplicate edge id")
        if not self.edges:
            raise TopologyError("a network needs at least one edge")
        kinds = {}
        for v in self.vertices:
            if v.kind not in (ENDPOINT, JUNCTION):
                raise TopologyError(f"vertex {v.id!r} has unknown kind {v.kind!r}")
            kinds[v.id] = v.kind
        incidence: dict[str, list[EdgeEnd]] = {v.id: [] for v in self.vertices}
        for i, e in enumerate(self.edges):
            if e.v0 == e.v1:
                raise TopologyError(f"edge {e.id!r} has both ends at vertex {e.v0!r}")
            for end, vid in ((0, e.v0), (1, e.v1)):
                if vid not in incidence:
                    raise TopologyError(f"edge {e.id!r} references unknown vertex {vid!r}")
                incidence[vid].append(EdgeEnd(i, end))
        for vid, ends in incidence.items():
            need = 3 if kinds[vid] == JUNCTION else 1
            if len(ends) != need:
                raise TopologyError(
                    f"{kinds[vid]} {vid!r} has {len(ends)} incident edge-ends, expected {need}"
                )
        # connectivity by a simple flood fill over vertices
        adj: dict[str, set[str]] = {v.id: set() for v in self.vertices}
        for e in self.edges:
            adj[e.v0].add(e.v1)
            adj[e.v1].add(e.v0)
        seen = {self.vertices[0].id}
        stack = [self.vertices[0].id]
        while stack:
            for w in adj[stack.pop()]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        if len(seen) != len(self.vertices):
            raise TopologyError("graph is not connected")

        self._kinds = kinds
        self._edge_index = {e.id: i for i, e in enumerate(self.edges)}
        self.junctions: tuple[str, ...] = tuple(v.id for v in self.vertices if v.kind == JUNCTION)
        self.endpoints: tuple[str, ...] = tuple(v.id for v in self.vertices if v.kind == ENDPOINT)
        # I_m ordered by edge index, which fixes the i < j < k convention
        self.incidence: dict[str, tuple[EdgeEnd, ...]] = {
            m: tuple(sorted(incidence[m], key=lambda ee: (ee.edge, ee.end))) for m in self.junctions
        }
        self.endpoint_edge: dict[str, EdgeEnd] = {p: incidence[p][0] for p in self.endpoints}

    # -- lookups -------------------------------------------------------
    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def kind(self, vertex_id: str) -> str:
        return self._kinds[vertex_id]

    def edge_index(self, edge_id: str) -> int:
        return self._edge_index[edge_id]

    def vertex_at(self, edge: int, end: int) -> str:
        e = self.edges[edge]
        return e.v0 if end == 0 else e.v1

    def to_dict(self) -> dict:
        return {
            "vertices": [{"id": v.id, "kind": v.kind} for v in self.vertices],
            "edges": [{"id": e.id, "v0": e.v0, "v1": e.v1} for e in self.edges],
        }

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, NetworkTopology):
            return NotImplemented
        return self.vertices == other.vertices and self.edges == other.edges

    def __hash__(self) -> int:
        return hash((self.vertices, self.edges))

    def __repr__(self) -> str:
        return (
            f"NetworkTopology({len(self.edges)} edges, {len(self.junctions)} junctions, "
            f"{len(self.endpoints)} endpoints)"
        )


@dataclass(frozen=True)
class DiscreteCurve:
    """Samples of a planar curve on the uniform grid ``x_j = j/M``."""

    samples: np.ndarray

    def __post_init__(self):
        s = np.array(self.samples, dtype=float)
        if s.ndim != 2 or s.shape[1] != 2:
            raise ValueError("samples must have shape (M+1, 2)")
        if s.shape[0] < 5:
            raise ValueError("a discrete curve needs M >= 4 segments")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @property
    def M(self) -> int:
        return self.samples.shape[0] - 1


def _check_segments(samples: np.ndarray, edge_id: str) -> None:
    seg = np.hypot(*np.diff(samples, axis=0).T)
    if np.any(seg <= 0.0):
        j = int(np.argmin(seg))
        raise DegenerateSegment(f"edge {edge_id!r} has a zero-length segment at index {j}")


@dataclass(frozen=True, eq=False)
class Network:
    """Topology plus one sampled curve per edge.

    Use :func:`build_network` to construct validated instances.
    """

    topology: NetworkTopology
    curves: tuple[DiscreteCurve, ...]
    endpoint_positions: Mapping[str, np.ndarray] = field(default_factory=dict)

    @property
    def M(self) -> int:
        return self.curves[0].M

    def samples(self, edge: int | str) -> np.ndarray:
        if isinstance(edge, str):
            edge = self.topology.edge_index(edge)
        return self.curves[edge].samples

    def all_samples(self) -> list[np.ndarray]:
        return [c.samples for c in self.curves]

    def junction_position(self, m: str) -> np.ndarray:
        ee = self.topology.incidence[m][0]
        return self.curves[ee.edge].samples[-1 if ee.end else 0]

    def with_samples(self, samples: Sequence[np.ndarray]) -> "Network":
        """Return a network with the same topology and new samples (unvalidated)."""
        return Network(self.topology, tuple(DiscreteCurve(s) for s in samples), self.endpoint_positions)

    def max_sample_distance(self, other: "Network") -> float:
        """Max sample distance to a network with the same topology and grid."""
        return max(float(np.max(np.abs(a - b))) for a, b in zip(self.all_samples(), other.all_samples()))


def build_network(
    topology: NetworkTopology,
    curves: Sequence,
    tol: float = DEFAULT_CONCURRENCY_TOL,
) -> Network:
    """Validate samples against the topology and assemble a :class:`Network`.

    Endpoint positions are read off from the boundary samples.  Junction
    samples must agree within ``tol``; they are then snapped to the position
    of the lowest-indexed incident edge so that concurrency holds exactly.
    """
    if len(curves) != topology.n_edges:
        raise TopologyError(f"expected {topology.n_edges} curves, got {len(curves)}")
    arrays = [np.array(c.samples if isinstance(c, DiscreteCurve) else c, dtype=float) for c in curves]
    Ms = {a.shape[0] for a in arrays}
    if len(Ms) != 1:
        raise ValueError("all curves must share the same number of samples")
    for a, e in zip(arrays, topology.edges):
        if a.ndim != 2 or a.shape[1] != 2:
            raise ValueError(f"curve for edge {e.id!r} must have shape (M+1, 2)")
        _check_segments(a, e.id)
    for m, ends in topology.incidence.items():
        pts = np.array([arrays[ee.edge][-1 if ee.end else 0] for ee in ends])
        spread = float(np.max(np.hypot(*(pts - pts[0]).T)))
        if spread > tol:
            raise ConcurrencyViolation(f"junction {m!r}: samples disagree by {spread:.3e} > {tol:.1e}")
        for ee in ends[1:]:
            arrays[ee.edge][-1 if ee.end else 0] = pts[0]
    endpoint_positions = {}
    for p, ee in topology.endpoint_edge.items():
        pos = arrays[ee.edge][-1 if ee.end else 0].copy()
        pos.setflags(write=False)
        endpoint_positions[p] = pos
    return Network(topology, tuple(DiscreteCurve(a) for a in arrays), endpoint_positions)


# ----------------------------------------------------------------------
# geometry
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class EdgeGeometry:
    """Pointwise geometric quantities of one edge, all of length M+1."""

    tau: np.ndarray
    nu: np.ndarray
    speed: np.ndarray
    ds: np.ndarray
    k: np.ndarray
    ktilde: np.ndarray
    d1: np.ndarray
    d2: np.ndarray


@dataclass(frozen=True)
class GeometryCache:
    edges: tuple[EdgeGeometry, ...]

    def __getitem__(self, i: int) -> EdgeGeometry:
        return self.edges[i]

    def __len__(self) -> int:
        return len(self.edges)

    def sup_ktilde(self) -> float:
        return max(float(np.max(np.abs(g.ktilde))) for g in self.edges)

    def int_k2(self) -> np.ndarray:
        """Per-edge quadrature of the squared curvature."""
        return np.array([float(np.sum(g.ktilde**2 * g.ds)) for g in self.edges])


def parameter_derivatives(samples: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """First and second parameter derivatives, second order everywhere.

    Interior samples use central differences.  Boundary samples use the
    three-point one-sided first derivative and the four-point one-sided
    second derivative.
    """
    g = np.asarray(samples, dtype=float)
    M = g.shape[0] - 1
    h = 1.0 / M
    d1 = np.empty_like(g)
    d2 = np.empty_like(g)
    d1[1:-1] = (g[2:] - g[:-2]) / (2 * h)
    d1[0] = (-3 * g[0] + 4 * g[1] - g[2]) / (2 * h)
    d1[-1] = (3 * g[-1] - 4 * g[-2] + g[-3]) / (2 * h)
    d2[1:-1] = (g[2:] - 2 * g[1:-1] + g[:-2]) / h**2
    d2[0] = (2 * g[0] - 5 * g[1] + 4 * g[2] - g[3]) / h**2
    d2[-1] = (2 * g[-1] - 5 * g[-2] + 4 * g[-3] - g[-4]) / h**2
    return d1, d2


def dual_cell_lengths(samples: np.ndarray) -> np.ndarray:
    """Arclength weights: half the chords on either side of each sample."""
    seg = np.hypot(*np.diff(samples, axis=0).T)
    ds = np.zeros(samples.shape[0])
    ds[:-1] += 0.5 * seg
    ds[1:] += 0.5 * seg
    return ds


def edge_geometry(samples: np.ndarray) -> EdgeGeometry:
    d1, d2 = parameter_derivatives(samples)
    speed = np.hypot(d1[:, 0], d1[:, 1])
    if np.any(speed <= 0.0):
        raise DegenerateSegment("vanishing discrete speed")
    tau = d1 / speed[:, None]
    nu = rotate90(tau)
    ktilde = np.einsum("ij,ij->i", d2, nu) / speed**2
    k = ktilde[:, None] * nu
    return EdgeGeometry(tau, nu, speed, dual_cell_lengths(samples), k, ktilde, d1, d2)


def geometry(network: Network) -> GeometryCache:
    """Tangent, normal, arclength weights and curvature of every edge.

    The curvature vector is the normal part of ``d2 / |d1|^2``; projecting
    out the tangential part makes straight edges exactly flat even when the
    sampling is not uniform in arclength.
    """
    out = []
    for e, c in zip(network.topology.edges, network.curves):
        _check_segments(c.samples, e.id)
        out.append(edge_geometry(c.samples))
    return GeometryCache(tuple(out))


def edge_lengths(network: Network) -> np.ndarray:
    return np.array([math.fsum(np.hypot(*np.diff(c.samples, axis=0).T)) for c in network.curves])


def length(network: Network) -> float:
    """Total length as the sum of chord lengths."""
    return math.fsum(edge_lengths(network))


def inner_tangent(samples: np.ndarray, end: int) -> np.ndarray:
    """Unit tangent at an edge end pointing into the edge (one-sided, second order)."""
    g = samples
    if end == 0:
        u = -3 * g[0] + 4 * g[1] - g[2]
    else:
        u = -3 * g[-1] + 4 * g[-2] - g[-3]
    return u / np.hypot(u[0], u[1])


def junction_angle_residual(network: Network) -> dict[str, float]:
    """|sum of inner unit tangents| at every junction."""
    res = {}
    for m, ends in network.topology.incidence.items():
        s = sum(inner_tangent(network.curves[ee.edge].samples, ee.end) for ee in ends)
        res[m] = float(np.hypot(s[0], s[1]))
    return res


def max_angle_residual(network: Network) -> float:
    r = junction_angle_residual(network)
    return max(r.values()) if r else 0.0


def loop_area(network: Network, cycle: Sequence[tuple[str, bool]]) -> float:
    """Signed shoelace area of a closed walk.

    Parameters
    ----------
    cycle : sequence of ``(edge_id, reversed)``
        Edges in traversal order; ``reversed`` traverses the edge from
        parameter 1 to parameter 0.
    """
    topo = network.topology
    if not cycle:
        raise NotAClosedWalk("empty cycle")
    pts = []
    start = prev_end = None
    for eid, rev in cycle:
        try:
            i = topo.edge_index(eid)
        except KeyError:
            raise NotAClosedWalk(f"unknown edge {eid!r}") from None
        a, b = topo.vertex_at(i, 1 if rev else 0), topo.vertex_at(i, 0 if rev else 1)
        if prev_end is None:
            start = a
        elif a != prev_end:
            raise NotAClosedWalk(f"edge {eid!r} does not start where the previous edge ends")
        prev_end = b
        s = network.curves[i].samples
        pts.append((s[::-1] if rev else s)[:-1])
    if prev_end != start:
        raise NotAClosedWalk("walk does not return to its starting vertex")
    p = np.concatenate(pts)
    x, y = p[:, 0], p[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def self_intersections(network: Network) -> list[tuple[int, int, int, int]]:
    """Pairs of non-adjacent segments that cross.

    Diagnostic only; embeddedness is never enforced.  Returns tuples
    ``(edge_a, segment_a, edge_b, segment_b)``.
    """
    segs, owner = [], []
    for i, c in enumerate(network.curves):
        s = c.samples
        for j in range(s.shape[0] - 1):
            segs.append((s[j], s[j + 1]))
            owner.append((i, j))
    P = np.array([a for a, _ in segs])
    Q = np.array([b for _, b in segs])
    hits = []
    for a in range(len(segs)):
        p, r = P[a], Q[a] - P[a]
        qs, ss = P[a + 1 :], Q[a + 1 :] - P[a + 1 :]
        denom = r[0] * ss[:, 1] - r[1] * ss[:, 0]
        qp = qs - p
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (qp[:, 0] * ss[:, 1] - qp[:, 1] * ss[:, 0]) / denom
            u = (qp[:, 0] * r[1] - qp[:, 1] * r[0]) / denom
        eps = 1e-12
        mask = (np.abs(denom) > 0) & (t > eps) & (t < 1 - eps) & (u > eps) & (u < 1 - eps)
        for off in np.nonzero(mask)[0]:
            hits.append(owner[a] + owner[a + 1 + off])
    return hits
