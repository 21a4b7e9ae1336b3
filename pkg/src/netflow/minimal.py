"""Minimal networks: straight edges meeting at 120 degrees.

Junction positions are found by gradient descent with Armijo backtracking on
the total length.  The gradient with respect to a junction is minus the sum
of the unit vectors pointing from it toward its neighbours, so stationarity is
exactly the balance of the three inner tangents.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import EdgeCollapse, NoConvergence, PreconditionViolation
from .network import ENDPOINT, JUNCTION, Network, NetworkTopology, build_network

EPS = float(np.finfo(float).eps)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class StraightNetwork:
    topology: NetworkTopology
    junction_positions: Mapping[str, np.ndarray]
    endpoint_positions: Mapping[str, np.ndarray]

    def position(self, vertex: str) -> np.ndarray:
        if self.topology.kind(vertex) == JUNCTION:
            return np.asarray(self.junction_positions[vertex], dtype=float)
        return np.asarray(self.endpoint_positions[vertex], dtype=float)

    def edge_lengths(self) -> np.ndarray:
        return np.array(
            [np.hypot(*(self.position(e.v1) - self.position(e.v0))) for e in self.topology.edges]
        )

    def length(self) -> float:
        return float(np.sum(self.edge_lengths()))

    def gradient_norms(self) -> dict[str, float]:
        """|sum of unit vectors from each junction toward its neighbours|."""
        out = {}
        for m, ends in self.topology.incidence.items():
            p = self.position(m)
            g = np.zeros(2)
            for ee in ends:
                q = self.position(self.topology.vertex_at(ee.edge, 1 - ee.end))
                g += (q - p) / np.hypot(*(q - p))
            out[m] = float(np.hypot(*g))
        return out


# ----------------------------------------------------------------------
# topologies used throughout the package
# ----------------------------------------------------------------------


def single_edge_topology() -> NetworkTopology:
    return NetworkTopology([("P0", ENDPOINT), ("P1", ENDPOINT)], [("e0", "P0", "P1")])


def triod_topology() -> NetworkTopology:
    """Three edges from a junction ``O`` (parameter 0) to endpoints ``P0..P2``."""
    return NetworkTopology(
        [("O", JUNCTION), ("P0", ENDPOINT), ("P1", ENDPOINT), ("P2", ENDPOINT)],
        [("e0", "O", "P0"), ("e1", "O", "P1"), ("e2", "O", "P2")],
    )


def two_junction_topology() -> NetworkTopology:
    """Full Steiner topology on four endpoints with a middle edge ``c``.

    Junction ``J0`` joins endpoints ``P0, P1``; ``J1`` joins ``P2, P3``.
    """
    return NetworkTopology(
        [
            ("J0", JUNCTION),
            ("J1", JUNCTION),
            ("P0", ENDPOINT),
            ("P1", ENDPOINT),
            ("P2", ENDPOINT),
            ("P3", ENDPOINT),
        ],
        [
            ("c", "J0", "J1"),
            ("a0", "J0", "P0"),
            ("a1", "J0", "P1"),
            ("b0", "J1", "P2"),
            ("b1", "J1", "P3"),
        ],
    )


# ----------------------------------------------------------------------
# descent
# ----------------------------------------------------------------------


def _harmonic_init(topology: NetworkTopology, endpoints: Mapping[str, np.ndarray]) -> np.ndarray:
    """Place each junction at the average of its neighbours (a linear solve)."""
    J = topology.junctions
    idx = {m: a for a, m in enumerate(J)}
    A = np.zeros((len(J), len(J)))
    b = np.zeros((len(J), 2))
    for m, ends in topology.incidence.items():
        a = idx[m]
        for ee in ends:
            w = topology.vertex_at(ee.edge, 1 - ee.end)
            A[a, a] += 1.0
            if w in idx:
                A[a, idx[w]] -= 1.0
            else:
                b[a] += np.asarray(endpoints[w], dtype=float)
    return np.linalg.solve(A, b)


class _LengthFunctional:
    def __init__(self, topology: NetworkTopology, endpoints: Mapping[str, np.ndarray]):
        self.topology = topology
        J = topology.junctions
        self.idx = {m: a for a, m in enumerate(J)}
        self.fixed = {p: np.asarray(endpoints[p], dtype=float) for p in topology.endpoints}
        # each edge as (junction index or -1, fixed point or None) at both ends
        self.pairs = []
        for e in topology.edges:
            self.pairs.append((self._ref(e.v0), self._ref(e.v1), e.id))

    def _ref(self, v: str):
        return (self.idx[v], None) if v in self.idx else (-1, self.fixed[v])

    @staticmethod
    def _pos(x: np.ndarray, ref) -> np.ndarray:
        return x[ref[0]] if ref[0] >= 0 else ref[1]

    def lengths(self, x: np.ndarray) -> np.ndarray:
        return np.array([np.hypot(*(self._pos(x, b) - self._pos(x, a))) for a, b, _ in self.pairs])

    def value_and_grad(self, x: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
        g = np.zeros_like(x)
        lens = np.empty(len(self.pairs))
        for n, (a, b, _) in enumerate(self.pairs):
            d = self._pos(x, b) - self._pos(x, a)
            ln = math.hypot(d[0], d[1])
            lens[n] = ln
            if ln == 0.0:
                continue
            u = d / ln
            if a[0] >= 0:
                g[a[0]] -= u
            if b[0] >= 0:
                g[b[0]] += u
        return float(lens.sum()), g, lens


def descend_length(
    topology: NetworkTopology,
    endpoints: Mapping[str, np.ndarray],
    init: Mapping[str, np.ndarray] | None = None,
    tol: float = 1e-10,
    max_iter: int = 200_000,
    collapse_factor: float = 1e-6,
    armijo: float = 1e-4,
) -> StraightNetwork:
    """Minimize total length over junction positions.

    Parameters
    ----------
    topology, endpoints
        Fixed graph and endpoint positions.
    init
        Starting junction positions.  Defaults to the harmonic placement
        (every junction at the mean of its neighbours).
    tol
        Target for the largest per-junction gradient norm.
    collapse_factor
        An edge shorter than ``collapse_factor`` times the endpoint bounding
        box diameter raises :class:`EdgeCollapse`.

    Raises
    ------
    EdgeCollapse, NoConvergence
    """
    endpoints = {p: np.asarray(endpoints[p], dtype=float) for p in topology.endpoints}
    if topology.endpoints:
        pts = np.array(list(endpoints.values()))
        diam = float(np.hypot(*(pts.max(axis=0) - pts.min(axis=0))))
    else:
        diam = 1.0
    floor = collapse_factor * max(diam, 1e-300)
    if not topology.junctions:
        return StraightNetwork(topology, {}, endpoints)

    F = _LengthFunctional(topology, endpoints)
    if init is None:
        x = _harmonic_init(topology, endpoints)
    else:
        x = np.array([np.asarray(init[m], dtype=float) for m in topology.junctions])
    L, g, lens = F.value_and_grad(x)
    if np.any(lens <= floor):
        raise PreconditionViolation("initial junction positions induce a degenerate edge")

    alpha = 0.1 * diam
    for it in range(max_iter):
        gn = np.hypot(g[:, 0], g[:, 1])
        if gn.max() <= tol:
            break
        g2 = float(np.sum(g * g))
        alpha = min(2.0 * alpha, diam)
        while True:
            xn = x - alpha * g
            Ln, gnew, lens = F.value_and_grad(xn)
            decrease = armijo * alpha * g2
            if decrease >= 8 * EPS * abs(L):
                if Ln <= L - decrease:
                    break
            elif np.sum(gnew * gnew) < g2:
                # below the rounding level of L the Armijo test only sees noise,
                # so steps are judged by the gradient they produce
                break
            alpha *= 0.5
            if alpha < 1e-300:
                raise NoConvergence("line search failed to find a decrease")
        x, L, g = xn, Ln, gnew
        short = int(np.argmin(lens))
        if lens[short] < floor:
            raise EdgeCollapse(
                f"edge {topology.edges[short].id!r} fell below {floor:.3e} during descent",
                edge=topology.edges[short].id,
            )
    else:
        raise NoConvergence(f"gradient norm {gn.max():.3e} > tol after {max_iter} iterations")
    logger.debug("descend_length converged in %d iterations, L=%.17g", it, L)
    return StraightNetwork(
        topology, {m: x[a].copy() for a, m in enumerate(topology.junctions)}, endpoints
    )


# ----------------------------------------------------------------------
# closed forms and families
# ----------------------------------------------------------------------


def _rot(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def fermat_length(A, B, C) -> float:
    """Length of the shortest tree joining three points.

    When every angle of the triangle is below 2π/3 this is ``|C - T|``,
    where ``T`` is the apex of the equilateral triangle erected on ``AB``
    away from ``C`` (``T = A + R(-π/3)(B - A)`` for counterclockwise ``ABC``).
    Otherwise the tree degenerates to the two sides at the wide vertex.
    """
    P = [np.asarray(p, dtype=float) for p in (A, B, C)]
    d = {
        (0, 1): math.dist(P[0], P[1]),
        (0, 2): math.dist(P[0], P[2]),
        (1, 2): math.dist(P[1], P[2]),
    }
    if max(d.values()) == 0.0:
        raise PreconditionViolation("all three points coincide")
    if min(d.values()) == 0.0:
        return max(d.values())
    for v in range(3):
        a, b = [w for w in range(3) if w != v]
        u1, u2 = P[a] - P[v], P[b] - P[v]
        cosang = float(np.dot(u1, u2)) / (np.hypot(*u1) * np.hypot(*u2))
        if cosang <= -0.5:
            return d[tuple(sorted((v, a)))] + d[tuple(sorted((v, b)))]
    Av, Bv, Cv = P
    cross = (Bv[0] - Av[0]) * (Cv[1] - Av[1]) - (Bv[1] - Av[1]) * (Cv[0] - Av[0])
    T = Av + _rot(-math.pi / 3 if cross > 0 else math.pi / 3) @ (Bv - Av)
    return float(np.hypot(*(Cv - T)))


def fermat_point(A, B, C) -> np.ndarray:
    """The point realizing :func:`fermat_length` (the junction or the wide vertex)."""
    P = [np.asarray(p, dtype=float) for p in (A, B, C)]
    for v in range(3):
        a, b = [w for w in range(3) if w != v]
        u1, u2 = P[a] - P[v], P[b] - P[v]
        n1, n2 = np.hypot(*u1), np.hypot(*u2)
        if n1 == 0 or n2 == 0 or np.dot(u1, u2) / (n1 * n2) <= -0.5:
            return P[v].copy()
    sn = descend_length(
        triod_topology(), {"P0": P[0], "P1": P[1], "P2": P[2]}, tol=1e-13
    )
    return np.asarray(sn.junction_positions["O"])


def hexagon_web(inner_scale: float, outer_radius: float = 1.0) -> StraightNetwork:
    """Regular hexagon of circumradius ``inner_scale*outer_radius`` with six spokes.

    Sides ``h0..h5`` run counterclockwise from junction ``J_k`` to ``J_{k+1}``;
    spokes ``s0..s5`` run from ``J_k`` out to the endpoint ``P_k``.  Every
    member of the family has total length ``6*outer_radius``.
    """
    if not 0.0 < inner_scale < 1.0:
        raise PreconditionViolation("inner_scale must lie in (0, 1)")
    verts = [(f"J{k}", JUNCTION) for k in range(6)] + [(f"P{k}", ENDPOINT) for k in range(6)]
    edges = [(f"h{k}", f"J{k}", f"J{(k + 1) % 6}") for k in range(6)]
    edges += [(f"s{k}", f"J{k}", f"P{k}") for k in range(6)]
    topo = NetworkTopology(verts, edges)
    ang = [k * math.pi / 3 for k in range(6)]
    unit = [np.array([math.cos(a), math.sin(a)]) for a in ang]
    r_in = inner_scale * outer_radius
    junctions = {f"J{k}": r_in * unit[k] for k in range(6)}
    endpoints = {f"P{k}": outer_radius * unit[k] for k in range(6)}
    return StraightNetwork(topo, junctions, endpoints)


HEXAGON_LOOP = [(f"h{k}", False) for k in range(6)]


def to_network(sn: StraightNetwork, M: int) -> Network:
    """Sample every straight edge at constant speed with ``M + 1`` points."""
    if M < 4:
        raise ValueError("M must be at least 4")
    x = np.linspace(0.0, 1.0, M + 1)[:, None]
    curves = []
    for e in sn.topology.edges:
        a, b = sn.position(e.v0), sn.position(e.v1)
        c = (1.0 - x) * a + x * b
        c[0], c[-1] = a, b
        curves.append(c)
    return build_network(sn.topology, curves)


def standard_triod(M: int = 16) -> Network:
    """Minimal triod on the endpoints (-1,0), (1,0), (0,√3)."""
    s3 = math.sqrt(3.0)
    sn = StraightNetwork(
        triod_topology(),
        {"O": np.array([0.0, 1.0 / s3])},
        {"P0": np.array([-1.0, 0.0]), "P1": np.array([1.0, 0.0]), "P2": np.array([0.0, s3])},
    )
    return to_network(sn, M)
