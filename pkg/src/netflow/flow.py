"""Time stepping of the special flow ``γ_t = γ_xx / |γ_x|^2`` on networks.

Each step is linearly implicit: the coefficient ``1/|γ_x|^2`` is frozen at the
current state and the second difference is taken at the new state.  For
fixed end positions the interior of every edge solves one tridiagonal system,
and its solution is affine in the two end positions.  The unknown junction
positions are then found by Newton's method on the angle condition (sum of the
three inner unit tangents equals zero), where inner tangents use the same
one-sided three-point stencil as :func:`netflow.network.inner_tangent`.
Endpoint samples are pinned.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.linalg import solve_banded

from .errors import NewtonFailure, PreconditionViolation
from .network import (
    GeometryCache,
    Network,
    edge_lengths,
    geometry,
    junction_angle_residual,
    loop_area,
    parameter_derivatives,
)
from .trajectory import Frame, TrajectoryLog, config_hash

logger = logging.getLogger(__name__)

REACHED_TMAX = "ReachedTmax"
EDGE_COLLAPSE = "EdgeCollapse"
CURVATURE_BLOWUP = "CurvatureBlowup"
NEWTON_FAILURE = "NewtonFailure"


@dataclass(frozen=True)
class SolverConfig:
    dt: float = 1e-3
    M: int | None = None
    newton_tol: float = 1e-12
    newton_max_iter: int = 30
    min_edge_length: float = 1e-4
    max_curvature_sup: float = 1e3
    t_max: float = 1.0
    log_stride: int = 1
    frame_stride: int = 0
    loops: Mapping[str, tuple] = field(default_factory=dict)

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        for name in ("newton_tol", "min_edge_length", "max_curvature_sup"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.t_max < 0:
            raise ValueError("t_max must be non-negative")
        if self.log_stride < 1:
            raise ValueError("log_stride must be at least 1")

    def to_dict(self) -> dict:
        return {
            "dt": self.dt,
            "M": self.M,
            "newton_tol": self.newton_tol,
            "newton_max_iter": self.newton_max_iter,
            "min_edge_length": self.min_edge_length,
            "max_curvature_sup": self.max_curvature_sup,
            "t_max": self.t_max,
            "log_stride": self.log_stride,
            "frame_stride": self.frame_stride,
            "loops": {k: [list(c) for c in v] for k, v in self.loops.items()},
        }


@dataclass(frozen=True)
class StopReason:
    kind: str
    t: float
    edge: str | None = None

    def __str__(self) -> str:
        return f"{self.kind}({self.edge}) at t={self.t:.6g}" if self.edge else f"{self.kind} at t={self.t:.6g}"


@dataclass(frozen=True, eq=False)
class FlowState:
    t: float
    network: Network
    cache: GeometryCache
    int_k2: np.ndarray
    lengths: np.ndarray
    angle_residuals: Mapping[str, float]
    lambdas: Mapping[tuple[str, str], float]
    velocity: tuple[np.ndarray, ...] | None = None
    step_index: int = 0

    @property
    def total_length(self) -> float:
        return math.fsum(self.lengths)

    @property
    def sup_k(self) -> float:
        return self.cache.sup_ktilde()


def make_state(network: Network, t: float = 0.0, velocity=None, step_index: int = 0) -> FlowState:
    """Wrap a network with its geometry and diagnostics."""
    cache = geometry(network)
    lam = {}
    topo = network.topology
    for m, ends in topo.incidence.items():
        for ee in ends:
            tau = cache[ee.edge].tau[-1 if ee.end else 0]
            v = velocity[ee.edge][-1 if ee.end else 0] if velocity is not None else np.zeros(2)
            lam[(m, topo.edges[ee.edge].id)] = float(np.dot(v, tau))
    return FlowState(
        t=t,
        network=network,
        cache=cache,
        int_k2=cache.int_k2(),
        lengths=edge_lengths(network),
        angle_residuals=junction_angle_residual(network),
        lambdas=lam,
        velocity=velocity,
        step_index=step_index,
    )


# ----------------------------------------------------------------------
# one step
# ----------------------------------------------------------------------


def _edge_response(samples: np.ndarray, dt: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Interior solution of one edge as ``base + G0 ⊗ P0 + G1 ⊗ P1``."""
    M = samples.shape[0] - 1
    h = 1.0 / M
    d = (samples[2:] - samples[:-2]) / (2 * h)
    c = dt / (h * h * np.einsum("ij,ij->i", d, d))
    n = M - 1
    ab = np.zeros((3, n))
    ab[0, 1:] = -c[:-1]
    ab[1] = 1.0 + 2.0 * c
    ab[2, :-1] = -c[1:]
    rhs = np.zeros((n, 4))
    rhs[:, :2] = samples[1:-1]
    rhs[0, 2] = c[0]
    rhs[-1, 3] = c[-1]
    sol = solve_banded((1, 1), ab, rhs, overwrite_ab=True, overwrite_b=True, check_finite=False)
    return sol[:, :2], sol[:, 2], sol[:, 3]


class _StepSystem:
    """Per-step data: edge responses and the junction Newton problem."""

    def __init__(self, network: Network, dt: float):
        self.net = network
        topo = network.topology
        self.topo = topo
        self.jidx = {m: a for a, m in enumerate(topo.junctions)}
        self.resp = [_edge_response(c.samples, dt) for c in network.curves]
        # fixed end positions; junction entries are placeholders
        self.ends = []
        for i, c in enumerate(network.curves):
            self.ends.append([c.samples[0].copy(), c.samples[-1].copy()])
        # stencil data for every junction edge-end
        self.stencils = []
        for m, incs in topo.incidence.items():
            for ee in incs:
                base, G0, G1 = self.resp[ee.edge]
                if ee.end == 0:
                    n1, n2, Gn, Gf = 0, 1, G0, G1
                else:
                    n1, n2, Gn, Gf = -1, -2, G1, G0
                a = -3.0 + 4.0 * Gn[n1] - Gn[n2]
                b = 4.0 * Gf[n1] - Gf[n2]
                r = 4.0 * base[n1] - base[n2]
                far = topo.vertex_at(ee.edge, 1 - ee.end)
                self.stencils.append((self.jidx[m], a, b, r, self.jidx.get(far, -1), ee))

    def far_point(self, z: np.ndarray, far: int, ee) -> np.ndarray:
        if far >= 0:
            return z[far]
        return self.ends[ee.edge][1 - ee.end]

    def residual(self, z: np.ndarray, with_jacobian: bool = True):
        nJ = z.shape[0]
        F = np.zeros((nJ, 2))
        Jac = np.zeros((2 * nJ, 2 * nJ)) if with_jacobian else None
        for m, a, b, r, far, ee in self.stencils:
            u = a * z[m] + b * self.far_point(z, far, ee) + r
            nu = math.hypot(u[0], u[1])
            t = u / nu
            F[m] += t
            if with_jacobian:
                P = (np.eye(2) - np.outer(t, t)) / nu
                Jac[2 * m : 2 * m + 2, 2 * m : 2 * m + 2] += a * P
                if far >= 0:
                    Jac[2 * m : 2 * m + 2, 2 * far : 2 * far + 2] += b * P
        return F, Jac

    def assemble(self, z: np.ndarray) -> list[np.ndarray]:
        out = []
        for i, (base, G0, G1) in enumerate(self.resp):
            P0, P1 = self.ends[i]
            v0, v1 = self.topo.vertex_at(i, 0), self.topo.vertex_at(i, 1)
            if v0 in self.jidx:
                P0 = z[self.jidx[v0]]
            if v1 in self.jidx:
                P1 = z[self.jidx[v1]]
            interior = base + G0[:, None] * P0 + G1[:, None] * P1
            out.append(np.vstack([P0, interior, P1]))
        return out


def _solve_junctions(sys: _StepSystem, z0: np.ndarray, tol: float, max_iter: int) -> np.ndarray:
    z = z0.copy()
    if z.shape[0] == 0:
        return z
    for it in range(max_iter + 1):
        F, J = sys.residual(z)
        res = float(np.max(np.hypot(F[:, 0], F[:, 1])))
        if res <= tol:
            return z
        if it == max_iter:
            break
        try:
            dz = np.linalg.solve(J, F.ravel())
        except np.linalg.LinAlgError:
            raise NewtonFailure("singular junction Jacobian") from None
        if not np.all(np.isfinite(dz)):
            raise NewtonFailure("non-finite Newton update")
        z = z - dz.reshape(z.shape)
    raise NewtonFailure(f"angle residual {res:.3e} > {tol:.1e} after {max_iter} Newton iterations")


def advance(network: Network, dt: float, newton_tol: float = 1e-12, newton_max_iter: int = 30) -> list[np.ndarray]:
    """Samples after one linearly implicit step (no diagnostics)."""
    sys = _StepSystem(network, dt)
    z0 = np.array([network.junction_position(m) for m in network.topology.junctions]).reshape(-1, 2)
    z = _solve_junctions(sys, z0, newton_tol, newton_max_iter)
    return sys.assemble(z)


def step(state: FlowState, config: SolverConfig) -> FlowState:
    """Advance ``state`` by ``config.dt``.

    Raises
    ------
    NewtonFailure
        When the junction Newton iteration does not reach ``newton_tol``.
    """
    new = advance(state.network, config.dt, config.newton_tol, config.newton_max_iter)
    old = state.network.all_samples()
    vel = tuple((a - b) / config.dt for a, b in zip(new, old))
    net = state.network.with_samples(new)
    return make_state(net, state.t + config.dt, velocity=vel, step_index=state.step_index + 1)


# ----------------------------------------------------------------------
# projection and compatibility
# ----------------------------------------------------------------------


def project_to_regular(network: Network, tol: float = 1e-12, max_iter: int = 30, gate: float = 0.2) -> Network:
    """Move the two samples next to every junction end until the angles are 2π/3.

    Uses minimum-norm Gauss-Newton steps, so the correction is as small as
    possible; junction samples and all other samples stay fixed.
    """
    res0 = junction_angle_residual(network)
    if not res0 or max(res0.values()) <= tol:
        return network
    if max(res0.values()) > gate:
        worst = max(res0, key=res0.get)
        raise PreconditionViolation(
            f"junction {worst!r} has angle residual {res0[worst]:.3g} > {gate}; not a near-regular network"
        )
    topo = network.topology
    samples = [s.copy() for s in network.all_samples()]
    # unknowns: for each junction edge-end, samples at offsets 1 and 2 (4 scalars)
    slots = []
    for m, incs in topo.incidence.items():
        for ee in incs:
            idx = (1, 2) if ee.end == 0 else (-2, -3)
            slots.append((m, ee, idx))
    jpos = {m: a for a, m in enumerate(topo.junctions)}
    nJ = len(jpos)
    for it in range(max_iter + 1):
        F = np.zeros((nJ, 2))
        Jac = np.zeros((2 * nJ, 4 * len(slots)))
        for s_i, (m, ee, (i1, i2)) in enumerate(slots):
            g = samples[ee.edge]
            j0 = 0 if ee.end == 0 else -1
            u = -3 * g[j0] + 4 * g[i1] - g[i2]
            nu = math.hypot(*u)
            t = u / nu
            a = jpos[m]
            F[a] += t
            P = (np.eye(2) - np.outer(t, t)) / nu
            Jac[2 * a : 2 * a + 2, 4 * s_i : 4 * s_i + 2] = 4 * P
            Jac[2 * a : 2 * a + 2, 4 * s_i + 2 : 4 * s_i + 4] = -P
        res = float(np.max(np.hypot(F[:, 0], F[:, 1])))
        if res <= tol:
            return network.with_samples(samples)
        if it == max_iter:
            break
        dz = Jac.T @ np.linalg.solve(Jac @ Jac.T, F.ravel())
        for s_i, (m, ee, (i1, i2)) in enumerate(slots):
            samples[ee.edge][i1] -= dz[4 * s_i : 4 * s_i + 2]
            samples[ee.edge][i2] -= dz[4 * s_i + 2 : 4 * s_i + 4]
    raise NewtonFailure(f"projection stalled at angle residual {res:.3e}")


def compatibility_residual(state: FlowState | Network) -> dict[str, dict[str, float]]:
    """Second-order compatibility defects at endpoints and junctions.

    Endpoints report ``|γ_xx|``; junctions report the largest pairwise
    difference of ``γ_xx/|γ_x|^2`` among the three incident edge-ends.
    """
    net = state.network if isinstance(state, FlowState) else state
    topo = net.topology
    d = [parameter_derivatives(c.samples) for c in net.curves]
    out: dict[str, dict[str, float]] = {"endpoints": {}, "junctions": {}}
    for p, ee in topo.endpoint_edge.items():
        j = -1 if ee.end else 0
        out["endpoints"][p] = float(np.hypot(*d[ee.edge][1][j]))
    for m, incs in topo.incidence.items():
        vals = []
        for ee in incs:
            j = -1 if ee.end else 0
            d1, d2 = d[ee.edge][0][j], d[ee.edge][1][j]
            vals.append(d2 / float(np.dot(d1, d1)))
        worst = max(float(np.hypot(*(vals[a] - vals[b]))) for a in range(3) for b in range(a + 1, 3))
        out["junctions"][m] = worst
    return out


def resample(network: Network, M: int) -> Network:
    """Re-sample every edge on a grid with ``M`` segments (cubic spline in x)."""
    if M == network.M:
        return network
    x_old = np.linspace(0.0, 1.0, network.M + 1)
    x_new = np.linspace(0.0, 1.0, M + 1)
    out = []
    for c in network.curves:
        s = CubicSpline(x_old, c.samples, axis=0)(x_new)
        s[0], s[-1] = c.samples[0], c.samples[-1]
        out.append(s)
    return network.with_samples(out)


# ----------------------------------------------------------------------
# runs
# ----------------------------------------------------------------------


def log_columns(network: Network, loops: Mapping[str, Sequence] = ()) -> list[str]:
    topo = network.topology
    cols = ["t", "L_total"] + [f"L_{e.id}" for e in topo.edges]
    cols += ["int_k2", "sup_k", "max_angle_residual"]
    for m, incs in topo.incidence.items():
        cols += [f"lambda_{m}_{topo.edges[ee.edge].id}" for ee in incs]
    cols += [f"area_{name}" for name in loops]
    return cols


def log_row(state: FlowState, loops: Mapping[str, Sequence] = ()) -> list[float]:
    topo = state.network.topology
    row = [state.t, state.total_length, *state.lengths.tolist()]
    row += [float(np.sum(state.int_k2)), state.sup_k, max(state.angle_residuals.values(), default=0.0)]
    for m, incs in topo.incidence.items():
        row += [state.lambdas[(m, topo.edges[ee.edge].id)] for ee in incs]
    row += [loop_area(state.network, cyc) for cyc in loops.values()]
    return row


def _stop_check(prev: FlowState, state: FlowState, config: SolverConfig) -> StopReason | None:
    topo = state.network.topology
    short = int(np.argmin(state.lengths))
    if state.lengths[short] < config.min_edge_length:
        return StopReason(EDGE_COLLAPSE, state.t, topo.edges[short].id)
    # a segment that turns around within one step signals a passed collapse
    for i, (a, b) in enumerate(zip(prev.network.all_samples(), state.network.all_samples())):
        da, db = np.diff(a, axis=0), np.diff(b, axis=0)
        if np.any(np.einsum("ij,ij->i", da, db) <= 0.0):
            return StopReason(EDGE_COLLAPSE, state.t, topo.edges[i].id)
    sup = [float(np.max(np.abs(g.ktilde))) for g in state.cache.edges]
    worst = int(np.argmax(sup))
    if not np.isfinite(sup[worst]) or sup[worst] > config.max_curvature_sup:
        return StopReason(CURVATURE_BLOWUP, state.t, topo.edges[worst].id)
    return None


def _failure_reason(before: FlowState | None, prev: FlowState) -> StopReason:
    """Classify a failed step.

    If an edge was shrinking fast enough that its length extrapolates to zero
    within the failed step, the failure is the collapse of that edge passing
    between two time levels.
    """
    if before is not None:
        ahead = 2.0 * prev.lengths - before.lengths
        worst = int(np.argmin(ahead))
        if ahead[worst] <= 0.0:
            return StopReason(EDGE_COLLAPSE, prev.t, prev.network.topology.edges[worst].id)
    return StopReason(NEWTON_FAILURE, prev.t)


def run(
    initial: Network,
    config: SolverConfig,
    callback=None,
    meta: Mapping | None = None,
) -> tuple[TrajectoryLog, StopReason]:
    """Step from ``initial`` until ``t_max`` or a singularity proxy triggers.

    ``callback(state)``, if given, is called on the initial state and after
    every step.  It may return a replacement network (used to enforce
    symmetries); returning ``None`` keeps the state.
    """
    net = initial if config.M is None else resample(initial, config.M)
    net = project_to_regular(net, tol=config.newton_tol)
    state = make_state(net)
    log = TrajectoryLog(
        columns=log_columns(net, config.loops),
        config_hash=config_hash({"solver": config.to_dict(), **(meta or {})}),
        meta={"edges": [e.id for e in net.topology.edges]},
    )
    if callback is not None:
        fixed = callback(state)
        if fixed is not None:
            state = make_state(fixed)
    log.append(log_row(state, config.loops))
    if config.frame_stride:
        log.frames.append(Frame(state.t, state.network.all_samples()))
    n_steps = int(round(config.t_max / config.dt))
    reason = StopReason(REACHED_TMAX, state.t)
    before = None
    for n in range(1, n_steps + 1):
        prev = state
        try:
            state = step(state, config)
        except NewtonFailure:
            reason = _failure_reason(before, prev)
            break
        before = prev
        state = replace(state, t=n * config.dt)
        if callback is not None:
            fixed = callback(state)
            if fixed is not None:
                vel = tuple((a - b) / config.dt for a, b in zip(fixed.all_samples(), prev.network.all_samples()))
                state = make_state(fixed, state.t, velocity=vel, step_index=state.step_index)
        stop = _stop_check(prev, state, config)
        last = n == n_steps or stop is not None
        if n % config.log_stride == 0 or last:
            log.append(log_row(state, config.loops))
        if config.frame_stride and (n % config.frame_stride == 0 or last):
            log.frames.append(Frame(state.t, state.network.all_samples()))
        if stop is not None:
            reason = stop
            break
    else:
        reason = StopReason(REACHED_TMAX, state.t)
    if log.rows[-1][0] < state.t:
        log.append(log_row(state, config.loops))
    log.meta["stop"] = str(reason)
    log.meta["final_network"] = state.network
    logger.info("run finished: %s", reason)
    return log, reason
