"""The symmetric five-curve network with a vanishing central edge.

Four convex arcs join the endpoints ``(±a, ±h)`` to the two junctions of a
vertical central segment.  Each arc is a circular arc of radius ``2a`` that
leaves its endpoint horizontally and meets the central segment at 120
degrees, so the arc rises by ``d = a(2 - √3)`` and ``h = L0/2 + d``.

When ``h = b = a/√3`` the diagonals of the endpoint rectangle cross at
``π/3`` and ``2π/3``; the central edge then shrinks for all times without
vanishing.  Shorter central edges collapse in finite time, longer ones settle
on a regular minimal network.

The module also provides the monitors used to follow that run, heat-equation
barriers for the graph of an arc and a check of the weighted monotonicity
identity for evolving curves.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.linalg import solve_banded

from .errors import GeometryInfeasible, NotAGraph, TimeOrder
from .flow import EDGE_COLLAPSE, REACHED_TMAX, SolverConfig, StopReason, advance, project_to_regular, run
from .network import JUNCTION, ENDPOINT, Network, NetworkTopology, build_network, edge_geometry
from .trajectory import TrajectoryLog

logger = logging.getLogger(__name__)

SQRT3 = math.sqrt(3.0)
OMEGA = np.array([0.0, 1.0])

CENTRAL, LOWER_LEFT, LOWER_RIGHT, UPPER_LEFT, UPPER_RIGHT = range(5)


def arc_rise(a: float) -> float:
    return a * (2.0 - SQRT3)


def critical_length(a: float = 1.0, b: float = 1.0 / SQRT3) -> float:
    """Central length whose endpoint rectangle has height ``2b``."""
    return 2.0 * (b - arc_rise(a))


@dataclass(frozen=True)
class RectExampleConfig:
    a: float = 1.0
    b: float = 1.0 / SQRT3
    L0: float | None = None
    M: int = 64
    dt: float = 1e-3
    t_max: float = 10.0
    symmetry_enforced: bool = True
    collapse_floor: float = 1e-12
    log_stride: int = 10
    smoothing_steps: int = 5
    g: float | None = None

    @property
    def central_length(self) -> float:
        return critical_length(self.a, self.b) if self.L0 is None else float(self.L0)

    @property
    def height(self) -> float:
        return self.central_length / 2.0 + arc_rise(self.a)

    @property
    def slope(self) -> float:
        """Neumann slope of the arc graphs at the junction side."""
        return 1.0 / SQRT3 if self.g is None else float(self.g)

    def diagonal_cosine(self) -> float:
        """Cosine of the angle between the vectors ``(a, b)`` and ``(a, -b)``."""
        return (self.a**2 - self.b**2) / (self.a**2 + self.b**2)

    def to_dict(self) -> dict:
        return {
            "a": self.a,
            "b": self.b,
            "L0": self.central_length,
            "M": self.M,
            "dt": self.dt,
            "t_max": self.t_max,
            "symmetry_enforced": self.symmetry_enforced,
            "collapse_floor": self.collapse_floor,
            "log_stride": self.log_stride,
            "smoothing_steps": self.smoothing_steps,
            "g": self.slope,
        }


def rect_topology() -> NetworkTopology:
    verts = [("Jb", JUNCTION), ("Jt", JUNCTION)] + [(f"P{i}", ENDPOINT) for i in range(1, 5)]
    edges = [
        ("e0", "Jb", "Jt"),
        ("e1", "P1", "Jb"),
        ("e2", "P2", "Jb"),
        ("e3", "P3", "Jt"),
        ("e4", "P4", "Jt"),
    ]
    return NetworkTopology(verts, edges)


def _reflect(samples: np.ndarray, sx: float, sy: float) -> np.ndarray:
    return samples * np.array([sx, sy])


def symmetrize(network: Network) -> Network:
    """Project onto networks symmetric under both axis reflections.

    The four arcs are averaged through the reflections that map them onto
    the lower-left arc; the central edge is made vertical and odd in ``y``.
    """
    s = network.all_samples()
    arc = 0.25 * (
        s[LOWER_LEFT]
        + _reflect(s[LOWER_RIGHT], -1, 1)
        + _reflect(s[UPPER_LEFT], 1, -1)
        + _reflect(s[UPPER_RIGHT], -1, -1)
    )
    c = s[CENTRAL]
    y = 0.5 * (c[:, 1] - c[::-1, 1])
    central = np.column_stack([np.zeros_like(y), y])
    arc[-1] = central[0]
    arc[0] = s[LOWER_LEFT][0]
    curves = [
        central,
        arc,
        _reflect(arc, -1, 1),
        _reflect(arc, 1, -1),
        _reflect(arc, -1, -1),
    ]
    return build_network(network.topology, curves)


def mirror_error(network: Network) -> float:
    """Largest sample distance between the network and its reflected copies."""
    s = network.all_samples()
    err = float(np.max(np.abs(s[CENTRAL][:, 0])))
    err = max(err, float(np.max(np.abs(s[CENTRAL][:, 1] + s[CENTRAL][::-1, 1]))))
    for other, (sx, sy) in ((LOWER_RIGHT, (-1, 1)), (UPPER_LEFT, (1, -1)), (UPPER_RIGHT, (-1, -1))):
        err = max(err, float(np.max(np.abs(_reflect(s[other], sx, sy) - s[LOWER_LEFT]))))
    return err


def build_rect_initial(cfg: RectExampleConfig) -> Network:
    """Symmetric initial network with convex circular arcs.

    Raises
    ------
    GeometryInfeasible
        For non-positive sizes, or when the smoothed arcs fail to tilt upward
        at their endpoints.
    """
    L0 = cfg.central_length
    if not (cfg.a > 0 and cfg.b > 0 and math.isfinite(L0) and L0 > 0):
        raise GeometryInfeasible("a, b and the central length must be positive")
    if cfg.M % 2:
        raise GeometryInfeasible("M must be even")
    a, M = cfg.a, cfg.M
    h = cfg.height
    R = 2.0 * a
    theta = np.linspace(-math.pi / 2, -math.pi / 3, M + 1)
    arc = np.column_stack([-a + R * np.cos(theta), -h + R + R * np.sin(theta)])
    arc[0] = (-a, -h)
    arc[-1] = (0.0, -L0 / 2)
    x = np.linspace(0.0, 1.0, M + 1)
    central = np.column_stack([np.zeros(M + 1), -L0 / 2 + L0 * x])
    curves = [central, arc, _reflect(arc, -1, 1), _reflect(arc, 1, -1), _reflect(arc, -1, -1)]
    net = build_network(rect_topology(), curves)
    net = symmetrize(project_to_regular(net))
    for _ in range(cfg.smoothing_steps):
        net = symmetrize(net.with_samples(advance(net, cfg.dt / 10)))
    net = project_to_regular(net)
    g1 = edge_geometry(net.curves[LOWER_LEFT].samples)
    if not float(g1.tau[0] @ OMEGA) > 0:
        raise GeometryInfeasible("arc tangent at the endpoint does not point upward")
    return net


# ----------------------------------------------------------------------
# monitors
# ----------------------------------------------------------------------


def junction_curvature_fit(samples: np.ndarray, ktilde: np.ndarray, points: int = 8, degree: int = 3) -> tuple[float, float]:
    """``k̃`` and ``∂_s k̃`` at the last sample, extrapolated from interior samples.

    One-sided differences of a curvature that is itself one-sided at the
    boundary lose an order of accuracy; a cubic least-squares fit in
    arclength through the ``points`` interior samples nearest the end keeps
    the second-order accuracy of the central curvature stencil.
    """
    M = len(ktilde) - 1
    s = np.concatenate([[0.0], np.cumsum(np.hypot(*np.diff(samples, axis=0).T))])
    s = s - s[-1]
    sel = slice(M - points, M)
    c = np.polyfit(s[sel], ktilde[sel], degree)
    return float(np.polyval(c, 0.0)), float(np.polyval(np.polyder(c), 0.0))


def arc_quantities(samples: np.ndarray, velocity: np.ndarray | None) -> dict[str, np.ndarray]:
    """``k̃``, ``v = 1/⟨ν, ω⟩``, ``λ`` and ``∂_s k̃`` along one arc.

    At the two end samples the curvature is taken as the normal velocity,
    which is what the scheme imposes there; interior samples use the
    geometric curvature.
    """
    g = edge_geometry(samples)
    kt = g.ktilde.copy()
    lam = np.zeros(len(kt))
    if velocity is not None:
        vn = np.einsum("ij,ij->i", velocity, g.nu)
        kt[0], kt[-1] = vn[0], vn[-1]
        lam = np.einsum("ij,ij->i", velocity, g.tau)
    v = 1.0 / (g.nu @ OMEGA)
    k_end, dks_end = junction_curvature_fit(samples, g.ktilde)
    return {
        "ktilde": kt,
        "k_junction_fit": k_end,
        "ds_k_junction_fit": dks_end,
        "v": v,
        "lambda": lam,
        "tau": g.tau,
        "nu": g.nu,
    }


@dataclass
class ExampleMonitors:
    t: list[float] = field(default_factory=list)
    v_min: list[float] = field(default_factory=list)
    v_max: list[float] = field(default_factory=list)
    k_min: list[float] = field(default_factory=list)
    g_max: list[float] = field(default_factory=list)
    central_length: list[float] = field(default_factory=list)
    central_x_max: list[float] = field(default_factory=list)
    junction_slope: list[float] = field(default_factory=list)
    lambda_junction: list[float] = field(default_factory=list)
    k_junction: list[float] = field(default_factory=list)
    tangential_residual: list[float] = field(default_factory=list)
    neumann_residual: list[float] = field(default_factory=list)
    tilt_start: list[float] = field(default_factory=list)
    mirror_error: list[float] = field(default_factory=list)
    arc_frames: list[np.ndarray] = field(default_factory=list)

    COLUMNS = (
        "t",
        "v_min",
        "v_max",
        "k_min",
        "g_max",
        "central_length",
        "central_x_max",
        "junction_slope",
        "lambda_junction",
        "k_junction",
        "tangential_residual",
        "neumann_residual",
        "tilt_start",
        "mirror_error",
    )

    def record(self, t: float, network: Network, velocity: Sequence[np.ndarray] | None) -> None:
        arc = network.curves[LOWER_LEFT].samples
        q = arc_quantities(arc, None if velocity is None else velocity[LOWER_LEFT])
        kt, v, lam = q["ktilde"], q["v"], q["lambda"]
        c = network.curves[CENTRAL].samples
        self.t.append(float(t))
        self.v_min.append(float(v.min()))
        self.v_max.append(float(v.max()))
        self.k_min.append(float(kt.min()))
        self.g_max.append(float(np.max((kt * v) ** 2)))
        self.central_length.append(float(np.sum(np.hypot(*np.diff(c, axis=0).T))))
        self.central_x_max.append(float(np.max(np.abs(c[:, 0]))))
        tau1 = q["tau"][-1]
        self.junction_slope.append(float(tau1[1] / tau1[0]))
        self.lambda_junction.append(float(lam[-1]))
        self.k_junction.append(float(kt[-1]))
        self.tangential_residual.append(float(abs(lam[-1] - kt[-1] / SQRT3)))
        self.neumann_residual.append(float(abs(q["ds_k_junction_fit"] + lam[-1] * q["k_junction_fit"])))
        self.tilt_start.append(float(q["tau"][0] @ OMEGA))
        self.mirror_error.append(mirror_error(network))
        self.arc_frames.append(arc.copy())

    def as_log(self) -> TrajectoryLog:
        log = TrajectoryLog(columns=list(self.COLUMNS))
        for n in range(len(self.t)):
            log.append([getattr(self, c)[n] for c in self.COLUMNS])
        return log


def check_v_bounds(monitors: ExampleMonitors, tol: float = 1e-6) -> bool:
    """Convexity and ``1 ≤ v ≤ 2/√3`` at every recorded frame."""
    if not monitors.t:
        return False
    return (
        min(monitors.k_min) >= -tol
        and min(monitors.v_min) >= 1.0 - tol
        and max(monitors.v_max) <= 2.0 / SQRT3 + tol
    )


def initial_velocity(network: Network, dt: float) -> list[np.ndarray]:
    """Velocity of the first implicit step, used for the monitors at ``t = 0``."""
    nxt = advance(network, dt)
    return [(b - a) / dt for a, b in zip(network.all_samples(), nxt)]


class _Recorder:
    """Run callback: optional symmetry projection plus monitor recording."""

    def __init__(self, cfg: RectExampleConfig, monitors: ExampleMonitors):
        self.cfg = cfg
        self.monitors = monitors
        self.prev: Network | None = None
        self.calls = 0

    def __call__(self, state):
        net = symmetrize(state.network) if self.cfg.symmetry_enforced else state.network
        if self.prev is None:
            vel = initial_velocity(net, self.cfg.dt)
        else:
            vel = [(b - a) / self.cfg.dt for a, b in zip(self.prev.all_samples(), net.all_samples())]
        if self.calls % self.cfg.log_stride == 0:
            self.monitors.record(state.t, net, vel)
        self.calls += 1
        self.prev = net
        return net if self.cfg.symmetry_enforced else None


@dataclass
class ExampleResult:
    log: TrajectoryLog
    monitors: ExampleMonitors
    reason: StopReason
    outcome: str
    config: RectExampleConfig


def classify(reason: StopReason, monitors: ExampleMonitors, config: RectExampleConfig) -> str:
    """``collapse``, ``converged`` or ``degenerate`` from the run's tail."""
    if reason.kind == EDGE_COLLAPSE:
        return "collapse"
    if reason.kind != REACHED_TMAX:
        return reason.kind
    lengths = np.array(monitors.central_length)
    if lengths[-1] > 0.5 * config.central_length * 1e-2 and lengths[-1] > 1e-3:
        return "converged"
    return "degenerate"


def run_example(cfg: RectExampleConfig, initial: Network | None = None, frame_stride: int = 0) -> ExampleResult:
    """Evolve the example and record its monitors every ``cfg.log_stride`` steps."""
    net = build_rect_initial(cfg) if initial is None else initial
    monitors = ExampleMonitors()
    solver = SolverConfig(
        dt=cfg.dt,
        t_max=cfg.t_max,
        min_edge_length=cfg.collapse_floor,
        max_curvature_sup=1e6,
        log_stride=cfg.log_stride,
        frame_stride=frame_stride,
    )
    rec = _Recorder(cfg, monitors)
    log, reason = run(net, solver, callback=rec, meta={"example": cfg.to_dict()})
    if monitors.t[-1] < log.t[-1]:
        final = log.meta["final_network"]
        vel = [(b - a) / cfg.dt for a, b in zip(rec.prev.all_samples(), final.all_samples())] if rec.prev else None
        monitors.record(log.t[-1], final, vel)
    outcome = classify(reason, monitors, cfg)
    logger.info("example L0=%.6g: %s (%s)", cfg.central_length, outcome, reason)
    return ExampleResult(log, monitors, reason, outcome, cfg)


# ----------------------------------------------------------------------
# heat barriers
# ----------------------------------------------------------------------


class HeatBarrier:
    """``∂_t u = c ∂_x² u`` on ``[0, a]`` with ``u(0) = 0`` and ``∂_x u(a) = g``.

    Crank–Nicolson on a uniform grid; the Neumann end uses a ghost node.
    Each requested step is split into substeps with ``c·dt/h² ≤ 1`` so the
    scheme keeps the discrete maximum principle.
    """

    def __init__(self, u0: np.ndarray, c: float, g: float, a: float = 1.0):
        u0 = np.asarray(u0, dtype=float)
        self.n = u0.shape[0] - 1
        self.h = a / self.n
        self.c = float(c)
        self.g = float(g)
        self.a = float(a)
        self.u = u0.copy()
        self.u[0] = 0.0
        self.t = 0.0
        self.x = np.linspace(0.0, a, self.n + 1)

    def _operator(self, r: float):
        n = self.n
        # unknowns u_1..u_n
        main = np.full(n, 1.0 + r)
        upper = np.full(n, -r / 2)
        lower = np.full(n, -r / 2)
        lower[-2] = -r  # ghost node doubles the coupling of the last row
        ab = np.zeros((3, n))
        ab[0, 1:] = upper[:-1]
        ab[1] = main
        ab[2, :-1] = lower[:-1]
        return ab

    def _laplacian(self, u: np.ndarray) -> np.ndarray:
        v = u[1:]
        left = u[:-1]
        right = np.empty_like(v)
        right[:-1] = u[2:]
        right[-1] = u[-2] + 2 * self.h * self.g
        return left - 2 * v + right

    def step(self, dt: float) -> None:
        nsub = max(1, math.ceil(self.c * dt / self.h**2 - 1e-12))
        tau = dt / nsub
        r = self.c * tau / self.h**2
        ab = self._operator(r)
        src = np.zeros(self.n)
        src[-1] = r * 2 * self.h * self.g
        for _ in range(nsub):
            rhs = self.u[1:] + 0.5 * r * self._laplacian(self.u) + 0.5 * src
            self.u[1:] = solve_banded((1, 1), ab, rhs)
            self.u[0] = 0.0
        self.t += dt

    def steady(self) -> np.ndarray:
        return self.g * self.x

    def distance(self) -> float:
        return float(np.max(np.abs(self.u - self.steady())))


def analytic_rates(c_values: Sequence[float], g: float, a: float = 1.0) -> dict[str, float]:
    """Slowest decay rates of the mixed Dirichlet–Neumann problem on ``[0, a]``."""
    mu = (math.pi / (2 * a)) ** 2
    return {"v": mu * c_values[0], "w": mu * c_values[1], "u": mu / (1.0 + g * g)}


def arc_graph(arc: np.ndarray, a: float, x: np.ndarray) -> np.ndarray:
    """Height of the lower-left arc above its endpoint as a function of ``x + a``.

    Raises
    ------
    NotAGraph
        If the abscissae are not strictly increasing.
    """
    xs, ys = arc[:, 0] + a, arc[:, 1] - arc[0, 1]
    if np.any(np.diff(xs) <= 0):
        raise NotAGraph("arc is not a graph over the horizontal axis")
    f = PchipInterpolator(xs, ys)
    return f(np.clip(x, xs[0], xs[-1]))


def _fit_rate(t: np.ndarray, dist: np.ndarray, lo: float, hi: float) -> float:
    sel = (dist > lo) & (dist < hi)
    if np.count_nonzero(sel) < 3:
        return float("nan")
    slope, _ = np.polyfit(t[sel], np.log(dist[sel]), 1)
    return float(-slope)


@dataclass
class BarrierReport:
    t: np.ndarray
    lower_gap: np.ndarray
    upper_gap: np.ndarray
    dist_u: np.ndarray
    dist_v: np.ndarray
    dist_w: np.ndarray
    rates: dict
    expected: dict
    tolerance: float

    @property
    def sandwich_holds(self) -> bool:
        return bool(np.all(self.lower_gap <= self.tolerance) and np.all(self.upper_gap <= self.tolerance))

    def rate_errors(self) -> dict[str, float]:
        return {k: abs(self.rates[k] - self.expected[k]) / self.expected[k] for k in self.expected}

    def as_log(self) -> TrajectoryLog:
        log = TrajectoryLog(columns=["t", "v_minus_u", "u_minus_w", "dist_u", "dist_v", "dist_w"])
        for row in zip(self.t, self.lower_gap, self.upper_gap, self.dist_u, self.dist_v, self.dist_w):
            log.append(row)
        return log


def heat_barrier_compare(
    times: Sequence[float],
    arcs: Sequence[np.ndarray],
    g: float,
    a: float = 1.0,
    dt: float = 1e-3,
    M: int = 64,
    n_grid: int = 128,
    diffusivities: tuple[float, float] = (0.25, 1.0),
    rate_window: tuple[float, float] = (1e-7, 1e-2),
) -> BarrierReport:
    """Compare the arc graph ``u`` with heat barriers started from ``u(0)``.

    ``dt`` and ``M`` describe the flow run and set the comparison tolerance
    ``5(dt + M⁻²)``.  Rates are fitted to ``log‖· − g x‖_∞`` on samples
    whose distance lies inside ``rate_window``.
    """
    x = np.linspace(0.0, a, n_grid + 1)
    times = np.asarray(times, dtype=float)
    u_frames = [arc_graph(arc, a, x) for arc in arcs]
    v = HeatBarrier(u_frames[0], diffusivities[0], g, a)
    w = HeatBarrier(u_frames[0], diffusivities[1], g, a)
    lower, upper, du, dv, dw = [], [], [], [], []
    steady = g * x
    for n, (t, u) in enumerate(zip(times, u_frames)):
        if n:
            span = t - times[n - 1]
            v.step(span)
            w.step(span)
        lower.append(float(np.max(v.u - u)))
        upper.append(float(np.max(u - w.u)))
        du.append(float(np.max(np.abs(u - steady))))
        dv.append(v.distance())
        dw.append(w.distance())
    du, dv, dw = map(np.array, (du, dv, dw))
    lo, hi = rate_window
    rates = {"u": _fit_rate(times, du, lo, hi), "v": _fit_rate(times, dv, lo, hi), "w": _fit_rate(times, dw, lo, hi)}
    return BarrierReport(
        t=times,
        lower_gap=np.array(lower),
        upper_gap=np.array(upper),
        dist_u=du,
        dist_v=dv,
        dist_w=dw,
        rates=rates,
        expected=analytic_rates(diffusivities, g, a),
        tolerance=5.0 * (dt + M**-2.0),
    )


# ----------------------------------------------------------------------
# weighted monotonicity identity
# ----------------------------------------------------------------------


def gaussian_density(t: float, p, t0: float, p0) -> np.ndarray | float:
    """Backward heat kernel ``(4π(t0-t))^{-1/2} exp(-|p-p0|²/(4(t0-t)))``.

    Raises
    ------
    TimeOrder
        If ``t >= t0``.
    """
    if not t < t0:
        raise TimeOrder("the kernel needs t < t0")
    p = np.asarray(p, dtype=float)
    d2 = np.sum((p - np.asarray(p0, dtype=float)) ** 2, axis=-1)
    out = np.exp(-d2 / (4.0 * (t0 - t))) / math.sqrt(4.0 * math.pi * (t0 - t))
    return float(out) if np.ndim(out) == 0 else out


def _ds_derivative(values: np.ndarray, speed: np.ndarray) -> np.ndarray:
    M = len(values) - 1
    return np.gradient(values, 1.0 / M, edge_order=2) / speed


@dataclass
class MonotonicityReport:
    t: np.ndarray
    integral: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    terms: dict
    scale: float

    @property
    def residual(self) -> np.ndarray:
        return np.abs(self.lhs - self.rhs)

    def relative(self) -> float:
        return float(np.max(self.residual) / self.scale) if self.scale > 0 else float(np.max(self.residual))


def monotonicity_residual(
    times: Sequence[float],
    curves: Sequence[np.ndarray],
    f: Callable[[int, np.ndarray], np.ndarray] | float | Sequence[np.ndarray],
    t0: float,
    p0,
) -> MonotonicityReport:
    """Both sides of the evolution identity for ``∫ (ρ∘γ) f ds`` along frames.

    ``times`` and ``curves`` are consecutive frames of one evolving curve,
    equally spaced in time.  ``f`` is a constant, a list of grid functions
    (one per frame) or a callable ``f(n, samples)``.  The left side is the
    centered difference of the integral; the right side is the quadrature of

        ∫ ρ (∂_t − ∂_s²) f − |k + (γ−p0)^⊥/(2(t0−t))|² ρ f ds
        + ∫ (∂_s λ − λ⟨γ−p0, τ⟩/(2(t0−t))) ρ f ds
        + [ρ ∂_s f − f ∂_s ρ] at the two ends,

    with ``λ`` the tangential part of the centered frame velocity.

    Raises
    ------
    TimeOrder
        If a frame time is not before ``t0``.
    """
    times = np.asarray(times, dtype=float)
    if np.any(times >= t0):
        raise TimeOrder("all frames must precede t0")
    if len(times) < 3:
        raise ValueError("need at least three frames")
    p0 = np.asarray(p0, dtype=float)
    if callable(f):
        fv = [np.asarray(f(n, c), dtype=float) for n, c in enumerate(curves)]
    elif np.ndim(f) == 0:
        fv = [np.full(c.shape[0], float(f)) for c in curves]
    else:
        fv = [np.asarray(x, dtype=float) for x in f]
    geo = [edge_geometry(c) for c in curves]
    I = np.array(
        [float(np.sum(gaussian_density(t, c, t0, p0) * fj * g.ds)) for t, c, fj, g in zip(times, curves, fv, geo)]
    )
    rows = {"heat": [], "shrinker": [], "tangential": [], "boundary": []}
    lhs = []
    for n in range(1, len(times) - 1):
        t = times[n]
        span = times[n + 1] - times[n - 1]
        c, g, fn = curves[n], geo[n], fv[n]
        rho = gaussian_density(t, c, t0, p0)
        tt = t0 - t
        vel = (curves[n + 1] - curves[n - 1]) / span
        lam = np.einsum("ij,ij->i", vel, g.tau)
        rel = c - p0
        rn = np.einsum("ij,ij->i", rel, g.nu)
        rt = np.einsum("ij,ij->i", rel, g.tau)
        dtf = (fv[n + 1] - fv[n - 1]) / span
        dsf = _ds_derivative(fn, g.speed)
        d2sf = _ds_derivative(dsf, g.speed)
        dsl = _ds_derivative(lam, g.speed)
        heat = float(np.sum(rho * (dtf - d2sf) * g.ds))
        shrink = -float(np.sum((g.ktilde + rn / (2 * tt)) ** 2 * rho * fn * g.ds))
        tang = float(np.sum((dsl - lam * rt / (2 * tt)) * rho * fn * g.ds))
        dsrho = -rho * rt / (2 * tt)
        bnd = (rho[-1] * dsf[-1] - fn[-1] * dsrho[-1]) - (rho[0] * dsf[0] - fn[0] * dsrho[0])
        rows["heat"].append(heat)
        rows["shrinker"].append(shrink)
        rows["tangential"].append(tang)
        rows["boundary"].append(float(bnd))
        lhs.append((I[n + 1] - I[n - 1]) / span)
    terms = {k: np.array(v) for k, v in rows.items()}
    rhs = sum(terms.values())
    scale = float(np.max(np.abs(I)))
    return MonotonicityReport(times[1:-1], I[1:-1], np.array(lhs), rhs, terms, scale)


def g1_values(samples: np.ndarray) -> np.ndarray:
    """``(k̃ v)²`` along the lower-left arc using the geometric curvature."""
    g = edge_geometry(samples)
    v = 1.0 / (g.nu @ OMEGA)
    return (g.ktilde * v) ** 2
