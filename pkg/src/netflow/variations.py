"""Length variations around a minimal network and Łojasiewicz–Simon checks.

Normal variations ``X̄ = (X^i)`` live in the constrained space ``V``: the
junction sums ``Σ (-1)^{e^ℓ} X^ℓ(e^ℓ)`` vanish and ``X`` is zero at every
endpoint.  A variation moves the base nodes by
``Y^ℓ = X^ℓ ν*^ℓ + χ·𝓛^ℓ(X^i, X^j) τ*^ℓ``; the functional
``𝐋(N̄) = Σ_ℓ L(γ*^ℓ + N^ℓ ν*^ℓ + T^ℓ τ*^ℓ)`` is the discrete (chord) length
of the moved network.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh, null_space

from .errors import ConstraintViolation, GapNonPositive
from .graphparam import (
    DEFAULT_CUTOFF,
    Cutoff,
    adapted_matrix,
    base_frames,
    junction_maps,
    somma_residual,
)
from .network import Network, length
from .trajectory import TrajectoryLog

logger = logging.getLogger(__name__)


# ----------------------------------------------------------------------
# energy and first variation
# ----------------------------------------------------------------------


class GraphEnergy:
    """``𝐋(N̄)`` for a fixed base, with its exact gradient.

    ``N`` is an array of shape ``(n_edges, M+1)`` on the base grid.
    """

    def __init__(self, base: Network, cutoff: Cutoff = DEFAULT_CUTOFF):
        self.base = base
        self.cutoff = cutoff
        self.maps = junction_maps(base)
        self.M = base.M
        self.n_edges = base.topology.n_edges
        self.A = adapted_matrix(self.maps, self.n_edges, self.M, cutoff)
        self.tau, self.nu = base_frames(base)
        self.star = np.array(base.all_samples())

    def positions(self, N: np.ndarray) -> np.ndarray:
        N = np.asarray(N, dtype=float).reshape(self.n_edges, self.M + 1)
        T = (self.A @ N.ravel()).reshape(N.shape)
        return self.star + N[..., None] * self.nu[:, None, :] + T[..., None] * self.tau[:, None, :]

    def value(self, N: np.ndarray) -> float:
        P = self.positions(N)
        seg = np.diff(P, axis=1)
        return math.fsum(np.hypot(seg[..., 0], seg[..., 1]).ravel())

    def gradient(self, N: np.ndarray) -> np.ndarray:
        """Exact gradient of :meth:`value` with respect to the nodal ``N``."""
        P = self.positions(N)
        seg = np.diff(P, axis=1)
        u = seg / np.hypot(seg[..., 0], seg[..., 1])[..., None]
        gP = np.zeros_like(P)
        gP[:, 1:] += u
        gP[:, :-1] -= u
        g_nu = np.einsum("enk,ek->en", gP, self.nu)
        g_tau = np.einsum("enk,ek->en", gP, self.tau)
        return g_nu + (self.A.T @ g_tau.ravel()).reshape(g_nu.shape)


def constraint_matrix(base: Network, with_endpoints: bool = True) -> np.ndarray:
    """Rows of the linear constraints defining ``V`` on the flat nodal vector."""
    topo = base.topology
    n = base.M + 1
    rows = []
    for m, incs in topo.incidence.items():
        r = np.zeros(topo.n_edges * n)
        for ee in incs:
            r[ee.edge * n + (n - 1 if ee.end else 0)] += (-1.0) ** ee.end
        rows.append(r)
    if with_endpoints:
        for p, ee in topo.endpoint_edge.items():
            r = np.zeros(topo.n_edges * n)
            r[ee.edge * n + (n - 1 if ee.end else 0)] = 1.0
            rows.append(r)
    return np.array(rows).reshape(len(rows), topo.n_edges * n)


def check_direction(base: Network, X: np.ndarray, tol: float = 1e-10) -> None:
    C = constraint_matrix(base)
    res = float(np.max(np.abs(C @ np.asarray(X, dtype=float).ravel()))) if C.size else 0.0
    if res > tol:
        raise ConstraintViolation(f"direction violates the V constraints by {res:.3e}")


def first_variation(base: Network, state: np.ndarray, direction: np.ndarray, cutoff: Cutoff = DEFAULT_CUTOFF) -> float:
    """Derivative of ``𝐋`` at ``N̄ = state`` in the direction ``X̄``.

    ``state`` is the normal part of a graph representation over ``base``
    (for instance ``NormalGraphRep.N``).  The result is the discrete
    counterpart of ``-Σ ∫ ⟨k, Y⟩ ds``: the pairing of the discrete curvature
    vector of the moved network with ``Y = X ν* + T(X) τ*``.

    Raises
    ------
    ConstraintViolation
        If the state or the direction violates the constraints.
    """
    state = np.asarray(state, dtype=float)
    res = somma_residual(state, base.topology)
    if res and max(res.values()) > 1e-10:
        raise ConstraintViolation("state does not satisfy the junction constraint")
    check_direction(base, direction)
    E = GraphEnergy(base, cutoff)
    return float(np.sum(E.gradient(state) * np.asarray(direction, dtype=float)))


# ----------------------------------------------------------------------
# the space V and the second variation
# ----------------------------------------------------------------------


def mass_weights(base: Network) -> np.ndarray:
    """Trapezoidal ``ds`` weights on every node of every base edge."""
    n = base.M + 1
    w = []
    for c in base.curves:
        h = float(np.hypot(*(c.samples[-1] - c.samples[0]))) / base.M
        we = np.full(n, h)
        we[0] = we[-1] = h / 2
        w.append(we)
    return np.concatenate(w)


@dataclass(frozen=True, eq=False)
class VSpaceBasis:
    """Columns of ``B`` span ``V`` and are orthonormal for the ``ds`` inner product."""

    B: np.ndarray
    weights: np.ndarray
    n_edges: int
    M: int

    @property
    def dim(self) -> int:
        return self.B.shape[1]

    def to_grid(self, coeffs: np.ndarray) -> np.ndarray:
        return (self.B @ coeffs).reshape(self.n_edges, self.M + 1)


def v_basis(base: Network, with_endpoints: bool = True) -> VSpaceBasis:
    C = constraint_matrix(base, with_endpoints)
    n_total = base.topology.n_edges * (base.M + 1)
    Z = null_space(C) if C.size else np.eye(n_total)
    w = mass_weights(base)
    G = Z.T @ (w[:, None] * Z)
    evals, evecs = np.linalg.eigh(G)
    B = Z @ (evecs / np.sqrt(evals))
    return VSpaceBasis(B, w, base.topology.n_edges, base.M)


@dataclass(frozen=True, eq=False)
class SecondVariationForm:
    """Second variation of ``𝐋`` at a minimal base.

    ``principal``, ``boundary`` and ``cutoff`` are nodal matrices whose sum
    ``full`` is the exact Hessian of the discrete length along ``V``.  ``Q``
    is ``full`` expressed in the orthonormal basis ``basis``.
    """

    principal: np.ndarray
    boundary: np.ndarray
    cutoff: np.ndarray
    basis: VSpaceBasis

    @property
    def full(self) -> np.ndarray:
        return self.principal + self.boundary + self.cutoff

    @property
    def Q(self) -> np.ndarray:
        B = self.basis.B
        Q = B.T @ self.full @ B
        return 0.5 * (Q + Q.T)

    def quadratic(self, X: np.ndarray) -> float:
        x = np.asarray(X, dtype=float).ravel()
        return float(x @ self.full @ x)


def _edge_blocks(base: Network, endpoint_rows: bool):
    """Nodal principal part and boundary terms of ``Σ ∫ |∂_s X|² ds`` per edge."""
    M = base.M
    n = M + 1
    nE = base.topology.n_edges
    P = np.zeros((nE * n, nE * n))
    Bd = np.zeros_like(P)
    endpoint_nodes = {(ee.edge, ee.end) for ee in base.topology.endpoint_edge.values()}
    for ell, c in enumerate(base.curves):
        h = float(np.hypot(*(c.samples[-1] - c.samples[0]))) / M
        o = ell * n
        # X_j (-δ²X)_j / h on the interior nodes
        for j in range(1, M):
            P[o + j, o + j] += 2.0 / h
            P[o + j, o + j - 1] -= 1.0 / (2 * h)
            P[o + j - 1, o + j] -= 1.0 / (2 * h)
            P[o + j, o + j + 1] -= 1.0 / (2 * h)
            P[o + j + 1, o + j] -= 1.0 / (2 * h)
        # (-1)^{1+e} X ∂_s X with one-sided differences
        for end in (0, 1):
            if (ell, end) in endpoint_nodes and not endpoint_rows:
                continue
            b, nb = (o, o + 1) if end == 0 else (o + M, o + M - 1)
            Bd[b, b] += 1.0 / h
            Bd[b, nb] -= 1.0 / (2 * h)
            Bd[nb, b] -= 1.0 / (2 * h)
    return P, Bd


def cutoff_terms(base: Network, cutoff: Cutoff = DEFAULT_CUTOFF) -> np.ndarray:
    """Nodal matrix of ``∫ χ∂²χ 𝓛² + 2χ∂χ 𝓛∂𝓛 + (∂χ 𝓛)² ds`` summed over junctions.

    The integrand is the derivative of ``χ ∂_s χ 𝓛²``; the discretization
    keeps that structure (a telescoping sum of grid differences), so the
    matrix reflects the exact cancellation of the continuous terms.
    """
    M = base.M
    n = M + 1
    nE = base.topology.n_edges
    K = np.zeros((nE * n, nE * n))
    maps = junction_maps(base)
    q = np.arange(M // 2 + 1)
    lengths = [float(np.hypot(*(c.samples[-1] - c.samples[0]))) for c in base.curves]
    for jm in maps.values():
        i, j, _ = jm.edges
        ei, ej = jm.ends[0], jm.ends[1]
        for row, ell in enumerate(jm.edges):
            chi = cutoff.value(q / M)
            dchi = cutoff.d1(q / M) / lengths[ell]
            # F_q = χ_q ∂χ_q 𝓛_q², 𝓛_q = a·X^i(q) + b·X^j(q)
            a, b = jm.L[row]
            coef = chi * dchi
            for qq in range(M // 2):
                for sgn, node in ((1.0, qq + 1), (-1.0, qq)):
                    c = sgn * coef[node]
                    if c == 0.0:
                        continue
                    vi = i * n + _node_index(ei, node, M)
                    vj = j * n + _node_index(ej, node, M)
                    K[vi, vi] += c * a * a
                    K[vj, vj] += c * b * b
                    K[vi, vj] += c * a * b
                    K[vj, vi] += c * a * b
    return K


def _node_index(end: int, q: int, M: int) -> int:
    return q if end == 0 else M - q


def assemble_Q(base: Network, M: int | None = None, cutoff: Cutoff = DEFAULT_CUTOFF, endpoint_rows: bool = True) -> SecondVariationForm:
    """Assemble the second variation at ``base`` restricted to ``V``.

    ``M`` resamples the base (which must be straight) when given.
    ``endpoint_rows=False`` drops the endpoint boundary terms; they vanish on
    ``V`` anyway, so ``Q`` is unchanged.
    """
    if M is not None and M != base.M:
        from .minimal import StraightNetwork, to_network

        sn = StraightNetwork(
            base.topology,
            {m: base.junction_position(m) for m in base.topology.junctions},
            dict(base.endpoint_positions),
        )
        base = to_network(sn, M)
    P, Bd = _edge_blocks(base, endpoint_rows)
    K = cutoff_terms(base, cutoff)
    return SecondVariationForm(P, Bd, K, v_basis(base))


def spectrum(Q, count: int | None = None) -> np.ndarray:
    """Lowest ``count`` eigenvalues (ascending) of a symmetric form."""
    if isinstance(Q, SecondVariationForm):
        Q = Q.Q
    Q = np.asarray(Q, dtype=float)
    n = Q.shape[0]
    if count is None or count >= n:
        return eigh(Q, eigvals_only=True)
    return eigh(Q, eigvals_only=True, subset_by_index=[0, count - 1])


# ----------------------------------------------------------------------
# Łojasiewicz–Simon check on a trajectory
# ----------------------------------------------------------------------

GAP_FLOOR = 1e-12
H_TOL = 1e-10


@dataclass
class LSReport:
    t: np.ndarray
    gap: np.ndarray
    knorm: np.ndarray
    theta: float
    theta_raw: float
    C: float
    C_fit: float
    above_fit: int
    H: np.ndarray
    H_increases: int
    window: tuple[int, int]
    base_length: float
    extras: dict = field(default_factory=dict)

    @property
    def H_monotone(self) -> bool:
        return self.H_increases == 0

    def to_dict(self) -> dict:
        return {
            "version": 1,
            "theta": self.theta,
            "theta_raw": self.theta_raw,
            "C": self.C,
            "C_fit": self.C_fit,
            "above_fit": self.above_fit,
            "H_monotone": self.H_monotone,
            "H_increases": self.H_increases,
            "base_length": self.base_length,
            "window": {"t_start": float(self.t[0]), "t_end": float(self.t[-1]), "samples": len(self.t)},
            "series": {"t": self.t.tolist(), "gap": self.gap.tolist(), "k_norm": self.knorm.tolist(), "H": self.H.tolist()},
        }


def ls_check(
    trajectory: TrajectoryLog,
    base: Network | float,
    theta: float | str = "fit",
    gap_floor: float = GAP_FLOOR,
    tail_fraction: float = 0.5,
) -> LSReport:
    """Fit and test ``|L − L*|^{1−θ} ≤ C ‖k‖_{L²(ds)}`` along a logged run.

    The analysed window is the last ``tail_fraction`` of the logged samples
    whose energy gap exceeds ``gap_floor``.  With ``theta="fit"`` the exponent
    comes from the slope ``s`` of ``log ‖k‖`` against ``log gap`` as
    ``θ = 1 − s`` clamped to ``(0, 1/2]``.  ``C`` is the smallest constant
    making the inequality hold on the window; ``C_fit`` comes from the
    regression intercept and ``above_fit`` counts samples whose ratio exceeds it.

    Raises
    ------
    GapNonPositive
        If fewer than two samples have a positive gap.
    """
    Lstar = float(base) if isinstance(base, (int, float)) else length(base)
    t = trajectory.column("t")
    gap = trajectory.column("L_total") - Lstar
    knorm = np.sqrt(np.maximum(trajectory.column("int_k2"), 0.0))
    keep = np.flatnonzero((gap > gap_floor) & (knorm > 0))
    if keep.size < 2:
        raise GapNonPositive("energy gap is not positive on enough logged samples")
    # fit on the last tail_fraction of the samples whose gap is above the floor
    n_tail = max(2, int(math.ceil(tail_fraction * keep.size)))
    sel = keep[-n_tail:]
    t_w, g_w, k_w = t[sel], gap[sel], knorm[sel]
    lg, lk = np.log(g_w), np.log(k_w)
    slope, intercept = np.polyfit(lg, lk, 1)
    theta_raw = float(1.0 - slope)
    if theta == "fit":
        th = float(min(max(theta_raw, 1e-6), 0.5))
    else:
        th = float(theta)
        if not 0.0 < th <= 0.5:
            raise ValueError("theta must lie in (0, 1/2]")
    ratio = g_w ** (1.0 - th) / k_w
    C = float(np.max(ratio))
    # regression line of log‖k‖ with the slope forced to 1-θ
    c_fit = float(np.exp(-np.mean(lk - (1.0 - th) * lg)))
    above_fit = int(np.sum(ratio > c_fit * (1.0 + 1e-12)))
    # H over the full positive-gap run (the stability argument uses all times)
    H = gap[keep] ** th
    H_inc = int(np.sum(np.diff(H) > H_TOL))
    logger.info("ls_check: theta=%.4f (raw %.4f), C=%.4g, H increases=%d", th, theta_raw, C, H_inc)
    return LSReport(
        t=t_w,
        gap=g_w,
        knorm=k_w,
        theta=th,
        theta_raw=theta_raw,
        C=C,
        C_fit=c_fit,
        above_fit=above_fit,
        H=H,
        H_increases=H_inc,
        window=(int(sel[0]), int(sel[-1])),
        base_length=Lstar,
        extras={"H_t": t[keep]},
    )
