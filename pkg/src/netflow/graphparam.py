"""Networks near a minimal one written as normal/tangential graphs.

A network close to a minimal network ``Γ*`` is represented edgewise as

    γ^i(φ^i(x)) = γ*^i(x) + N^i(x) ν*^i + T^i(x) τ*^i,

where the tangential parts ``T^i`` are *adapted* to the normal parts: close to
each junction they are a fixed linear function of the normal parts of two of
the incident edges, damped by a cutoff ``χ`` of the distance to the junction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import ConstraintViolation, OutOfTrustRegion, TopologyMismatch
from .network import Network, NetworkTopology, build_network, rotate90

SQRT3 = math.sqrt(3.0)


# ----------------------------------------------------------------------
# cutoff
# ----------------------------------------------------------------------


def _smoothstep(t):
    return t * t * (3.0 - 2.0 * t)


@dataclass(frozen=True)
class Cutoff:
    """Nonincreasing ``χ`` on ``[0, 1/2]``: 1 on ``[0, lo]``, 0 on ``[hi, 1/2]``.

    The transition is ``1 - S(S(t))`` with the cubic smoothstep
    ``S(t) = 3t² - 2t³`` and ``t`` the affine coordinate of ``[lo, hi]``.
    The composition is three times continuously differentiable at the joins.
    """

    lo: float = 0.125
    hi: float = 0.375
    name: str = field(default="smoothstep-of-smoothstep", compare=False)

    def _t(self, d):
        return np.clip((np.asarray(d, dtype=float) - self.lo) / (self.hi - self.lo), 0.0, 1.0)

    def value(self, d):
        t = self._t(d)
        return 1.0 - _smoothstep(_smoothstep(t))

    def d1(self, d):
        t = self._t(d)
        S = _smoothstep(t)
        out = -(6 * S * (1 - S)) * (6 * t * (1 - t)) / (self.hi - self.lo)
        return np.where((t > 0) & (t < 1), out, 0.0)

    def d2(self, d):
        t = self._t(d)
        S = _smoothstep(t)
        S1 = 6 * t * (1 - t)
        S2 = 6 - 12 * t
        out = -((6 - 12 * S) * S1**2 + 6 * S * (1 - S) * S2) / (self.hi - self.lo) ** 2
        return np.where((t > 0) & (t < 1), out, 0.0)

    def to_dict(self) -> dict:
        return {"name": self.name, "plateau_one": [0.0, self.lo], "plateau_zero": [self.hi, 0.5]}


DEFAULT_CUTOFF = Cutoff()


# ----------------------------------------------------------------------
# junction maps
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class JunctionCoeffs:
    """Closed-form junction coefficients for a junction with edges ``i < j < k``.

    ``L`` holds one row per edge (i, j, k); row ``ℓ`` gives the coefficients
    of ``(a, b)`` in ``L^ℓ(a, b)``.  The closed forms assume the inner
    tangents of ``i, j, k`` follow each other counterclockwise; see
    :func:`junction_maps` for the orientation-aware version.
    """

    junction: str
    edges: tuple[int, int, int]
    ends: tuple[int, int, int]
    alpha: float
    beta: float
    beta_ji: float
    L: np.ndarray


def junction_coeffs(topology: NetworkTopology, m: str) -> JunctionCoeffs:
    incs = topology.incidence[m]
    (i, ei), (j, ej), (k, ek) = [(ee.edge, ee.end) for ee in incs]
    sij = (-1.0) ** (ei + ej)
    sik = (-1.0) ** (ei + ek)
    sjk = (-1.0) ** (ej + ek)
    L = np.array(
        [
            [-1.0 / SQRT3, -2.0 / SQRT3 * sij],
            [2.0 / SQRT3 * sij, 1.0 / SQRT3],
            [-1.0 / SQRT3 * sik, 1.0 / SQRT3 * sjk],
        ]
    )
    L.setflags(write=False)
    return JunctionCoeffs(
        junction=m,
        edges=(i, j, k),
        ends=(ei, ej, ek),
        alpha=-0.5 * sij,
        beta=-SQRT3 / 2 * sij,
        beta_ji=SQRT3 / 2 * sij,
        L=L,
    )


@dataclass(frozen=True)
class JunctionMap:
    """Junction maps computed from the minimal base geometry.

    ``L[ℓ] @ (a, b)`` is the tangential component on edge ``ℓ`` of the unique
    junction displacement whose normal components on edges ``i`` and ``j``
    are ``a`` and ``b``.  ``forced`` gives the normal component on ``k``.
    ``sigma`` is +1 when the inner tangents of ``i, j, k`` turn
    counterclockwise, in which case ``L`` equals the closed forms.
    """

    junction: str
    edges: tuple[int, int, int]
    ends: tuple[int, int, int]
    L: np.ndarray
    forced: np.ndarray
    sigma: int
    tau: np.ndarray
    nu: np.ndarray


def base_frames(base: Network) -> tuple[np.ndarray, np.ndarray]:
    """Unit chord direction and normal of every (straight) base edge."""
    tau = []
    for c in base.curves:
        d = c.samples[-1] - c.samples[0]
        tau.append(d / np.hypot(*d))
    tau = np.array(tau)
    return tau, rotate90(tau)


def junction_maps(base: Network) -> dict[str, JunctionMap]:
    tau, nu = base_frames(base)
    out = {}
    for m, incs in base.topology.incidence.items():
        (i, ei), (j, ej), (k, ek) = [(ee.edge, ee.end) for ee in incs]
        A = np.array([nu[i], nu[j]])
        Ainv = np.linalg.inv(A)
        L = np.array([tau[i] @ Ainv, tau[j] @ Ainv, tau[k] @ Ainv])
        forced = nu[k] @ Ainv
        ti, tj = (-1) ** ei * tau[i], (-1) ** ej * tau[j]
        sigma = 1 if ti[0] * tj[1] - ti[1] * tj[0] > 0 else -1
        out[m] = JunctionMap(m, (i, j, k), (ei, ej, ek), L, forced, sigma, tau[[i, j, k]], nu[[i, j, k]])
    return out


def somma_residual(N: np.ndarray, topology: NetworkTopology) -> dict[str, float]:
    """``|Σ_ℓ (-1)^{e^ℓ} N^ℓ(e^ℓ)|`` at every junction."""
    out = {}
    for m, incs in topology.incidence.items():
        out[m] = abs(sum((-1) ** ee.end * N[ee.edge][-1 if ee.end else 0] for ee in incs))
    return out


# ----------------------------------------------------------------------
# adapted tangents as a linear operator
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class AdaptedTerm:
    """One entry of the adapted-tangent operator.

    ``T[target][t_node] += coeff * N[source][s_node]``.  ``reflected`` marks
    terms where the two edges see the junction at opposite parameter values,
    so the node index is mirrored (``x ↦ 1 - x``).
    """

    junction: str
    target: int
    t_node: int
    source: int
    s_node: int
    coeff: float
    reflected: bool


def _node(end: int, q: int, M: int) -> int:
    return q if end == 0 else M - q


def adapted_terms(maps: Mapping[str, JunctionMap], M: int, cutoff: Cutoff = DEFAULT_CUTOFF) -> list[AdaptedTerm]:
    """Coefficient table of the adapted-tangent map, one row per nonzero term."""
    if M % 2:
        raise ValueError("M must be even so both halves of every edge share grid nodes")
    q = np.arange(M // 2 + 1)
    chi = cutoff.value(q / M)
    terms = []
    for m, jm in maps.items():
        i, j, _ = jm.edges
        for row, (ell, e_ell) in enumerate(zip(jm.edges, jm.ends)):
            for col, (src, e_src) in enumerate(((i, jm.ends[0]), (j, jm.ends[1]))):
                c = jm.L[row, col]
                for qq in q[chi > 0]:
                    terms.append(
                        AdaptedTerm(
                            m,
                            ell,
                            _node(e_ell, int(qq), M),
                            src,
                            _node(e_src, int(qq), M),
                            float(chi[qq] * c),
                            e_ell != e_src,
                        )
                    )
    return terms


def adapted_matrix(maps: Mapping[str, JunctionMap], n_edges: int, M: int, cutoff: Cutoff = DEFAULT_CUTOFF) -> np.ndarray:
    """Dense matrix ``A`` with ``T.ravel() = A @ N.ravel()`` (edge-major layout)."""
    n = M + 1
    A = np.zeros((n_edges * n, n_edges * n))
    for t in adapted_terms(maps, M, cutoff):
        A[t.target * n + t.t_node, t.source * n + t.s_node] += t.coeff
    return A


def adapted_tangents(
    N: np.ndarray,
    base: Network,
    cutoff: Cutoff = DEFAULT_CUTOFF,
    maps: Mapping[str, JunctionMap] | None = None,
    check: bool = True,
) -> np.ndarray:
    """Tangential components adapted to the normal components ``N``.

    Raises
    ------
    ConstraintViolation
        If the junction constraint on ``N`` fails by more than 1e-10.
    """
    N = np.asarray(N, dtype=float)
    topo = base.topology
    if check:
        res = somma_residual(N, topo)
        if res and max(res.values()) > 1e-10:
            raise ConstraintViolation(f"junction constraint residual {max(res.values()):.3e}")
    if maps is None:
        maps = junction_maps(base)
    M = N.shape[1] - 1
    T = np.zeros_like(N)
    for t in adapted_terms(maps, M, cutoff):
        T[t.target, t.t_node] += t.coeff * N[t.source, t.s_node]
    return T


def graph_samples(base: Network, N: np.ndarray, T: np.ndarray) -> list[np.ndarray]:
    """Node positions ``γ* + N ν* + T τ*`` on the base grid."""
    tau, nu = base_frames(base)
    return [
        base.curves[i].samples + N[i][:, None] * nu[i] + T[i][:, None] * tau[i]
        for i in range(base.topology.n_edges)
    ]


# ----------------------------------------------------------------------
# solving for a representation
# ----------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class NormalGraphRep:
    base: Network
    N: np.ndarray
    T: np.ndarray
    phi: np.ndarray
    residual: float
    cutoff: Cutoff = DEFAULT_CUTOFF

    def reconstruct(self) -> Network:
        """The represented network sampled on the base grid (``γ∘φ`` at the nodes)."""
        return build_network(self.base.topology, graph_samples(self.base, self.N, self.T))

    def to_dict(self) -> dict:
        return {
            "version": 1,
            "edges": [e.id for e in self.base.topology.edges],
            "N": self.N.tolist(),
            "T": self.T.tolist(),
            "phi": self.phi.tolist(),
            "residual": self.residual,
            "cutoff": self.cutoff.to_dict(),
        }


class _Target:
    def __init__(self, samples: np.ndarray):
        x = np.linspace(0.0, 1.0, samples.shape[0])
        self.f = PchipInterpolator(x, samples, axis=0)
        self.df = self.f.derivative()

    def __call__(self, s: float) -> np.ndarray:
        return self.f(s)

    def d(self, s: float) -> np.ndarray:
        return self.df(s)


def _newton(fun: Callable, x0: np.ndarray, tol: float, max_iter: int) -> np.ndarray:
    x = np.array(x0, dtype=float)
    for _ in range(max_iter):
        F, J = fun(x)
        if np.max(np.abs(F)) <= tol:
            return x
        try:
            dx = np.linalg.solve(J, F)
        except np.linalg.LinAlgError:
            raise OutOfTrustRegion("singular Jacobian in graph parametrization") from None
        x = x - dx
        if not np.all(np.isfinite(x)):
            raise OutOfTrustRegion("Newton iterate diverged")
    F, _ = fun(x)
    if np.max(np.abs(F)) <= tol:
        return x
    raise OutOfTrustRegion(f"Newton did not converge (residual {np.max(np.abs(F)):.3e})")


def solve_graph_rep(
    target: Network,
    base: Network,
    cutoff: Cutoff = DEFAULT_CUTOFF,
    tol: float = 1e-13,
    max_iter: int = 30,
) -> NormalGraphRep:
    """Write ``target`` as a normal graph with adapted tangents over ``base``.

    The nonlinear system is solved node by node.  Near each junction the two
    lowest-indexed edges are solved together (four unknowns), then the third
    edge; elsewhere each node is an independent 2x2 problem.  Every solve is
    seeded by the neighbouring node closer to the junction or endpoint.

    Raises
    ------
    TopologyMismatch
        If the two networks do not share topology and endpoints.
    OutOfTrustRegion
        If Newton fails or a reparametrization is not strictly increasing.
    """
    topo = base.topology
    if target.topology != topo:
        raise TopologyMismatch("target and base have different topologies")
    for p, pos in base.endpoint_positions.items():
        if float(np.max(np.abs(target.endpoint_positions[p] - pos))) > 1e-12:
            raise TopologyMismatch(f"endpoint {p!r} differs between target and base")
    M = base.M
    if M % 2:
        raise ValueError("base grid must have an even number of segments")
    nE = topo.n_edges
    x = np.linspace(0.0, 1.0, M + 1)
    tau, nu = base_frames(base)
    star = base.all_samples()
    maps = junction_maps(base)
    tg = [_Target(target.curves[i].samples) for i in range(nE)]

    N = np.zeros((nE, M + 1))
    T = np.zeros((nE, M + 1))
    phi = np.full((nE, M + 1), np.nan)
    solved = np.zeros((nE, M + 1), dtype=bool)

    for p, ee in topo.endpoint_edge.items():
        j = M if ee.end else 0
        phi[ee.edge, j] = float(ee.end)
        solved[ee.edge, j] = True

    qmax = [q for q in range(M // 2 + 1) if cutoff.value(q / M) > 0]
    for m, jm in maps.items():
        (i, j, k), (ei, ej, ek) = jm.edges, jm.ends
        Li, Lj, Lk = jm.L
        d = target.junction_position(m) - base.junction_position(m)
        for ell, e in zip(jm.edges, jm.ends):
            n0 = M if e else 0
            N[ell, n0] = float(d @ nu[ell])
            T[ell, n0] = float(d @ tau[ell])
            phi[ell, n0] = float(e)
            solved[ell, n0] = True
        for q in qmax[1:]:
            chi = float(cutoff.value(q / M))
            pi_, pj_, pk_ = _node(ei, q, M), _node(ej, q, M), _node(ek, q, M)
            prev = [_node(e, q - 1, M) for e in (ei, ej, ek)]
            ti, tj = tau[i], tau[j]

            def F4(u, pi_=pi_, pj_=pj_, chi=chi):
                ni, fi, nj, fj = u
                Ti = chi * (Li[0] * ni + Li[1] * nj)
                Tj = chi * (Lj[0] * ni + Lj[1] * nj)
                Ei = tg[i](fi) - star[i][pi_] - ni * nu[i] - Ti * ti
                Ej = tg[j](fj) - star[j][pj_] - nj * nu[j] - Tj * tj
                J = np.zeros((4, 4))
                J[0:2, 0] = -nu[i] - chi * Li[0] * ti
                J[0:2, 1] = tg[i].d(fi)
                J[0:2, 2] = -chi * Li[1] * ti
                J[2:4, 0] = -chi * Lj[0] * tj
                J[2:4, 2] = -nu[j] - chi * Lj[1] * tj
                J[2:4, 3] = tg[j].d(fj)
                return np.concatenate([Ei, Ej]), J

            u0 = [
                N[i, prev[0]],
                phi[i, prev[0]] + x[pi_] - x[prev[0]],
                N[j, prev[1]],
                phi[j, prev[1]] + x[pj_] - x[prev[1]],
            ]
            ni, fi, nj, fj = _newton(F4, u0, tol, max_iter)
            N[i, pi_], phi[i, pi_], N[j, pj_], phi[j, pj_] = ni, fi, nj, fj
            T[i, pi_] = chi * (Li[0] * ni + Li[1] * nj)
            T[j, pj_] = chi * (Lj[0] * ni + Lj[1] * nj)
            Tk = chi * (Lk[0] * ni + Lk[1] * nj)
            nk, fk = _solve_node(tg[k], star[k][pk_], nu[k], tau[k], Tk, N[k, prev[2]], phi[k, prev[2]] + x[pk_] - x[prev[2]], tol, max_iter)
            N[k, pk_], phi[k, pk_], T[k, pk_] = nk, fk, Tk
            solved[i, pi_] = solved[j, pj_] = solved[k, pk_] = True

    for ell in range(nE):
        half = M // 2
        order = [(jj, jj - 1) for jj in range(1, half + 1)] + [(jj, jj + 1) for jj in range(M - 1, half, -1)]
        for jj, src in order:
            if solved[ell, jj]:
                continue
            n_, f_ = _solve_node(tg[ell], star[ell][jj], nu[ell], tau[ell], 0.0, N[ell, src], phi[ell, src] + x[jj] - x[src], tol, max_iter)
            N[ell, jj], phi[ell, jj] = n_, f_
            solved[ell, jj] = True

    if np.any(~solved):
        raise OutOfTrustRegion("some nodes could not be reached by continuation")
    if np.any(np.diff(phi, axis=1) <= 0) or np.any(phi[:, 0] != 0.0) or np.any(phi[:, -1] != 1.0):
        raise OutOfTrustRegion("reparametrization is not strictly increasing")

    T_check = adapted_tangents(N, base, cutoff, maps, check=False)
    recon = graph_samples(base, N, T_check)
    resid = 0.0
    for ell in range(nE):
        resid = max(resid, float(np.max(np.abs(tg[ell](phi[ell]) - recon[ell]))))
    return NormalGraphRep(base, N, T_check, phi, resid, cutoff)


def _solve_node(tg: _Target, pstar, nu, tau, Tval, n0, f0, tol, max_iter):
    def F2(u):
        n, f = u
        E = tg(f) - pstar - n * nu - Tval * tau
        J = np.column_stack([-nu, tg.d(f)])
        return E, J

    n, f = _newton(F2, [n0, f0], tol, max_iter)
    return float(n), float(f)


# ----------------------------------------------------------------------
# quantitative implicit function theorem
# ----------------------------------------------------------------------


def ift_radius(rho: float, S: float, N_bound: float) -> float:
    """Radius ``min{ρ/(2SN), ρ/2}`` of the domain of the implicit function."""
    if not (rho > 0 and S > 0 and N_bound > 0):
        raise ValueError("rho, S and N_bound must be positive")
    return min(rho / (2.0 * S * N_bound), rho / 2.0)


@dataclass
class ContractionResult:
    y: np.ndarray
    iterations: int
    converged: bool
    max_norm: float


def contraction_solve(
    F: Callable[[np.ndarray, np.ndarray], np.ndarray],
    dFdy0: np.ndarray,
    x: np.ndarray,
    tol: float = 1e-12,
    max_iter: int = 40,
) -> ContractionResult:
    """Fixed-point iteration ``y ← y - [∂_y F(0,0)]^{-1} F(x, y)`` from ``y = 0``.

    Convergence is declared when successive iterates differ by less than
    ``tol``; ``max_norm`` records the largest iterate norm seen, which stays
    below ``ρ`` inside the guaranteed radius.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    A = np.atleast_2d(np.asarray(dFdy0, dtype=float))
    y = np.zeros(A.shape[0])
    biggest = 0.0
    for it in range(1, max_iter + 1):
        y_new = y - np.linalg.solve(A, np.atleast_1d(F(x, y)))
        biggest = max(biggest, float(np.linalg.norm(y_new)))
        if np.linalg.norm(y_new - y) < tol:
            return ContractionResult(y_new, it, True, biggest)
        y = y_new
    return ContractionResult(y, max_iter, False, biggest)
