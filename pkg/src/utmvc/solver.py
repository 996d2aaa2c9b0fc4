"""Deformed-contour quadrature and assembly of the solution field.

The solution is a contour integral over the boundary of the exterior sector
{|k| > r, theta0 < arg k < pi - theta0}: two rays and an arc.  Per contour
node one forward and one backward propagation of the accumulation system
serves the characteristic function, the kernel, and the boundary kernels for
every requested output point; the node contributions are then reduced in a
fixed traversal order (left ray in, arc, right ray out).
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .accum import (
    accum_cs_backward,
    accum_cs_forward,
    accum_e_tail,
    accum_e_tilde_tail,
    mode_from_k,
)
from .coefficients import DispersionCache, DomainKind, contour_params
from .delta import (
    BoundaryCase,
    BoundaryConditions,
    classify,
    delta_fi,
    delta_hl,
    delta_wl,
)
from .errors import BudgetError, CaseError
from .kernels import (
    KernelContext,
    ProblemData,
    boundary_kernel,
    fm_transform_deformed,
    phi0,
    phi_f_deformed,
)

ARC_NODES = 64
RAY_PANEL_NODES = 12
DEFAULT_T_MIN = 1e-3
DEFAULT_CONTOUR_TOL = 1e-12
NODE_BUDGET = 60000


@dataclass(frozen=True)
class ContourSpec:
    """Quadrature nodes and weights along the truncated deformed contour.

    Weights contain the direction factors dk, so sum(w * f(nodes))
    approximates the contour integral directly.  Segments are stored in
    traversal order: left ray (inward), arc, right ray (outward).
    """

    r: float
    theta0: float
    K_max: float
    nodes: np.ndarray
    weights: np.ndarray
    segments: dict

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)


def _ray_panels(r: float, K_max: float, osc_rate: float, t_min: float,
                theta0: float, panel_scale: float = 1.0) -> np.ndarray:
    """Panel edges along one ray, refined near r and relaxed where decay wins.

    Near r the integrand can vary on the scale of the distance to the
    nearest characteristic zero (order r), so panels start narrow and grow
    geometrically toward the oscillation-limited width.
    """
    base = max(min(2.0 * 2.0 * np.pi / max(osc_rate, 1e-3), (K_max - r) / 4.0), 0.25)
    base *= panel_scale
    edges = [r]
    width = min(base, max(0.4 * r, 0.25) * panel_scale)
    pos = r
    c = math.cos(2 * theta0)
    while pos < K_max:
        decay = math.exp(-c * pos**2 * t_min)
        stretch = 1.0 if decay > 1e-8 else 1.6
        # keep each panel under ~2.5 decay e-folds so fixed-order nodes resolve it
        decay_cap = max(1.25 / (c * t_min * max(pos, 1e-6)), 0.05)
        pos = min(K_max, pos + min(width * stretch, decay_cap))
        edges.append(pos)
        width = min(width * 1.4, base)
    return np.array(edges)


def build_contour(cache: DispersionCache, t_min: float = DEFAULT_T_MIN,
                  tol: float = DEFAULT_CONTOUR_TOL, safety: float = 2.0,
                  theta0_override: Optional[float] = None,
                  osc_extent: Optional[float] = None,
                  budget: int = NODE_BUDGET,
                  panel_scale: float = 1.0) -> ContourSpec:
    """Build the truncated contour for evaluation times >= t_min.

    K_max solves exp(-K^2 cos(2 theta0) t_min) K^2 = tol, so the dropped tail
    is below tol for every t >= t_min.
    """
    if t_min <= 0:
        raise ValueError("t_min must be positive")
    r, theta0 = contour_params(cache, safety=safety)
    if theta0_override is not None:
        theta1 = (cache.bounds.Theta + np.pi / 2) / 4.0
        if not theta1 < theta0_override < np.pi / 4:
            raise ValueError("theta0 override outside the admissible open interval")
        theta0 = theta0_override
    c = math.cos(2 * theta0)

    def decay_gap(K):
        return -c * K * K * t_min + 2.0 * math.log(K) - math.log(tol)

    K_hi = max(10.0 * r, math.sqrt(60.0 / (c * t_min)))
    while decay_gap(K_hi) > 0:
        K_hi *= 2.0
    K_max = brentq(decay_gap, r * 1.0000001, K_hi) if decay_gap(r * 1.0000001) > 0 else 1.5 * r
    K_max = max(K_max, 1.5 * r)

    xa, xb = cache.domain.window
    extent = osc_extent if osc_extent is not None else (xb - xa)
    if cache.domain.kind is not DomainKind.FINITE_INTERVAL:
        extent = min(extent, 4.0 / math.sin(theta0))
    osc_rate = cache.bounds.M_n(r) * max(extent, 1e-6)

    edges = _ray_panels(r, K_max, osc_rate, t_min, theta0, panel_scale=panel_scale)
    gl_x, gl_w = np.polynomial.legendre.leggauss(RAY_PANEL_NODES)
    s_nodes, s_weights = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        s_nodes.append(0.5 * (b - a) * gl_x + 0.5 * (a + b))
        s_weights.append(0.5 * (b - a) * gl_w)
    s_nodes = np.concatenate(s_nodes)
    s_weights = np.concatenate(s_weights)

    th_l = np.pi - theta0
    left_nodes = s_nodes[::-1] * np.exp(1j * th_l)
    left_weights = -np.exp(1j * th_l) * s_weights[::-1]

    a_x, a_w = np.polynomial.legendre.leggauss(ARC_NODES)
    th = 0.5 * (theta0 - th_l) * a_x + 0.5 * (theta0 + th_l)  # descending from pi-theta0
    arc_nodes = r * np.exp(1j * th)
    arc_weights = 0.5 * (theta0 - th_l) * a_w * 1j * r * np.exp(1j * th)

    right_nodes = s_nodes * np.exp(1j * theta0)
    right_weights = np.exp(1j * theta0) * s_weights

    nodes = np.concatenate([left_nodes, arc_nodes, right_nodes])
    weights = np.concatenate([left_weights, arc_weights, right_weights])
    if len(nodes) > budget:
        t_sugg = t_min * (len(nodes) / budget) ** 2
        raise BudgetError(
            f"contour needs {len(nodes)} nodes (budget {budget}); "
            f"increase t_min to about {t_sugg:.3g}", suggested_t_min=t_sugg)
    segments = {
        "left": slice(0, len(left_nodes)),
        "arc": slice(len(left_nodes), len(left_nodes) + ARC_NODES),
        "right": slice(len(left_nodes) + ARC_NODES, len(nodes)),
    }
    return ContourSpec(r, theta0, float(K_max), nodes, weights, segments)


@dataclass
class SolutionField:
    """Solution values on an (x, t) grid with the per-datum component split."""

    x: np.ndarray
    t: np.ndarray
    components: dict
    diagnostics: dict = field(default_factory=dict)

    @property
    def q(self) -> np.ndarray:
        out = None
        for v in self.components.values():
            out = v.copy() if out is None else out + v
        return out


def _y_quadrature(cache: DispersionCache, absk: float, x_grid: np.ndarray,
                  per_panel: int = RAY_PANEL_NODES):
    """Oscillation-resolving panels over the window, split at every output x."""
    xa, xb = cache.domain.window
    h = min((xb - xa) / 8.0, 2.0 * np.pi / (4.0 * absk * cache.bounds.M_n(max(absk, 1.0))))
    n_panels = max(8, int(math.ceil((xb - xa) / h)))
    edges = np.unique(np.concatenate([
        np.linspace(xa, xb, n_panels + 1), np.asarray(x_grid, dtype=float)]))
    gl_x, gl_w = np.polynomial.legendre.leggauss(per_panel)
    nodes, weights = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        if b - a < 1e-14:
            continue
        nodes.append(0.5 * (b - a) * gl_x + 0.5 * (a + b))
        weights.append(0.5 * (b - a) * gl_w)
    return np.concatenate(nodes), np.concatenate(weights)


def make_context(k: complex, bc: BoundaryConditions, cache: DispersionCache,
                 x_grid: np.ndarray, N: int, case=None,
                 need_quadrature: bool = True, rtol: float = None,
                 split_x: Optional[float] = None) -> KernelContext:
    """One spectral node's series bundle, characteristic value, and quadrature."""
    mode = mode_from_k(k, cache)
    kind = bc.kind
    xa, xb = cache.domain.window
    if need_quadrature:
        y_nodes, y_weights = _y_quadrature(cache, abs(k), x_grid)
    else:
        y_nodes = np.asarray([], dtype=float)
        y_weights = np.asarray([], dtype=float)
    base = np.unique(np.concatenate([
        np.asarray(x_grid, dtype=float), y_nodes, [xa, xb]]))
    kwargs = {} if rtol is None else {"rtol": rtol}
    ctx = KernelContext(mode=mode, bc=bc, case=case, delta=0.0)
    if kind is DomainKind.FINITE_INTERVAL:
        ctx.forward = accum_cs_forward(k, xa, base, N, cache, mode=mode, **kwargs)
        ctx.backward = accum_cs_backward(k, xb, base, N, cache, mode=mode, **kwargs)
        ctx.delta = delta_fi(bc, ctx.forward)
    elif kind is DomainKind.HALF_LINE:
        ctx.forward = accum_cs_forward(k, xa, base, N, cache, mode=mode, **kwargs)
        ctx.tail = accum_e_tail(k, base, N, cache, mode=mode, **kwargs)
        ctx.delta = delta_hl(bc, ctx.tail)
    else:
        ctx.tilde = accum_e_tilde_tail(k, base, N, cache, mode=mode, **kwargs)
        ctx.tail = accum_e_tail(k, base, N, cache, mode=mode, **kwargs)
        sx = split_x if split_x is not None else 0.5 * (xa + xb)
        snap = base[np.argmin(np.abs(base - sx))]
        ctx.delta = delta_wl(ctx.tilde, ctx.tail, snap)
    ctx.y_nodes = y_nodes
    ctx.y_weights = y_weights
    return ctx


def _choose_truncation(bc, cache, x_grid, probe_k, cap=8) -> int:
    """Smallest truncation whose characteristic value has converged to 1e-9."""
    if cache.is_constant:
        return 0
    prev = None
    for N in range(1, cap + 1):
        ctx = make_context(probe_k, bc, cache, x_grid, N, need_quadrature=False)
        val = ctx.delta
        if prev is not None and abs(val - prev) <= 1e-9 * max(1.0, abs(val)):
            return N
        prev = val
    return cap


def solve_q(bc: BoundaryConditions, data: ProblemData, cache: DispersionCache,
            x_grid, t_grid, N: Optional[int] = None,
            t_min: Optional[float] = None, contour_tol: float = DEFAULT_CONTOUR_TOL,
            safety: float = 2.0, theta0_override: Optional[float] = None,
            contour: Optional[ContourSpec] = None,
            workers: Optional[int] = None) -> SolutionField:
    """Evaluate the contour representation of the solution on a grid.

    Components (initial-data part, forcing part, two boundary parts) are
    accumulated separately and summed on demand.
    """
    x_grid = np.asarray(x_grid, dtype=float)
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any(t_grid <= 0):
        raise ValueError("evaluation times must be positive")
    case = None
    if bc.kind is DomainKind.FINITE_INTERVAL:
        case = classify(bc, cache)
        if case.case is BoundaryCase.UNSUPPORTED:
            raise CaseError("boundary conditions fall outside the four supported cases")
        if not case.regular:
            xa, xb = cache.domain.window
            dmin = 0.05 * (xb - xa)
            if np.any(x_grid < xa + dmin) or np.any(x_grid > xb - dmin):
                raise CaseError(
                    "irregular boundary case: evaluation within 5% of the boundary "
                    "is refused (kernel/characteristic ratio grows there)")
    t_lo = float(np.min(t_grid))
    if t_min is None:
        if t_lo < DEFAULT_T_MIN:
            raise ValueError(
                f"t={t_lo:g} is below the default t_min={DEFAULT_T_MIN:g}; "
                "pass t_min explicitly to evaluate this close to the initial time")
        t_min_eff = t_lo
    else:
        if t_lo < t_min:
            raise ValueError(f"t values below t_min={t_min} are refused")
        t_min_eff = t_min
    spec = contour or build_contour(cache, t_min_eff, contour_tol, safety=safety,
                                    theta0_override=theta0_override)
    if N is None:
        probe = spec.r * 1.2 * np.exp(1j * spec.theta0)
        N = _choose_truncation(bc, cache, x_grid, probe)

    has_q0 = data.q0 is not None
    has_f = data.f is not None
    has_f0 = data.f0 is not None and bc.kind is not DomainKind.WHOLE_LINE
    has_f1 = data.f1 is not None and bc.kind is DomainKind.FINITE_INTERVAL
    shape = (len(t_grid), len(x_grid))
    comps = {
        "q0": np.zeros(shape, dtype=complex),
        "qf": np.zeros(shape, dtype=complex),
        "qb0": np.zeros(shape, dtype=complex),
        "qb1": np.zeros(shape, dtype=complex),
    }
    c = math.cos(2 * spec.theta0)

    def node_contribution(i):
        k = spec.nodes[i]
        decay = math.exp(-c * abs(k) ** 2 * float(np.min(t_grid)))
        if decay * max(1.0, abs(k)) < contour_tol * 1e-3:
            return None
        rtol = min(1e-5, max(1e-10, 1e-10 / max(decay, 1e-30)))
        ctx = make_context(k, bc, cache, x_grid, N, case=case,
                           need_quadrature=has_q0 or has_f, rtol=rtol)
        ek2t = np.exp(-k * k * t_grid)
        out = {name: np.zeros(shape, dtype=complex) for name in comps}
        for ix, x in enumerate(x_grid):
            if has_q0:
                p0 = phi0(ctx, x, data)
                out["q0"][:, ix] += p0 / ctx.delta * ek2t
            if has_f:
                for it, t in enumerate(t_grid):
                    out["qf"][it, ix] += phi_f_deformed(ctx, x, t, data) / ctx.delta
            if has_f0:
                b0 = boundary_kernel(ctx, 0, x)
                fp = data.boundary_fn_prime(0)
                fpp = data.boundary_fn_second(0)
                for it, t in enumerate(t_grid):
                    out["qb0"][it, ix] += (b0 / ctx.delta
                                           * fm_transform_deformed(k * k, t, data.f0, fp,
                                                                   fpp, order=2))
            if has_f1:
                b1 = boundary_kernel(ctx, 1, x)
                fp = data.boundary_fn_prime(1)
                fpp = data.boundary_fn_second(1)
                for it, t in enumerate(t_grid):
                    out["qb1"][it, ix] += (b1 / ctx.delta
                                           * fm_transform_deformed(k * k, t, data.f1, fp,
                                                                   fpp, order=2))
        return out

    n_workers = workers if workers is not None else int(os.environ.get("UTM_THREADS", "1"))
    if n_workers > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(node_contribution, range(spec.n_nodes)))
    else:
        results = [node_contribution(i) for i in range(spec.n_nodes)]
    # fixed-order reduction: traversal order of the contour nodes
    for i, res in enumerate(results):
        if res is None:
            continue
        w = spec.weights[i] / (2.0 * np.pi)
        for name in comps:
            comps[name] += w * res[name]

    active = {"q0": has_q0, "qf": has_f, "qb0": has_f0, "qb1": has_f1}
    comps = {name: v for name, v in comps.items() if active[name]}
    if not comps:
        comps = {"q0": np.zeros(shape, dtype=complex)}
    return SolutionField(x=x_grid, t=t_grid, components=comps,
                         diagnostics={"contour": spec, "N": N, "case": case})


# -- residual diagnostics ----------------------------------------------------

def _stencil_d1(vals: np.ndarray, h: float, axis: int = 0) -> np.ndarray:
    """4th-order first derivative; one-sided 5-point closure at the edges."""
    v = np.moveaxis(vals, axis, 0)
    out = np.empty_like(v)
    out[2:-2] = (-v[4:] + 8 * v[3:-1] - 8 * v[1:-3] + v[:-4]) / (12 * h)
    for i in (0, 1):
        out[i] = (-25 * v[i] + 48 * v[i + 1] - 36 * v[i + 2]
                  + 16 * v[i + 3] - 3 * v[i + 4]) / (12 * h)
    for i in (-1, -2):
        out[i] = (25 * v[i] - 48 * v[i - 1] + 36 * v[i - 2]
                  - 16 * v[i - 3] + 3 * v[i - 4]) / (12 * h)
    return np.moveaxis(out, 0, axis)


@dataclass(frozen=True)
class ResidualReport:
    max_residual: float
    scale: float

    @property
    def normalized(self) -> float:
        return self.max_residual / self.scale if self.scale > 0 else self.max_residual


def pde_residual(field: SolutionField, cache: DispersionCache,
                 data: Optional[ProblemData] = None) -> ResidualReport:
    """Max interior defect of the evolution equation via 4th-order stencils.

    Needs uniform x and t grids with at least five points each.
    """
    x, t = field.x, field.t
    hx = x[1] - x[0]
    ht = t[1] - t[0]
    if not (np.allclose(np.diff(x), hx) and np.allclose(np.diff(t), ht)):
        raise ValueError("residual evaluation needs uniform grids")
    q = field.q
    prof = cache.profile
    beta = np.asarray(prof.beta(x), dtype=complex)
    alpha = np.asarray(prof.alpha(x), dtype=complex)
    gamma = np.asarray(prof.gamma(x), dtype=complex)
    qx = _stencil_d1(q, hx, axis=1)
    flux = _stencil_d1(beta[None, :] * qx, hx, axis=1)
    qt = _stencil_d1(q, ht, axis=0)
    rhs = alpha[None, :] * flux + gamma[None, :] * q
    if data is not None and data.f is not None:
        rhs = rhs + data.f_vals(x[None, :], t[:, None])
    res = qt - rhs
    interior = res[2:-2, 4:-4] if res.shape[1] > 8 else res[2:-2, 2:-2]
    scale = float(np.max(np.abs(qt)) + np.max(np.abs(rhs)))
    return ResidualReport(float(np.max(np.abs(interior))), scale)


def bc_residual(field: SolutionField, bc: BoundaryConditions,
                data: ProblemData) -> np.ndarray:
    """Boundary-row defects per output time (one column per row)."""
    x, t = field.x, field.t
    hx = x[1] - x[0]
    q = field.q
    qx = _stencil_d1(q, hx, axis=1)
    if bc.kind is DomainKind.HALF_LINE:
        f0 = (np.asarray(data.f0(t), dtype=complex) if data.f0 is not None
              else np.zeros(len(t), dtype=complex))
        res = bc.a0 * q[:, 0] + bc.a1 * qx[:, 0] - f0
        return np.abs(res)[:, None]
    if bc.kind is DomainKind.WHOLE_LINE:
        return np.abs(np.stack([q[:, 0], q[:, -1]], axis=1))
    out = np.empty((len(t), 2))
    for ell in (1, 2):
        a1, a2, b1, b2 = bc.rows[ell - 1]
        fm = data.boundary_fn(ell - 1)
        fv = (np.asarray(fm(t), dtype=complex) if fm is not None
              else np.zeros(len(t), dtype=complex))
        res = a1 * q[:, 0] + a2 * qx[:, 0] + b1 * q[:, -1] + b2 * qx[:, -1] - fv
        out[:, ell - 1] = np.abs(res)
    return out


def ic_residual(field: SolutionField, data: ProblemData) -> float:
    """Max disagreement between the earliest-time slice and the initial data."""
    q0 = data.q0_vals(field.x)
    return float(np.max(np.abs(field.q[0, :] - q0)))
