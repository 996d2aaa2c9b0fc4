"""Spectral-space numerator pieces: the two-point kernel, boundary kernels,
and the transforms of the initial, forcing, and boundary data.

Everything here is evaluated per spectral node on tabulated grids.  A
:class:`KernelContext` bundles the accumulation series of one node together
with the boundary data; the kernel is then a finite double Cauchy sum over
the tabulated family values, pairing the forward family at the smaller
coordinate with the backward (or tail) family at the larger one.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .accum import (
    AccumSeries,
    SpectralMode,
    accum_cs_backward,
    accum_cs_forward,
)
from .coefficients import DispersionCache, DomainKind, sqrt_g_dispersion
from .delta import BoundaryConditions, ClassifiedCase, _k_n_at, _k_sqrtbn_pair
from .errors import EvaluationError, StabilityError

GAUSS_NODES = 10


@dataclass(frozen=True)
class ProblemData:
    """Initial, forcing, and boundary data of one problem.

    ``f`` maps (x, t) arrays to complex; ``f_t`` is its time derivative
    (finite-differenced when not supplied).  ``f0``/``f1`` are the boundary
    functions with optional derivatives.
    """

    q0: Optional[Callable] = None
    f: Optional[Callable] = None
    f_t: Optional[Callable] = None
    f0: Optional[Callable] = None
    f0_prime: Optional[Callable] = None
    f1: Optional[Callable] = None
    f1_prime: Optional[Callable] = None

    def q0_vals(self, x):
        if self.q0 is None:
            return np.zeros_like(np.asarray(x, dtype=float), dtype=complex)
        v = np.asarray(self.q0(x), dtype=complex)
        if not np.all(np.isfinite(v)):
            raise EvaluationError("initial data returned non-finite values")
        return v

    def f_vals(self, x, t):
        if self.f is None:
            return np.zeros(np.broadcast(np.asarray(x), np.asarray(t)).shape, dtype=complex)
        return np.asarray(self.f(x, t), dtype=complex)

    def f_t_vals(self, x, t, h=1e-6):
        if self.f is None:
            return np.zeros(np.broadcast(np.asarray(x), np.asarray(t)).shape, dtype=complex)
        if self.f_t is not None:
            return np.asarray(self.f_t(x, t), dtype=complex)
        tp = np.asarray(t, dtype=float)
        lo = np.maximum(tp - h, 0.0)
        return (np.asarray(self.f(x, tp + h), dtype=complex)
                - np.asarray(self.f(x, lo), dtype=complex)) / (tp + h - lo)

    def boundary_fn(self, m: int):
        return self.f0 if m == 0 else self.f1

    def boundary_fn_prime(self, m: int, h=1e-6):
        fp = self.f0_prime if m == 0 else self.f1_prime
        if fp is not None:
            return fp
        fm = self.boundary_fn(m)
        if fm is None:
            return None

        def num_prime(t):
            t = np.asarray(t, dtype=float)
            lo = np.maximum(t - h, 0.0)
            return (np.asarray(fm(t + h), dtype=complex)
                    - np.asarray(fm(lo), dtype=complex)) / (t + h - lo)

        return num_prime

    def boundary_fn_second(self, m: int, h=1e-5):
        fp = self.boundary_fn_prime(m)
        if fp is None:
            return None

        def num_second(t):
            t = np.asarray(t, dtype=float)
            lo = np.maximum(t - h, 0.0)
            return (np.asarray(fp(t + h), dtype=complex)
                    - np.asarray(fp(lo), dtype=complex)) / (t + h - lo)

        return num_second


def _sqrt_beta_n(mode: SpectralMode, x):
    """sqrt(beta n) in the direct regime; sqrt(beta mu) in the reduced one.

    The reduced value differs by a constant quarter root of the dispersion
    shift, which cancels out of every ratio the kernels form.
    """
    cache = mode.cache
    sb = np.asarray(cache.sqrt_beta_mu(x), dtype=complex)
    if mode.kay is not None:
        return sb
    return sb * sqrt_g_dispersion(mode.k, np.asarray(cache.profile.gamma(x), dtype=complex))


@dataclass
class KernelContext:
    """Per-spectral-node bundle of series, boundary data, and quadrature."""

    mode: SpectralMode
    bc: BoundaryConditions
    case: Optional[ClassifiedCase]
    delta: complex
    forward: Optional[AccumSeries] = None
    backward: Optional[AccumSeries] = None
    tail: Optional[AccumSeries] = None
    tilde: Optional[AccumSeries] = None
    y_nodes: Optional[np.ndarray] = None
    y_weights: Optional[np.ndarray] = None
    _memo: dict = field(default_factory=dict)

    @property
    def k(self):
        return self.mode.k if self.mode.k is not None else self.mode.kay

    @property
    def cache(self) -> DispersionCache:
        return self.mode.cache

    @property
    def kind(self) -> DomainKind:
        return self.bc.kind

    def k2(self) -> complex:
        """Square of the spectral parameter (recovered from the reduced one)."""
        if self.mode.k is not None:
            return self.mode.k**2
        return self.mode.kay**2 - self.cache.gamma0

    # -- cumulative sums over the truncation index ---------------------------

    def _stack(self, series: AccumSeries, comp: str) -> np.ndarray:
        if comp == "c":
            return series.values[0]
        if comp == "s":
            return series.values[1]
        return series.values

    def _cum(self, series: AccumSeries, comp: str, alternate: bool) -> np.ndarray:
        key = (id(series), comp, alternate)
        if key not in self._memo:
            stack = self._stack(series, comp)
            if alternate:
                signs = np.array([(-1.0) ** n for n in range(series.N + 1)])
                stack = stack * signs[:, None]
            self._memo[key] = np.cumsum(stack, axis=0)
        return self._memo[key]

    def cauchy_sum(self, fam_a: AccumSeries, comp_a: str, idx_a,
                   fam_b: AccumSeries, comp_b: str, idx_b,
                   alternate_b: bool) -> np.ndarray:
        """Truncated double sum over i+l <= N of A_i[idx_a] * (+-1)^l * B_l[idx_b].

        Exactly one of idx_a, idx_b may be an index array.
        """
        N = min(fam_a.N, fam_b.N)
        orders = np.arange(N, -1, -1)
        if np.ndim(idx_b) == 0:
            b_cum = self._cum(fam_b, comp_b, alternate_b)
            a_vals = self._stack(fam_a, comp_a)[:N + 1, idx_a]
            return np.tensordot(b_cum[orders, idx_b], a_vals, axes=(0, 0))
        a_cum = self._cum(fam_a, comp_a, False)
        b_stack = self._stack(fam_b, comp_b)[:N + 1, idx_b]
        if alternate_b:
            signs = np.array([(-1.0) ** n for n in range(N + 1)])
            b_stack = b_stack * signs[:, None]
        return np.tensordot(a_cum[orders, idx_a], b_stack, axes=(0, 0))

    def anchored_series(self, x: float, side: str) -> AccumSeries:
        """CS family anchored at interior x over the sub-window on one side.

        side="below": family on (y, x) tabulated for grid points y <= x;
        side="above": family on (x, y) for grid points y >= x.
        """
        key = ("anchored", x, side)
        if key not in self._memo:
            base = self.forward
            grid = base.grid
            if side == "below":
                sub = grid[grid <= x + 1e-14]
                series = accum_cs_backward(None, x, sub, base.N, self.cache, mode=self.mode)
            else:
                sub = grid[grid >= x - 1e-14]
                series = accum_cs_forward(None, x, sub, base.N, self.cache, mode=self.mode)
            self._memo[key] = series
        return self._memo[key]


def psi(ctx: KernelContext, x: float, y) -> np.ndarray:
    """Two-point kernel at tabulated points; y may be an array.

    The smaller coordinate takes the forward family and the larger the
    backward or tail family; exponential prefactors come from the tabulated
    phase integrals.
    """
    y_arr = np.atleast_1d(np.asarray(y, dtype=float))
    scalar = np.ndim(y) == 0
    out = np.empty(y_arr.shape, dtype=complex)
    below = y_arr <= x
    if np.any(below):
        out[below] = _psi_side(ctx, x, y_arr[below], lower_is_y=True)
    if np.any(~below):
        out[~below] = _psi_side(ctx, x, y_arr[~below], lower_is_y=False)
    return out[0] if scalar else out


def _psi_side(ctx: KernelContext, x: float, y_vec: np.ndarray, lower_is_y: bool):
    mode = ctx.mode
    scale = mode.scale
    kind = ctx.kind

    if kind is DomainKind.WHOLE_LINE:
        tilde, tail = ctx.tilde, ctx.tail
        ix_t = tilde.index_of(x)
        ix_e = tail.index_of(x)
        if lower_is_y:
            u_idx = np.array([tilde.index_of(v) for v in y_vec])
            pref = np.exp(1j * scale * (tilde.phase[ix_t] - tilde.phase[u_idx]))
            return pref * ctx.cauchy_sum(tilde, "e", u_idx, tail, "e", ix_e, alternate_b=True)
        v_idx = np.array([tail.index_of(v) for v in y_vec])
        phase_idx = np.array([tilde.index_of(v) for v in y_vec])
        pref = np.exp(1j * scale * (tilde.phase[phase_idx] - tilde.phase[ix_t]))
        return pref * ctx.cauchy_sum(tilde, "e", ix_t, tail, "e", v_idx, alternate_b=True)

    if kind is DomainKind.HALF_LINE:
        fwd, tail = ctx.forward, ctx.tail
        xl = ctx.cache.domain.x_l
        kn_l = _k_n_at(mode, xl)
        a0, a1 = ctx.bc.a0, ctx.bc.a1
        if lower_is_y:
            u_idx = np.array([fwd.index_of(v) for v in y_vec])
            pref = 4.0 * np.exp(1j * scale * fwd.phase[fwd.index_of(x)])
            i_e = tail.index_of(x)
            term_s = ctx.cauchy_sum(fwd, "s", u_idx, tail, "e", i_e, alternate_b=True)
            term_c = ctx.cauchy_sum(fwd, "c", u_idx, tail, "e", i_e, alternate_b=True)
            return pref * (a0 / kn_l * term_s - a1 * term_c)
        i_f = fwd.index_of(x)
        v_idx = np.array([tail.index_of(v) for v in y_vec])
        phase_idx = np.array([fwd.index_of(v) for v in y_vec])
        pref = 4.0 * np.exp(1j * scale * fwd.phase[phase_idx])
        term_s = ctx.cauchy_sum(fwd, "s", i_f, tail, "e", v_idx, alternate_b=True)
        term_c = ctx.cauchy_sum(fwd, "c", i_f, tail, "e", v_idx, alternate_b=True)
        return pref * (a0 / kn_l * term_s - a1 * term_c)

    # finite interval
    fwd, bwd = ctx.forward, ctx.backward
    bc = ctx.bc
    cache = ctx.cache
    xl, xr = cache.domain.x_l, cache.domain.x_r
    kn_l = _k_n_at(mode, xl)
    kn_r = _k_n_at(mode, xr)
    ksq = _k_sqrtbn_pair(mode, xl, xr)
    beta_l = complex(np.asarray(cache.profile.beta(xl), dtype=complex))
    beta_r = complex(np.asarray(cache.profile.beta(xr), dtype=complex))
    xi = complex(np.exp(1j * scale * fwd.phase[fwd.index_of(xr)]))
    ab24, ab13 = bc.minor(2, 4), bc.minor(1, 3)
    ab14, ab23 = bc.minor(1, 4), bc.minor(2, 3)

    if lower_is_y:
        idx_a = np.array([fwd.index_of(v) for v in y_vec])
        idx_b = bwd.index_of(x)
        last_minor = beta_r * bc.minor(1, 2)
    else:
        idx_a = fwd.index_of(x)
        idx_b = np.array([bwd.index_of(v) for v in y_vec])
        last_minor = beta_l * bc.minor(3, 4)

    total = (-ab24 * ctx.cauchy_sum(fwd, "c", idx_a, bwd, "c", idx_b, alternate_b=True)
             + ab13 / (kn_l * kn_r) * ctx.cauchy_sum(fwd, "s", idx_a, bwd, "s", idx_b, alternate_b=False)
             + ab14 / kn_l * ctx.cauchy_sum(fwd, "s", idx_a, bwd, "c", idx_b, alternate_b=True)
             - ab23 / kn_r * ctx.cauchy_sum(fwd, "c", idx_a, bwd, "s", idx_b, alternate_b=False))
    if abs(last_minor) > 0:
        sub = ctx.anchored_series(x, "below" if lower_is_y else "above")
        idx = np.array([sub.index_of(v) for v in y_vec])
        s_sum = np.sum(sub.values[1], axis=0)[idx]
        total = total - last_minor / ksq * s_sum
    return 4.0 * xi * total


def boundary_kernel(ctx: KernelContext, m: int, x: float) -> complex:
    """Boundary-data kernel for the half line (m=0) and finite interval (m=0,1).

    The finite-interval kernel with index m is built from boundary row 2-m and
    annihilates the other row, which is how each boundary datum enters exactly
    one boundary condition.
    """
    kind = ctx.kind
    mode = ctx.mode
    scale = mode.scale
    cache = ctx.cache
    if kind is DomainKind.WHOLE_LINE:
        return 0.0 + 0.0j
    if kind is DomainKind.HALF_LINE:
        if m != 0:
            raise ValueError("the half line carries a single boundary kernel (m=0)")
        xl = cache.domain.x_l
        tail = ctx.tail
        i_x = tail.index_of(x)
        beta_l = complex(np.asarray(cache.profile.beta(xl), dtype=complex))
        sb_l = complex(_sqrt_beta_n(mode, xl))
        sb_x = complex(_sqrt_beta_n(mode, x))
        phase = ctx.forward.phase[ctx.forward.index_of(x)]
        alt = sum((-1.0) ** n * tail.e(n)[i_x] for n in range(tail.N + 1))
        return complex(4.0 * beta_l * np.exp(1j * scale * phase) / (sb_l * sb_x) * alt)
    if m not in (0, 1):
        raise ValueError("m must be 0 or 1")
    j = 2 - m
    aj1, aj2, bj1, bj2 = ctx.bc.rows[j - 1]
    xl, xr = cache.domain.x_l, cache.domain.x_r
    fwd, bwd = ctx.forward, ctx.backward
    i_f = fwd.index_of(x)
    i_b = bwd.index_of(x)
    kn_l = _k_n_at(mode, xl)
    kn_r = _k_n_at(mode, xr)
    beta_l = complex(np.asarray(cache.profile.beta(xl), dtype=complex))
    beta_r = complex(np.asarray(cache.profile.beta(xr), dtype=complex))
    sb_l = complex(_sqrt_beta_n(mode, xl))
    sb_r = complex(_sqrt_beta_n(mode, xr))
    sb_x = complex(_sqrt_beta_n(mode, x))
    xi = complex(np.exp(1j * scale * fwd.phase[fwd.index_of(xr)]))
    sum_s_f = sum(fwd.s(n)[i_f] for n in range(fwd.N + 1))
    sum_c_f = sum(fwd.c(n)[i_f] for n in range(fwd.N + 1))
    sum_s_b = sum(bwd.s(n)[i_b] for n in range(bwd.N + 1))
    alt_c_b = sum((-1.0) ** n * bwd.c(n)[i_b] for n in range(bwd.N + 1))
    val = (beta_r / sb_r * (-aj1 / kn_l * sum_s_f + aj2 * sum_c_f)
           + beta_l / sb_l * (bj1 / kn_r * sum_s_b + bj2 * alt_c_b))
    return complex((-1.0) ** j * 4.0 * xi / sb_x * val)


def phi0(ctx: KernelContext, x: float, data: ProblemData) -> complex:
    """Transform of the initial data: weighted kernel integral over the domain."""
    y = ctx.y_nodes
    w = ctx.y_weights
    qa = data.q0_vals(y) / np.asarray(ctx.cache.profile.alpha(y), dtype=complex)
    if not np.any(qa):
        return 0.0 + 0.0j
    vals = psi(ctx, x, y)
    sb_x = complex(_sqrt_beta_n(ctx.mode, x))
    sb_y = _sqrt_beta_n(ctx.mode, y)
    return complex(np.sum(w * vals * qa / (sb_x * sb_y)))


# -- time transforms ---------------------------------------------------------

def _exp_weighted_time_nodes(k2: complex, t: float, per_panel: int = GAUSS_NODES):
    """Panels on (0, t) for integrands carrying exp(-k^2 (t-s)).

    Panel widths resolve both the decay scale of Re(k^2) and the oscillation
    scale of Im(k^2); far panels are dropped once the decay factor falls
    below 1e-18 relative to the near edge.
    """
    re, im = abs(k2.real), abs(k2.imag)
    width = min(t, 1.0 / max(re / 8.0, im / 4.0, 1.0 / t))
    edges = [t]
    pos = t
    while pos > 0:
        pos = max(0.0, pos - width)
        edges.append(pos)
        if k2.real > 0 and k2.real * (t - pos) > 45.0:
            break
        width *= 1.5
    edges = np.array(edges[::-1])
    gl_x, gl_w = np.polynomial.legendre.leggauss(per_panel)
    nodes, weights = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        if b <= a:
            continue
        nodes.append(0.5 * (b - a) * gl_x + 0.5 * (a + b))
        weights.append(0.5 * (b - a) * gl_w)
    return np.concatenate(nodes), np.concatenate(weights)


def fm_transform(k2: complex, t: float, fm: Callable) -> complex:
    """Direct boundary-data transform: integral of exp(k^2 s) f(s) over (0, t).

    Undeformed definition; safe only while Re(k^2)*t stays moderate, so this
    is the moderate-|k| oracle for the deformed version below.
    """
    k2 = complex(k2)
    if k2.real * t > 600.0:
        raise StabilityError("direct transform would overflow; use the deformed form")
    s, w = _exp_weighted_time_nodes(k2, t)
    vals = np.exp(k2 * s) * np.asarray(fm(s), dtype=complex)
    return complex(np.sum(w * vals))


def fm_transform_deformed(k2: complex, t: float, fm: Callable,
                          fm_prime: Optional[Callable],
                          fm_second: Optional[Callable] = None,
                          order: int = 1) -> complex:
    """Deformed boundary transform with the decay factor folded in.

    Returns transform * exp(-k^2 t).  Only differences exp(-k^2 (t-s)) with
    s <= t are evaluated, so nothing overflows on the decaying part of the
    spectral contour.  ``order=2`` integrates by parts once more (dropping a
    term that the closed contour annihilates), which speeds up the algebraic
    decay of the integrand near the boundary by k^-2; it needs the derivative
    of the boundary function.
    """
    k2 = complex(k2)
    if k2.real < 0 and abs(k2.real) * t > 600.0:
        raise StabilityError("deformed transform is unstable for growing exponents")
    f0 = complex(np.asarray(fm(0.0), dtype=complex))
    out = -f0 * np.exp(-k2 * t) / k2
    if fm_prime is None:
        return complex(out)
    if order >= 2:
        fp0 = complex(np.asarray(fm_prime(0.0), dtype=complex))
        out = out + fp0 * np.exp(-k2 * t) / (k2 * k2)
        if fm_second is not None:
            s, w = _exp_weighted_time_nodes(k2, t)
            fpp = np.asarray(fm_second(s), dtype=complex)
            if np.max(np.abs(fpp)) > 0:
                out = out + np.sum(w * np.exp(-k2 * (t - s)) * fpp) / (k2 * k2)
        return complex(out)
    s, w = _exp_weighted_time_nodes(k2, t)
    fp = np.asarray(fm_prime(s), dtype=complex)
    if np.max(np.abs(fp)) > 0:
        out = out - np.sum(w * np.exp(-k2 * (t - s)) * fp) / k2
    return complex(out)


def phi_f_deformed(ctx: KernelContext, x: float, t: float, data: ProblemData) -> complex:
    """Deformed forcing transform times the decay factor, integrated in y."""
    if data.f is None:
        return 0.0 + 0.0j
    k2 = ctx.k2()
    y = ctx.y_nodes
    w = ctx.y_weights
    alpha_y = np.asarray(ctx.cache.profile.alpha(y), dtype=complex)
    frak = -data.f_vals(y, np.zeros_like(y)) / alpha_y * np.exp(-k2 * t) / k2
    s, sw = _exp_weighted_time_nodes(k2, t)
    ft = data.f_t_vals(y[:, None], s[None, :]) / alpha_y[:, None]
    frak = frak - (ft @ (sw * np.exp(-k2 * (t - s)))) / k2
    vals = psi(ctx, x, y)
    sb_x = complex(_sqrt_beta_n(ctx.mode, x))
    sb_y = _sqrt_beta_n(ctx.mode, y)
    return complex(np.sum(w * vals * frak / (sb_x * sb_y)))


def phi_f_direct(ctx: KernelContext, x: float, t: float, data: ProblemData) -> complex:
    """Undeformed forcing transform times exp(-k^2 t); moderate-|k| oracle."""
    if data.f is None:
        return 0.0 + 0.0j
    k2 = ctx.k2()
    y = ctx.y_nodes
    w = ctx.y_weights
    alpha_y = np.asarray(ctx.cache.profile.alpha(y), dtype=complex)
    s, sw = _exp_weighted_time_nodes(k2, t)
    fv = data.f_vals(y[:, None], s[None, :]) / alpha_y[:, None]
    ftilde_decay = fv @ (sw * np.exp(-k2 * (t - s)))
    vals = psi(ctx, x, y)
    sb_x = complex(_sqrt_beta_n(ctx.mode, x))
    sb_y = _sqrt_beta_n(ctx.mode, y)
    return complex(np.sum(w * vals * ftilde_decay / (sb_x * sb_y)))
