import numpy as np
import pytest
from scipy.special import erfc

from utmvc.coefficients import Domain, DomainKind, DispersionCache, preset_profile
from utmvc.delta import BoundaryConditions
from utmvc.errors import BudgetError, CaseError
from utmvc.kernels import ProblemData
from utmvc.solver import (
    bc_residual,
    build_contour,
    ic_residual,
    pde_residual,
    solve_q,
)

DIRICHLET = [[1, 0, 0, 0], [0, 0, 1, 0]]


def test_contour_weights_against_refinement(heat_cache):
    """Quadrature reproduces an analytic contour integral against 2x panels."""
    t = 0.2
    spec = build_contour(heat_cache, t_min=t, tol=1e-12)
    val1 = np.sum(spec.weights * np.exp(-spec.nodes**2 * t))
    fine = build_contour(heat_cache, t_min=t, tol=1e-12, panel_scale=0.5)
    val2 = np.sum(fine.weights * np.exp(-fine.nodes**2 * t))
    assert fine.n_nodes > spec.n_nodes
    assert abs(val1 - val2) < 1e-12
    assert np.min(np.abs(spec.nodes)) >= spec.r * (1 - 1e-12)
    th = np.angle(spec.nodes)
    assert np.all((th >= spec.theta0 - 1e-12) & (th <= np.pi - spec.theta0 + 1e-12))


def test_contour_budget_error(heat_cache):
    with pytest.raises(BudgetError) as err:
        build_contour(heat_cache, t_min=1e-9, tol=1e-12, budget=2000)
    assert err.value.suggested_t_min > 1e-9


def test_zero_data_gives_zero(bump_cache):
    bc = BoundaryConditions.finite_interval(DIRICHLET)
    field = solve_q(bc, ProblemData(), bump_cache, np.linspace(0.1, 0.9, 5),
                    np.array([0.1]))
    assert np.max(np.abs(field.q)) < 1e-13


def test_heat_single_mode_value(heat_cache):
    bc = BoundaryConditions.finite_interval(DIRICHLET)
    data = ProblemData(q0=lambda x: np.sin(np.pi * np.asarray(x)).astype(complex))
    field = solve_q(bc, data, heat_cache, np.array([0.5]), np.array([0.1]))
    assert abs(field.q[0, 0] - np.exp(-np.pi**2 / 10)) < 1e-8


def test_half_line_erfc(hl_cache):
    bc = BoundaryConditions.half_line(1, 0)
    data = ProblemData(
        f0=lambda t: np.ones_like(np.asarray(t, dtype=float), dtype=complex),
        f0_prime=lambda t: np.zeros_like(np.asarray(t, dtype=float), dtype=complex))
    xs = np.array([0.3, 1.0, 2.0])
    field = solve_q(bc, data, hl_cache, xs, np.array([0.25]))
    want = erfc(xs / (2 * np.sqrt(0.25)))
    assert np.max(np.abs(field.q[0] - want)) < 1e-10


def test_superposition(bump_cache, rng):
    bc = BoundaryConditions.finite_interval(DIRICHLET)
    xs = np.linspace(0.2, 0.8, 4)
    ts = np.array([0.1, 0.3])
    q1 = lambda x: np.sin(np.pi * np.asarray(x)).astype(complex)
    q2 = lambda x: (np.asarray(x) ** 2 * (1 - np.asarray(x))).astype(complex)
    a = complex(rng.normal(), rng.normal())
    f1 = solve_q(bc, ProblemData(q0=q1), bump_cache, xs, ts)
    f2 = solve_q(bc, ProblemData(q0=q2), bump_cache, xs, ts)
    f12 = solve_q(bc, ProblemData(q0=lambda x: q1(x) + a * q2(x)), bump_cache, xs, ts)
    assert np.max(np.abs(f12.q - (f1.q + a * f2.q))) < 1e-11


def test_theta0_independence(bump_cache):
    """Two admissible ray angles give the same field (integrand analyticity)."""
    from utmvc.coefficients import contour_params

    bc = BoundaryConditions.finite_interval(DIRICHLET)
    data = ProblemData(q0=lambda x: np.sin(np.pi * np.asarray(x)).astype(complex))
    xs = np.array([0.3, 0.6])
    ts = np.array([0.1])
    theta1 = (bump_cache.bounds.Theta + np.pi / 2) / 4
    base = solve_q(bc, data, bump_cache, xs, ts)
    th_alt = theta1 + 0.7 * (np.pi / 4 - theta1)
    alt = solve_q(bc, data, bump_cache, xs, ts, theta0_override=th_alt)
    assert np.max(np.abs(base.q - alt.q)) < 1e-9


def test_contour_refinement_convergence(bump_cache):
    """Field is unchanged when the spectral truncation tolerance tightens."""
    bc = BoundaryConditions.finite_interval(DIRICHLET)
    data = ProblemData(q0=lambda x: np.sin(np.pi * np.asarray(x)).astype(complex))
    xs = np.array([0.4])
    ts = np.array([0.1])
    f1 = solve_q(bc, data, bump_cache, xs, ts, contour_tol=1e-10)
    f2 = solve_q(bc, data, bump_cache, xs, ts, contour_tol=1e-13)
    assert abs(f1.q[0, 0] - f2.q[0, 0]) < 1e-10


def test_small_t_refused(heat_cache):
    bc = BoundaryConditions.finite_interval(DIRICHLET)
    data = ProblemData(q0=lambda x: np.sin(np.pi * np.asarray(x)).astype(complex))
    with pytest.raises(ValueError, match="t_min"):
        solve_q(bc, data, heat_cache, np.array([0.5]), np.array([1e-4]))
    # explicit override allows it
    field = solve_q(bc, data, heat_cache, np.array([0.5]), np.array([1e-4]),
                    t_min=1e-4, contour_tol=1e-8)
    assert abs(field.q[0, 0] - np.sin(np.pi * 0.5)) < 1e-2


def test_irregular_case_near_boundary_refused(heat_cache):
    bc = BoundaryConditions.finite_interval([[1, 0, -1, 0], [1, 1, 0, 1]])  # circle-interface
    data = ProblemData(q0=lambda x: np.sin(np.pi * np.asarray(x)).astype(complex))
    with pytest.raises(CaseError, match="irregular"):
        solve_q(bc, data, heat_cache, np.array([0.01]), np.array([0.1]))


def test_unsupported_case_refused(heat_cache):
    rows = [[1, 0, 1, 0], [0, 1, 0, 1]]
    bc = BoundaryConditions.finite_interval(rows)
    from utmvc.delta import classify, BoundaryCase

    if classify(bc, heat_cache).case is BoundaryCase.UNSUPPORTED:
        with pytest.raises(CaseError):
            solve_q(bc, ProblemData(q0=lambda x: np.ones_like(np.asarray(x, dtype=float), dtype=complex)),
                    heat_cache, np.array([0.5]), np.array([0.1]))


def test_pde_residual_exact_field(heat_cache):
    """Analytic samples leave only the stencil truncation residue."""
    from utmvc.solver import SolutionField

    xs = np.linspace(0, 1, 41)
    ts = np.linspace(0.1, 0.2, 6)
    q = np.exp(-np.pi**2 * ts)[:, None] * np.sin(np.pi * xs)[None, :]
    field = SolutionField(x=xs, t=ts, components={"q0": q.astype(complex)})
    rep = pde_residual(field, heat_cache)
    hx, ht = xs[1] - xs[0], ts[1] - ts[0]
    # fifth-derivative truncation of both stencils on the single mode
    fd_scale = (np.pi**10 * ht**4 + np.pi**6 * hx**4) / 30
    assert rep.max_residual < 10 * fd_scale * np.max(np.abs(q))


def test_pde_residual_solver_field(heat_cache):
    bc = BoundaryConditions.finite_interval(DIRICHLET)
    data = ProblemData(q0=lambda x: np.sin(np.pi * np.asarray(x)).astype(complex))
    xs = np.linspace(0, 1, 41)
    ts = np.linspace(0.1, 0.2, 6)
    field = solve_q(bc, data, heat_cache, xs, ts)
    rep = pde_residual(field, heat_cache)
    assert rep.normalized < 1e-4


def test_bc_residual_homogeneous(heat_cache):
    bc = BoundaryConditions.finite_interval(DIRICHLET)
    data = ProblemData(q0=lambda x: np.sin(np.pi * np.asarray(x)).astype(complex))
    xs = np.linspace(0, 1, 41)
    ts = np.array([0.1, 0.3])
    field = solve_q(bc, data, heat_cache, xs, ts)
    res = bc_residual(field, bc, data)
    assert np.max(res) < 1e-8


def test_bc_residual_inhomogeneous_half_line(hl_cache):
    """Sinusoidal boundary drive is reproduced at the wall."""
    bc = BoundaryConditions.half_line(1, 0)
    data = ProblemData(f0=lambda t: np.sin(np.asarray(t, dtype=float)).astype(complex),
                       f0_prime=lambda t: np.cos(np.asarray(t, dtype=float)).astype(complex))
    xs = np.linspace(0, 2.0, 21)
    ts = np.array([0.25, 0.5])
    field = solve_q(bc, data, hl_cache, xs, ts)
    res = bc_residual(field, bc, data)
    assert np.max(res) < 1e-4


def test_whole_line_decay(wl_bump_cache):
    bc = BoundaryConditions.whole_line()
    data = ProblemData(q0=lambda x: np.exp(-4.0 * np.asarray(x, dtype=float) ** 2).astype(complex))
    xs = np.array([-9.5, 0.0, 9.5])
    field = solve_q(bc, data, wl_bump_cache, xs, np.array([0.2]))
    assert abs(field.q[0, 0]) < 1e-8
    assert abs(field.q[0, 2]) < 1e-8
    assert abs(field.q[0, 1]) > 1e-2


def test_ic_recovery_and_component_decay(heat_cache):
    """Early-time slice returns the data; forced parts vanish as t -> 0+."""
    bc = BoundaryConditions.finite_interval(DIRICHLET)
    data = ProblemData(
        q0=lambda x: np.sin(np.pi * np.asarray(x)).astype(complex),
        f=lambda x, t: np.sin(np.pi * np.asarray(x)) * np.ones_like(np.asarray(t, dtype=float)),
        f_t=lambda x, t: np.zeros(np.broadcast(np.asarray(x), np.asarray(t)).shape, dtype=complex),
        f0=lambda t: np.sin(np.asarray(t, dtype=float)).astype(complex),
        f0_prime=lambda t: np.cos(np.asarray(t, dtype=float)).astype(complex))
    xs = np.linspace(0.1, 0.9, 9)
    field = solve_q(bc, data, heat_cache, xs, np.array([1e-4]),
                    t_min=1e-4, contour_tol=1e-8)
    assert ic_residual(field, data) < 1e-2
    assert np.max(np.abs(field.components["qf"])) < 1e-6
    assert np.max(np.abs(field.components["qb0"])) < 1e-6


def test_forced_problem_pde_residual(heat_cache):
    bc = BoundaryConditions.finite_interval(DIRICHLET)
    data = ProblemData(
        q0=lambda x: np.sin(np.pi * np.asarray(x)).astype(complex),
        f=lambda x, t: (np.sin(np.pi * np.asarray(x))
                        * np.exp(-np.asarray(t, dtype=float))).astype(complex),
        f_t=lambda x, t: (-np.sin(np.pi * np.asarray(x))
                          * np.exp(-np.asarray(t, dtype=float))).astype(complex))
    xs = np.linspace(0, 1, 33)
    ts = np.linspace(0.1, 0.18, 5)
    field = solve_q(bc, data, heat_cache, xs, ts)
    rep = pde_residual(field, heat_cache, data)
    assert rep.normalized < 1e-4
    # cross-check against the closed form of this single-mode forced problem
    c = np.pi**2 - 1.0
    want = (np.exp(-np.pi**2 * ts)[:, None] * (1 - 1 / c)
            + np.exp(-ts)[:, None] / c) * np.sin(np.pi * xs)[None, :]
    assert np.max(np.abs(field.q - want)) < 1e-7
