import numpy as np
import pytest
import scipy.sparse.linalg as spla
from hypothesis import given, settings, strategies as st

from cht_fvm.cases import builtin_case, manufactured_exact, manufactured_gradient, with_resolution
from cht_fvm.cht import build_setup, initial_thermal_state, solve_heat
from cht_fvm.grid import build_grid
from cht_fvm.boundary import resolve_thermal_bc
from cht_fvm.thermal import (
    ConductivityLaw,
    CoupledHeatProblem,
    CouplingConvergenceError,
    HeatOperator,
    ThermalError,
    ThermalProps,
    ThermalState,
    dtn_solve,
    gauss_newton_control,
    interface_temperatures,
    laplace_beltrami_basis,
    sqp_linear_model,
    sqp_solve,
)


def diffusion_setup(case_id, n):
    return build_setup(with_resolution(builtin_case(f"diffusion-{case_id}"), n))


def exact_state(setup):
    """Manufactured cell temperatures with g set to the exact interface heat flow."""
    fX, fY = setup.grid.fluid.centers()
    sX, sY = setup.grid.solid.centers()
    itf = setup.grid.interface
    xc = setup.grid.fluid.xc[itf.fluid_edge_index]
    # solid sits on top of the fluid at y = 1; heat flowing down into the fluid is +k dT/dy
    _, dTdy = manufactured_gradient(xc, 1.0)
    k = setup.heat.fluid.props.k(manufactured_exact(xc, 1.0))
    g = k * dTdy * itf.area
    return ThermalState(manufactured_exact(fX, fY), manufactured_exact(sX, sY), g)


def two_box(k_f=1.0, k_s=2.0, T_left=1.0, T_right=0.0, n=4, dt=None):
    grid = build_grid(fluid=(((0, 1), (0, 1)), (n, n)), solid=(((1, 2), (0, 1)), (n, n)))
    fb = resolve_thermal_bc(grid.fluid, {"west": [{"thermal": "dirichlet", "T": T_left}],
                                         "south": [{"thermal": "adiabatic"}], "north": [{"thermal": "adiabatic"}]},
                            grid, "fluid")
    sb = resolve_thermal_bc(grid.solid, {"east": [{"thermal": "dirichlet", "T": T_right}],
                                         "south": [{"thermal": "adiabatic"}], "north": [{"thermal": "adiabatic"}]},
                            grid, "solid")
    return CoupledHeatProblem(grid, fb, sb, ThermalProps(1.0, 1.0, [k_f]), ThermalProps(1.0, 1.0, [k_s]), dt)


# -------------------------------------------------------------- residuals
@pytest.mark.parametrize("law", [[1.0], [0.5, 0.2], [1.0, 1.0, -0.1, 2.0]])
def test_uniform_temperature_has_zero_residual(law):
    prob = two_box(T_left=3.0, T_right=3.0)
    prob.fluid.props.k = ConductivityLaw(law)
    prob.solid.props.k = ConductivityLaw(law)
    st0 = ThermalState(np.full((4, 4), 3.0), np.full((4, 4), 3.0), np.zeros(4))
    Rf, Rs = prob.residuals(st0)
    assert np.array_equal(Rf, np.zeros(16)) and np.array_equal(Rs, np.zeros(16))


def test_single_face_flux_bookkeeping():
    grid = build_grid(fluid=(((0, 1), (0, 1)), (1, 1)), solid=(((1, 2), (0, 1)), (1, 1)))
    adiabatic = {e: [{"thermal": "adiabatic"}] for e in ("west", "east", "south", "north")}
    fb = resolve_thermal_bc(grid.fluid, adiabatic, grid, "fluid")
    sb = resolve_thermal_bc(grid.solid, adiabatic, grid, "solid")
    prob = CoupledHeatProblem(grid, fb, sb, ThermalProps(1, 1, [1.0]), ThermalProps(1, 1, [1.0]))
    base = ThermalState(np.array([[2.0]]), np.array([[5.0]]), np.zeros(1))
    q = 0.75
    Rf0, Rs0 = prob.residuals(base)
    Rf1, Rs1 = prob.residuals(ThermalState(base.T_f, base.T_s, np.array([q])))
    assert Rf1 - Rf0 == pytest.approx([-q])
    assert Rs1 - Rs0 == pytest.approx([q])


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31 - 1))
def test_flux_continuity_face_by_face(seed):
    prob = two_box(n=5)
    r = np.random.default_rng(seed)
    T_f, T_s = r.normal(size=(5, 5)), r.normal(size=(5, 5))
    g = r.normal(size=5)
    Rf0, Rs0 = prob.residuals(ThermalState(T_f, T_s, np.zeros(5)))
    Rf1, Rs1 = prob.residuals(ThermalState(T_f, T_s, g))
    fc, sc = prob.fluid.interface_cells, prob.solid.interface_cells
    # what leaves the solid cell through face b enters the fluid cell through face b
    assert np.allclose((Rf0 - Rf1)[fc], g, rtol=0, atol=1e-14)
    assert np.allclose((Rs1 - Rs0)[sc], g, rtol=0, atol=1e-14)


def test_manufactured_residual_vanishes_under_refinement():
    worst = []
    for n in (10, 20, 40):
        setup = diffusion_setup(3, n)
        Rf, Rs = setup.heat.residuals(exact_state(setup))
        worst.append(max(np.abs(Rf).max(), np.abs(Rs).max()))
    # integrated residual of a quadratic field is second order in h
    assert worst[0] / worst[1] == pytest.approx(4.0, rel=0.15)
    assert worst[1] / worst[2] == pytest.approx(4.0, rel=0.15)


def test_solid_block_rejects_face_velocities():
    prob = two_box()
    with pytest.raises(ThermalError):
        prob.solid.assemble(np.zeros(16), uf=np.zeros((5, 4)), vf=np.zeros((4, 5)))


@pytest.mark.parametrize("case_id", [1, 2])
@pytest.mark.parametrize("jacobian", ["newton"])
def test_jacobian_matches_finite_differences(case_id, jacobian):
    setup = diffusion_setup(case_id, 4)
    op = setup.heat.solid
    T = np.random.default_rng(case_id).uniform(4.0, 6.0, op.n)
    _, J = op.assemble(T)
    J = J.toarray()
    eps = 1e-6
    fd = np.empty_like(J)
    for c in range(op.n):
        e = np.zeros(op.n)
        e[c] = eps
        fd[:, c] = (op.residual(T + e) - op.residual(T - e)) / (2 * eps)
    assert np.allclose(J, fd, rtol=1e-6, atol=1e-6 * np.abs(J).max())


def test_picard_jacobian_drops_conductivity_derivative():
    setup = diffusion_setup(1, 4)
    op = setup.heat.solid
    pic = HeatOperator(op.block, op.bcs, op.props, face_rule=op.face_rule, jacobian="picard")
    T = np.full(op.n, 5.0)
    # at uniform T all dk/dT terms multiply zero temperature differences except at Dirichlet faces
    _, Jn = op.assemble(T + np.linspace(0, 1, op.n))
    _, Jp = pic.assemble(T + np.linspace(0, 1, op.n))
    assert not np.allclose(Jn.toarray(), Jp.toarray())
    assert pic.jacobian_mode == "picard"


# -------------------------------------------------- interface reconstruction
def test_interface_temperature_examples():
    assert interface_temperatures([300.0], [0.0], [2.0], [0.5], [0.1], "fluid") == pytest.approx([300.0])
    assert interface_temperatures([300.0], [10.0], [2.0], [0.5], [0.1], "fluid") == pytest.approx([301.0])
    assert interface_temperatures([300.0], [10.0], [2.0], [0.5], [0.1], "solid") == pytest.approx([299.0])
    with pytest.raises(ValueError):
        interface_temperatures([1.0], [1.0], [1.0], [0.0], [0.1], "fluid")
    with pytest.raises(ValueError):
        interface_temperatures([1.0], [1.0], [1.0], [1.0], [0.1], "top")


@pytest.mark.parametrize("case_id", [1, 2, 3])
def test_exact_flux_reconstructions_agree(case_id):
    gaps = []
    for n in (10, 20, 40):
        setup = diffusion_setup(case_id, n)
        tf, ts = setup.heat.face_temperatures(exact_state(setup))
        gaps.append(np.abs(tf - ts).max())
    if case_id == 3:
        # constant k: the one-sided reconstruction is exact for a quadratic field
        assert max(gaps) < 1e-12
    else:
        assert gaps[2] < gaps[1] < gaps[0]
        assert gaps[2] < 5e-3


# --------------------------------------------------------------- basis
def test_basis_constant_mode():
    setup = diffusion_setup(3, 8)
    Phi = laplace_beltrami_basis(setup.grid.interface, 1)
    assert Phi.shape == (8, 1) and np.all(Phi == 1.0)


def test_basis_row_at_midpoint():
    grid = build_grid(fluid=(((0, 1), (0, 1)), (3, 3)), solid=(((0, 1), (1, 2)), (3, 3)))
    Phi = laplace_beltrami_basis(grid.interface, 2)
    # middle face center sits at xi = L / 2
    assert Phi[1] == pytest.approx([1.0, 0.0, 1.0], abs=1e-15)
    with pytest.raises(ValueError):
        laplace_beltrami_basis(grid.interface, 4)
    with pytest.raises(ValueError):
        laplace_beltrami_basis(grid.interface, 0)


# ------------------------------------------------------------------ SQP
def test_gauss_newton_matches_regularized_normal_equations(rng):
    H = rng.normal(size=(7, 7)) + 3 * np.eye(7)
    r0 = rng.normal(size=7)
    for delta in (0.0, 0.3):
        g, _ = gauss_newton_control(r0, H, delta)
        ref = np.linalg.solve(H.T @ H + delta * np.eye(7), -H.T @ r0)
        assert np.allclose(g, ref, rtol=1e-10, atol=1e-12)
    Phi = rng.normal(size=(7, 3))
    g, beta = gauss_newton_control(r0, H, 0.1, Phi)
    A = H @ Phi
    ref = np.linalg.solve(A.T @ A + 0.1 * Phi.T @ Phi, -A.T @ r0)
    assert np.allclose(beta, ref, rtol=1e-10)
    assert np.allclose(g, Phi @ beta)


def test_linear_case_converges_in_one_iteration_with_matched_interface():
    setup = diffusion_setup(3, 10)
    res = solve_heat(setup)
    assert res.iterations == 1
    scale = np.abs(res.state.T_f).max()
    assert setup.heat.mismatch(res.state) <= 1e-8 * scale


def test_two_box_matches_series_resistance():
    k_f, k_s = 1.0, 3.0
    prob = two_box(k_f=k_f, k_s=k_s, T_left=1.0, T_right=0.0, n=4)
    st0 = ThermalState(np.zeros((4, 4)), np.zeros((4, 4)), np.zeros(4))
    st1, info = sqp_solve(prob, st0)
    # one-dimensional slab: flux = dT / (L_f/k_f + L_s/k_s) per unit height
    q = 1.0 / (1.0 / k_f + 1.0 / k_s)
    # heat flows from fluid into solid, so g (solid into fluid) is negative
    assert st1.g == pytest.approx(np.full(4, -q * 0.25), rel=1e-12)
    assert info.iterations == 1


def test_complete_basis_reproduces_full_control():
    grid_setup = diffusion_setup(2, 10)
    init = initial_thermal_state(grid_setup)
    full, _ = sqp_solve(grid_setup.heat, init, max_iters=200)
    red, _ = sqp_solve(grid_setup.heat, init, max_iters=200, control="reduced", n_r=6)
    assert laplace_beltrami_basis(grid_setup.heat.interface, 6).shape == (10, 11)
    rel = np.abs(red.g - full.g).max() / np.abs(full.g).max()
    assert rel <= 1e-10


def test_sqp_argument_errors():
    setup = diffusion_setup(3, 4)
    init = initial_thermal_state(setup)
    with pytest.raises(ValueError):
        sqp_solve(setup.heat, init, delta=-1)
    with pytest.raises(ValueError):
        sqp_solve(setup.heat, init, tol=0)
    with pytest.raises(ValueError):
        sqp_solve(setup.heat, init, control="reduced")
    with pytest.raises(ValueError):
        sqp_solve(setup.heat, init, control="half")


def test_sqp_iteration_limit_reports_last_change():
    setup = diffusion_setup(1, 6)
    with pytest.raises(CouplingConvergenceError) as exc:
        sqp_solve(setup.heat, initial_thermal_state(setup), max_iters=2)
    assert exc.value.iterations == 2
    assert exc.value.last_change > 0


def test_regularization_shrinks_control():
    setup = diffusion_setup(3, 8)
    a = solve_heat(setup, delta=0.0).state.g
    b = solve_heat(setup, delta=10.0).state.g
    assert np.linalg.norm(b) < np.linalg.norm(a)


def test_linear_model_is_exact_for_linear_problem(rng):
    setup = diffusion_setup(3, 6)
    heat = setup.heat
    st0 = initial_thermal_state(setup)
    r0, H, Tf0, Wf, Ts0, Ws = sqp_linear_model(heat, st0)
    g = rng.normal(size=len(heat.interface))
    state = ThermalState((Tf0 + Wf @ g).reshape(6, 6), (Ts0 - Ws @ g).reshape(6, 6), g)
    Rf, Rs = heat.residuals(state)
    assert np.abs(Rf).max() < 1e-9 and np.abs(Rs).max() < 1e-9
    tf, ts = heat.face_temperatures(state)
    assert np.allclose(tf - ts, r0 + H @ g, rtol=0, atol=1e-10)


# ------------------------------------------------------------------ DtN
def test_dtn_and_ob_agree_on_linear_case():
    setup = diffusion_setup(3, 10)
    ob = solve_heat(setup, coupling="ob")
    dtn = solve_heat(setup, coupling="dtn", tol=1e-12)
    assert np.abs(ob.state.T_f - dtn.state.T_f).max() <= 1e-6
    assert np.abs(ob.state.T_s - dtn.state.T_s).max() <= 1e-6


def test_dtn_relaxation_range():
    prob = two_box()
    st0 = ThermalState(np.zeros((4, 4)), np.zeros((4, 4)), np.zeros(4))
    for w in (0.0, 1.5):
        with pytest.raises(ValueError):
            dtn_solve(prob, st0, relaxation=w)


def test_dtn_iteration_limit():
    prob = two_box()
    st0 = ThermalState(np.zeros((4, 4)), np.zeros((4, 4)), np.zeros(4))
    with pytest.raises(CouplingConvergenceError):
        dtn_solve(prob, st0, relaxation=0.01, max_iters=3)


def test_global_energy_balance_linear_steady():
    from cht_fvm.suites import heat_balance

    setup = diffusion_setup(3, 12)
    res = solve_heat(setup)
    assert heat_balance(setup, res.state) <= 1e-8


def test_gauss_newton_gradient_against_finite_differences():
    from cht_fvm.suites import gauss_newton_gradient_error

    assert gauss_newton_gradient_error(n=5, case_id=3) <= 1e-6
    assert gauss_newton_gradient_error(n=5, case_id=1) <= 1e-6


@settings(max_examples=30, deadline=None)
@given(coeffs=st.lists(st.floats(-3, 3), min_size=1, max_size=4), T=st.floats(-5, 5))
def test_conductivity_derivative(coeffs, T):
    law = ConductivityLaw(coeffs)
    h = 1e-6
    fd = (law(T + h) - law(T - h)) / (2 * h)
    assert law.derivative(T) == pytest.approx(fd, rel=1e-6, abs=1e-6)
    assert ConductivityLaw(law.to_list()) == law


def test_thermal_props_validation():
    with pytest.raises(ValueError):
        ThermalProps(0.0, 1.0, [1.0])
    with pytest.raises(ValueError):
        ConductivityLaw([])
