"""Case assembly and time marching for flow, heat and coupled runs.

:func:`cht_step` advances one time step of the buoyant conjugate problem with
an outer loop alternating a fluid solve (buoyancy from the latest fluid
temperature) and an optimization-based heat solve (advection by the latest
face velocities) until the interface heat flow settles.
:func:`run_transient` drives any :class:`~cht_fvm.cases.CaseSpec` to its end
time or steady state and collects probes, profiles and iteration counts.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .boundary import resolve_flow_bc, resolve_thermal_bc
from .cases import CaseSpec, manufactured_exact, manufactured_source
from .fluid import FluidProps, FluidSolver, FluidState, steady_state_error
from .grid import Grid, build_grid
from .thermal import (
    ConductivityLaw,
    CoupledHeatProblem,
    ThermalProps,
    ThermalState,
    dtn_solve,
    sqp_solve,
)

log = logging.getLogger(__name__)


class ChtError(RuntimeError):
    pass


class OuterLoopError(ChtError):
    pass


class RunError(ChtError):
    """Solver failure with the time and step index where it happened."""

    def __init__(self, message, t=None, step=None):
        super().__init__(message)
        self.t = t
        self.step = step


# ---------------------------------------------------------------------- setup
def _thermal_props(d):
    Q = d.get("Q", 0.0)
    if isinstance(Q, str):
        if not Q.startswith("manufactured-"):
            raise ValueError(f"unknown source specification {Q!r}")
        cid = int(Q.rsplit("-", 1)[1])
        Q = lambda x, y, cid=cid: manufactured_source(cid, x, y)  # noqa: E731
    return ThermalProps(float(d["rho"]), float(d["cp"]), ConductivityLaw(d["k"]), Q)


@dataclass
class CaseSetup:
    spec: CaseSpec
    grid: Grid
    flow_bcs: dict | None = None
    fluid_props: FluidProps | None = None
    heat: CoupledHeatProblem | None = None
    timings: dict = field(default_factory=dict)

    def fluid_solver(self, dt=None, **kw) -> FluidSolver:
        dt = self.spec.solver["dt"] if dt is None else dt
        kw.setdefault("correction", self.spec.solver.get("correction", "standard"))
        return FluidSolver(self.grid.fluid, self.flow_bcs, self.fluid_props, dt, **kw)


def build_setup(spec: CaseSpec) -> CaseSetup:
    geo = spec.geometry
    blocks = {side: (tuple(map(tuple, b["extent"])), tuple(b["cells"])) for side, b in geo.items()}
    grid = build_grid(fluid=blocks.get("fluid"), solid=blocks.get("solid"))
    setup = CaseSetup(spec, grid)
    sv = spec.solver
    if spec.kind in ("cavity", "heated-plate", "natural-convection"):
        fp = spec.physics["fluid"]
        setup.fluid_props = FluidProps(fp["rho"], fp["mu"], fp.get("beta", 0.0), tuple(fp.get("g0", (0.0, 0.0))),
                                       fp.get("T_ref", 0.0))
        setup.flow_bcs = resolve_flow_bc(grid.fluid, spec.boundaries["fluid"], grid, "fluid")
    if grid.interface is not None:
        th = spec.physics["thermal"]
        fb = resolve_thermal_bc(grid.fluid, spec.boundaries["fluid"], grid, "fluid", manufactured_exact)
        sb = resolve_thermal_bc(grid.solid, spec.boundaries["solid"], grid, "solid", manufactured_exact)
        dt = None if sv.get("steady", False) else sv["dt"]
        setup.heat = CoupledHeatProblem(
            grid, fb, sb, _thermal_props(th["fluid"]), _thermal_props(th["solid"]), dt,
            face_rule=sv.get("face_rule", "harmonic"), jacobian=sv.get("jacobian", "newton"),
            fluid_convective=spec.kind != "diffusion",
        )
    return setup


def initial_thermal_state(setup: CaseSetup) -> ThermalState:
    sv = setup.spec.solver
    heat = setup.heat
    mode = sv.get("initial", "uniform")
    if mode == "mean-dirichlet":
        vals = np.concatenate([heat.fluid._dval, heat.solid._dval])
        T0 = float(np.mean(vals))
    else:
        T0 = float(sv.get("T_initial", 0.0))
    return ThermalState(
        np.full(setup.grid.fluid.shape, T0), np.full(setup.grid.solid.shape, T0), np.zeros(len(heat.interface))
    )


# ----------------------------------------------------------------- heat solves
@dataclass
class HeatResult:
    state: ThermalState
    iterations: int
    coupling: str
    history: list
    seconds: float


def solve_heat(setup: CaseSetup, initial=None, old=None, uf=None, vf=None, coupling=None, **kw) -> HeatResult:
    """One coupled heat solve with the case's coupling strategy."""
    sv = setup.spec.solver
    coupling = coupling or sv.get("coupling", "ob")
    initial = initial_thermal_state(setup) if initial is None else initial
    t0 = time.perf_counter()
    if coupling in ("ob", "reduced-ob"):
        st, info = sqp_solve(
            setup.heat, initial, old, uf, vf,
            delta=kw.get("delta", sv.get("delta", 0.0)), tol=kw.get("tol", sv.get("tol", 1e-6)),
            max_iters=kw.get("max_iters", sv.get("max_iters", 100)),
            control="reduced" if coupling == "reduced-ob" else "full",
            n_r=kw.get("n_r", sv.get("n_r", 5)),
        )
    elif coupling == "dtn":
        st, info = dtn_solve(
            setup.heat, initial, old, uf, vf,
            relaxation=kw.get("relaxation", sv.get("relaxation", 0.2)),
            tol=kw.get("tol", sv.get("tol", 1e-6)),
            max_iters=kw.get("max_iters", sv.get("dtn_max_iters", 2000)),
            T_gamma0=kw.get("T_gamma0", sv.get("dtn_initial_interface")),
        )
    else:
        raise ValueError(f"unknown coupling {coupling!r}")
    return HeatResult(st, info.iterations, coupling, info.history, time.perf_counter() - t0)


# ------------------------------------------------------------------ flow runs
@dataclass
class FlowRun:
    state: FluidState
    steps: int
    steady: bool
    err_history: list
    iterations: list
    probes: dict
    seconds: float
    max_mass_defect: float


def _probe_cells(block, points):
    out = []
    for x, y in points:
        i = int(np.clip(np.floor((x - block.x0) / block.dx), 0, block.nx - 1))
        j = int(np.clip(np.floor((y - block.y0) / block.dy), 0, block.ny - 1))
        out.append((i, j))
    return out


def march_flow(setup: CaseSetup, method=None, dt=None, t_end=None, until_steady=None, steady_tol=None,
               state=None, max_steps=None, K=None, fluid_tol=None) -> FlowRun:
    """March the flow alone (no buoyancy) to ``t_end`` or steady state."""
    sv = setup.spec.solver
    method = method or sv.get("method", "semi-implicit")
    dt = sv["dt"] if dt is None else dt
    t_end = sv.get("t_end", 1.0) if t_end is None else t_end
    until_steady = sv.get("until_steady", False) if until_steady is None else until_steady
    steady_tol = sv.get("steady_tol", 1e-5) if steady_tol is None else steady_tol
    K = sv.get("K", 0) if K is None else K
    fluid_tol = sv.get("fluid_tol", 1e-6) if fluid_tol is None else fluid_tol
    solver = setup.fluid_solver(dt)
    blk = setup.grid.fluid
    state = FluidState.rest(blk) if state is None else state
    nsteps = int(np.ceil(t_end / dt - 1e-9))
    if max_steps is not None:
        nsteps = min(nsteps, max_steps)
    probes_xy = setup.spec.output.get("probes", [])
    cells = _probe_cells(blk, probes_xy)
    every = int(setup.spec.output.get("probe_every", 1))
    probes = {"t": [], **{f"u{k}": [] for k in range(len(cells))}, **{f"v{k}": [] for k in range(len(cells))}}
    errs, iters = [], []
    steady = False
    worst_defect = 0.0
    t0 = time.perf_counter()
    n = 0
    for n in range(1, nsteps + 1):
        try:
            if method == "semi-implicit":
                new, info = solver.semi_implicit_step(state, K=K, tol=fluid_tol)
            else:
                new, info = solver.simple_step(
                    state, relax_u=sv.get("relax_u", 0.7), relax_p=sv.get("relax_p", 0.3),
                    max_iters=sv.get("simple_max_iters", 500), tol=sv.get("simple_tol", 1e-5),
                )
        except Exception as exc:
            raise RunError(f"step {n} (t={state.t + dt:.6g}): {exc}", state.t + dt, n) from exc
        iters.append(info.iterations)
        worst_defect = max(worst_defect, info.mass_defect)
        vel_new = np.stack([new.u, new.v])
        vel_old = np.stack([state.u, state.v])
        err = steady_state_error(vel_new, vel_old) if np.any(vel_new) else 0.0
        errs.append(err)
        state = new
        if n % every == 0 or n == nsteps:
            probes["t"].append(state.t)
            for k, (i, j) in enumerate(cells):
                probes[f"u{k}"].append(float(state.u[i, j]))
                probes[f"v{k}"].append(float(state.v[i, j]))
        if until_steady and err < steady_tol:
            steady = True
            break
    return FlowRun(state, n, steady, errs, iters, probes, time.perf_counter() - t0, worst_defect)


# ------------------------------------------------------------------ CHT steps
@dataclass
class StepDiagnostics:
    step: int
    t: float
    outer: int
    inner_sqp: list
    fluid_subiterations: list
    g_change: list


@dataclass
class ChtState:
    fluid: FluidState
    thermal: ThermalState
    t: float
    diagnostics: list = field(default_factory=list)


def cht_step(setup: CaseSetup, state: ChtState, solver: FluidSolver, outer_tol=1e-6, K_outer=50,
             warm_start=True, step_index=0) -> ChtState:
    """One time step of the buoyant conjugate problem.

    Stops when the relative change of ``g`` between outer iterations drops
    below ``outer_tol`` (absolute change while ``|g|`` is below 1e-14).
    """
    sv = setup.spec.solver
    old = state.thermal
    g0 = old.g.copy() if warm_start else np.zeros_like(old.g)
    current = ThermalState(old.T_f.copy(), old.T_s.copy(), g0)
    p_guess = state.fluid.p
    inner, sub, changes = [], [], []
    for k in range(1, K_outer + 1):
        fluid_new, finfo = solver.semi_implicit_step(
            state.fluid, T=current.T_f, K=sv.get("K", 50), tol=sv.get("fluid_tol", 1e-6), p_init=p_guess
        )
        p_guess = fluid_new.p
        thermal_new, tinfo = sqp_solve(
            setup.heat, current, old, fluid_new.uf, fluid_new.vf, delta=sv.get("delta", 0.0),
            tol=sv.get("tol", 1e-6), max_iters=sv.get("max_iters", 100),
            control="reduced" if sv.get("coupling") == "reduced-ob" else "full", n_r=sv.get("n_r", 5),
        )
        inner.append(tinfo.iterations)
        sub.append(finfo.iterations)
        gn = float(np.linalg.norm(current.g))
        dg = float(np.linalg.norm(thermal_new.g - current.g))
        change = dg / gn if gn >= 1e-14 else dg
        changes.append(change)
        current = thermal_new
        if change < outer_tol:
            diag = StepDiagnostics(step_index, fluid_new.t, k, inner, sub, changes)
            return ChtState(fluid_new, current, fluid_new.t, state.diagnostics + [diag])
    raise OuterLoopError(
        f"outer coupling loop did not converge in {K_outer} iterations at t={state.t + solver.dt:.6g} "
        f"(last relative g change {changes[-1]:.3e})"
    )


# ------------------------------------------------------------------- run driver
@dataclass
class RunResult:
    spec: CaseSpec
    setup: CaseSetup
    fluid: FluidState | None = None
    thermal: ThermalState | None = None
    steady: bool = False
    steps: int = 0
    iterations: dict = field(default_factory=dict)
    probes: dict = field(default_factory=dict)
    snapshots: dict = field(default_factory=dict)
    diagnostics: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)
    info: dict = field(default_factory=dict)


def run_transient(spec: CaseSpec, progress=None) -> RunResult:
    """Run a case to completion; see the module docstring."""
    setup = build_setup(spec)
    res = RunResult(spec, setup)
    sv = spec.solver
    t0 = time.perf_counter()
    if spec.kind == "diffusion":
        hr = solve_heat(setup)
        res.thermal = hr.state
        res.steady = True
        res.steps = 1
        res.iterations = {"coupling": hr.coupling, "iterations": hr.iterations}
        res.timings["heat"] = hr.seconds
    elif spec.kind in ("cavity", "heated-plate"):
        fr = march_flow(setup)
        res.fluid = fr.state
        res.steady = fr.steady
        res.steps = fr.steps
        res.probes = fr.probes
        res.iterations = {"fluid_per_step": fr.iterations}
        res.info["steady_err"] = fr.err_history[-1] if fr.err_history else None
        res.info["max_mass_defect"] = fr.max_mass_defect
        res.timings["flow"] = fr.seconds
        if spec.kind == "heated-plate":
            hr = solve_heat(setup, uf=fr.state.uf, vf=fr.state.vf)
            res.thermal = hr.state
            res.iterations.update({"coupling": hr.coupling, "iterations": hr.iterations})
            res.timings["heat"] = hr.seconds
    elif spec.kind == "natural-convection":
        _run_natural_convection(setup, res, progress)
    else:
        raise ValueError(f"unsupported case kind {spec.kind!r}")
    res.timings["total"] = time.perf_counter() - t0
    return res


def _run_natural_convection(setup: CaseSetup, res: RunResult, progress=None):
    spec = setup.spec
    sv = spec.solver
    dt = sv["dt"]
    solver = setup.fluid_solver(dt)
    state = ChtState(FluidState.rest(setup.grid.fluid), initial_thermal_state(setup), 0.0)
    nsteps = int(np.ceil(sv["t_end"] / dt - 1e-9))
    snaps = sorted(spec.output.get("snapshots", []))
    fluid_cells = _probe_cells(setup.grid.fluid, spec.output.get("probes", []))
    probes = {"t": [], **{f"T{k}": [] for k in range(len(fluid_cells))}}
    T_c, T_h = spec.physics["T_c"], spec.physics["T_h"]
    theta_bounds = [np.inf, -np.inf]
    for n in range(1, nsteps + 1):
        try:
            state = cht_step(setup, state, solver, sv.get("outer_tol", 1e-6), sv.get("K_outer", 50),
                             sv.get("warm_start", True), n)
        except Exception as exc:
            raise RunError(f"step {n} (t={n * dt:.6g}): {exc}", n * dt, n) from exc
        th = (np.concatenate([state.thermal.T_f.ravel(), state.thermal.T_s.ravel()]) - T_c) / (T_h - T_c)
        theta_bounds = [min(theta_bounds[0], th.min()), max(theta_bounds[1], th.max())]
        probes["t"].append(state.t)
        for k, (i, j) in enumerate(fluid_cells):
            probes[f"T{k}"].append(float(state.thermal.T_f[i, j]))
        for ts in snaps:
            if abs(state.t - ts) < 0.5 * dt:
                res.snapshots[ts] = (state.fluid.copy(), state.thermal.copy())
        if progress is not None:
            progress(n, state)
    if theta_bounds[0] < -1e-8 or theta_bounds[1] > 1 + 1e-8:
        log.warning("dimensionless temperature left [0, 1]: range [%.3e, %.6f]", *theta_bounds)
    res.fluid = state.fluid
    res.thermal = state.thermal
    res.steps = nsteps
    res.diagnostics = state.diagnostics
    res.probes = probes
    res.iterations = {
        "outer": [d.outer for d in state.diagnostics],
        "inner_sqp": [d.inner_sqp for d in state.diagnostics],
        "fluid_subiterations": [d.fluid_subiterations for d in state.diagnostics],
    }
    res.info["theta_range"] = [float(theta_bounds[0]), float(theta_bounds[1])]
    res.info["derived"] = spec.physics.get("derived", {})


# ------------------------------------------------------------------- profiles
def centerline_profile(block, field_cells, line, at, low=0.0, high=0.0):
    """Cell field sampled on a grid line ``x = at`` (``line='x'``) or ``y = at``.

    Values are linearly interpolated across the line; the boundary values
    ``low``/``high`` are appended at the two ends.
    """
    if line == "x":
        s = (at - block.x0) / block.dx - 0.5
        i0 = int(np.clip(np.floor(s), 0, block.nx - 2))
        w = s - i0
        prof = (1 - w) * field_cells[i0] + w * field_cells[i0 + 1]
        coord = block.yc
        lo, hi = block.y0, block.y1
    else:
        s = (at - block.y0) / block.dy - 0.5
        j0 = int(np.clip(np.floor(s), 0, block.ny - 2))
        w = s - j0
        prof = (1 - w) * field_cells[:, j0] + w * field_cells[:, j0 + 1]
        coord = block.xc
        lo, hi = block.x0, block.x1
    return np.concatenate([[lo], coord, [hi]]), np.concatenate([[low], prof, [high]])


def circulation(block, u, v, inset=0.25):
    """Counter-clockwise circulation of the cell velocity around an inset rectangle."""
    xa = block.x0 + inset * (block.x1 - block.x0)
    xb = block.x1 - inset * (block.x1 - block.x0)
    ya = block.y0 + inset * (block.y1 - block.y0)
    yb = block.y1 - inset * (block.y1 - block.y0)
    xc, yc = block.xc, block.yc
    ix = (xc >= xa) & (xc <= xb)
    iy = (yc >= ya) & (yc <= yb)
    jb = int(np.argmin(np.abs(yc - ya)))
    jt = int(np.argmin(np.abs(yc - yb)))
    il = int(np.argmin(np.abs(xc - xa)))
    ir = int(np.argmin(np.abs(xc - xb)))
    bottom = np.sum(u[ix, jb]) * block.dx
    top = -np.sum(u[ix, jt]) * block.dx
    right = np.sum(v[ir, iy]) * block.dy
    left = -np.sum(v[il, iy]) * block.dy
    return float(bottom + right + top + left)
