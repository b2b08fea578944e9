"""Incompressible Navier-Stokes on a collocated structured block.

Two pressure-velocity solvers share one discretization (first-order upwind
convection, central diffusion, Rhie-Chow face velocities):

* :meth:`FluidSolver.semi_implicit_step` treats convection explicitly, so the
  momentum and pressure-correction matrices depend only on ``dt`` and are
  factorized once.  ``K = 0`` gives the non-iterative predictor/corrector.
* :meth:`FluidSolver.simple_step` is the SIMPLE baseline with implicit, lagged
  convection and under-relaxation, reassembled every outer iteration.

Momentum coefficients are stored per unit volume, matching the compact form
``a_C u_C + sum_F a_F u_F = -grad(P)_C + B_C``; ``D = 1/a_C``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .boundary import EdgeFlowBC, has_pressure_outlet
from .grid import Block
from .sparse import LinearSystem, five_point_matrix, solve

log = logging.getLogger(__name__)

MASS_TOL = 1e-8


class FluidError(RuntimeError):
    pass


class FluidDivergenceError(FluidError):
    pass


class SimpleConvergenceError(FluidError):
    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


@dataclass
class FluidProps:
    rho: float = 1.0
    mu: float = 0.01
    beta: float = 0.0
    g0: tuple[float, float] = (0.0, 0.0)
    T_ref: float = 0.0

    def __post_init__(self):
        if self.rho <= 0:
            raise ValueError(f"rho must be positive, got {self.rho}")
        if self.mu < 0:
            raise ValueError(f"mu must be non-negative, got {self.mu}")

    @property
    def buoyant(self) -> bool:
        return self.beta != 0.0 and float(np.hypot(*self.g0)) != 0.0


@dataclass
class FluidState:
    u: np.ndarray
    v: np.ndarray
    p: np.ndarray
    uf: np.ndarray  # x-velocity on vertical faces, (nx + 1, ny)
    vf: np.ndarray  # y-velocity on horizontal faces, (nx, ny + 1)
    t: float = 0.0

    @classmethod
    def rest(cls, block: Block, t=0.0):
        nx, ny = block.shape
        return cls(
            np.zeros((nx, ny)),
            np.zeros((nx, ny)),
            np.zeros((nx, ny)),
            np.zeros((nx + 1, ny)),
            np.zeros((nx, ny + 1)),
            t,
        )

    def copy(self):
        return FluidState(
            self.u.copy(), self.v.copy(), self.p.copy(), self.uf.copy(), self.vf.copy(), self.t
        )


@dataclass
class StepInfo:
    iterations: int
    change: float
    mass_defect: float
    residual_history: list = field(default_factory=list)


@dataclass
class MomentumSystem:
    """Compact-form momentum system of one velocity component."""

    system: LinearSystem
    a_c: np.ndarray
    rhs: np.ndarray  # B_C - grad(P)_C per unit volume

    @property
    def D(self):
        return 1.0 / self.a_c


def cfl_timestep(u0, v0, dx, dy, cfl):
    """Time step with ``u0 dt/dx + v0 dt/dy = cfl``."""
    if u0 < 0 or v0 < 0:
        raise ValueError("characteristic speeds must be non-negative")
    if not 0 < cfl <= 1:
        raise ValueError(f"CFL number must lie in (0, 1], got {cfl}")
    rate = u0 / dx + v0 / dy
    if rate == 0:
        raise ValueError("both characteristic speeds are zero; supply dt explicitly")
    return cfl / rate


def steady_state_error(u_new, u_old):
    """Relative L2 change between two velocity fields (all components)."""
    u_new = np.asarray(u_new, dtype=float)
    u_old = np.asarray(u_old, dtype=float)
    if u_new.shape != u_old.shape:
        raise ValueError(f"shape mismatch {u_new.shape} vs {u_old.shape}")
    denom = np.sqrt(np.sum(u_new**2))
    if denom == 0:
        raise ValueError("steady-state error undefined for a zero velocity field")
    return float(np.sqrt(np.sum((u_new - u_old) ** 2)) / denom)


def rhie_chow_face_velocity(u, v, p, Du, Dv, dx, dy):
    """Rhie-Chow velocities on the interior faces of a block.

    Returns ``(uf_int, vf_int)`` of shapes ``(nx - 1, ny)`` and ``(nx, ny - 1)``.
    Cell pressure gradients use face-averaged pressures with zero-gradient
    extrapolation at the block boundary.
    """
    gpx, gpy = _cell_gradient(p, dx, dy)
    return _rc_interior(u, v, p, gpx, gpy, Du, Dv, dx, dy)


def _rc_interior(u, v, p, gpx, gpy, Du, Dv, dx, dy):
    Dbx = 0.5 * (Du[:-1] + Du[1:])
    ufi = 0.5 * (u[:-1] + u[1:]) - Dbx * ((p[1:] - p[:-1]) / dx - 0.5 * (gpx[:-1] + gpx[1:]))
    Dby = 0.5 * (Dv[:, :-1] + Dv[:, 1:])
    vfi = 0.5 * (v[:, :-1] + v[:, 1:]) - Dby * (
        (p[:, 1:] - p[:, :-1]) / dy - 0.5 * (gpy[:, :-1] + gpy[:, 1:])
    )
    return ufi, vfi


def _cell_gradient(p, dx, dy, west=None, east=None, south=None, north=None):
    """Gauss gradient with face pressures; ``None`` boundary values mean
    zero-gradient extrapolation."""
    nx, ny = p.shape
    px = np.empty((nx + 1, ny))
    px[1:-1] = 0.5 * (p[:-1] + p[1:])
    px[0] = p[0] if west is None else west
    px[-1] = p[-1] if east is None else east
    py = np.empty((nx, ny + 1))
    py[:, 1:-1] = 0.5 * (p[:, :-1] + p[:, 1:])
    py[:, 0] = p[:, 0] if south is None else south
    py[:, -1] = p[:, -1] if north is None else north
    return (px[1:] - px[:-1]) / dx, (py[:, 1:] - py[:, :-1]) / dy


def divergence(uf, vf, dx, dy):
    """Net volumetric outflow per cell (per unit depth)."""
    return (uf[1:] - uf[:-1]) * dy + (vf[:, 1:] - vf[:, :-1]) * dx


class _EdgeData:
    """Per-edge masks derived from the resolved flow conditions."""

    def __init__(self, bc: EdgeFlowBC, edge: str):
        normal_is_x = edge in ("west", "east")
        wall = bc.mask("no-slip", "interface", "inlet")
        slip = bc.mask("slip")
        outlet = bc.mask("outlet")
        self.outlet = outlet
        # Dirichlet masks/values for each velocity component
        self.dir_u = wall | (slip & normal_is_x)
        self.dir_v = wall | (slip & (not normal_is_x))
        self.val_u = np.where(bc.mask("interface"), 0.0, bc.u)
        self.val_v = np.where(bc.mask("interface"), 0.0, bc.v)
        self.val_u = np.where(self.dir_u, self.val_u, 0.0)
        self.val_v = np.where(self.dir_v, self.val_v, 0.0)
        # prescribed normal velocity on non-outlet faces
        normal = bc.u if normal_is_x else bc.v
        self.normal = np.where(bc.mask("inlet", "no-slip"), normal, 0.0)


class FluidSolver:
    """Discrete operators and step routines for one fluid block."""

    def __init__(self, block: Block, bcs: dict, props: FluidProps, dt: float, p_out=0.0, correction="standard"):
        if dt <= 0:
            raise ValueError(f"dt must be positive, got {dt}")
        if correction not in ("standard", "consistent"):
            raise ValueError(f"correction must be 'standard' or 'consistent', got {correction!r}")
        self.correction = correction
        self.block = block
        self.bcs = bcs
        self.props = props
        self.dt = float(dt)
        self.p_out = float(p_out)
        self.edges = {e: _EdgeData(bc, e) for e, bc in bcs.items()}
        self.has_outlet = has_pressure_outlet(bcs)
        self._build_diffusion()
        self._semi = None

    # ------------------------------------------------------------------ setup
    def _build_diffusion(self):
        blk = self.block
        nx, ny = blk.shape
        mu, dx, dy = self.props.mu, blk.dx, blk.dy
        cx, cy = mu / dx**2, mu / dy**2
        self.diff = {}
        for comp in ("u", "v"):
            a_w = np.full((nx, ny), cx)
            a_e = np.full((nx, ny), cx)
            a_s = np.full((nx, ny), cy)
            a_n = np.full((nx, ny), cy)
            a_w[0] = a_e[-1] = 0.0
            a_s[:, 0] = a_n[:, -1] = 0.0
            bcoef = np.zeros((nx, ny))
            bsrc = np.zeros((nx, ny))
            for edge, ed in self.edges.items():
                dmask = ed.dir_u if comp == "u" else ed.dir_v
                val = ed.val_u if comp == "u" else ed.val_v
                c = 2.0 * (cx if edge in ("west", "east") else cy)
                ii, jj = blk.edge_cells(edge)
                np.add.at(bcoef, (ii, jj), c * dmask)
                np.add.at(bsrc, (ii, jj), c * dmask * val)
            self.diff[comp] = dict(a_w=a_w, a_e=a_e, a_s=a_s, a_n=a_n, b_coef=bcoef, b_src=bsrc)

    def _boundary_face_values(self, comp, phi):
        """Face values of ``phi`` for convection on the four edges."""
        out = {}
        for edge, ed in self.edges.items():
            ii, jj = self.block.edge_cells(edge)
            dmask = ed.dir_u if comp == "u" else ed.dir_v
            val = ed.val_u if comp == "u" else ed.val_v
            out[edge] = np.where(dmask, val, phi[ii, jj])
        return out

    # ------------------------------------------------------------- operators
    def pressure_gradient(self, p, outlet_value=None):
        """Cell pressure gradient; outlet faces carry ``outlet_value``."""
        pv = self.p_out if outlet_value is None else outlet_value
        kw = {}
        for edge, ed in self.edges.items():
            if np.any(ed.outlet):
                ii, jj = self.block.edge_cells(edge)
                kw[edge] = np.where(ed.outlet, pv, p[ii, jj])
        return _cell_gradient(p, self.block.dx, self.block.dy, **kw)

    def convection(self, phi, comp, uf, vf):
        """Explicit upwind convective flux ``sum_b F_b phi_b`` per unit volume."""
        blk = self.block
        rho = self.props.rho
        Fx = rho * uf * blk.dy
        Fy = rho * vf * blk.dx
        bvals = self._boundary_face_values(comp, phi)
        phx = np.empty_like(Fx)
        phx[1:-1] = np.where(Fx[1:-1] >= 0, phi[:-1], phi[1:])
        phx[0] = np.where(Fx[0] >= 0, bvals["west"], phi[0])
        phx[-1] = np.where(Fx[-1] >= 0, phi[-1], bvals["east"])
        phy = np.empty_like(Fy)
        phy[:, 1:-1] = np.where(Fy[:, 1:-1] >= 0, phi[:, :-1], phi[:, 1:])
        phy[:, 0] = np.where(Fy[:, 0] >= 0, bvals["south"], phi[:, 0])
        phy[:, -1] = np.where(Fy[:, -1] >= 0, phi[:, -1], bvals["north"])
        fx = Fx * phx
        fy = Fy * phy
        return ((fx[1:] - fx[:-1]) + (fy[:, 1:] - fy[:, :-1])) / blk.volume

    def buoyancy(self, T):
        pr = self.props
        if not pr.buoyant:
            return 0.0, 0.0
        if T is None:
            raise ValueError("buoyancy is active but no temperature field was given")
        dT = np.asarray(T) - pr.T_ref
        return -pr.rho * pr.beta * pr.g0[0] * dT, -pr.rho * pr.beta * pr.g0[1] * dT

    def face_velocities(self, u, v, p, Du, Dv, p_outlet=None):
        """Full face-velocity arrays: Rhie-Chow inside, boundary values on edges."""
        blk = self.block
        nx, ny = blk.shape
        dx, dy = blk.dx, blk.dy
        gpx, gpy = self.pressure_gradient(p, p_outlet)
        ufi, vfi = _rc_interior(u, v, p, gpx, gpy, Du, Dv, dx, dy)
        uf = np.empty((nx + 1, ny))
        vf = np.empty((nx, ny + 1))
        uf[1:-1] = ufi
        vf[:, 1:-1] = vfi
        pv = self.p_out if p_outlet is None else p_outlet
        for edge, ed in self.edges.items():
            ii, jj = blk.edge_cells(edge)
            if edge in ("west", "east"):
                sgn = 1.0 if edge == "east" else -1.0
                grad_b = sgn * (pv - p[ii, jj]) / (0.5 * dx)
                out = u[ii, jj] - Du[ii, jj] * (grad_b - gpx[ii, jj])
                vals = np.where(ed.outlet, out, ed.normal)
                if edge == "west":
                    uf[0] = vals
                else:
                    uf[-1] = vals
            else:
                sgn = 1.0 if edge == "north" else -1.0
                grad_b = sgn * (pv - p[ii, jj]) / (0.5 * dy)
                out = v[ii, jj] - Dv[ii, jj] * (grad_b - gpy[ii, jj])
                vals = np.where(ed.outlet, out, ed.normal)
                if edge == "south":
                    vf[:, 0] = vals
                else:
                    vf[:, -1] = vals
        return uf, vf

    def pressure_correction_matrix(self, Du, Dv):
        """Matrix of ``sum_b D_b A_b/d_b (P'_C - P'_F)`` with outlet faces at P' = 0."""
        blk = self.block
        nx, ny = blk.shape
        dx, dy = blk.dx, blk.dy
        cx = np.zeros((nx + 1, ny))
        cy = np.zeros((nx, ny + 1))
        cx[1:-1] = 0.5 * (Du[:-1] + Du[1:]) * dy / dx
        cy[:, 1:-1] = 0.5 * (Dv[:, :-1] + Dv[:, 1:]) * dx / dy
        for edge, ed in self.edges.items():
            if not np.any(ed.outlet):
                continue
            ii, jj = blk.edge_cells(edge)
            if edge in ("west", "east"):
                c = np.where(ed.outlet, Du[ii, jj] * dy / (0.5 * dx), 0.0)
                cx[0 if edge == "west" else -1] = c
            else:
                c = np.where(ed.outlet, Dv[ii, jj] * dx / (0.5 * dy), 0.0)
                cy[:, 0 if edge == "south" else -1] = c
        a_w, a_e = cx[:-1], cx[1:]
        a_s, a_n = cy[:, :-1], cy[:, 1:]
        a_c = a_w + a_e + a_s + a_n
        # boundary entries of a_w/a_e/... above only feed the diagonal
        a_wn = a_w.copy()
        a_en = a_e.copy()
        a_sn = a_s.copy()
        a_nn = a_n.copy()
        a_wn[0] = 0.0
        a_en[-1] = 0.0
        if not self.has_outlet:
            # gauge: row of cell (0, 0) becomes P' = 0
            a_c = a_c.copy()
            a_c[0, 0] = 1.0
            a_en[0, 0] = a_nn[0, 0] = 0.0
        A = five_point_matrix(a_c, -a_wn, -a_en, -a_sn, -a_nn)
        return A, cx, cy

    def _correct(self, u, v, p, uf, vf, pc, Du, Dv, cx, cy):
        """Apply a pressure correction to cell and face velocities."""
        blk = self.block
        dx, dy = blk.dx, blk.dy
        ufn = uf.copy()
        vfn = vf.copy()
        # face corrections u'_b = -D_b (grad P')_b, written with the A/d coefficients
        ufn[1:-1] -= cx[1:-1] * (pc[1:] - pc[:-1]) / dy
        vfn[:, 1:-1] -= cy[:, 1:-1] * (pc[:, 1:] - pc[:, :-1]) / dx
        for edge, ed in self.edges.items():
            if not np.any(ed.outlet):
                continue
            if edge == "east":
                ufn[-1] -= cx[-1] * (0.0 - pc[-1]) / dy
            elif edge == "west":
                ufn[0] -= cx[0] * (pc[0] - 0.0) / dy
            elif edge == "north":
                vfn[:, -1] -= cy[:, -1] * (0.0 - pc[:, -1]) / dx
            else:
                vfn[:, 0] -= cy[:, 0] * (pc[:, 0] - 0.0) / dx
        gx, gy = self.pressure_gradient(pc, outlet_value=0.0)
        return u - Du * gx, v - Dv * gy, p, ufn, vfn

    def mass_defect(self, uf, vf):
        """Max per-cell net outflow relative to the largest face flux."""
        blk = self.block
        div = divergence(uf, vf, blk.dx, blk.dy)
        scale = max(np.max(np.abs(uf)) * blk.dy, np.max(np.abs(vf)) * blk.dx, 1e-300)
        return float(np.max(np.abs(div)) / scale)

    # ---------------------------------------------------------- semi-implicit
    def assemble_momentum(self, state: FluidState, p=None, T=None):
        """Compact-form momentum systems ``(u_sys, v_sys)`` for one step.

        The matrix holds the implicit time and diffusion terms only; explicit
        upwind convection of the time-``n`` field, buoyancy and the pressure
        gradient of ``p`` (default: ``state.p``) go to the right-hand side.
        """
        blk = self.block
        rho, dt = self.props.rho, self.dt
        p = state.p if p is None else p
        gpx, gpy = self.pressure_gradient(p)
        bu, bv = self.buoyancy(T)
        out = []
        for comp, phi, gp, bf in (("u", state.u, gpx, bu), ("v", state.v, gpy, bv)):
            d = self.diff[comp]
            a_c = rho / dt + d["a_w"] + d["a_e"] + d["a_s"] + d["a_n"] + d["b_coef"]
            B = rho * phi / dt - self.convection(phi, comp, state.uf, state.vf) + d["b_src"] + bf
            A = five_point_matrix(a_c, -d["a_w"], -d["a_e"], -d["a_s"], -d["a_n"])
            rhs = B - gp
            out.append(MomentumSystem(LinearSystem.from_matrix(A, rhs.ravel()), a_c, rhs))
        return tuple(out)

    def _semi_operators(self):
        if self._semi is None:
            rho, dt = self.props.rho, self.dt
            ops = {}
            for comp in ("u", "v"):
                d = self.diff[comp]
                a_c = rho / dt + d["a_w"] + d["a_e"] + d["a_s"] + d["a_n"] + d["b_coef"]
                A = five_point_matrix(a_c, -d["a_w"], -d["a_e"], -d["a_s"], -d["a_n"])
                ops[comp] = (LinearSystem.from_matrix(A), a_c)
            Du = 1.0 / ops["u"][1]
            Dv = 1.0 / ops["v"][1]
            if self.correction == "consistent":
                # neighbour corrections kept in the correction step: only the
                # time and wall terms of a_C remain
                Dcu = 1.0 / (rho / dt + self.diff["u"]["b_coef"])
                Dcv = 1.0 / (rho / dt + self.diff["v"]["b_coef"])
            else:
                Dcu, Dcv = Du, Dv
            Ap, cx, cy = self.pressure_correction_matrix(Dcu, Dcv)
            self._semi = dict(
                u=ops["u"][0], v=ops["v"][0], Du=Du, Dv=Dv, Dcu=Dcu, Dcv=Dcv,
                p=LinearSystem.from_matrix(Ap), cx=cx, cy=cy,
            )
        return self._semi

    def _pressure_rhs(self, uf, vf):
        rhs = -divergence(uf, vf, self.block.dx, self.block.dy).ravel()
        if not self.has_outlet:
            rhs[0] = 0.0
        return rhs

    def semi_implicit_step(self, state: FluidState, T=None, K=0, tol=1e-6, p_init=None):
        """Advance one time step with the (iterative) semi-implicit method.

        ``K`` bounds the number of extra prediction-correction sweeps; the
        sweep loop stops early once the relative change of the cell
        velocities drops below ``tol``.  ``p_init`` warm-starts the pressure.
        Returns ``(new_state, StepInfo)``.
        """
        ops = self._semi_operators()
        blk = self.block
        nx, ny = blk.shape
        rho, dt = self.props.rho, self.dt
        bu, bv = self.buoyancy(T)
        Bu = rho * state.u / dt - self.convection(state.u, "u", state.uf, state.vf) + self.diff["u"]["b_src"] + bu
        Bv = rho * state.v / dt - self.convection(state.v, "v", state.uf, state.vf) + self.diff["v"]["b_src"] + bv
        Du, Dv = ops["Du"], ops["Dv"]
        p = (state.p if p_init is None else p_init).copy()
        u_k, v_k = state.u, state.v
        scale0 = max(np.max(np.abs(u_k)), np.max(np.abs(v_k)), 1.0)
        history = []
        change = 0.0
        for k in range(K + 1):
            gpx, gpy = self.pressure_gradient(p)
            us = solve(ops["u"], rhs=(Bu - gpx).ravel()).reshape(nx, ny)
            vs = solve(ops["v"], rhs=(Bv - gpy).ravel()).reshape(nx, ny)
            ufs, vfs = self.face_velocities(us, vs, p, Du, Dv)
            pc = solve(ops["p"], rhs=self._pressure_rhs(ufs, vfs)).reshape(nx, ny)
            u_new, v_new, _, uf, vf = self._correct(us, vs, p, ufs, vfs, pc, ops["Dcu"], ops["Dcv"],
                                                    ops["cx"], ops["cy"])
            p = p + pc
            num = np.sqrt(np.sum((u_new - u_k) ** 2 + (v_new - v_k) ** 2))
            den = np.sqrt(np.sum(u_k**2 + v_k**2))
            change = float(num / den) if den > 0 else float(num)
            history.append(change)
            peak = max(np.max(np.abs(u_new)), np.max(np.abs(v_new)))
            if not np.isfinite(peak) or peak > 1e6 * scale0:
                raise FluidDivergenceError(
                    f"semi-implicit sweep diverged at t={state.t + dt:.6g} "
                    f"(CFL number {self.cfl_number(u_k, v_k):.3g})"
                )
            u_k, v_k = u_new, v_new
            if K > 0 and change < tol:
                break
        new = FluidState(u_k, v_k, p, uf, vf, state.t + dt)
        return new, StepInfo(len(history), change, self.mass_defect(uf, vf), history)

    def cfl_number(self, u, v):
        blk = self.block
        return float(np.max(np.abs(u)) * self.dt / blk.dx + np.max(np.abs(v)) * self.dt / blk.dy)

    # ----------------------------------------------------------------- SIMPLE
    def _simple_momentum(self, comp, phi_n, phi_k, uf, vf, gp, bf, relax):
        blk = self.block
        rho, dt, V = self.props.rho, self.dt, blk.volume
        d = self.diff[comp]
        Fx = rho * uf * blk.dy / V
        Fy = rho * vf * blk.dx / V
        a_w = d["a_w"] + np.maximum(Fx[:-1], 0.0)
        a_e = d["a_e"] + np.maximum(-Fx[1:], 0.0)
        a_s = d["a_s"] + np.maximum(Fy[:, :-1], 0.0)
        a_n = d["a_n"] + np.maximum(-Fy[:, 1:], 0.0)
        outflow = (
            np.maximum(Fx[1:], 0.0) + np.maximum(-Fx[:-1], 0.0)
            + np.maximum(Fy[:, 1:], 0.0) + np.maximum(-Fy[:, :-1], 0.0)
        )
        a_c = rho / dt + d["a_w"] + d["a_e"] + d["a_s"] + d["a_n"] + d["b_coef"] + outflow
        # inflow through boundary faces brings the prescribed face value
        bvals = self._boundary_face_values(comp, phi_k)
        src = np.zeros_like(phi_n)
        src[0] += np.maximum(Fx[0], 0.0) * bvals["west"]
        src[-1] += np.maximum(-Fx[-1], 0.0) * bvals["east"]
        src[:, 0] += np.maximum(Fy[:, 0], 0.0) * bvals["south"]
        src[:, -1] += np.maximum(-Fy[:, -1], 0.0) * bvals["north"]
        # boundary neighbours were folded into a_w[0] etc. as inflow; drop them
        a_w[0] = 0.0
        a_e[-1] = 0.0
        a_s[:, 0] = 0.0
        a_n[:, -1] = 0.0
        a_cr = a_c / relax
        B = rho * phi_n / dt + d["b_src"] + bf + src + (1.0 - relax) * a_cr * phi_k
        A = five_point_matrix(a_cr, -a_w, -a_e, -a_s, -a_n)
        return A, a_cr, B - gp

    def simple_step(self, state: FluidState, T=None, relax_u=0.7, relax_p=0.3, max_iters=200, tol=1e-5):
        """Advance one time step with SIMPLE outer iterations.

        Converged when the relative change of the cell velocities between two
        outer iterations drops below ``tol``.  Returns ``(new_state, StepInfo)``.
        """
        if not (0 < relax_u <= 1 and 0 < relax_p <= 1):
            raise ValueError("relaxation factors must lie in (0, 1]")
        blk = self.block
        nx, ny = blk.shape
        bu, bv = self.buoyancy(T)
        u, v, p = state.u.copy(), state.v.copy(), state.p.copy()
        uf, vf = state.uf.copy(), state.vf.copy()
        history = []
        for m in range(1, max_iters + 1):
            gpx, gpy = self.pressure_gradient(p)
            Au, acu, bu_ = self._simple_momentum("u", state.u, u, uf, vf, gpx, bu, relax_u)
            Av, acv, bv_ = self._simple_momentum("v", state.v, v, uf, vf, gpy, bv, relax_u)
            us = solve(LinearSystem.from_matrix(Au), rhs=bu_.ravel()).reshape(nx, ny)
            vs = solve(LinearSystem.from_matrix(Av), rhs=bv_.ravel()).reshape(nx, ny)
            Du, Dv = 1.0 / acu, 1.0 / acv
            ufs, vfs = self.face_velocities(us, vs, p, Du, Dv)
            Ap, cx, cy = self.pressure_correction_matrix(Du, Dv)
            pc = solve(LinearSystem.from_matrix(Ap), rhs=self._pressure_rhs(ufs, vfs)).reshape(nx, ny)
            un, vn, _, ufn, vfn = self._correct(us, vs, p, ufs, vfs, pc, Du, Dv, cx, cy)
            p = p + relax_p * pc
            num = np.sqrt(np.sum((un - u) ** 2 + (vn - v) ** 2))
            den = np.sqrt(np.sum(un**2 + vn**2))
            change = float(num / den) if den > 0 else float(num)
            history.append(change)
            if not np.isfinite(change):
                raise FluidDivergenceError(f"SIMPLE diverged at t={state.t + self.dt:.6g}")
            u, v, uf, vf = un, vn, ufn, vfn
            if change < tol:
                new = FluidState(u, v, p, uf, vf, state.t + self.dt)
                return new, StepInfo(m, change, self.mass_defect(uf, vf), history)
        raise SimpleConvergenceError(
            f"SIMPLE did not converge in {max_iters} iterations (last change {change:.3e})", change
        )


def kinetic_energy(state: FluidState, block: Block, rho=1.0):
    return float(0.5 * rho * np.sum(state.u**2 + state.v**2) * block.volume)


def with_time(state: FluidState, t: float) -> FluidState:
    return replace(state, t=t)


__all__ = [
    "FluidProps",
    "FluidState",
    "FluidSolver",
    "StepInfo",
    "cfl_timestep",
    "steady_state_error",
    "rhie_chow_face_velocity",
    "divergence",
    "kinetic_energy",
    "FluidError",
    "FluidDivergenceError",
    "SimpleConvergenceError",
]
