"""Heat transfer in the fluid and solid blocks coupled through an interface flux.

Residuals are volume-integrated and written so that the coupled system reads

    R_f(T_f) - E_f g = 0,        R_s(T_s) + E_s g = 0,

where ``g[b]`` is the heat flow (per unit depth) from the solid into the fluid
across interface face ``b`` and ``E`` scatters face values into the cells that
own them.  For a given ``g`` the two blocks decouple into Neumann problems.

Two coupling strategies are provided:

* :func:`sqp_solve` treats ``g`` as a control and minimizes the interface
  temperature mismatch subject to the (linearized) heat equations, either with
  one unknown per face or with the trigonometric reduced basis of
  :func:`laplace_beltrami_basis`.
* :func:`dtn_solve` is the Dirichlet-to-Neumann baseline with an
  under-relaxed interface temperature.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .boundary import EdgeThermalBC
from .grid import Block, Grid, interface_length
from .sparse import LinearSystem, factorize

log = logging.getLogger(__name__)

FACE_RULES = ("harmonic", "arithmetic", "mean-temperature")


class ThermalError(RuntimeError):
    pass


class CouplingConvergenceError(ThermalError):
    def __init__(self, message, iterations, last_change):
        super().__init__(message)
        self.iterations = iterations
        self.last_change = last_change


class ConductivityLaw:
    """Polynomial conductivity ``k(T) = sum_i coeffs[i] * T**i``."""

    def __init__(self, coeffs):
        c = np.atleast_1d(np.asarray(coeffs, dtype=float))
        if c.size == 0:
            raise ValueError("conductivity law needs at least one coefficient")
        # trailing zero coefficients carry no information
        nz = np.flatnonzero(c)
        self.coeffs = c[: nz[-1] + 1] if nz.size else c[:1]

    @classmethod
    def constant(cls, k):
        return cls([k])

    @property
    def is_constant(self) -> bool:
        return self.coeffs.size == 1

    def __call__(self, T):
        return np.polynomial.polynomial.polyval(T, self.coeffs)

    def derivative(self, T):
        if self.is_constant:
            return np.zeros_like(np.asarray(T, dtype=float))
        return np.polynomial.polynomial.polyval(T, np.polynomial.polynomial.polyder(self.coeffs))

    def to_list(self):
        return [float(c) for c in self.coeffs]

    def __eq__(self, other):
        return isinstance(other, ConductivityLaw) and np.array_equal(self.coeffs, other.coeffs)

    def __repr__(self):
        return f"ConductivityLaw({self.to_list()})"


@dataclass
class ThermalProps:
    rho: float
    cp: float
    k: ConductivityLaw
    Q: Callable | float = 0.0

    def __post_init__(self):
        if self.rho <= 0 or self.cp <= 0:
            raise ValueError(f"rho and cp must be positive, got rho={self.rho}, cp={self.cp}")
        if not isinstance(self.k, ConductivityLaw):
            self.k = ConductivityLaw(self.k)

    def source(self, x, y):
        if callable(self.Q):
            return np.broadcast_to(np.asarray(self.Q(x, y), dtype=float), np.shape(x)).copy()
        return np.full(np.shape(x), float(self.Q))


@dataclass
class ThermalState:
    T_f: np.ndarray
    T_s: np.ndarray
    g: np.ndarray

    def copy(self):
        return ThermalState(self.T_f.copy(), self.T_s.copy(), self.g.copy())


@dataclass
class CouplingInfo:
    iterations: int
    history: list = field(default_factory=list)
    inner_iterations: list = field(default_factory=list)


def _face_conductivity(rule, law, Ta, Tb):
    """Face conductivity and its derivatives with respect to both sides."""
    if rule == "arithmetic":
        ka, kb = law(Ta), law(Tb)
        return 0.5 * (ka + kb), 0.5 * law.derivative(Ta), 0.5 * law.derivative(Tb)
    if rule == "harmonic":
        ka, kb = law(Ta), law(Tb)
        s = ka + kb
        with np.errstate(divide="ignore", invalid="ignore"):
            kf = np.where(s != 0, 2.0 * ka * kb / s, 0.0)
            da = np.where(s != 0, 2.0 * kb**2 / s**2, 0.0) * law.derivative(Ta)
            db = np.where(s != 0, 2.0 * ka**2 / s**2, 0.0) * law.derivative(Tb)
        return kf, da, db
    if rule == "mean-temperature":
        Tm = 0.5 * (Ta + Tb)
        d = 0.5 * law.derivative(Tm)
        return law(Tm), d, d
    raise ValueError(f"unknown face conductivity rule {rule!r}; expected one of {FACE_RULES}")


class HeatOperator:
    """Integrated heat residual and Jacobian of one block.

    Parameters
    ----------
    block, bcs, props
        Geometry, resolved thermal boundary conditions and properties.
    dt : float or None
        Time step; ``None`` drops the time term (steady problem).
    face_rule : str
        Reconstruction of the conductivity at interior and Dirichlet faces.
    jacobian : {"newton", "picard"}
        Whether the Jacobian includes the ``dk/dT`` terms.
    interface_cells : array of int, optional
        Flat ids of the cells owning each interface face, in interface order.
    """

    def __init__(self, block: Block, bcs: dict, props: ThermalProps, dt=None,
                 face_rule="harmonic", jacobian="newton", interface_cells=None,
                 convective=False):
        if dt is not None and dt <= 0:
            raise ValueError(f"dt must be positive, got {dt}")
        if face_rule not in FACE_RULES:
            raise ValueError(f"unknown face conductivity rule {face_rule!r}")
        if jacobian not in ("newton", "picard"):
            raise ValueError(f"jacobian must be 'newton' or 'picard', got {jacobian!r}")
        self.block = block
        self.bcs = bcs
        self.props = props
        self.dt = dt
        self.face_rule = face_rule
        self.jacobian_mode = jacobian
        self.convective = convective
        nx, ny = block.shape
        self.n = nx * ny
        ids = np.arange(self.n).reshape(nx, ny)
        self._xl, self._xr = ids[:-1].ravel(), ids[1:].ravel()
        self._yl, self._yr = ids[:, :-1].ravel(), ids[:, 1:].ravel()
        self._cx = block.dy / block.dx
        self._cy = block.dx / block.dy
        xc, yc = block.centers()
        self.Q = props.source(xc, yc).ravel() * block.volume
        # Dirichlet boundary faces, flattened over all edges
        cells, coef, vals = [], [], []
        for edge, bc in bcs.items():
            m = bc.mask("dirichlet")
            if not np.any(m):
                continue
            ii, jj = block.edge_cells(edge)
            c = block.edge_face_area(edge) / (0.5 * block.edge_normal_spacing(edge))
            cells.append(ids[ii, jj][m])
            coef.append(np.full(int(m.sum()), c))
            vals.append(bc.value[m])
        self._dcell = np.concatenate(cells) if cells else np.zeros(0, dtype=int)
        self._dcoef = np.concatenate(coef) if coef else np.zeros(0)
        self._dval = np.concatenate(vals) if vals else np.zeros(0)
        self.interface_cells = (
            np.zeros(0, dtype=int) if interface_cells is None else np.asarray(interface_cells, dtype=int)
        )
        m = self.interface_cells.size
        self.E = sp.csc_matrix(
            (np.ones(m), (self.interface_cells, np.arange(m))), shape=(self.n, m)
        )

    @property
    def linear(self) -> bool:
        return self.props.k.is_constant

    @property
    def steady(self) -> bool:
        return self.dt is None

    def _convection(self, uf, vf):
        """Upwind convective coefficients: returns COO triplets and the inflow source."""
        blk = self.block
        rc = self.props.rho * self.props.cp
        Fx = rc * uf * blk.dy
        Fy = rc * vf * blk.dx
        nx, ny = blk.shape
        ids = np.arange(self.n).reshape(nx, ny)
        rows, cols, vals = [], [], []
        src = np.zeros(self.n)
        for F, l, r in ((Fx[1:-1].ravel(), self._xl, self._xr), (Fy[:, 1:-1].ravel(), self._yl, self._yr)):
            up = np.where(F >= 0, l, r)
            rows += [l, r]
            cols += [up, up]
            vals += [F, -F]
        # boundary faces: outward flux F_out; outflow carries T_C, inflow the Dirichlet value
        for edge, bc in self.bcs.items():
            ii, jj = blk.edge_cells(edge)
            cell = ids[ii, jj]
            if edge == "west":
                Fo = -Fx[0]
            elif edge == "east":
                Fo = Fx[-1]
            elif edge == "south":
                Fo = -Fy[:, 0]
            else:
                Fo = Fy[:, -1]
            inflow_fixed = (Fo < 0) & bc.mask("dirichlet")
            implicit = ~inflow_fixed
            rows.append(cell[implicit])
            cols.append(cell[implicit])
            vals.append(Fo[implicit])
            np.add.at(src, cell[inflow_fixed], -Fo[inflow_fixed] * bc.value[inflow_fixed])
        return np.concatenate(rows), np.concatenate(cols), np.concatenate(vals), src

    def assemble(self, T, T_old=None, uf=None, vf=None):
        """Residual ``R(T)`` (without the ``E g`` term) and Jacobian ``dR/dT``."""
        T = np.asarray(T, dtype=float).ravel()
        if T.size != self.n:
            raise ValueError(f"temperature has {T.size} entries, block has {self.n} cells")
        if (uf is None) != (vf is None):
            raise ValueError("face velocities must be given for both directions or neither")
        if uf is not None and not self.convective:
            raise ThermalError(f"{self.block.name}: face velocities given for a conduction-only block")
        law, rule = self.props.k, self.face_rule
        newton = self.jacobian_mode == "newton"
        R = -self.Q.copy()
        rows, cols, vals = [], [], []
        for l, r, c in ((self._xl, self._xr, self._cx), (self._yl, self._yr, self._cy)):
            Tl, Tr = T[l], T[r]
            kf, dl, dr = _face_conductivity(rule, law, Tl, Tr)
            phi = c * kf * (Tl - Tr)
            np.add.at(R, l, phi)
            np.add.at(R, r, -phi)
            jl = c * kf
            jr = -c * kf
            if newton:
                jl = jl + c * dl * (Tl - Tr)
                jr = jr + c * dr * (Tl - Tr)
            rows += [l, l, r, r]
            cols += [l, r, l, r]
            vals += [jl, jr, -jl, -jr]
        if self._dcell.size:
            Tc = T[self._dcell]
            kf, dc, _ = _face_conductivity(rule, law, Tc, self._dval)
            phi = self._dcoef * kf * (Tc - self._dval)
            np.add.at(R, self._dcell, phi)
            jc = self._dcoef * kf
            if newton:
                jc = jc + self._dcoef * dc * (Tc - self._dval)
            rows.append(self._dcell)
            cols.append(self._dcell)
            vals.append(jc)
        if not self.steady:
            if T_old is None:
                raise ValueError("transient residual needs the previous temperature")
            m = self.props.rho * self.props.cp * self.block.volume / self.dt
            R += m * (T - np.asarray(T_old, dtype=float).ravel())
            rows.append(np.arange(self.n))
            cols.append(np.arange(self.n))
            vals.append(np.full(self.n, m))
        if uf is not None:
            cr, cc, cv, src = self._convection(uf, vf)
            conv = sp.csr_matrix((cv, (cr, cc)), shape=(self.n, self.n))
            R += conv @ T - src
            rows.append(cr)
            cols.append(cc)
            vals.append(cv)
        system = LinearSystem(self.n)
        system.add(np.concatenate(rows), np.concatenate(cols), np.concatenate(vals))
        return R, system.finalize().matrix

    def residual(self, T, T_old=None, uf=None, vf=None):
        return self.assemble(T, T_old, uf, vf)[0]

    def boundary_heat_inflow(self, T):
        """Heat flowing in through the Dirichlet faces (per unit depth)."""
        T = np.asarray(T, dtype=float).ravel()
        if not self._dcell.size:
            return 0.0
        Tc = T[self._dcell]
        kf, _, _ = _face_conductivity(self.face_rule, self.props.k, Tc, self._dval)
        return float(np.sum(self._dcoef * kf * (self._dval - Tc)))

    def interface_conductance(self, T, area, dist):
        """``k A / d`` per interface face, with ``k`` at the owning cell."""
        T = np.asarray(T, dtype=float).ravel()
        return self.props.k(T[self.interface_cells]) * area / dist


def interface_temperatures(T_cells, g, k, area, d, side):
    """Face temperatures reconstructed from cell values and the heat flow ``g``.

    ``T_cells`` holds the temperatures of the cells owning the interface
    faces; ``k`` their conductivities.  ``g`` flows from solid into fluid, so
    the fluid face is warmer than its cell for ``g > 0`` and the solid face
    is cooler than its cell.
    """
    area = np.asarray(area, dtype=float)
    d = np.asarray(d, dtype=float)
    if np.any(area <= 0) or np.any(d <= 0):
        raise ValueError("interface face areas and distances must be positive")
    conductance = np.asarray(k, dtype=float) * area / d
    if side == "fluid":
        return np.asarray(T_cells, dtype=float) + np.asarray(g, dtype=float) / conductance
    if side == "solid":
        return np.asarray(T_cells, dtype=float) - np.asarray(g, dtype=float) / conductance
    raise ValueError(f"side must be 'fluid' or 'solid', got {side!r}")


def laplace_beltrami_basis(interface, n_r):
    """Trigonometric interface basis sampled at the face centers.

    Columns are ``1``, ``cos(j pi xi / L)`` and ``sin(j pi xi / L)`` for
    ``j = 1 .. n_r - 1``, giving ``2 n_r - 1`` columns.
    """
    if n_r < 1:
        raise ValueError(f"N_r must be >= 1, got {n_r}")
    xi = np.asarray(interface.xi, dtype=float)
    if n_r > xi.size:
        raise ValueError(f"N_r = {n_r} exceeds the number of interface faces ({xi.size})")
    L = float(np.sum(interface.area))
    j = np.arange(1, n_r)
    arg = np.outer(xi, j) * np.pi / L
    return np.hstack([np.ones((xi.size, 1)), np.cos(arg), np.sin(arg)])


class CoupledHeatProblem:
    """Fluid and solid heat operators sharing an interface."""

    def __init__(self, grid: Grid, fluid_bcs, solid_bcs, fluid_props: ThermalProps,
                 solid_props: ThermalProps, dt=None, face_rule="harmonic", jacobian="newton",
                 fluid_convective=False):
        if grid.interface is None or len(grid.interface) == 0:
            raise ThermalError("coupled heat problem needs an interface")
        itf = grid.interface
        self.grid = grid
        self.interface = itf
        self.length = interface_length(grid)
        self.area = itf.area
        self.d_f = itf.d_f
        self.d_s = itf.d_s
        self.fluid = HeatOperator(grid.fluid, fluid_bcs, fluid_props, dt, face_rule, jacobian,
                                  itf.fluid_cells, convective=fluid_convective)
        self.solid = HeatOperator(grid.solid, solid_bcs, solid_props, dt, face_rule, jacobian,
                                  itf.solid_cells)

    @property
    def linear(self) -> bool:
        return self.fluid.linear and self.solid.linear

    def face_temperatures(self, state: ThermalState):
        T_f = state.T_f.ravel()
        T_s = state.T_s.ravel()
        fc, sc = self.fluid.interface_cells, self.solid.interface_cells
        tf = interface_temperatures(T_f[fc], state.g, self.fluid.props.k(T_f[fc]), self.area, self.d_f, "fluid")
        ts = interface_temperatures(T_s[sc], state.g, self.solid.props.k(T_s[sc]), self.area, self.d_s, "solid")
        return tf, ts

    def mismatch(self, state: ThermalState):
        tf, ts = self.face_temperatures(state)
        return float(np.max(np.abs(tf - ts)))

    def residuals(self, state, old=None, uf=None, vf=None):
        """Coupled residuals ``(R_f - E_f g, R_s + E_s g)``."""
        Tfo = Tso = None
        if old is not None:
            Tfo, Tso = old.T_f, old.T_s
        Rf = self.fluid.residual(state.T_f, Tfo, uf, vf) - self.fluid.E @ state.g
        Rs = self.solid.residual(state.T_s, Tso) + self.solid.E @ state.g
        return Rf, Rs

    def objective(self, state):
        tf, ts = self.face_temperatures(state)
        return 0.5 * float(np.sum((tf - ts) ** 2))


def _relative_change(new, old):
    num = float(np.linalg.norm(new - old))
    den = float(np.linalg.norm(old))
    return num / den if den >= 1e-14 else num


def sqp_linear_model(problem: CoupledHeatProblem, state: ThermalState, old=None, uf=None, vf=None):
    """Affine dependence of the interface mismatch on ``g`` at ``state``.

    Returns ``(r0, H, Tf0, Wf, Ts0, Ws)`` with the linearized constraint
    solutions ``T_f = Tf0 + Wf g``, ``T_s = Ts0 - Ws g`` and the mismatch
    residual ``r(g) = r0 + H g``.
    """
    Tfo = Tso = None
    if old is not None:
        Tfo, Tso = old.T_f, old.T_s
    fop, sop = problem.fluid, problem.solid
    Rf, Jf = fop.assemble(state.T_f, Tfo, uf, vf)
    Rs, Js = sop.assemble(state.T_s, Tso)
    luf = factorize(Jf)
    lus = factorize(Js)
    Tf0 = state.T_f.ravel() - luf.solve(Rf)
    Ts0 = state.T_s.ravel() - lus.solve(Rs)
    Wf = luf.solve(fop.E.toarray())
    Ws = lus.solve(sop.E.toarray())
    fc, sc = fop.interface_cells, sop.interface_cells
    inv_f = problem.d_f / (fop.props.k(state.T_f.ravel()[fc]) * problem.area)
    inv_s = problem.d_s / (sop.props.k(state.T_s.ravel()[sc]) * problem.area)
    r0 = Tf0[fc] - Ts0[sc]
    H = Wf[fc] + Ws[sc] + np.diag(inv_f + inv_s)
    return r0, H, Tf0, Wf, Ts0, Ws


def gauss_newton_control(r0, H, delta=0.0, basis=None):
    """Minimizer of ``0.5 |r0 + H g|^2 + 0.5 delta |g|^2`` (``g = basis @ beta``).

    Returns ``(g, beta)``; ``beta`` is ``g`` itself without a basis.
    """
    A = H if basis is None else H @ basis
    m = A.shape[1]
    if delta > 0:
        reg = np.sqrt(delta) * (np.eye(m) if basis is None else basis)
        A_ls = np.vstack([A, reg])
        b_ls = np.concatenate([-r0, np.zeros(reg.shape[0])])
    else:
        A_ls, b_ls = A, -r0
    beta = np.linalg.lstsq(A_ls, b_ls, rcond=None)[0]
    g = beta if basis is None else basis @ beta
    return g, beta


def sqp_solve(problem: CoupledHeatProblem, initial: ThermalState, old: ThermalState | None = None,
              uf=None, vf=None, delta=0.0, tol=1e-6, max_iters=100, control="full", n_r=None):
    """Optimization-based coupled heat solve by sequential quadratic programming.

    Each iteration linearizes both heat equations at the current iterate,
    eliminates the temperatures and solves the least-squares problem for the
    control.  The run stops when the relative change of ``g`` between two
    iterations falls below ``tol`` (absolute change if ``|g|`` vanishes).

    ``initial`` is the starting iterate, ``old`` the previous time level
    (ignored for steady problems).  The reported iteration count is the
    number of control updates needed: a linear model converges in 1.

    Returns ``(ThermalState, CouplingInfo)``.
    """
    if delta < 0:
        raise ValueError(f"delta must be non-negative, got {delta}")
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    basis = None
    if control == "reduced":
        if n_r is None:
            raise ValueError("reduced control needs N_r")
        basis = laplace_beltrami_basis(problem.interface, n_r)
    elif control != "full":
        raise ValueError(f"control must be 'full' or 'reduced', got {control!r}")
    shape_f, shape_s = initial.T_f.shape, initial.T_s.shape
    state = initial.copy()
    history = []
    for k in range(max_iters + 1):
        r0, H, Tf0, Wf, Ts0, Ws = sqp_linear_model(problem, state, old, uf, vf)
        g, _ = gauss_newton_control(r0, H, delta, basis)
        new = ThermalState((Tf0 + Wf @ g).reshape(shape_f), (Ts0 - Ws @ g).reshape(shape_s), g)
        change = _relative_change(g, state.g)
        state = new
        if problem.linear:
            # the linearized constraints are exact: one solve is the answer
            return state, CouplingInfo(1, [change])
        if k > 0:
            history.append(change)
            if not np.isfinite(change):
                raise CouplingConvergenceError("SQP iteration produced non-finite control", k, change)
            if change < tol:
                return state, CouplingInfo(k, history)
    raise CouplingConvergenceError(
        f"SQP did not converge in {max_iters} iterations (last control change {change:.3e})",
        max_iters, change,
    )


def _newton(assemble, T0, tol=1e-12, max_iters=50):
    """Newton iteration on ``assemble(T) -> (R, J)``; returns ``(T, iterations)``."""
    T = T0.copy()
    for it in range(1, max_iters + 1):
        R, J = assemble(T)
        dT = factorize(J).solve(-R)
        T = T + dT
        if not np.all(np.isfinite(T)):
            raise ThermalError("Newton iteration produced non-finite temperatures")
        if np.linalg.norm(dT) <= tol * max(np.linalg.norm(T), 1.0):
            return T, it
    raise ThermalError(f"Newton iteration did not converge in {max_iters} iterations")


def dtn_solve(problem: CoupledHeatProblem, initial: ThermalState, old: ThermalState | None = None,
              uf=None, vf=None, relaxation=0.2, tol=1e-6, max_iters=500, T_gamma0=None,
              newton_tol=1e-12):
    """Dirichlet-to-Neumann coupled heat solve.

    The fluid block is solved with the current interface temperature as a
    Dirichlet value; the resulting heat flow is imposed on the solid block,
    whose reconstructed interface temperature is blended into the next
    Dirichlet value with weight ``relaxation``.  Converged when the relative
    change of the interface temperature drops below ``tol``.

    Returns ``(ThermalState, CouplingInfo)``.
    """
    if not 0 < relaxation <= 1:
        raise ValueError(f"relaxation must lie in (0, 1], got {relaxation}")
    fop, sop = problem.fluid, problem.solid
    Tfo = Tso = None
    if old is not None:
        Tfo, Tso = old.T_f, old.T_s
    fc, sc = fop.interface_cells, sop.interface_cells
    cf = problem.area / problem.d_f
    law_f, law_s = fop.props.k, sop.props.k
    Ef, Es = fop.E, sop.E
    T_f = initial.T_f.ravel().copy()
    T_s = initial.T_s.ravel().copy()
    if T_gamma0 is None:
        T_gamma = problem.face_temperatures(initial)[1]
    else:
        T_gamma = np.broadcast_to(np.asarray(T_gamma0, dtype=float), fc.shape).copy()
    history = []
    inner = []
    g = initial.g.copy()

    for it in range(1, max_iters + 1):
        def fluid_system(T, Tg=T_gamma):
            R, J = fop.assemble(T, Tfo, uf, vf)
            Tc = T[fc]
            kc = law_f(Tc)
            gg = kc * cf * (Tg - Tc)
            dg = cf * (law_f.derivative(Tc) * (Tg - Tc) - kc)
            return R - Ef @ gg, (J - Ef @ sp.diags(dg) @ Ef.T).tocsc()

        T_f, nf = _newton(fluid_system, T_f, newton_tol)
        Tc = T_f[fc]
        g = law_f(Tc) * cf * (T_gamma - Tc)

        def solid_system(T):
            R, J = sop.assemble(T, Tso)
            return R + Es @ g, J

        T_s, ns = _newton(solid_system, T_s, newton_tol)
        inner.append(nf + ns)
        Ts_c = T_s[sc]
        T_sgamma = interface_temperatures(Ts_c, g, law_s(Ts_c), problem.area, problem.d_s, "solid")
        new_gamma = (1.0 - relaxation) * T_gamma + relaxation * T_sgamma
        change = _relative_change(new_gamma, T_gamma)
        history.append(change)
        T_gamma = new_gamma
        if not np.isfinite(change) or change > 1e12:
            raise CouplingConvergenceError(f"DtN iteration diverged at iteration {it}", it, change)
        if change < tol:
            state = ThermalState(T_f.reshape(initial.T_f.shape), T_s.reshape(initial.T_s.shape), g)
            return state, CouplingInfo(it, history, inner)
    raise CouplingConvergenceError(
        f"DtN did not converge in {max_iters} iterations (last interface change {change:.3e})",
        max_iters, change,
    )


__all__ = [
    "ConductivityLaw",
    "ThermalProps",
    "ThermalState",
    "CouplingInfo",
    "HeatOperator",
    "CoupledHeatProblem",
    "EdgeThermalBC",
    "interface_temperatures",
    "laplace_beltrami_basis",
    "sqp_linear_model",
    "gauss_newton_control",
    "sqp_solve",
    "dtn_solve",
    "ThermalError",
    "CouplingConvergenceError",
]
