"""Per-face boundary conditions resolved from edge segment tables.

A segment table maps each block edge to a list of segments::

    {"north": [{"flow": "lid", "u": 1.0}],
     "south": [{"to": 0.0, "flow": "slip", "thermal": "adiabatic"},
               {"from": 0.0, "flow": "no-slip", "thermal": "adiabatic"}]}

``from``/``to`` bound the tangential coordinate of the face centers the segment
applies to (open ends default to the whole edge).  Faces on the fluid/solid
interface are owned by the coupling and resolve to ``interface``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import EDGES, Block, Grid

FLOW_KINDS = ("no-slip", "lid", "slip", "inlet", "outlet", "interface")
THERMAL_KINDS = ("adiabatic", "dirichlet", "interface")


class BoundaryError(ValueError):
    pass


@dataclass
class EdgeFlowBC:
    kind: np.ndarray  # object array of kind names
    u: np.ndarray  # prescribed wall/inlet velocity, x component
    v: np.ndarray

    def mask(self, *kinds):
        return np.isin(self.kind, kinds)


@dataclass
class EdgeThermalBC:
    kind: np.ndarray
    value: np.ndarray

    def mask(self, *kinds):
        return np.isin(self.kind, kinds)


def _interface_mask(grid: Grid | None, block: Block, side: str, edge: str) -> np.ndarray:
    mask = np.zeros(block.edge_size(edge), dtype=bool)
    if grid is None or grid.interface is None:
        return mask
    itf = grid.interface
    if side == "fluid" and itf.fluid_edge == edge:
        mask[itf.fluid_edge_index] = True
    elif side == "solid" and itf.solid_edge == edge:
        mask[itf.solid_edge_index] = True
    return mask


def _segments_per_face(block: Block, edge: str, segments):
    coords = block.edge_face_centers(edge)
    owner = np.full(coords.shape, -1)
    for k, seg in enumerate(segments):
        lo = seg.get("from", -np.inf)
        hi = seg.get("to", np.inf)
        hit = (coords > lo) & (coords < hi)
        if np.any(owner[hit] >= 0):
            raise BoundaryError(f"{block.name}/{edge}: overlapping boundary segments")
        owner[hit] = k
    return owner


def resolve_flow_bc(block: Block, table, grid: Grid | None = None, side="fluid"):
    """Resolve the flow conditions of ``table`` to per-face arrays."""
    out = {}
    for edge in EDGES:
        n = block.edge_size(edge)
        kind = np.empty(n, dtype=object)
        u = np.zeros(n)
        v = np.zeros(n)
        itf = _interface_mask(grid, block, side, edge)
        segments = table.get(edge, [])
        owner = _segments_per_face(block, edge, segments)
        for k in range(n):
            if itf[k]:
                kind[k] = "interface"
                continue
            if owner[k] < 0:
                raise BoundaryError(f"{block.name}/{edge}: face {k} has no boundary condition")
            seg = segments[owner[k]]
            name = seg.get("flow")
            if name not in FLOW_KINDS or name == "interface":
                raise BoundaryError(f"{block.name}/{edge}: invalid flow condition {name!r}")
            if name == "lid":
                kind[k] = "no-slip"
                u[k] = seg.get("u", 0.0)
                v[k] = seg.get("v", 0.0)
            elif name == "inlet":
                kind[k] = "inlet"
                u[k] = seg.get("u", 0.0)
                v[k] = seg.get("v", 0.0)
            else:
                kind[k] = name
        out[edge] = EdgeFlowBC(kind, u, v)
    return out


def resolve_thermal_bc(block: Block, table, grid: Grid | None = None, side="fluid", dirichlet_fn=None):
    """Resolve thermal conditions; ``dirichlet_fn(x, y)`` supplies values for
    segments declared as ``{"thermal": "dirichlet", "T": "exact"}``."""
    out = {}
    for edge in EDGES:
        n = block.edge_size(edge)
        kind = np.empty(n, dtype=object)
        value = np.zeros(n)
        itf = _interface_mask(grid, block, side, edge)
        segments = table.get(edge, [])
        owner = _segments_per_face(block, edge, segments)
        tang = block.edge_face_centers(edge)
        normal = block.edge_coordinate(edge)
        for k in range(n):
            if itf[k]:
                kind[k] = "interface"
                continue
            if owner[k] < 0:
                raise BoundaryError(f"{block.name}/{edge}: face {k} has no thermal condition")
            seg = segments[owner[k]]
            name = seg.get("thermal")
            if name is None and seg.get("flow") == "inlet":
                name = "dirichlet"
            if name not in ("adiabatic", "dirichlet"):
                raise BoundaryError(f"{block.name}/{edge}: invalid thermal condition {name!r}")
            kind[k] = name
            if name == "dirichlet":
                T = seg.get("T")
                if T == "exact":
                    if dirichlet_fn is None:
                        raise BoundaryError("segment asks for exact Dirichlet data but none given")
                    x, y = (normal, tang[k]) if edge in ("west", "east") else (tang[k], normal)
                    value[k] = dirichlet_fn(x, y)
                elif T is None:
                    raise BoundaryError(f"{block.name}/{edge}: dirichlet segment without T")
                else:
                    value[k] = float(T)
        out[edge] = EdgeThermalBC(kind, value)
    return out


def has_pressure_outlet(bcs) -> bool:
    return any(np.any(bc.mask("outlet")) for bc in bcs.values())
