"""Structured orthogonal 2D meshes with a fluid and a solid block.

Cells of a block are stored as ``(nx, ny)`` arrays; the flat cell id is
``i * ny + j`` (row-major over ``(i, j)``).  Faces on the four block edges are
addressed by their position along the edge: ``i`` for south/north edges and
``j`` for west/east edges.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

EDGES = ("west", "east", "south", "north")

# outward unit normal of each block edge
EDGE_NORMALS = {
    "west": (-1.0, 0.0),
    "east": (1.0, 0.0),
    "south": (0.0, -1.0),
    "north": (0.0, 1.0),
}

OPPOSITE = {"west": "east", "east": "west", "south": "north", "north": "south"}


class GridError(ValueError):
    """Raised for invalid or non-conforming mesh definitions."""


@dataclass(frozen=True)
class Block:
    """A uniform rectangular block of ``nx * ny`` cells."""

    name: str
    x0: float
    y0: float
    nx: int
    ny: int
    dx: float
    dy: float

    @property
    def ncells(self) -> int:
        return self.nx * self.ny

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def volume(self) -> float:
        return self.dx * self.dy

    @property
    def x1(self) -> float:
        return self.x0 + self.nx * self.dx

    @property
    def y1(self) -> float:
        return self.y0 + self.ny * self.dy

    @property
    def xc(self) -> np.ndarray:
        return self.x0 + (np.arange(self.nx) + 0.5) * self.dx

    @property
    def yc(self) -> np.ndarray:
        return self.y0 + (np.arange(self.ny) + 0.5) * self.dy

    def centers(self) -> tuple[np.ndarray, np.ndarray]:
        """Cell-center coordinates as two ``(nx, ny)`` arrays."""
        return np.meshgrid(self.xc, self.yc, indexing="ij")

    def cell_id(self, i, j):
        return np.asarray(i) * self.ny + np.asarray(j)

    def edge_size(self, edge: str) -> int:
        return self.ny if edge in ("west", "east") else self.nx

    def edge_face_area(self, edge: str) -> float:
        return self.dy if edge in ("west", "east") else self.dx

    def edge_normal_spacing(self, edge: str) -> float:
        """Cell spacing normal to ``edge``."""
        return self.dx if edge in ("west", "east") else self.dy

    def edge_face_centers(self, edge: str) -> np.ndarray:
        """Tangential coordinate of the face centers along ``edge``."""
        return self.yc if edge in ("west", "east") else self.xc

    def edge_cells(self, edge: str) -> tuple[np.ndarray, np.ndarray]:
        """``(i, j)`` indices of the cells adjacent to ``edge``, in edge order."""
        n = self.edge_size(edge)
        k = np.arange(n)
        if edge == "west":
            return np.zeros(n, dtype=int), k
        if edge == "east":
            return np.full(n, self.nx - 1), k
        if edge == "south":
            return k, np.zeros(n, dtype=int)
        if edge == "north":
            return k, np.full(n, self.ny - 1)
        raise GridError(f"unknown edge {edge!r}")

    def edge_coordinate(self, edge: str) -> float:
        return {"west": self.x0, "east": self.x1, "south": self.y0, "north": self.y1}[edge]

    def area_vectors(self) -> dict[str, np.ndarray]:
        """Per-cell face area vectors ``S_b = n_b A_b`` for the four faces.

        Each entry has shape ``(nx, ny, 2)``.
        """
        out = {}
        for edge, (nxv, nyv) in EDGE_NORMALS.items():
            area = self.edge_face_area(edge)
            vec = np.empty((self.nx, self.ny, 2))
            vec[..., 0] = nxv * area
            vec[..., 1] = nyv * area
            out[edge] = vec
        return out


@dataclass(frozen=True)
class InterfaceFace:
    face_id: int
    fluid_cell: int
    solid_cell: int
    area: float
    d_f: float
    d_s: float
    xi: float


@dataclass(frozen=True)
class Interface:
    """Ordered fluid/solid interface faces plus their vectorized geometry."""

    fluid_edge: str
    solid_edge: str
    faces: tuple[InterfaceFace, ...]
    fluid_edge_index: np.ndarray = field(repr=False)
    solid_edge_index: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return len(self.faces)

    @property
    def fluid_cells(self) -> np.ndarray:
        return np.array([f.fluid_cell for f in self.faces], dtype=int)

    @property
    def solid_cells(self) -> np.ndarray:
        return np.array([f.solid_cell for f in self.faces], dtype=int)

    @property
    def area(self) -> np.ndarray:
        return np.array([f.area for f in self.faces])

    @property
    def d_f(self) -> np.ndarray:
        return np.array([f.d_f for f in self.faces])

    @property
    def d_s(self) -> np.ndarray:
        return np.array([f.d_s for f in self.faces])

    @property
    def xi(self) -> np.ndarray:
        return np.array([f.xi for f in self.faces])


@dataclass(frozen=True)
class Grid:
    fluid: Block | None
    solid: Block | None
    interface: Interface | None

    def block(self, side: str) -> Block:
        blk = self.fluid if side == "fluid" else self.solid
        if blk is None:
            raise GridError(f"grid has no {side} block")
        return blk


def _make_block(name, extent, counts) -> Block:
    (xa, xb), (ya, yb) = extent
    nx, ny = counts
    if nx < 1 or ny < 1:
        raise GridError(f"{name}: cell counts must be >= 1, got {counts}")
    if not (xb > xa and yb > ya):
        raise GridError(f"{name}: extents must be positive, got {extent}")
    return Block(name, float(xa), float(ya), int(nx), int(ny), (xb - xa) / nx, (yb - ya) / ny)


def _find_contact(fluid: Block, solid: Block, tol: float):
    """Return ``(fluid_edge, solid_edge, lo, hi)`` of the shared segment."""
    hits = []
    for edge in EDGES:
        other = OPPOSITE[edge]
        if abs(fluid.edge_coordinate(edge) - solid.edge_coordinate(other)) > tol:
            continue
        if edge in ("west", "east"):
            lo, hi = max(fluid.y0, solid.y0), min(fluid.y1, solid.y1)
        else:
            lo, hi = max(fluid.x0, solid.x0), min(fluid.x1, solid.x1)
        if hi - lo > tol:
            hits.append((edge, other, lo, hi))
    if len(hits) != 1:
        raise GridError(
            f"fluid and solid blocks must abut along exactly one segment, found {len(hits)}"
        )
    return hits[0]


def _edge_faces_on_segment(block: Block, edge: str, lo: float, hi: float, tol: float):
    h = block.edge_face_area(edge)
    start = block.y0 if edge in ("west", "east") else block.x0
    a = (lo - start) / h
    b = (hi - start) / h
    ia, ib = round(a), round(b)
    if abs(a - ia) > 1e-6 or abs(b - ib) > 1e-6:
        raise GridError(
            f"{block.name}: interface segment [{lo}, {hi}] does not align with face edges "
            f"(spacing {h})"
        )
    return np.arange(ia, ib)


def build_grid(fluid=None, solid=None) -> Grid:
    """Build a grid from ``(extent, counts)`` pairs.

    ``extent`` is ``((x0, x1), (y0, y1))`` and ``counts`` is ``(nx, ny)``.
    Either block may be omitted; an interface is built only when both exist.
    """
    fblk = _make_block("fluid", *fluid) if fluid is not None else None
    sblk = _make_block("solid", *solid) if solid is not None else None
    if fblk is None or sblk is None:
        return Grid(fblk, sblk, None)

    tol = 1e-9 * max(fblk.x1 - fblk.x0, fblk.y1 - fblk.y0, sblk.x1 - sblk.x0, sblk.y1 - sblk.y0)
    fedge, sedge, lo, hi = _find_contact(fblk, sblk, tol)
    hf = fblk.edge_face_area(fedge)
    hs = sblk.edge_face_area(sedge)
    if abs(hf - hs) > 1e-9 * max(hf, hs):
        raise GridError(
            f"non-conforming interface: fluid spacing {hf} != solid spacing {hs} along the interface"
        )
    fidx = _edge_faces_on_segment(fblk, fedge, lo, hi, tol)
    sidx = _edge_faces_on_segment(sblk, sedge, lo, hi, tol)
    if len(fidx) != len(sidx):
        raise GridError("non-conforming interface: face counts differ on the two sides")

    fi, fj = fblk.edge_cells(fedge)
    si, sj = sblk.edge_cells(sedge)
    fcoord = fblk.edge_face_centers(fedge)
    d_f = 0.5 * fblk.edge_normal_spacing(fedge)
    d_s = 0.5 * sblk.edge_normal_spacing(sedge)
    faces = []
    for k, (a, b) in enumerate(zip(fidx, sidx)):
        faces.append(
            InterfaceFace(
                face_id=k,
                fluid_cell=int(fblk.cell_id(fi[a], fj[a])),
                solid_cell=int(sblk.cell_id(si[b], sj[b])),
                area=hf,
                d_f=d_f,
                d_s=d_s,
                xi=float(fcoord[a] - lo),
            )
        )
    return Grid(fblk, sblk, Interface(fedge, sedge, tuple(faces), fidx, sidx))


def interface_length(grid: Grid) -> float:
    """Total length of the fluid/solid interface."""
    if grid.interface is None or len(grid.interface) == 0:
        raise GridError("grid has no interface faces")
    return float(np.sum(grid.interface.area))
