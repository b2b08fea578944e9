"""Declarative benchmark definitions, manufactured solution and reference data.

A :class:`CaseSpec` is a plain tree of dicts, lists, strings and numbers so
that it round-trips through YAML case files without loss.  Every builtin
parameter carries a provenance tag; overriding a literature-fixed value
records a warning in ``spec.metadata["warnings"]``.
"""

from __future__ import annotations

import copy
import csv
import hashlib
import io
import json
import math
import os
from dataclasses import dataclass, field
from importlib import resources

import numpy as np
import yaml

from .thermal import ConductivityLaw

SCHEMA_VERSION = 1

BUILTIN_CASES = (
    "cavity-re100",
    "cavity-re400",
    "cavity-re1000",
    "diffusion-1",
    "diffusion-2",
    "diffusion-3",
    "heated-plate",
    "natural-convection-1",
    "natural-convection-2",
    "natural-convection-3",
)

# conductivity laws of the steady diffusion benchmark, as polynomial coefficients in T
DIFFUSION_LAWS = {
    1: [0.0, 1.0, -0.1, 2.0],
    2: [0.0, 1.0, -0.1],
    3: [1.0],
}

NATURAL_CONVECTION = {
    1: dict(rho_f=1.0, mu_f=0.7, beta=0.7e5, rho_s=7.5e3, k_s=1.6e3, cp_s=0.5, k_ratio=1.6e3, Pr=0.7),
    2: dict(rho_f=1.0, mu_f=7.0, beta=4.9e5, rho_s=7.5, k_s=80.0, cp_s=0.12, k_ratio=80.0, Pr=7.0),
    3: dict(rho_f=1.0, mu_f=7.0, beta=4.9e5, rho_s=7.5, k_s=2.7, cp_s=0.0576, k_ratio=2.7, Pr=7.0),
}


class CaseError(ValueError):
    pass


@dataclass
class CaseSpec:
    name: str
    kind: str
    geometry: dict
    physics: dict
    boundaries: dict
    solver: dict
    output: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION

    def to_dict(self):
        return {
            "schema_version": self.schema_version,
            "name": self.name,
            "kind": self.kind,
            "geometry": copy.deepcopy(self.geometry),
            "physics": copy.deepcopy(self.physics),
            "boundaries": copy.deepcopy(self.boundaries),
            "solver": copy.deepcopy(self.solver),
            "output": copy.deepcopy(self.output),
            "provenance": copy.deepcopy(self.provenance),
            "metadata": copy.deepcopy(self.metadata),
        }

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise CaseError("case file must contain a mapping at the top level")
        version = data.get("schema_version")
        if version != SCHEMA_VERSION:
            raise CaseError(f"unsupported schema_version {version!r} (expected {SCHEMA_VERSION})")
        missing = [k for k in ("name", "kind", "geometry", "physics", "boundaries", "solver") if k not in data]
        if missing:
            raise CaseError(f"case file lacks required keys: {', '.join(missing)}")
        spec = cls(
            name=data["name"],
            kind=data["kind"],
            geometry=copy.deepcopy(data["geometry"]),
            physics=copy.deepcopy(data["physics"]),
            boundaries=copy.deepcopy(data["boundaries"]),
            solver=copy.deepcopy(data["solver"]),
            output=copy.deepcopy(data.get("output", {})),
            provenance=copy.deepcopy(data.get("provenance", {})),
            metadata=copy.deepcopy(data.get("metadata", {})),
        )
        validate(spec)
        return spec

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

    @classmethod
    def from_yaml(cls, text: str):
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise CaseError(f"invalid case file: {exc}") from exc
        return cls.from_dict(data)

    def digest(self) -> str:
        """SHA-256 of the canonical JSON form (metadata excluded)."""
        d = self.to_dict()
        d.pop("metadata")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()


def validate(spec: CaseSpec):
    if spec.kind not in ("cavity", "diffusion", "heated-plate", "natural-convection"):
        raise CaseError(f"unknown case kind {spec.kind!r}")
    for side, blk in spec.geometry.items():
        if side not in ("fluid", "solid"):
            raise CaseError(f"geometry block {side!r} must be 'fluid' or 'solid'")
        ext, cells = blk.get("extent"), blk.get("cells")
        if ext is None or cells is None or len(ext) != 2 or len(cells) != 2:
            raise CaseError(f"geometry.{side} needs extent [[x0, x1], [y0, y1]] and cells [nx, ny]")
    for side, table in spec.boundaries.items():
        if side not in spec.geometry:
            raise CaseError(f"boundary table for missing block {side!r}")
        for edge in table:
            if edge not in ("west", "east", "south", "north"):
                raise CaseError(f"boundaries.{side}: unknown edge {edge!r}")
    method = spec.solver.get("method", "semi-implicit")
    if method not in ("semi-implicit", "simple"):
        raise CaseError(f"solver.method must be 'semi-implicit' or 'simple', got {method!r}")
    coupling = spec.solver.get("coupling", "ob")
    if coupling not in ("ob", "reduced-ob", "dtn"):
        raise CaseError(f"solver.coupling must be ob, reduced-ob or dtn, got {coupling!r}")
    correction = spec.solver.get("correction", "standard")
    if correction not in ("standard", "consistent"):
        raise CaseError(f"solver.correction must be 'standard' or 'consistent', got {correction!r}")
    return spec


# ----------------------------------------------------------------- manufactured
def manufactured_exact(x, y):
    """Manufactured temperature ``20 + x^2 - x y - 3 y^2``."""
    return 20.0 + x * x - x * y - 3.0 * y * y


def manufactured_gradient(x, y):
    return 2.0 * x - y, -x - 6.0 * y


def manufactured_source(case_id, x, y):
    """Source ``-div(k(T) grad T)`` for the manufactured temperature.

    With ``lap T = -4`` this is ``4 k(T) - k'(T) |grad T|^2``.
    """
    if case_id not in DIFFUSION_LAWS:
        raise CaseError(f"unknown diffusion case {case_id!r}; expected 1, 2 or 3")
    law = ConductivityLaw(DIFFUSION_LAWS[case_id])
    T = manufactured_exact(x, y)
    gx, gy = manufactured_gradient(x, y)
    return 4.0 * law(T) - law.derivative(T) * (gx * gx + gy * gy)


# ------------------------------------------------------------------ references
def _read_data(name):
    text = resources.files("cht_fvm").joinpath("data").joinpath(name).read_text()
    meta = {}
    rows = []
    for line in text.splitlines():
        if line.startswith("#"):
            key, _, val = line[1:].partition(":")
            meta[key.strip()] = val.strip()
        elif line.strip():
            rows.append(line)
    return meta, list(csv.DictReader(io.StringIO("\n".join(rows))))


@dataclass
class ProfileData:
    re: int
    y: np.ndarray
    u: np.ndarray
    x: np.ndarray
    v: np.ndarray
    provenance: str
    tolerance: float


def ghia_reference(re) -> ProfileData:
    """Centerline velocity table for the lid-driven cavity at ``re``."""
    if re not in (100, 400, 1000):
        raise CaseError(f"no reference data for Re={re}; available: 100, 400, 1000")
    meta, rows = _read_data("ghia1982.csv")
    col = f"re{int(re)}"
    u = [(float(r["coord"]), float(r[col])) for r in rows if r["profile"] == "u"]
    v = [(float(r["coord"]), float(r[col])) for r in rows if r["profile"] == "v"]
    tol = float(meta.get("tolerance", "0.04").split()[0])
    return ProfileData(int(re), np.array([a for a, _ in u]), np.array([b for _, b in u]),
                       np.array([a for a, _ in v]), np.array([b for _, b in v]),
                       meta.get("provenance", ""), tol)


def table1_reference():
    """Published iteration counts: ``{(case, n): {"dtn": int|None, "ob": int, "reduced_ob": int}}``."""
    _, rows = _read_data("table1_iterations.csv")
    out = {}
    for r in rows:
        out[(int(r["case"]), int(r["h"]))] = {
            k: (int(r[k]) if r[k] else None) for k in ("dtn", "ob", "reduced_ob")
        }
    return out


# -------------------------------------------------------------------- builtins
def _wall(kind="no-slip", **kw):
    d = {"flow": kind}
    d.update(kw)
    return d


def _cavity(re):
    n = 40 if re == 100 else 120
    u0, cfl = 1.0, 0.5
    dx = 1.0 / n
    mu = 1.0 / re
    adiabatic = {"thermal": "adiabatic"}
    return CaseSpec(
        name=f"cavity-re{re}",
        kind="cavity",
        geometry={"fluid": {"extent": [[0.0, 1.0], [0.0, 1.0]], "cells": [n, n]}},
        physics={"fluid": {"rho": 1.0, "mu": mu, "beta": 0.0, "g0": [0.0, 0.0], "T_ref": 0.0},
                 "reynolds": float(re), "u_lid": u0},
        boundaries={"fluid": {
            "west": [_wall(**adiabatic)],
            "east": [_wall(**adiabatic)],
            "south": [_wall(**adiabatic)],
            "north": [_wall("lid", u=u0, **adiabatic)],
        }},
        solver={"method": "semi-implicit", "K": 0, "fluid_tol": 1e-6, "cfl": cfl,
                "dt": cfl * dx / u0, "t_end": 400.0, "until_steady": True, "steady_tol": 1e-5,
                "relax_u": 0.7, "relax_p": 0.3, "simple_max_iters": 500, "simple_tol": 1e-5,
                "coupling": "ob"},
        output={"probes": [[0.5, 0.5]], "probe_every": 10,
                "profiles": [{"name": "centerline_u", "field": "u", "line": "x", "at": 0.5},
                             {"name": "centerline_v", "field": "v", "line": "y", "at": 0.5}],
                "snapshots": []},
        provenance={"physics.fluid.rho": "literature", "physics.reynolds": "literature", "physics.u_lid": "literature",
                    "physics.fluid.mu": "literature", "geometry.fluid.cells": "literature", "solver.cfl": "literature",
                    "solver.K": "literature", "solver.steady_tol": "literature",
                    "solver.relax_u": "default", "solver.relax_p": "default"},
    )


def _diffusion(case_id, n=40):
    law = DIFFUSION_LAWS[case_id]
    dirichlet = [{"thermal": "dirichlet", "T": "exact"}]
    solid_sides = {e: list(dirichlet) for e in ("west", "east", "north")}
    fluid_sides = {e: list(dirichlet) for e in ("west", "east", "south")}
    # negative and sign-changing k(T) make the harmonic face mean undefined for case 2
    face_rule = "mean-temperature" if case_id == 2 else "harmonic"
    thermal = {"rho": 1.0, "cp": 1.0, "k": list(law), "Q": f"manufactured-{case_id}"}
    return CaseSpec(
        name=f"diffusion-{case_id}",
        kind="diffusion",
        geometry={"fluid": {"extent": [[0.0, 1.0], [0.0, 1.0]], "cells": [n, n]},
                  "solid": {"extent": [[0.0, 1.0], [1.0, 2.0]], "cells": [n, n]}},
        physics={"thermal": {"fluid": dict(thermal), "solid": dict(thermal)}, "case_id": case_id},
        boundaries={"fluid": fluid_sides, "solid": solid_sides},
        solver={"steady": True, "coupling": "ob", "n_r": 5, "relaxation": 0.2, "tol": 1e-6,
                "max_iters": 200, "dtn_max_iters": 2000, "delta": 0.0, "face_rule": face_rule,
                "jacobian": "newton", "initial": "mean-dirichlet", "dtn_initial_interface": 0.0},
        output={"profiles": [], "probes": [], "snapshots": []},
        provenance={"physics.thermal.fluid.k": "literature", "physics.thermal.solid.k": "literature",
                    "solver.tol": "literature", "solver.relaxation": "literature", "solver.n_r": "literature",
                    "solver.delta": "default", "solver.face_rule": "default"},
    )


def heated_plate_case(k_ratio=1.0, Pr=0.01):
    """Heated plate in cross flow for a solid/fluid conductivity ratio and Prandtl number."""
    rho, U, L, mu = 1.0, 0.1, 1.0, 2e-4
    k_s, cp_s = 100.0, 100.0
    k_f = k_s / k_ratio
    cp_f = Pr * k_f / mu
    nx_f, ny_f, ny_s = 150, 38, 13
    dx = 3.0 / nx_f
    return CaseSpec(
        name="heated-plate",
        kind="heated-plate",
        geometry={"fluid": {"extent": [[-0.5, 2.5], [0.0, 0.75]], "cells": [nx_f, ny_f]},
                  "solid": {"extent": [[0.0, 1.0], [-0.25, 0.0]], "cells": [int(round(1.0 / dx)), ny_s]}},
        physics={"fluid": {"rho": rho, "mu": mu, "beta": 0.0, "g0": [0.0, 0.0], "T_ref": 300.0},
                 "U_in": U, "T_in": 300.0, "T_0": 310.0, "L": L, "k_ratio": k_ratio, "Pr": Pr,
                 "thermal": {"fluid": {"rho": rho, "cp": cp_f, "k": [k_f], "Q": 0.0},
                             "solid": {"rho": 1.0, "cp": cp_s, "k": [k_s], "Q": 0.0}},
                 "derived": {"k_f": k_f, "cp_f": cp_f, "reynolds": rho * U * L / mu}},
        boundaries={
            "fluid": {
                "west": [{"flow": "inlet", "u": U, "v": 0.0, "thermal": "dirichlet", "T": 300.0}],
                "east": [{"flow": "outlet", "thermal": "adiabatic"}],
                "north": [{"flow": "slip", "thermal": "adiabatic"}],
                "south": [{"to": 0.0, "flow": "slip", "thermal": "adiabatic"},
                          {"from": 1.0, "flow": "no-slip", "thermal": "adiabatic"}],
            },
            "solid": {
                "west": [{"thermal": "adiabatic"}],
                "east": [{"thermal": "adiabatic"}],
                "south": [{"thermal": "dirichlet", "T": 310.0}],
            },
        },
        solver={"method": "semi-implicit", "K": 0, "fluid_tol": 1e-6, "cfl": 0.5,
                "dt": 0.5 * dx / U, "t_end": 400.0, "until_steady": True, "steady_tol": 1e-5,
                "relax_u": 0.7, "relax_p": 0.3, "simple_max_iters": 500, "simple_tol": 1e-5,
                "steady": True, "coupling": "ob", "n_r": 5, "relaxation": 0.2, "tol": 1e-6,
                "max_iters": 100, "dtn_max_iters": 2000, "delta": 0.0, "face_rule": "harmonic",
                "jacobian": "newton", "initial": "uniform", "T_initial": 300.0,
                "dtn_initial_interface": 300.0},
        output={"probes": [[0.5, 0.002]], "probe_every": 10,
                "profiles": [{"name": "interface_T_rel", "field": "T_rel", "line": "interface"}],
                "snapshots": []},
        provenance={"physics.U_in": "literature", "physics.T_in": "literature", "physics.T_0": "literature",
                    "physics.fluid.mu": "literature", "physics.fluid.rho": "literature",
                    "physics.thermal.solid.k": "literature", "physics.thermal.solid.cp": "literature",
                    "physics.k_ratio": "literature", "physics.Pr": "literature",
                    "geometry.fluid.cells": "default", "solver.cfl": "default"},
    )


def _natural_convection(case_id, n=80):
    p = NATURAL_CONVECTION[case_id]
    k_f = p["k_s"] / p["k_ratio"]
    cp_f = p["Pr"] * k_f / p["mu_f"]
    T_c, T_h = 1.0, 2.0
    ns = int(round(0.2 * n))
    alpha_f = k_f / (p["rho_f"] * cp_f)
    alpha_s = p["k_s"] / (p["rho_s"] * p["cp_s"])
    sigma = (k_f / p["k_s"]) * math.sqrt(alpha_s / alpha_f)
    rayleigh = p["rho_f"] ** 2 * cp_f * 1.0 * p["beta"] * (T_h - T_c) / (p["mu_f"] * k_f)
    return CaseSpec(
        name=f"natural-convection-{case_id}",
        kind="natural-convection",
        geometry={"fluid": {"extent": [[0.0, 1.0], [0.0, 1.0]], "cells": [n, n]},
                  "solid": {"extent": [[1.0, 1.2], [0.0, 1.0]], "cells": [ns, n]}},
        physics={"fluid": {"rho": p["rho_f"], "mu": p["mu_f"], "beta": p["beta"], "g0": [0.0, -1.0],
                           "T_ref": T_c},
                 "T_c": T_c, "T_h": T_h, "k_ratio": p["k_ratio"], "Pr": p["Pr"],
                 "thermal": {"fluid": {"rho": p["rho_f"], "cp": cp_f, "k": [k_f], "Q": 0.0},
                             "solid": {"rho": p["rho_s"], "cp": p["cp_s"], "k": [p["k_s"]], "Q": 0.0}},
                 "derived": {"k_f": k_f, "cp_f": cp_f, "sigma": sigma, "rayleigh": rayleigh}},
        boundaries={
            "fluid": {
                "west": [{"flow": "no-slip", "thermal": "dirichlet", "T": T_c}],
                "south": [{"flow": "no-slip", "thermal": "adiabatic"}],
                "north": [{"flow": "no-slip", "thermal": "adiabatic"}],
            },
            "solid": {
                "east": [{"thermal": "dirichlet", "T": T_h}],
                "south": [{"thermal": "adiabatic"}],
                "north": [{"thermal": "adiabatic"}],
            },
        },
        solver={"method": "semi-implicit", "K": 50, "fluid_tol": 1e-6, "dt": 1e-3, "t_end": 0.07,
                "until_steady": False, "steady_tol": 1e-5, "relax_u": 0.7, "relax_p": 0.3,
                "simple_max_iters": 500, "simple_tol": 1e-5, "steady": False, "coupling": "ob",
                "n_r": 5, "relaxation": 0.2, "tol": 1e-6, "max_iters": 100, "dtn_max_iters": 2000,
                "delta": 0.0, "face_rule": "harmonic", "jacobian": "newton", "outer_tol": 1e-6,
                "K_outer": 50, "warm_start": True, "initial": "uniform", "T_initial": T_c,
                "correction": "consistent"},
        output={"probes": [[0.5, 0.5]], "probe_every": 1,
                "profiles": [{"name": "theta_y0.5", "field": "theta", "line": "y", "at": 0.5},
                             {"name": "interface_theta", "field": "theta", "line": "interface"}],
                "snapshots": [0.07]},
        provenance={f"physics.{k}": "literature" for k in ("T_c", "T_h", "k_ratio", "Pr")}
        | {"physics.fluid.rho": "literature", "physics.fluid.mu": "literature", "physics.fluid.beta": "literature",
           "physics.thermal.solid.rho": "literature", "physics.thermal.solid.k": "literature",
           "physics.thermal.solid.cp": "literature", "solver.dt": "literature", "geometry.fluid.cells": "literature",
           "solver.initial": "default", "solver.correction": "default"},
    )


def _set_path(tree, path, value):
    keys = path.split(".")
    node = tree
    for k in keys[:-1]:
        if k not in node or not isinstance(node[k], dict):
            node[k] = {}
        node = node[k]
    node[keys[-1]] = value


def builtin_case(name, overrides=None) -> CaseSpec:
    """Return the builtin benchmark ``name`` with dotted-path ``overrides``.

    Overrides such as ``{"solver.coupling": "dtn", "geometry.fluid.cells": [20, 20]}``
    are applied to the case tree; touching a literature-fixed field appends a
    provenance warning to ``metadata["warnings"]``.
    """
    if name == "cavity-re100":
        spec = _cavity(100)
    elif name == "cavity-re400":
        spec = _cavity(400)
    elif name == "cavity-re1000":
        spec = _cavity(1000)
    elif name.startswith("diffusion-") and name[-1] in "123" and len(name) == 11:
        spec = _diffusion(int(name[-1]))
    elif name == "heated-plate":
        spec = heated_plate_case()
    elif name.startswith("natural-convection-") and name[-1] in "123" and len(name) == 20:
        spec = _natural_convection(int(name[-1]))
    else:
        raise CaseError(f"unknown case {name!r}; available: {', '.join(BUILTIN_CASES)}")
    if overrides:
        tree = spec.to_dict()
        warnings = []
        for path, value in overrides.items():
            if spec.provenance.get(path) == "literature":
                warnings.append(f"override of literature-fixed parameter {path}")
            _set_path(tree, path, value)
        tree["metadata"].setdefault("warnings", []).extend(warnings)
        tree["metadata"]["overrides"] = {k: v for k, v in overrides.items()}
        spec = CaseSpec.from_dict(tree)
    validate(spec)
    return spec


def with_resolution(spec: CaseSpec, n: int) -> CaseSpec:
    """Copy of a diffusion or natural-convection case on an ``n``-per-unit-length grid."""
    tree = spec.to_dict()
    if spec.kind == "diffusion":
        tree["geometry"]["fluid"]["cells"] = [n, n]
        tree["geometry"]["solid"]["cells"] = [n, n]
    elif spec.kind == "natural-convection":
        tree["geometry"]["fluid"]["cells"] = [n, n]
        tree["geometry"]["solid"]["cells"] = [int(round(0.2 * n)), n]
    elif spec.kind == "cavity":
        tree["geometry"]["fluid"]["cells"] = [n, n]
        tree["solver"]["dt"] = tree["solver"]["cfl"] / n / tree["physics"]["u_lid"]
    else:
        raise CaseError(f"resolution override not supported for {spec.kind} cases")
    tree["metadata"].setdefault("warnings", []).append(f"resolution set to h = 1/{n}")
    return CaseSpec.from_dict(tree)


def load_case(source: str) -> CaseSpec:
    """Builtin case name or path of a YAML case file."""
    if source in BUILTIN_CASES:
        return builtin_case(source)
    if not os.path.exists(source):
        raise CaseError(f"unknown case {source!r}: not a builtin ({', '.join(BUILTIN_CASES)}) and no such file")
    try:
        with open(source) as fh:
            text = fh.read()
    except OSError as exc:
        raise CaseError(f"cannot read case {source!r}: {exc}") from exc
    return CaseSpec.from_yaml(text)
