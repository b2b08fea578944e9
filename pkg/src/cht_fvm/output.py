"""Writers for run artifacts: legacy VTK fields, CSV tables and the run manifest.

Floats are written with ``repr``, the shortest decimal that round-trips, so
repeated runs of the same case produce byte-identical files.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import platform
import subprocess
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if x is None:
        return ""
    return repr(float(x))


def write_csv(path: Path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) if not isinstance(v, str) else v for v in r])
    Path(path).write_text(buf.getvalue())
    return Path(path)


def read_csv(path: Path):
    """Columns of a numeric CSV written by :func:`write_csv` as float arrays."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    cols = {h: [] for h in header}
    for r in body:
        for h, v in zip(header, r):
            cols[h].append(float(v) if v != "" else np.nan)
    return {h: np.array(v) for h, v in cols.items()}


def write_vtk(path: Path, block, cell_fields: dict, title="cht_fvm field"):
    """Legacy ASCII structured grid with node points and cell data."""
    xn = np.linspace(block.x0, block.x1, block.nx + 1)
    yn = np.linspace(block.y0, block.y1, block.ny + 1)
    lines = ["# vtk DataFile Version 3.0", title, "ASCII", "DATASET STRUCTURED_GRID",
             f"DIMENSIONS {block.nx + 1} {block.ny + 1} 1", f"POINTS {(block.nx + 1) * (block.ny + 1)} double"]
    # VTK orders points with x fastest
    for y in yn:
        for x in xn:
            lines.append(f"{fmt(x)} {fmt(y)} 0.0")
    lines.append(f"CELL_DATA {block.nx * block.ny}")
    for name, arr in cell_fields.items():
        a = np.asarray(arr, dtype=float).reshape(block.nx, block.ny)
        lines.append(f"SCALARS {name} double 1")
        lines.append("LOOKUP_TABLE default")
        lines.extend(fmt(v) for v in a.T.ravel())
    Path(path).write_text("\n".join(lines) + "\n")
    return Path(path)


def write_field_csv(path: Path, block, cell_fields: dict):
    """Cell-centred fields, one row per cell in ``(i, j)`` order."""
    X, Y = block.centers()
    names = list(cell_fields)
    cols = [np.asarray(cell_fields[n], dtype=float).reshape(block.nx, block.ny).ravel() for n in names]
    rows = ([i, j, x, y] + [c[k] for c in cols]
            for k, (i, j, x, y) in enumerate(zip(*np.divmod(np.arange(block.nx * block.ny), block.ny),
                                                 X.ravel(), Y.ravel())))
    return write_csv(path, ["i", "j", "x", "y"] + names, rows)


def sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _commit():
    try:
        out = subprocess.run(["git", "rev-parse", "HEAD"], cwd=Path(__file__).parent, capture_output=True,
                             text=True, timeout=5)
        return out.stdout.strip() or None
    except (OSError, subprocess.SubprocessError):
        return None


def versions():
    import scipy

    return {
        "cht_fvm": __version__,
        "commit": _commit(),
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
    }


@dataclass
class RunManifest:
    case: str
    spec_digest: str
    versions: dict = field(default_factory=versions)
    timings: dict = field(default_factory=dict)
    iterations: dict = field(default_factory=dict)
    info: dict = field(default_factory=dict)
    files: dict = field(default_factory=dict)

    def add_file(self, path: Path, root: Path):
        self.files[str(Path(path).relative_to(root))] = sha256(path)

    def to_dict(self):
        return {
            "case": self.case,
            "spec_digest": self.spec_digest,
            "versions": self.versions,
            "timings": self.timings,
            "iterations": self.iterations,
            "info": self.info,
            "files": dict(sorted(self.files.items())),
        }

    def write(self, root: Path):
        path = Path(root) / "manifest.json"
        path.write_text(json.dumps(_plain(self.to_dict()), indent=2) + "\n")
        return path

    @classmethod
    def read(cls, root: Path):
        d = json.loads((Path(root) / "manifest.json").read_text())
        return cls(d["case"], d["spec_digest"], d["versions"], d["timings"], d["iterations"], d["info"], d["files"])


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else str(v)
    return obj
