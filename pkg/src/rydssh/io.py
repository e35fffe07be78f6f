"""Run manifests and atomic CSV/JSON output.

Every file written here starts with ``# manifest=<hash>`` (CSV) or carries a
``manifest`` key (JSON). The hash covers the command, its arguments, the
configuration hash, the seed and the package version, so replaying a run
reproduces the same bytes. Wall time and the output list live only in
``manifest.json``.
"""
import hashlib
import json
import os
import platform
import tempfile
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .config import TWO_PI
from .numerics import backend

__all__ = [
    "RunManifest", "atomic_write", "write_csv", "read_csv", "write_json",
    "spectrum_rows", "state_rows",
]


def atomic_write(path, text):
    """Write ``text`` to ``path`` through a temporary file and ``os.replace``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _canonical(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=_jsonable)


def _jsonable(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, Path):
        return str(x)
    if isinstance(x, complex):
        return [x.real, x.imag]
    raise TypeError(f"cannot serialise {type(x).__name__}")


@dataclass
class RunManifest:
    """Provenance of one command invocation."""

    command: str
    config_hash: str
    seed: int = None
    arguments: dict = field(default_factory=dict)
    versions: dict = field(default_factory=lambda: {
        "rydssh": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
        "python": platform.python_version(), "integrator_backend": backend.NAME,
    })
    rng: str = None
    outputs: list = field(default_factory=list)
    wall_time_s: float = None

    @property
    def hash(self):
        key = {"command": self.command, "config_hash": self.config_hash, "seed": self.seed,
               "arguments": self.arguments, "rydssh": self.versions.get("rydssh")}
        return hashlib.sha256(_canonical(key).encode()).hexdigest()[:16]

    def header(self):
        lines = [f"manifest={self.hash}", f"config={self.config_hash}", f"command={self.command}"]
        if self.seed is not None:
            lines.append(f"seed={self.seed}")
        if self.rng:
            lines.append(f"rng={self.rng}")
        return lines

    def record(self, path):
        self.outputs.append(str(Path(path).name))

    def as_dict(self):
        d = asdict(self)
        d["manifest"] = self.hash
        return d

    def write(self, out_dir):
        return atomic_write(Path(out_dir) / "manifest.json",
                            json.dumps(self.as_dict(), indent=2, sort_keys=True, default=_jsonable) + "\n")


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, columns, rows, manifest=None, comments=()):
    """Write rows under a ``# key=value`` preamble and a column header.

    Floats use ``repr`` so that they round-trip exactly.
    """
    lines = []
    if manifest is not None:
        lines += [f"# {x}" for x in manifest.header()]
    lines += [f"# {x}" for x in comments]
    lines.append(",".join(columns))
    for row in rows:
        if len(row) != len(columns):
            raise ValueError(f"row has {len(row)} fields, expected {len(columns)}")
        lines.append(",".join(_fmt(v) for v in row))
    atomic_write(path, "\n".join(lines) + "\n")
    if manifest is not None:
        manifest.record(path)
    return Path(path)


def read_csv(path):
    """Return (metadata dict, column names, rows as list of str lists)."""
    meta, names, rows = {}, None, []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition("=")
                if _:
                    meta[key] = val
            elif names is None:
                names = line.split(",")
            elif line:
                rows.append(line.split(","))
    return meta, names, rows


def write_json(path, payload, manifest=None):
    body = dict(payload)
    if manifest is not None:
        body["manifest"] = manifest.hash
        body["config_hash"] = manifest.config_hash
    atomic_write(path, json.dumps(body, indent=2, sort_keys=True, default=_jsonable) + "\n")
    if manifest is not None:
        manifest.record(path)
    return Path(path)


def spectrum_rows(spectrum):
    """(index, Re E, Im E) in MHz (E / 2 pi); 1-based index in (Re, Im) order."""
    return [(i + 1, float(E.real) / TWO_PI, float(E.imag) / TWO_PI)
            for i, E in enumerate(spectrum.eigenvalues)]


def state_rows(spectrum):
    """Long format: (state, site, |R|^2, Re R, Im R, Re L, Im L); 1-based indices."""
    R, L = spectrum.right, spectrum.left
    out = []
    for n in range(R.shape[1]):
        for j in range(R.shape[0]):
            r, l = R[j, n], L[j, n]
            out.append((n + 1, j + 1, float(abs(r) ** 2), float(r.real), float(r.imag),
                        float(l.real), float(l.imag)))
    return out
