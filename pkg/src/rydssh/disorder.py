"""Seeded phase and position disorder: realizations, ensembles and eigenvalue sweeps.

Every realization draws from its own PCG64 stream, derived from the master
seed and the realization index through ``SeedSequence(master_seed,
spawn_key=(i,))``. The draws therefore depend only on ``(master_seed, i)``
and never on execution order or worker count.
"""
import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .chain import chain_from_config, eigensolve
from .errors import ConfigError, DegeneracyWarning, DomainError, RydSSHError
from .metrics import WindingResult, localization_report, winding_details
from .model import build_array, retained_bonds

__all__ = [
    "RNG_ALGORITHM", "DisorderSpec", "DisorderRealization", "EnsembleResult", "SweepResult",
    "rng_for", "realization_seed", "draw", "n_draws", "phase_disordered_chain",
    "position_disordered_chain", "disordered_chain", "realize", "ensemble_run",
    "strength_scan", "trajectory_sweep",
]

RNG_ALGORITHM = "numpy PCG64 seeded by SeedSequence(master_seed, spawn_key=(realization,))"
KINDS = ("phase", "position")
_GRANULARITY = {"phase": "cell", "position": "bond"}


def rng_for(master_seed, index):
    """Independent generator for realization ``index``."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=(int(index),))
    return np.random.Generator(np.random.PCG64(ss))


def realization_seed(master_seed, index):
    """64-bit fingerprint of the stream used by realization ``index``."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=(int(index),))
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class DisorderSpec:
    """Distribution of static disorder.

    Attributes
    ----------
    kind : {'phase', 'position'}
    half_width : float
        eta in rad for phase disorder, Delta R in um for position disorder;
        draws are uniform on [-half_width, half_width].
    n_realizations : int
    master_seed : int
        Unsigned 64-bit seed.
    granularity : str, optional
        'cell' (one phase per unit cell) or 'bond' (one offset per retained
        bond); the only supported choice for each kind.
    """

    kind: str
    half_width: float
    n_realizations: int = 100
    master_seed: int = 0
    granularity: str = None

    def __post_init__(self):
        if self.granularity is None:
            object.__setattr__(self, "granularity", _GRANULARITY.get(self.kind))

    @classmethod
    def from_config(cls, cfg, kind, half_width=None, n_realizations=None, master_seed=None):
        """Spec with the configured ensemble defaults for ``kind``."""
        if half_width is None:
            if kind == "phase":
                half_width = cfg.phase_eta_over_half_pi * math.pi / 2
            else:
                half_width = cfg.position_half_width_um
        return cls(kind, float(half_width),
                   cfg.n_realizations if n_realizations is None else int(n_realizations),
                   cfg.master_seed if master_seed is None else int(master_seed))

    def validate(self, cfg=None, boundary=None):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown disorder kind {self.kind!r}", "disorder.kind")
        if self.granularity != _GRANULARITY[self.kind]:
            raise ConfigError(f"{self.kind} disorder supports granularity "
                              f"{_GRANULARITY[self.kind]!r} only", "disorder.granularity")
        if not (np.isfinite(self.half_width) and self.half_width >= 0):
            raise ConfigError("half width must be finite and >= 0", "disorder.half_width")
        if self.n_realizations < 1:
            raise ConfigError("need at least one realization", "disorder.n_realizations")
        if not 0 <= self.master_seed < 2 ** 64:
            raise ConfigError("master seed must be an unsigned 64-bit integer", "disorder.master_seed")
        if self.kind == "position" and cfg is not None:
            arr = build_array(cfg, boundary)
            D = arr.distances[~np.eye(arr.distances.shape[0], dtype=bool)]
            if self.half_width >= 0.5 * D.min():
                raise ConfigError(f"position half width {self.half_width} um would let atoms cross",
                                  "disorder.half_width")
        return self


def n_draws(cfg, kind, boundary=None):
    """Number of random numbers per realization."""
    if kind == "phase":
        return cfg.n_cells
    if kind == "position":
        boundary = boundary or cfg.boundary
        cutoff = cfg.R3 if boundary == "OBC" else cfg.R3_ring
        return len(retained_bonds(build_array(cfg, boundary), cutoff * (1 + cfg.cutoff_slack)))
    raise DomainError(f"unknown disorder kind {kind!r}")


def draw(spec, cfg, index, boundary=None):
    """Uniform draws of realization ``index``."""
    n = n_draws(cfg, spec.kind, boundary)
    return rng_for(spec.master_seed, index).uniform(-spec.half_width, spec.half_width, n)


def phase_disordered_chain(cfg, dphi, boundary=None):
    """Chain with an extra phase on the color-III drive of every c_n.

    ``dphi`` holds one value per unit cell. Zero draws reproduce the clean
    chain bit for bit.
    """
    return chain_from_config(cfg, boundary, cell_phase=np.asarray(dphi, dtype=float))


def position_disordered_chain(cfg, dR, boundary=None):
    """Chain with every retained bond length shifted by its own ``dR`` (um)."""
    return chain_from_config(cfg, boundary, bond_offsets=np.asarray(dR, dtype=float))


def disordered_chain(cfg, kind, values, boundary=None):
    if kind == "phase":
        return phase_disordered_chain(cfg, values, boundary)
    if kind == "position":
        return position_disordered_chain(cfg, values, boundary)
    raise DomainError(f"unknown disorder kind {kind!r}")


@dataclass
class DisorderRealization:
    """One seeded draw with its chain and metrics.

    ``dmipr`` and ``nu_s`` are NaN when the realization failed, in which
    case ``error`` carries the message.
    """

    index: int
    seed: int
    draws: np.ndarray
    chain: object = None
    dmipr: float = math.nan
    nu_s: float = math.nan
    error: str = None

    @property
    def abs_dmipr(self):
        return abs(self.dmipr)

    @property
    def ok(self):
        return self.error is None


def realize(spec, cfg, index, boundary=None, winding=True, keep_chain=True):
    """Build and analyse realization ``index``; numerical failures are captured."""
    boundary = boundary or cfg.boundary
    values = draw(spec, cfg, index, boundary)
    out = DisorderRealization(index, realization_seed(spec.master_seed, index), values)
    try:
        chain = disordered_chain(cfg, spec.kind, values, boundary)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DegeneracyWarning)
            out.dmipr = localization_report(eigensolve(chain), cfg.delta_sites).dmipr
            if winding:
                out.nu_s = winding_details(chain, cfg.winding_cutoff_cells)["nu"]
        if keep_chain:
            out.chain = chain
    except RydSSHError as exc:
        out.error = f"{type(exc).__name__}: {exc}"
    return out


def _realize_task(args):
    return realize(*args)


@dataclass
class EnsembleResult:
    """Per-realization metrics and their ordered reduction."""

    spec: DisorderSpec
    boundary: str
    realizations: list
    winding: WindingResult = None

    @property
    def succeeded(self):
        return [r for r in self.realizations if r.ok]

    @property
    def failures(self):
        return [(r.index, r.error) for r in self.realizations if not r.ok]

    @property
    def abs_dmipr(self):
        return np.array([r.abs_dmipr for r in self.succeeded])

    @property
    def mean_abs_dmipr(self):
        v = self.abs_dmipr
        return float(v.mean()) if v.size else math.nan

    @property
    def stderr_abs_dmipr(self):
        v = self.abs_dmipr
        return float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0

    def summary(self):
        out = {
            "kind": self.spec.kind,
            "half_width": self.spec.half_width,
            "granularity": self.spec.granularity,
            "boundary": self.boundary,
            "n_realizations": self.spec.n_realizations,
            "master_seed": self.spec.master_seed,
            "rng": RNG_ALGORITHM,
            "mean_abs_dmipr": self.mean_abs_dmipr,
            "stderr_abs_dmipr": self.stderr_abs_dmipr,
            "n_failed": len(self.failures),
            "failures": [{"realization": i, "error": e} for i, e in self.failures],
        }
        if self.winding is not None:
            out["winding"] = self.winding.as_dict()
        return out

    def rows(self):
        """(realization, seed, abs_dmipr, nu_s) in realization order."""
        return [(r.index, r.seed, r.abs_dmipr, r.nu_s) for r in self.realizations]


def _default_workers():
    return os.cpu_count() or 1


def ensemble_run(spec, cfg, boundary=None, workers=1, winding=True, keep_chains=False):
    """Evaluate ``spec.n_realizations`` realizations and reduce them in index order.

    Parameters
    ----------
    workers : int or None
        Process count; ``None`` uses every core. Results do not depend on it.
    winding : bool
        Also compute nu_s per realization.
    """
    boundary = boundary or cfg.boundary
    spec.validate(cfg, boundary)
    tasks = [(spec, cfg, i, boundary, winding, keep_chains) for i in range(spec.n_realizations)]
    workers = _default_workers() if workers is None else int(workers)
    if workers > 1 and len(tasks) > 1:
        chunk = max(1, len(tasks) // (4 * workers))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_realize_task, tasks, chunksize=chunk))
    else:
        results = [_realize_task(t) for t in tasks]
    results.sort(key=lambda r: r.index)
    wr = None
    if winding:
        ok = [r for r in results if r.ok and np.isfinite(r.nu_s)]
        failed = [(r.index, r.error) for r in results if not r.ok]
        window = 2 * cfg.n_cells - 4 * cfg.winding_cutoff_cells
        wr = WindingResult(np.array([r.nu_s for r in ok]), cfg.winding_cutoff_cells, window,
                           len(failed), failed)
    return EnsembleResult(spec, boundary, results, wr)


def strength_scan(cfg, kind, half_widths, n_realizations=None, boundary=None, workers=1,
                  master_seed=None):
    """Ensembles over a grid of disorder half widths (same seed at every point)."""
    return [ensemble_run(DisorderSpec.from_config(cfg, kind, w, n_realizations, master_seed),
                         cfg, boundary, workers)
            for w in half_widths]


# ----------------------------------------------------------------------------
# eigenvalue trajectories under a uniform offset

@dataclass
class SweepResult:
    """Tracked eigenvalues along a uniform-offset sweep.

    Attributes
    ----------
    deltas : ndarray, shape (G,)
    modes : tuple of int
        1-based positions in the (Re, Im)-sorted spectrum at the first grid point.
    energies : ndarray, shape (G, K), complex
    flagged : list of (grid index, mode)
        Steps where nearest continuation was ambiguous.
    """

    kind: str
    deltas: np.ndarray
    modes: tuple
    energies: np.ndarray
    flagged: list = field(default_factory=list)
    scale: np.ndarray = None

    def rows(self):
        """(delta, k, |E|, Re E, Im E) rows, grid-major."""
        out = []
        for g, d in enumerate(self.deltas):
            for m, k in enumerate(self.modes):
                E = self.energies[g, m]
                out.append((float(d), int(k), float(abs(E)), float(E.real), float(E.imag)))
        return out

    def max_imag_ratio(self):
        """Per grid point, max |Im E_k| over max |Re E| of the whole spectrum."""
        return np.abs(self.energies.imag).max(axis=1) / self.scale


def _sorted_eigenvalues(chain):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegeneracyWarning)
        return eigensolve(chain).eigenvalues


def trajectory_sweep(cfg, kind, grid, tracked_modes=None, boundary=None, ambiguity=0.5):
    """Follow selected eigenvalues while one uniform offset is applied everywhere.

    At the first grid point mode k is the k-th eigenvalue in (Re, Im) order.
    Later points are matched to the previous ones by a minimum-distance
    assignment over the whole spectrum. A step is flagged when some other
    eigenvalue lies within ``1/ambiguity`` times the chosen distance.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise DomainError("grid must be a non-empty 1-D sequence")
    tracked_modes = tuple(cfg.tracked_modes if tracked_modes is None else tracked_modes)
    n = n_draws(cfg, kind, boundary)
    L = 2 * cfg.n_cells
    if any(k < 1 or k > L for k in tracked_modes):
        raise DomainError(f"tracked modes must lie in 1..{L}")
    energies = np.empty((grid.size, len(tracked_modes)), dtype=np.complex128)
    scale = np.empty(grid.size)
    flagged = []
    prev = None
    for g, d in enumerate(grid):
        w = _sorted_eigenvalues(disordered_chain(cfg, kind, np.full(n, d), boundary))
        scale[g] = np.abs(w.real).max()
        if prev is None:
            energies[g] = w[np.array(tracked_modes) - 1]
        else:
            dist = np.abs(prev[:, None] - w[None, :])
            rows, cols = linear_sum_assignment(dist)
            energies[g, rows] = w[cols]
            for r, c in zip(rows, cols):
                d1 = dist[r, c]
                others = np.delete(dist[r], c)
                if d1 > 0 and others.min() * ambiguity < d1:
                    flagged.append((g, tracked_modes[r]))
        prev = energies[g]
    return SweepResult(kind, grid, tracked_modes, energies, flagged, scale)
