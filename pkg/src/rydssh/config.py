"""Physical configuration and its JSON serialisation.

Frequencies in the JSON document are given in MHz with an implied factor
2*pi (keys ending in ``_2pi_MHz``); internally every energy is an angular
frequency in rad/us. C6 is given in GHz um^6.
"""
import copy
import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from importlib import resources
from types import MappingProxyType

from .errors import ConfigError

__all__ = [
    "COLORS", "SPECIES", "SPECIES_COLORS", "TWO_PI",
    "ColorDrive", "PhysicalConfig", "load_config", "default_config", "config_from_dict",
    "config_to_dict", "config_hash", "SCHEMA",
]

TWO_PI = 2.0 * math.pi
COLORS = ("I", "II", "III")
SPECIES = ("a", "b", "c")
# two-color drive pattern: a and b share I, b and c share II, c and a share III
SPECIES_COLORS = MappingProxyType({"a": ("I", "III"), "b": ("I", "II"), "c": ("II", "III")})


@dataclass(frozen=True)
class ColorDrive:
    """Rabi frequency and detuning of one laser color, both in rad/us."""

    rabi: float
    detuning: float


def _default_phases():
    return {f"{s}.{c}": 0.0 for s in SPECIES for c in SPECIES_COLORS[s]} | {"c.III": math.pi / 2}


@dataclass(frozen=True)
class PhysicalConfig:
    """Array geometry, drives, interaction strength and decay rates.

    Distances in um, energies and rates in rad/us (or 1/us), times in us.
    """

    n_cells: int = 20
    R1: float = 6.0
    R2: float = 3.46
    R3: float = 8.29
    R3_ring: float = 8.61
    C6_GHz_um6: float = -863.0
    boundary: str = "OBC"
    cutoff_slack: float = 1e-3
    drives: dict = field(default_factory=lambda: {
        "I": ColorDrive(TWO_PI * 4.3, TWO_PI * 51.3),
        "II": ColorDrive(TWO_PI * 4.65, TWO_PI * 59.8),
        "III": ColorDrive(TWO_PI * 5.0, TWO_PI * 68.4),
    })
    phases: dict = field(default_factory=_default_phases)
    tau_aux_us: float = 0.118
    tau_rydberg_us: float = 104.0
    gamma_c: float = 0.0
    omega_p_over_gamma: float = 1.0
    max_rabi_over_detuning: float = 0.15
    min_elimination_ratio: float = 10.0
    include_stark: bool = False
    # dynamics
    t_end_us: float = 3.0
    n_points: int = 1500
    initial_site: str = "a_n"
    elimination_t_end_us: float = 10.0
    elimination_n_points: int = 1000
    # metrics
    delta_sites: float = 0.5
    winding_cutoff_cells: int = 2
    # disorder
    n_realizations: int = 100
    master_seed: int = 20240607
    phase_eta_over_half_pi: float = 0.1
    position_half_width_um: float = 0.1
    phase_sweep_over_half_pi: tuple = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0)
    position_sweep_um: tuple = (0.0, 0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.07, 0.08, 0.09, 0.1)
    tracked_modes: tuple = (1, 20, 21, 40)
    gap_grid: tuple = (0.05, 0.1, 0.3, 0.5, 0.8, 1.0, 2.0)

    def __post_init__(self):
        validate(self)

    @property
    def C6(self):
        """C6 in rad/us um^6."""
        return self.C6_GHz_um6 * 1e3 * TWO_PI

    @property
    def Gamma(self):
        return 1.0 / self.tau_aux_us

    @property
    def gamma(self):
        return 1.0 / self.tau_rydberg_us

    @property
    def omega_p(self):
        return self.omega_p_over_gamma * self.Gamma

    @property
    def n_sites(self):
        return 2 * self.n_cells

    @property
    def cutoff(self):
        """Coupling cutoff distance for the active boundary condition."""
        base = self.R3 if self.boundary == "OBC" else self.R3_ring
        return base * (1.0 + self.cutoff_slack)

    @property
    def flux_phase(self):
        return self.phases["c.III"]

    def phase(self, species, color):
        return self.phases.get(f"{species}.{color}", 0.0)

    def max_detuning(self):
        return max(abs(d.detuning) for d in self.drives.values())

    def with_flux(self, sign):
        """Copy with phi^c_III = sign * pi/2."""
        ph = dict(self.phases)
        ph["c.III"] = math.copysign(math.pi / 2, sign)
        return replace(self, phases=ph)

    def replace(self, **changes):
        return replace(self, **changes)


def validate(cfg):
    def need(cond, msg, path):
        if not cond:
            raise ConfigError(msg, path)

    need(isinstance(cfg.n_cells, int) and cfg.n_cells >= 1, "must be a positive integer", "geometry.n_cells")
    for name in ("R1", "R2", "R3", "R3_ring"):
        v = getattr(cfg, name)
        need(math.isfinite(v) and v > 0, "distance must be positive", f"geometry.{name}_um")
    need(cfg.R1 < cfg.R3 and cfg.R2 < cfg.R3, "requires R1 < R3 and R2 < R3", "geometry.R3_um")
    need(cfg.boundary in ("OBC", "PBC"), "must be 'OBC' or 'PBC'", "geometry.boundary")
    need(cfg.boundary == "OBC" or cfg.n_cells >= 3, "PBC ring needs at least 3 cells", "geometry.n_cells")
    need(cfg.cutoff_slack >= 0, "must be non-negative", "geometry.cutoff_slack")
    need(math.isfinite(cfg.C6_GHz_um6) and cfg.C6_GHz_um6 != 0, "must be finite and non-zero",
         "interaction.C6_GHz_um6")
    need(set(cfg.drives) == set(COLORS), "need exactly the colors I, II, III", "lasers")
    for c, d in cfg.drives.items():
        need(d.rabi >= 0 and math.isfinite(d.rabi), "must be finite and >= 0", f"lasers.{c}.rabi_2pi_MHz")
        need(d.detuning != 0 and math.isfinite(d.detuning), "must be finite and non-zero",
             f"lasers.{c}.detuning_2pi_MHz")
        need(abs(d.rabi / d.detuning) <= cfg.max_rabi_over_detuning,
             f"|Omega/Delta| = {abs(d.rabi / d.detuning):.3f} violates the large-detuning bound "
             f"{cfg.max_rabi_over_detuning}", f"lasers.{c}")
    for key, v in cfg.phases.items():
        s, _, c = key.partition(".")
        need(s in SPECIES and c in SPECIES_COLORS[s], "species does not see this color", f"phases_rad.{key}")
        need(math.isfinite(v), "must be finite", f"phases_rad.{key}")
    need(cfg.tau_aux_us > 0, "must be positive", "dissipation.tau_aux_us")
    need(cfg.tau_rydberg_us > 0, "must be positive", "dissipation.tau_rydberg_us")
    need(cfg.gamma_c >= 0, "must be non-negative", "dissipation.gamma_c_per_us")
    need(cfg.omega_p_over_gamma >= 0, "must be non-negative", "dissipation.omega_p_over_gamma")
    need(cfg.t_end_us > 0, "must be positive", "dynamics.t_end_us")
    need(cfg.n_points >= 2, "need at least two points", "dynamics.n_points")
    need(cfg.elimination_t_end_us > 0, "must be positive", "dynamics.elimination_t_end_us")
    need(cfg.elimination_n_points >= 2, "need at least two points", "dynamics.elimination_n_points")
    need(cfg.initial_site in ("c_n-1", "a_n", "b_n", "c_n", "a_n+1", "c_n+1"), "unknown site label",
         "dynamics.initial_site")
    need(cfg.winding_cutoff_cells >= 0, "must be non-negative", "metrics.winding_cutoff_cells")
    need(cfg.n_realizations >= 1, "must be >= 1", "disorder.n_realizations")
    need(0 <= cfg.master_seed < 2 ** 64, "must be an unsigned 64-bit integer", "disorder.master_seed")
    need(cfg.phase_eta_over_half_pi >= 0, "must be non-negative", "disorder.phase_eta_over_half_pi")
    need(0 <= cfg.position_half_width_um < min(cfg.R1, cfg.R2) / 2,
         "must be below half the smallest distance", "disorder.position_half_width_um")
    need(all(abs(x) < min(cfg.R1, cfg.R2) / 2 for x in cfg.position_sweep_um),
         "sweep offsets must stay below half the smallest distance", "disorder.position_sweep_um")
    need(all(k >= 1 for k in cfg.tracked_modes), "mode indices are 1-based", "disorder.tracked_modes")


# ----------------------------------------------------------------------------
# JSON layer

SCHEMA = {
    "geometry": {
        "n_cells": "int", "R1_um": "float", "R2_um": "float", "R3_um": "float",
        "R3_ring_um": "float", "boundary": "str", "cutoff_slack": "float",
    },
    "interaction": {"C6_GHz_um6": "float"},
    "lasers": {c: {"rabi_2pi_MHz": "float", "detuning_2pi_MHz": "float"} for c in COLORS},
    "phases_rad": {f"{s}.{c}": "float" for s in SPECIES for c in SPECIES_COLORS[s]},
    "dissipation": {
        "tau_aux_us": "float", "tau_rydberg_us": "float", "gamma_c_per_us": "float",
        "omega_p_over_gamma": "float", "include_stark": "bool",
    },
    "checks": {"max_rabi_over_detuning": "float", "min_elimination_ratio": "float"},
    "dynamics": {
        "t_end_us": "float", "n_points": "int", "initial_site": "str",
        "elimination_t_end_us": "float", "elimination_n_points": "int",
    },
    "metrics": {"delta_sites": "float", "winding_cutoff_cells": "int"},
    "disorder": {
        "n_realizations": "int", "master_seed": "int", "phase_eta_over_half_pi": "float",
        "position_half_width_um": "float", "phase_sweep_over_half_pi": "list",
        "position_sweep_um": "list", "tracked_modes": "list",
    },
    "gap_scan": {"omega_p_over_gamma": "list"},
}

_FLAT = {
    ("geometry", "n_cells"): "n_cells", ("geometry", "R1_um"): "R1", ("geometry", "R2_um"): "R2",
    ("geometry", "R3_um"): "R3", ("geometry", "R3_ring_um"): "R3_ring",
    ("geometry", "boundary"): "boundary", ("geometry", "cutoff_slack"): "cutoff_slack",
    ("interaction", "C6_GHz_um6"): "C6_GHz_um6",
    ("dissipation", "tau_aux_us"): "tau_aux_us", ("dissipation", "tau_rydberg_us"): "tau_rydberg_us",
    ("dissipation", "gamma_c_per_us"): "gamma_c", ("dissipation", "omega_p_over_gamma"): "omega_p_over_gamma",
    ("dissipation", "include_stark"): "include_stark",
    ("checks", "max_rabi_over_detuning"): "max_rabi_over_detuning",
    ("checks", "min_elimination_ratio"): "min_elimination_ratio",
    ("dynamics", "t_end_us"): "t_end_us", ("dynamics", "n_points"): "n_points",
    ("dynamics", "initial_site"): "initial_site",
    ("dynamics", "elimination_t_end_us"): "elimination_t_end_us",
    ("dynamics", "elimination_n_points"): "elimination_n_points",
    ("metrics", "delta_sites"): "delta_sites", ("metrics", "winding_cutoff_cells"): "winding_cutoff_cells",
    ("disorder", "n_realizations"): "n_realizations", ("disorder", "master_seed"): "master_seed",
    ("disorder", "phase_eta_over_half_pi"): "phase_eta_over_half_pi",
    ("disorder", "position_half_width_um"): "position_half_width_um",
    ("disorder", "phase_sweep_over_half_pi"): "phase_sweep_over_half_pi",
    ("disorder", "position_sweep_um"): "position_sweep_um",
    ("disorder", "tracked_modes"): "tracked_modes",
    ("gap_scan", "omega_p_over_gamma"): "gap_grid",
}

_TYPES = {"int": int, "float": (int, float), "str": str, "bool": bool, "list": list}


def _check_type(value, kind, path):
    if kind in ("int", "float") and isinstance(value, bool):
        raise ConfigError(f"expected {kind}, got bool", path)
    if not isinstance(value, _TYPES[kind]):
        raise ConfigError(f"expected {kind}, got {type(value).__name__}", path)
    if kind == "list" and not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in value):
        raise ConfigError("list entries must be numbers", path)


def config_from_dict(doc):
    """Build a config from a nested document; missing keys take defaults."""
    if not isinstance(doc, dict):
        raise ConfigError("top level must be an object")
    kwargs = {}
    defaults = PhysicalConfig.__dataclass_fields__
    drives = dict(PhysicalConfig().drives) if "lasers" in doc else None
    phases = None
    for section, body in doc.items():
        if section in ("version", "description"):
            continue
        if section not in SCHEMA:
            raise ConfigError("unknown section", section)
        if not isinstance(body, dict):
            raise ConfigError("section must be an object", section)
        for key, value in body.items():
            path = f"{section}.{key}"
            if key not in SCHEMA[section]:
                raise ConfigError("unknown key", path)
            if section == "lasers":
                if not isinstance(value, dict):
                    raise ConfigError("expected an object", path)
                rabi = drives[key].rabi / TWO_PI
                det = drives[key].detuning / TWO_PI
                for k2, v2 in value.items():
                    if k2 not in SCHEMA["lasers"][key]:
                        raise ConfigError("unknown key", f"{path}.{k2}")
                    _check_type(v2, "float", f"{path}.{k2}")
                rabi = float(value.get("rabi_2pi_MHz", rabi))
                det = float(value.get("detuning_2pi_MHz", det))
                drives[key] = ColorDrive(TWO_PI * rabi, TWO_PI * det)
                continue
            _check_type(value, SCHEMA[section][key], path)
            if section == "phases_rad":
                if phases is None:
                    phases = _default_phases()
                phases[key] = float(value)
                continue
            name = _FLAT[(section, key)]
            if SCHEMA[section][key] == "list":
                value = tuple(int(v) if name == "tracked_modes" else float(v) for v in value)
            elif SCHEMA[section][key] == "float":
                value = float(value)
            kwargs[name] = value
    if drives is not None:
        kwargs["drives"] = drives
    if phases is not None:
        kwargs["phases"] = phases
    assert all(k in defaults for k in kwargs)
    return PhysicalConfig(**kwargs)


def config_to_dict(cfg):
    """Nested JSON-ready document (inverse of :func:`config_from_dict`)."""
    doc = {s: {} for s in SCHEMA}
    for (section, key), name in _FLAT.items():
        v = getattr(cfg, name)
        doc[section][key] = list(v) if isinstance(v, tuple) else v
    for c in COLORS:
        d = cfg.drives[c]
        doc["lasers"][c] = {"rabi_2pi_MHz": d.rabi / TWO_PI, "detuning_2pi_MHz": d.detuning / TWO_PI}
    doc["phases_rad"] = {k: float(cfg.phases[k]) for k in sorted(cfg.phases)}
    return doc


def config_hash(cfg):
    """Short SHA-256 digest of the canonical JSON form."""
    text = json.dumps(config_to_dict(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def load_config(path=None):
    """Read a JSON config; ``None`` returns the shipped default configuration."""
    if path is None:
        return default_config()
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return config_from_dict(doc)


def default_config():
    text = resources.files("rydssh").joinpath("data/default.json").read_text(encoding="utf-8")
    return config_from_dict(copy.deepcopy(json.loads(text)))
