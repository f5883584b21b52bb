"""
Run Configuration
RunConfig for the `run` pipeline: loaded from INI or JSON files, or from a
built-in preset, and validated on load.
"""

from __future__ import annotations

import configparser
import json
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Any, Literal

import numpy as np

from src.autocorrelation import VanHoveSequence
from src.errors import ConfigError
from src.generators import KINDS, CombGenerator
from src.geometry import Box
from src.measures import TestFunction

Expectation = Literal["pure-point", "not-pure-point"]
SECTIONS = ("generator", "vanhove", "ranges", "tolerances", "gates", "outputs")


@dataclass(frozen=True)
class RunConfig:
    """
    One reproducible pipeline run.

    Attributes:
        name: Run label (preset name or file stem).
        generator: Generator spec {kind, params, seed, group}.
        base, factor, n_max: Van Hove boxes [0, base·factor^n).
        R: Autocorrelation range.
        k_min, k_max: Peak-scan range.
        t_grid: Lags of the Dworkin test.
        epsilon: Binning width (0 = exact matching).
        residual_tol, refine_tol, dworkin_tol: Numerical tolerances.
        phi: Test function descriptor (ex: "tent:0.5").
        expect: Expected spectral type, selects the purity gate.
        purity_min / purity_max: Purity gates for pure point / not pure point.
        max_atom_intensity: Largest accepted atom allowed when not pure point.
        eigengroup: Run the eigenvalue-group stage after a passed purity gate.
        eigen_top, eigen_M: Atoms and coefficient bound of that stage.
        sum_rate_min: Required pass rate of pairwise sums.
        output_dir: Directory of comb.csv, gamma.csv, spectrum.csv, report.json.
    """
    name: str
    generator: dict[str, Any]
    base: float = 100.0
    factor: float = 2.0
    n_max: int = 8
    R: float = 6.0
    k_min: float = -2.5
    k_max: float = 2.5
    t_grid: tuple[float, ...] = tuple(np.linspace(-5.0, 5.0, 21).tolist())
    epsilon: float = 0.0
    residual_tol: float = 0.05
    refine_tol: float = 1e-7
    dworkin_tol: float = 5e-2
    phi: str = "tent:0.5"
    expect: Expectation = "pure-point"
    purity_min: float = 0.98
    purity_max: float = 0.05
    max_atom_intensity: float = 1e-2
    eigengroup: bool = True
    eigen_top: int = 5
    eigen_M: int = 1
    sum_rate_min: float = 0.95
    output_dir: str = "out"

    def __post_init__(self):
        object.__setattr__(self, "t_grid", tuple(float(t) for t in self.t_grid))
        validate(self)

    # -------------------------------------------------------------------------
    # Derived objects
    # -------------------------------------------------------------------------

    def make_generator(self) -> CombGenerator:
        return CombGenerator.from_spec(self.generator)

    def sequence(self) -> VanHoveSequence:
        dim = 2 if self.generator.get("group", "real-line").endswith("plane") else 1
        return VanHoveSequence.geometric(self.base, self.factor, self.n_max, dim)

    def k_range(self) -> Box:
        return Box.interval(self.k_min, self.k_max)

    def test_function(self) -> TestFunction:
        return TestFunction.parse(self.phi, 2 if self.generator.get("group", "real-line").endswith("plane") else 1)

    def with_output(self, output_dir: str) -> "RunConfig":
        return replace(self, output_dir=output_dir)

    def to_dict(self) -> dict:
        return asdict(self)


def validate(config: RunConfig):
    """
    Raises:
        ConfigError: On any invalid field.
    """
    kind = config.generator.get("kind")
    if kind not in KINDS:
        raise ConfigError(f"❌ Unknown generator kind '{kind}'. Valid kinds: {KINDS}")
    if config.n_max < 3:
        raise ConfigError(f"❌ n_max must be ≥ 3 (atom residuals need three boxes), got {config.n_max}")
    if config.epsilon < 0:
        raise ConfigError(f"❌ Binning epsilon must be ≥ 0, got {config.epsilon}")
    positive = {
        "base": config.base, "R": config.R, "residual_tol": config.residual_tol,
        "refine_tol": config.refine_tol, "dworkin_tol": config.dworkin_tol,
        "purity_min": config.purity_min, "purity_max": config.purity_max,
        "max_atom_intensity": config.max_atom_intensity, "sum_rate_min": config.sum_rate_min,
    }
    bad = [name for name, value in positive.items() if not value > 0]
    if bad:
        raise ConfigError(f"❌ These settings must be positive: {bad}")
    if config.factor <= 1:
        raise ConfigError(f"❌ Van Hove factor must be > 1, got {config.factor}")
    if not config.k_max > config.k_min:
        raise ConfigError(f"❌ Empty k-range [{config.k_min}, {config.k_max}]")
    if config.expect not in ("pure-point", "not-pure-point"):
        raise ConfigError(f"❌ expect must be 'pure-point' or 'not-pure-point', got '{config.expect}'")
    if not config.t_grid:
        raise ConfigError("❌ The Dworkin t-grid is empty")
    try:
        CombGenerator.from_spec(config.generator)
        TestFunction.parse(config.phi)
    except ValueError as e:
        raise ConfigError(f"❌ Invalid configuration: {e}") from e


# =============================================================================
# PRESETS
# =============================================================================

PRESETS: dict[str, dict[str, Any]] = {
    "lattice-full": {
        "generator": {"kind": "lattice", "params": {"spacing": 1.0}},
    },
    "fibonacci-full": {
        "generator": {"kind": "cut-and-project-1d", "params": {"field": "golden"}},
        "k_min": -3.0,
        "k_max": 3.0,
        "phi": "tent:0.5",
    },
    "thue-morse-full": {
        "generator": {"kind": "substitution", "params": {"rule": "thue-morse"}},
        "expect": "not-pure-point",
        "t_grid": tuple(float(t) for t in range(-4, 5)),
        "eigengroup": False,
    },
    "period-doubling-full": {
        "generator": {"kind": "substitution", "params": {"rule": "period-doubling"}},
        "k_min": -1.5,
        "k_max": 1.5,
        "eigengroup": False,
    },
}


def preset(name: str) -> RunConfig:
    """Built-in configuration by name (see PRESETS)."""
    if name not in PRESETS:
        raise ConfigError(f"❌ Unknown preset '{name}'. Valid presets: {list(PRESETS)}")
    return from_mapping({"name": name, **PRESETS[name]})


# =============================================================================
# LOADING
# =============================================================================

def parse_grid(text: str) -> tuple[float, ...]:
    """``a:b:n`` (linspace) or a comma-separated list."""
    if ":" in text:
        a, b, n = text.split(":")
        return tuple(np.linspace(float(a), float(b), int(n)).tolist())
    return tuple(float(v) for v in text.split(",") if v.strip())


def _parse_bool(text: str) -> bool:
    value = str(text).strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"❌ Cannot read '{text}' as a boolean")


_FIELD_TYPES = {
    "base": float, "factor": float, "n_max": int, "R": float, "k_min": float, "k_max": float,
    "epsilon": float, "residual_tol": float, "refine_tol": float, "dworkin_tol": float,
    "purity_min": float, "purity_max": float, "max_atom_intensity": float,
    "eigen_top": int, "eigen_M": int, "sum_rate_min": float,
}

# INI (section, key) → RunConfig field
_INI_KEYS = {
    ("vanhove", "base"): "base",
    ("vanhove", "factor"): "factor",
    ("vanhove", "n_max"): "n_max",
    ("ranges", "r"): "R",
    ("ranges", "k_min"): "k_min",
    ("ranges", "k_max"): "k_max",
    ("ranges", "t_grid"): "t_grid",
    ("tolerances", "epsilon"): "epsilon",
    ("tolerances", "residual"): "residual_tol",
    ("tolerances", "refine"): "refine_tol",
    ("tolerances", "dworkin"): "dworkin_tol",
    ("gates", "expect"): "expect",
    ("gates", "purity_min"): "purity_min",
    ("gates", "purity_max"): "purity_max",
    ("gates", "max_atom_intensity"): "max_atom_intensity",
    ("gates", "eigengroup"): "eigengroup",
    ("gates", "eigen_top"): "eigen_top",
    ("gates", "eigen_m"): "eigen_M",
    ("gates", "sum_rate_min"): "sum_rate_min",
    ("gates", "phi"): "phi",
    ("outputs", "dir"): "output_dir",
}


def from_mapping(data: dict[str, Any]) -> RunConfig:
    """
    Builds a RunConfig from a flat mapping (JSON layout) of RunConfig fields.

    Raises:
        ConfigError: On unknown keys, unreadable values or failed validation.
    """
    data = dict(data)
    known = set(RunConfig.__dataclass_fields__)
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"❌ Unknown configuration keys: {unknown}")
    if "generator" not in data:
        raise ConfigError("❌ A configuration needs a 'generator' entry")
    try:
        for key, cast in _FIELD_TYPES.items():
            if key in data:
                data[key] = cast(data[key])
        if isinstance(data.get("t_grid"), str):
            data["t_grid"] = parse_grid(data["t_grid"])
        if "eigengroup" in data and not isinstance(data["eigengroup"], bool):
            data["eigengroup"] = _parse_bool(data["eigengroup"])
    except (TypeError, ValueError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"❌ Invalid configuration value: {e}") from e
    data.setdefault("name", "run")
    return RunConfig(**data)


def _from_ini(path: Path) -> RunConfig:
    parser = configparser.ConfigParser()
    try:
        parser.read(path, encoding="utf-8")
    except configparser.Error as e:
        raise ConfigError(f"❌ Cannot parse '{path}': {e}") from e
    unknown = [s for s in parser.sections() if s not in SECTIONS]
    if unknown:
        raise ConfigError(f"❌ Unknown configuration sections: {unknown}")
    if not parser.has_section("generator"):
        raise ConfigError(f"❌ '{path}' has no [generator] section")

    section = parser["generator"]
    if "example" in section:
        from src.generators import example

        generator = example(section["example"]).to_spec()
    else:
        try:
            params = json.loads(section.get("params", "{}"))
        except json.JSONDecodeError as e:
            raise ConfigError(f"❌ [generator] params must be a JSON object: {e}") from e
        generator = {"kind": section.get("kind"), "params": params}
    if "seed" in section:
        generator["seed"] = int(section["seed"])
    if "group" in section:
        generator["group"] = section["group"]

    data: dict[str, Any] = {"name": path.stem, "generator": generator}
    for name in SECTIONS[1:]:
        if not parser.has_section(name):
            continue
        for key, value in parser[name].items():
            target = _INI_KEYS.get((name, key))
            if target is None:
                raise ConfigError(f"❌ Unknown key '{key}' in section [{name}]")
            data[target] = value
    return from_mapping(data)


def load_config(path: str) -> RunConfig:
    """
    Loads a RunConfig from a ``.json`` file or an INI file (any other suffix).

    Raises:
        ConfigError: If the file is missing, unreadable or invalid.
    """
    file = Path(path)
    if not file.is_file():
        raise ConfigError(f"❌ Configuration file not found: {path}")
    if file.suffix.lower() == ".json":
        try:
            data = json.loads(file.read_text(encoding="utf-8"))
        except (json.JSONDecodeError, OSError) as e:
            raise ConfigError(f"❌ Cannot read JSON configuration '{path}': {e}") from e
        if not isinstance(data, dict):
            raise ConfigError("❌ A JSON configuration must be an object")
        data.setdefault("name", file.stem)
        return from_mapping(data)
    return _from_ini(file)
