"""
Artifact I/O
CSV + JSON sidecar files for combs, autocorrelations and spectra, plus the
JSON report and generator specs.

Numbers are written with the shortest round-trip decimal representation and
read back with pandas' round-trip parser, so a write/read cycle is exact.
"""

import json
import os
from pathlib import Path

import numpy as np
import pandas as pd

from src.autocorrelation import Autocorrelation
from src.diffraction import Atom, DiffractionSpectrum
from src.generators import CombGenerator
from src.geometry import Box
from src.measures import GroupSpec, WeightedComb
from src.utils.logger import _to_jsonable

# Every artifact path must stay under this directory
ARTIFACT_DIR = Path(os.getenv("APERIODICA_ARTIFACT_DIR", ".")).resolve()


def _validate_path(file_path: str, suffix: str | None = None) -> Path:
    """
    Validates that the path lies under ARTIFACT_DIR (and has the expected suffix).

    Args:
        file_path (str): The path to validate.
        suffix (str): Required suffix such as ".csv", or None.

    Returns:
        Path: Resolved absolute path.

    Raises:
        ValueError: If the path escapes ARTIFACT_DIR or has the wrong suffix.
    """
    try:
        abs_path = Path(file_path).resolve()
        abs_path.relative_to(ARTIFACT_DIR)
    except ValueError as e:
        raise ValueError(
            f"❌ Security Error: Path '{file_path}' is outside the artifact directory '{ARTIFACT_DIR}'"
        ) from e
    if suffix is not None and abs_path.suffix.lower() != suffix:
        raise ValueError(f"❌ Expected a '{suffix}' file, got '{file_path}'")
    return abs_path


def _sidecar(path: Path) -> Path:
    return path.with_suffix(".json")


def format_number(value: float) -> str:
    """Shortest round-trip decimal representation."""
    return repr(float(value))


# =============================================================================
# GENERIC FILES
# =============================================================================

def write_json(file_path: str, data: dict) -> None:
    """
    Writes ``data`` as indented JSON (complex numbers as {"re", "im"}).

    Raises:
        ValueError: If the path is outside the artifact directory.
        IOError: If the file cannot be written.
    """
    validated_path = _validate_path(file_path, ".json")
    try:
        validated_path.parent.mkdir(parents=True, exist_ok=True)
        with open(validated_path, "w", encoding="utf-8") as f:
            json.dump(_to_jsonable(data), f, indent=2, ensure_ascii=False)
            f.write("\n")
    except OSError as e:
        raise IOError(f"❌ Error writing to file '{validated_path}': {str(e)}") from e


def read_json(file_path: str) -> dict:
    """
    Raises:
        FileNotFoundError: If the file does not exist.
        IOError: If the file is not valid JSON.
    """
    validated_path = _validate_path(file_path, ".json")
    if not validated_path.is_file():
        raise FileNotFoundError(f"❌ File not found: {validated_path}")
    try:
        with open(validated_path, "r", encoding="utf-8") as f:
            return json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise IOError(f"❌ Error reading file '{validated_path}': {str(e)}") from e


def _write_table(path: Path, columns: dict[str, np.ndarray]) -> None:
    frame = pd.DataFrame({name: [format_number(v) for v in values] for name, values in columns.items()})
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False, lineterminator="\n")
    except OSError as e:
        raise IOError(f"❌ Error writing to file '{path}': {str(e)}") from e


def _read_table(path: Path) -> pd.DataFrame:
    if not path.is_file():
        raise FileNotFoundError(f"❌ File not found: {path}")
    try:
        return pd.read_csv(path, float_precision="round_trip")
    except (OSError, pd.errors.ParserError) as e:
        raise IOError(f"❌ Error reading file '{path}': {str(e)}") from e
    except pd.errors.EmptyDataError:
        return pd.DataFrame()


def _coordinates(frame: pd.DataFrame, prefix: str, dim: int) -> np.ndarray:
    if frame.empty:
        return np.zeros((0, dim))
    return frame[[f"{prefix}{i + 1}" for i in range(dim)]].to_numpy(dtype=float)


def _complex_column(frame: pd.DataFrame, re: str, im: str) -> np.ndarray:
    if frame.empty:
        return np.zeros(0, dtype=complex)
    return frame[re].to_numpy(dtype=float) + 1j * frame[im].to_numpy(dtype=float)


def _read_sidecar(path: Path) -> dict:
    return read_json(str(_sidecar(path)))


def _empty_frame_columns(path: Path, names: list[str]) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(",".join(names) + "\n", encoding="utf-8")
    except OSError as e:
        raise IOError(f"❌ Error writing to file '{path}': {str(e)}") from e


# =============================================================================
# COMBS
# =============================================================================

def write_comb(comb: WeightedComb, file_path: str) -> None:
    """comb.csv (x1[,x2],re_w,im_w) + comb.json {window, group, count}."""
    path = _validate_path(file_path, ".csv")
    columns = {f"x{i + 1}": comb.points[:, i] for i in range(comb.dim)}
    columns["re_w"] = comb.weights.real
    columns["im_w"] = comb.weights.imag
    if len(comb):
        _write_table(path, columns)
    else:
        _empty_frame_columns(path, list(columns))
    write_json(str(_sidecar(path)), {"window": comb.window.to_list(), "group": comb.group.kind, "count": len(comb)})


def read_comb(file_path: str) -> WeightedComb:
    path = _validate_path(file_path, ".csv")
    meta = _read_sidecar(path)
    group = GroupSpec(meta["group"])
    frame = _read_table(path)
    points = _coordinates(frame, "x", group.dim)
    weights = _complex_column(frame, "re_w", "im_w")
    return WeightedComb(points, weights, Box.from_list(meta["window"]), group)


# =============================================================================
# AUTOCORRELATIONS
# =============================================================================

def write_autocorrelation(gamma: Autocorrelation, file_path: str) -> None:
    """gamma.csv (z1[,z2],re_eta,im_eta) + gamma.json {epsilon, range, volume, step, n, group, lattice_spacing}."""
    path = _validate_path(file_path, ".csv")
    columns = {f"z{i + 1}": gamma.support[:, i] for i in range(gamma.dim)}
    columns["re_eta"] = gamma.coefficients.real
    columns["im_eta"] = gamma.coefficients.imag
    if len(gamma):
        _write_table(path, columns)
    else:
        _empty_frame_columns(path, list(columns))
    write_json(str(_sidecar(path)), {
        "epsilon": gamma.epsilon,
        "range": gamma.range,
        "volume": gamma.volume,
        "step": gamma.step,
        "n": gamma.n,
        "group": gamma.group.kind,
        "lattice_spacing": gamma.lattice_spacing,
    })


def read_autocorrelation(file_path: str) -> Autocorrelation:
    path = _validate_path(file_path, ".csv")
    meta = _read_sidecar(path)
    group = GroupSpec(meta["group"])
    frame = _read_table(path)
    return Autocorrelation(
        _coordinates(frame, "z", group.dim),
        _complex_column(frame, "re_eta", "im_eta"),
        float(meta["epsilon"]),
        float(meta["range"]),
        float(meta["volume"]),
        float(meta["step"]),
        meta.get("n"),
        group,
        meta.get("lattice_spacing"),
    )


# =============================================================================
# SPECTRA
# =============================================================================

def write_spectrum(spectrum: DiffractionSpectrum, file_path: str, denominator: float | None = None) -> None:
    """spectrum.csv (k1[,k2],intensity,residual) + spectrum.json {purity, denominator, density, scan}."""
    path = _validate_path(file_path, ".csv")
    dim = spectrum.dim
    ks = spectrum.ks
    columns = {f"k{i + 1}": ks[:, i] for i in range(dim)}
    columns["intensity"] = spectrum.intensities
    columns["residual"] = np.array([a.residual for a in spectrum.atoms])
    if spectrum.atoms:
        _write_table(path, columns)
    else:
        _empty_frame_columns(path, list(columns))
    write_json(str(_sidecar(path)), {
        "purity": spectrum.purity,
        "denominator": denominator,
        "density": spectrum.density,
        "scan": spectrum.scan,
    })


def read_spectrum(file_path: str) -> DiffractionSpectrum:
    path = _validate_path(file_path, ".csv")
    meta = _read_sidecar(path)
    frame = _read_table(path)
    dim = int(meta.get("scan", {}).get("dim", 1))
    ks = _coordinates(frame, "k", dim)
    atoms = tuple(
        Atom(tuple(float(v) for v in k), float(i), float(r))
        for k, i, r in zip(ks, frame.get("intensity", []), frame.get("residual", []))
    )
    return DiffractionSpectrum(atoms, meta.get("scan", {}), meta.get("purity"), density=meta.get("density", 0.0))


# =============================================================================
# GENERATOR SPECS
# =============================================================================

def read_generator(file_path: str) -> CombGenerator:
    """gen-spec.json → CombGenerator."""
    return CombGenerator.from_spec(read_json(file_path))


def write_generator(gen: CombGenerator, file_path: str) -> None:
    write_json(file_path, gen.to_spec())
