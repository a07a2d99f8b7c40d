import csv
from dataclasses import asdict, is_dataclass
from enum import Enum
from importlib.metadata import PackageNotFoundError, version
import json
from pathlib import Path
from typing import Iterable, Sequence
import numpy as np
from .ensemble import EnsembleStats
from .pde import PDESolution
from .stationary import StationaryProfile
from .util import format_float

class OutputWriter:
    """Writes the CSV and JSON results of a run into one output folder."""
    def __init__(self, folder: Path):
        self.folder = Path(folder)
        self.folder.mkdir(parents=True, exist_ok=True)

    def get_file_path(self, filename: str, ext: str) -> Path:
        file_path = (self.folder / filename).with_suffix(ext)
        if not file_path.resolve().is_relative_to(self.folder.resolve()):
            raise RuntimeError(f"Invalid output filename '{filename}'.")
        return file_path

    def write_csv(self, filename: str, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
        path = self.get_file_path(filename, ".csv")
        print(f"(Writing: {path})")
        with path.open("w", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([cell_text(v) for v in row])
        return path

    def write_json(self, filename: str, data: dict) -> Path:
        path = self.get_file_path(filename, ".json")
        print(f"(Writing: {path})")
        path.write_text(json.dumps(to_plain(data), indent=2) + "\n")
        return path

    def write_ensemble(self, stats: EnsembleStats, filename: str = "profiles") -> Path:
        return self.write_csv(filename, ["t", "q", "value", "stderr"], ensemble_rows(stats))

    def write_snapshots(self, stats: EnsembleStats, filename: str = "snapshots") -> Path:
        return self.write_csv(filename, ["seed", "t", "bin_center", "density"], snapshot_rows(stats))

    def write_solution(self, sol: PDESolution, filename: str = "pde") -> Path:
        return self.write_csv(filename, ["t", "q", "rho"], solution_rows(sol))

    def write_stationary(self, sp: StationaryProfile, filename: str = "stationary") -> Path:
        rows = zip(sp.profile.grid, sp.values)
        return self.write_csv(filename, ["q", "rho_bar"], rows)

def cell_text(value) -> str:
    if isinstance(value, (float, np.floating)):
        return format_float(float(value))
    return str(value)

def to_plain(value):
    """JSON-ready copy: numpy scalars and arrays become Python numbers and lists."""
    if isinstance(value, dict):
        return {str(k): to_plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_plain(value.tolist())
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, Enum):
        return value.value
    if is_dataclass(value) and not isinstance(value, type):
        return to_plain(asdict(value))
    return value

def ensemble_rows(stats: EnsembleStats):
    centres = stats.bin_centres
    for k, t in enumerate(stats.times):
        for i, q in enumerate(centres):
            yield t, q, stats.mean[k, i], stats.stderr[k, i]

def snapshot_rows(stats: EnsembleStats):
    centres = stats.bin_centres
    for s, seed in enumerate(stats.seeds):
        for k, t in enumerate(stats.times):
            for i, q in enumerate(centres):
                yield seed, t, q, stats.per_seed[s, k, i]

def solution_rows(sol: PDESolution):
    q = sol.grid
    for t, values in zip(sol.times, sol.values):
        for qi, v in zip(q, values):
            yield t, qi, v

def package_versions() -> dict[str, str]:
    versions = {}
    for name in ("longjump", "numpy", "scipy", "pyyaml", "dacite"):
        try:
            versions[name] = version(name)
        except PackageNotFoundError:
            versions[name] = "unknown"
    return versions

def run_manifest(params: dict, seeds: list[int], timings: dict, extra: dict | None = None) -> dict:
    manifest = {
        "params": params,
        "seeds": seeds,
        "versions": package_versions(),
        "timings": timings,
    }
    if extra:
        manifest.update(extra)
    return manifest
