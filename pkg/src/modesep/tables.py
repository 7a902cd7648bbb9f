"""Result tables with embedded provenance, serialized as CSV + JSON sidecar.

Every emitted table carries the fully resolved configuration, the seed and
a config hash in its metadata sidecar, so any output can be regenerated
bit-identically from the files alone.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

# Spec'd column formatting: separations to 4 decimals, decibel values to 2,
# probabilities (and other reals) to 10 significant digits.
EPSILON_FORMAT = "%.4f"
DB_FORMAT = "%.2f"
DEFAULT_FORMAT = "%.10g"


def config_hash(config: dict) -> str:
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def build_metadata(command: str, config: dict, seed: int | None) -> dict:
    from . import __version__

    return {
        "tool": "modesep",
        "version": __version__,
        "command": command,
        "seed": seed,
        "config": config,
        "config_sha256": config_hash(config),
    }


@dataclass
class ResultTable:
    columns: list[str]
    rows: list[tuple]
    metadata: dict
    formats: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for row in self.rows:
            if len(row) != len(self.columns):
                raise ValueError(
                    f"row width {len(row)} does not match {len(self.columns)} columns"
                )

    def _format(self, column: str, value) -> str:
        if isinstance(value, str):
            return value
        if isinstance(value, bool):
            return "1" if value else "0"
        fmt = self.formats.get(column)
        if fmt is None:
            if column == "epsilon" or column.startswith("epsilon_"):
                fmt = EPSILON_FORMAT
            elif column.endswith("_db"):
                fmt = DB_FORMAT
            else:
                fmt = DEFAULT_FORMAT
        return fmt % value

    def column(self, name: str) -> list:
        idx = self.columns.index(name)
        return [row[idx] for row in self.rows]

    def to_csv(self) -> str:
        lines = [",".join(self.columns)]
        for row in self.rows:
            lines.append(",".join(self._format(c, v) for c, v in zip(self.columns, row)))
        return "\n".join(lines) + "\n"

    def write(self, base: Path) -> tuple[Path, Path]:
        """Write ``<base>.csv`` and ``<base>.meta.json``; returns both paths."""
        base = Path(base)
        base.parent.mkdir(parents=True, exist_ok=True)
        csv_path = base.with_suffix(".csv")
        meta_path = base.with_suffix(".meta.json")
        csv_path.write_text(self.to_csv())
        meta_path.write_text(json.dumps(self.metadata, indent=2, sort_keys=True) + "\n")
        return csv_path, meta_path
