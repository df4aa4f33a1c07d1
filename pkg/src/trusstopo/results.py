"""Flat-file persistence of evaluated designs.

Every table is a CSV preceded by ``#`` comment lines holding ``key=value``
metadata (instance hash, seed, parameters).  Weights are written with
``repr`` so they round-trip exactly; each main table has a ``designs``
sidecar listing the areas behind every reported weight.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .search import EvaluatedDesign, NoveltyArchive

LANDSCAPE_COLUMNS = ("bits", "d_hamming", "feasible", "median_weight")
SWARM_COLUMNS = ("iter", "particle", "bits", "novelty", "feasible", "weight")
DESIGN_COLUMNS = ("bits", "weight", "areas")


def _fmt(w: float | None) -> str:
    return "" if w is None else repr(float(w))


def _write(path: Path, meta: Mapping[str, object], columns, rows: Iterable) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        for k, v in meta.items():
            text = v if isinstance(v, str) else json.dumps(v, sort_keys=True)
            fh.write(f"# {k}={text}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        w.writerows(rows)
    return path


def read_table(path) -> tuple[dict[str, str], list[dict[str, str]]]:
    """Metadata and rows of a table written by this module."""
    meta, body = {}, []
    with Path(path).open(newline="") as fh:
        for line in fh:
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition("=")
                meta[key] = val
            else:
                body.append(line)
    return meta, list(csv.DictReader(body))


def write_landscape(path, designs: Iterable[EvaluatedDesign], meta: Mapping[str, object]) -> Path:
    """One row per topology, sorted by distance to the full structure, then bits."""
    ordered = sorted(designs, key=lambda d: (d.d_hamming, d.topology.bits))
    rows = (
        (d.topology.to_string(), d.d_hamming, int(d.upper_feasible), _fmt(d.weight))
        for d in ordered
    )
    return _write(path, meta, LANDSCAPE_COLUMNS, rows)


def write_swarm(path, designs: Iterable[EvaluatedDesign], meta: Mapping[str, object]) -> Path:
    rows = (
        (d.iteration, d.particle, d.topology.to_string(), repr(float(d.novelty)), int(d.feasible), _fmt(d.weight))
        for d in designs
    )
    return _write(path, meta, SWARM_COLUMNS, rows)


def write_designs(path, designs: Iterable[EvaluatedDesign], meta: Mapping[str, object]) -> Path:
    """Areas behind every feasible weight, one row per distinct topology."""
    seen, rows = set(), []
    for d in designs:
        key = d.topology.bits
        if d.weight is None or key in seen:
            continue
        seen.add(key)
        rows.append((d.topology.to_string(), _fmt(d.weight), d.sizing.areas_string()))
    rows.sort()
    return _write(path, meta, DESIGN_COLUMNS, rows)


def write_archive(path, archive: NoveltyArchive, meta: Mapping[str, object]) -> Path:
    rows = ((x.to_string(), t) for x, t in zip(archive, archive.first_seen))
    return _write(path, meta, ("bits", "first_seen"), rows)


def parse_areas(text: str, m: int | None = None) -> np.ndarray:
    """Inverse of ``SizingSolution.areas_string``; blanks become NaN."""
    vals = np.array([float(v) if v.strip() not in ("", "nan") else np.nan for v in text.split(";")])
    if m is not None and len(vals) != m:
        raise ValueError(f"expected {m} areas, got {len(vals)}")
    return vals
