"""One-at-a-time sensitivity screening over fitted emulators.

Each input is swept across its normalized range while the others sit at the
baseline (policy inputs at 0, techno-economic inputs at 0.5). The spread of
the predictive mean over the sweep, normalized per output, gives a relative
importance index; rankings average those indices across outputs.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .emulator import GpModel, predict
from .space import KIND_POLICY, ParameterSpace


class SensitivityError(ValueError):
    """Raised for unknown inputs, bad grids, or mismatched curve sets."""


METRIC_RANGE = "range"
METRIC_VARIANCE = "variance"


@dataclass(frozen=True)
class OaatCurve:
    input_id: str
    grid: np.ndarray  # m normalized points covering [0, 1]
    means: np.ndarray
    variances: np.ndarray
    output_name: str
    year: int

    def validate(self) -> None:
        g = np.asarray(self.grid, dtype=float)
        if g.size < 11:
            raise SensitivityError("sweep grid needs at least 11 points")
        if not (np.all(np.diff(g) > 0) and g[0] == 0.0 and g[-1] == 1.0):
            raise SensitivityError("grid must increase strictly from 0 to 1")
        if self.means.shape != g.shape or self.variances.shape != g.shape:
            raise SensitivityError("curve arrays must match the grid length")


@dataclass(frozen=True)
class SensitivityTable:
    output_name: str
    year: int
    input_ids: tuple[str, ...]
    indices: np.ndarray  # relative sensitivities, sum to 1 (or all 0)
    metric: str


@dataclass(frozen=True)
class InputRanking:
    input_ids: tuple[str, ...]  # descending by average index, stable ties
    averages: np.ndarray  # aligned with input_ids


def default_baseline(space: ParameterSpace) -> np.ndarray:
    """Policy coordinates at 0 (current policy), techno-economic at 0.5."""
    return np.array([0.0 if d.kind == KIND_POLICY else 0.5 for d in space.inputs])


def oaat_sweep(model: GpModel, space: ParameterSpace, input_id: str,
               baseline: np.ndarray | None = None, m: int = 21) -> OaatCurve:
    """Predict along one coordinate with the rest held at the baseline."""
    idx = space.index_of(input_id)
    if m < 11:
        raise SensitivityError("sweep grid needs at least 11 points")
    base = default_baseline(space) if baseline is None else np.asarray(baseline, float)
    if base.shape != (space.dimension,):
        raise SensitivityError("baseline dimension does not match the space")
    grid = np.linspace(0.0, 1.0, m)
    probes = np.tile(base, (m, 1))
    probes[:, idx] = grid
    means, variances = predict(model, probes)
    curve = OaatCurve(input_id=input_id, grid=grid, means=means,
                      variances=variances, output_name=model.output_name,
                      year=model.year)
    curve.validate()
    return curve


def relative_sensitivity(curves: list[OaatCurve],
                         metric: str = METRIC_RANGE) -> SensitivityTable:
    """Normalized per-input indices for one (output, year) from its sweeps."""
    if not curves:
        raise SensitivityError("need at least one curve")
    key = (curves[0].output_name, curves[0].year)
    for c in curves:
        c.validate()
        if (c.output_name, c.year) != key:
            raise SensitivityError("curves mix outputs or years")
    if metric == METRIC_RANGE:
        raw = np.array([c.means.max() - c.means.min() for c in curves])
    elif metric == METRIC_VARIANCE:
        raw = np.array([c.means.var() for c in curves])
    else:
        raise SensitivityError(f"unknown metric {metric!r}")
    total = raw.sum()
    indices = raw / total if total > 0 else np.zeros_like(raw)
    return SensitivityTable(output_name=key[0], year=key[1],
                            input_ids=tuple(c.input_id for c in curves),
                            indices=indices, metric=metric)


def rank_inputs(tables: list[SensitivityTable]) -> InputRanking:
    """Average indices across (output, year) tables; sort descending.

    Ties keep the declaration order of the first table (stable sort).
    """
    if not tables:
        raise SensitivityError("need at least one table")
    ids = tables[0].input_ids
    for t in tables:
        if t.input_ids != ids:
            raise SensitivityError("tables disagree on input ids or order")
    avg = np.mean([t.indices for t in tables], axis=0)
    order = np.argsort(-avg, kind="stable")
    return InputRanking(input_ids=tuple(ids[i] for i in order),
                        averages=avg[order])


def sweep_all(model: GpModel, space: ParameterSpace,
              baseline: np.ndarray | None = None, m: int = 21,
              metric: str = METRIC_RANGE) -> SensitivityTable:
    """Sweep every input of the space against one model."""
    curves = [oaat_sweep(model, space, d.id, baseline=baseline, m=m)
              for d in space.inputs]
    return relative_sensitivity(curves, metric=metric)


def excluded_inputs(tables: list[SensitivityTable], space: ParameterSpace,
                    threshold: float = 0.001) -> list[str]:
    """Policy inputs whose post-normalization index stays under the threshold
    in every table."""
    ids = tables[0].input_ids
    stacked = np.vstack([t.indices for t in tables])
    out = []
    for j, input_id in enumerate(ids):
        if space.input_def(input_id).kind != KIND_POLICY:
            continue
        if np.all(stacked[:, j] < threshold):
            out.append(input_id)
    return out


def sensitivity_to_csv(tables: list[SensitivityTable], path: str | Path,
                       space: ParameterSpace | None = None,
                       threshold: float = 0.001) -> None:
    """Input x (output@year) grid of indices; excluded inputs are dropped."""
    if not tables:
        raise SensitivityError("need at least one table")
    ids = list(tables[0].input_ids)
    drop = set(excluded_inputs(tables, space, threshold)) if space else set()
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["input"] + [f"{t.output_name}@{t.year}" for t in tables])
        for j, input_id in enumerate(ids):
            if input_id in drop:
                continue
            writer.writerow([input_id] + [f"{t.indices[j]:.12g}" for t in tables])


def ranking_to_json(ranking: InputRanking, tables: list[SensitivityTable],
                    space: ParameterSpace | None = None,
                    threshold: float = 0.001) -> dict:
    record = {
        "ranking": [
            {"input": input_id, "average_index": float(avg)}
            for input_id, avg in zip(ranking.input_ids, ranking.averages)
        ],
        "tables": [
            {
                "output_name": t.output_name,
                "year": t.year,
                "metric": t.metric,
                "indices": {i: float(v) for i, v in zip(t.input_ids, t.indices)},
            }
            for t in tables
        ],
        "exclusion_threshold": threshold,
    }
    if space is not None:
        record["excluded"] = excluded_inputs(tables, space, threshold)
    return record


def save_ranking(ranking: InputRanking, tables: list[SensitivityTable],
                 path: str | Path, space: ParameterSpace | None = None,
                 threshold: float = 0.001) -> None:
    payload = ranking_to_json(ranking, tables, space, threshold)
    Path(path).write_text(json.dumps(payload, indent=2), encoding="utf-8")
