"""Aggregates and serialisation helpers shared by the command line and tests."""

from __future__ import annotations

import math

import numpy as np

from .sqrs import Schedule


def summarize(values) -> dict:
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return {"count": 0}
    q = np.percentile(v, [5, 50, 95])
    return {
        "count": int(v.size),
        "mean": float(v.mean()),
        "std": float(v.std(ddof=1)) if v.size > 1 else 0.0,
        "min": float(v.min()),
        "p05": float(q[0]),
        "median": float(q[1]),
        "p95": float(q[2]),
        "max": float(v.max()),
    }


def binomial_se(p: float, n: int) -> float:
    return math.sqrt(max(p * (1 - p), 0.0) / n) if n > 0 else math.inf


def level_statistics(level_lists) -> dict:
    """Visits and failures per amplification level across many runs."""
    visits: dict[int, int] = {}
    fails: dict[int, int] = {}
    T: dict[int, int] = {}
    for levels in level_lists:
        for level, t_max, _t, failed in levels:
            visits[level] = visits.get(level, 0) + 1
            fails[level] = fails.get(level, 0) + int(failed)
            T[level] = t_max
    return {l: {"visits": visits[l], "failures": fails[l], "T": T[l]} for l in sorted(visits)}


def constants(schedule: Schedule = Schedule()) -> dict:
    return {"c": schedule.c, "delta": schedule.delta, "r": schedule.r, "max_level": schedule.max_level}


def jsonable(obj):
    """Convert numpy scalars and arrays (including complex) into plain JSON values."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else ("inf" if x > 0 else "-inf" if x < 0 else "nan")
    return obj
