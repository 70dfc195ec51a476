"""Checkpoints: a JSON header and a CSV dump of metric and frame per point."""
import csv
import json
from pathlib import Path

import numpy as np


def _header(state, model, config):
    geom = state.geom
    return {
        "t": float(state.t),
        "n": int(geom.n),
        "shape": [int(s) for s in geom.shape],
        "model": model,
        "config": config,
        "columns": field_columns(geom.n, len(geom.shape)),
    }


def field_columns(n, nb):
    idx = [f"i{a}" for a in range(nb)]
    g = [f"g{i}{j}" for i in range(n) for j in range(i, n)]
    E = [f"E{i}{j}" for i in range(n) for j in range(n)]
    return idx + g + E


def field_rows(geom):
    n = geom.n
    shape = tuple(geom.shape)
    iu = np.triu_indices(n)
    g = geom.metric.reshape((-1, n, n))[:, iu[0], iu[1]]
    E = geom.frames.reshape((-1, n * n))
    for k, p in enumerate(np.ndindex(*shape) if shape else [()]):
        yield [str(i) for i in p] + [f"{v:.15e}" for v in g[k]] + [f"{v:.15e}" for v in E[k]]


def write_checkpoint(prefix, state, model, config):
    """Write ``<prefix>.json`` and ``<prefix>.csv``; returns both paths."""
    prefix = Path(prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    jpath, cpath = prefix.with_suffix(".json"), prefix.with_suffix(".csv")
    jpath.write_text(json.dumps(_header(state, model, config), sort_keys=True, indent=2) + "\n")
    with cpath.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(field_columns(state.geom.n, len(state.geom.shape)))
        w.writerows(field_rows(state.geom))
    return jpath, cpath


def read_checkpoint(prefix):
    """Header dictionary and the field table as a float array (index columns included)."""
    prefix = Path(prefix)
    header = json.loads(prefix.with_suffix(".json").read_text())
    data = np.loadtxt(prefix.with_suffix(".csv"), delimiter=",", skiprows=1, ndmin=2)
    return header, data
