"""CSV/JSON serialization: graph tables, trajectories, samples, manifests.

All CSV output is comma-separated UTF-8 with mandatory headers and '.'
decimal separator; floats are written with repr so that identical inputs
produce byte-identical files.
"""

from __future__ import annotations

import csv
import hashlib
import json
import time
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError
from .graph import Edge, EdgeCovariates, SpatialGraph
from .infer.specs import PosteriorSamples

RESERVED_EDGE_COLS = ("from", "to", "distance", "downstream", "barrier")


def load_graph(nodes_path, edges_path, symmetric: bool = False) -> SpatialGraph:
    """Load a graph from node and edge tables.

    Node table columns: node_id, label, optional x, y.  Edge table columns:
    from, to, distance, downstream, barrier, plus extra named covariates.
    With ``symmetric`` each edge record expands to both directed edges.
    """
    nodes_path, edges_path = Path(nodes_path), Path(edges_path)
    with open(nodes_path, newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames is None or "node_id" not in reader.fieldnames:
            raise DataError(f"{nodes_path}: node table needs a node_id column")
        has_xy = "x" in reader.fieldnames and "y" in reader.fieldnames
        node_rows = list(reader)
    ids = [int(r["node_id"]) for r in node_rows]
    m = len(ids)
    if sorted(ids) != list(range(m)):
        raise DataError(f"{nodes_path}: node ids must be 0..{m-1} with no gaps or duplicates")
    node_rows.sort(key=lambda r: int(r["node_id"]))
    labels = tuple(r.get("label", str(r["node_id"])) for r in node_rows)
    coords = tuple((float(r["x"]), float(r["y"])) for r in node_rows) if has_xy else None

    edges = []
    with open(edges_path, newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames is None or not set(RESERVED_EDGE_COLS[:3]) <= set(reader.fieldnames):
            raise DataError(f"{edges_path}: edge table needs from,to,distance columns")
        extra_cols = [c for c in reader.fieldnames if c not in RESERVED_EDGE_COLS]
        for lineno, r in enumerate(reader, start=2):
            try:
                i, j = int(r["from"]), int(r["to"])
                dist = float(r["distance"])
                down = int(r.get("downstream", 0) or 0)
                barrier = int(r.get("barrier", 0) or 0)
                extras = tuple((c, float(r[c])) for c in extra_cols)
            except (TypeError, ValueError) as exc:
                raise DataError(f"{edges_path}:{lineno}: malformed edge record ({exc})")
            if not (0 <= i < m and 0 <= j < m):
                raise DataError(f"{edges_path}:{lineno}: edge endpoint {i}->{j} is dangling")
            if dist <= 0:
                raise DataError(f"{edges_path}:{lineno}: non-positive distance {dist}")
            cov = EdgeCovariates(dist, down, barrier, extras)
            edges.append(Edge(i, j, cov))
            if symmetric:
                edges.append(Edge(j, i, cov))
    try:
        return SpatialGraph(node_count=m, labels=labels, edges=tuple(edges), coords=coords)
    except DataError as exc:
        raise DataError(f"{edges_path}: {exc}")


def write_graph(graph: SpatialGraph, nodes_path, edges_path):
    """Write a graph back to node/edge tables (directed edges, round-trips exactly)."""
    with open(nodes_path, "w", newline="") as f:
        w = csv.writer(f)
        if graph.coords is not None:
            w.writerow(["node_id", "label", "x", "y"])
            for i in range(graph.node_count):
                x, y = graph.coords[i]
                w.writerow([i, graph.labels[i], repr(x), repr(y)])
        else:
            w.writerow(["node_id", "label"])
            for i in range(graph.node_count):
                w.writerow([i, graph.labels[i]])
    extra_names = []
    for e in graph.edges:
        for name, _ in e.cov.extras:
            if name not in extra_names:
                extra_names.append(name)
    with open(edges_path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(list(RESERVED_EDGE_COLS) + extra_names)
        for e in sorted(graph.edges, key=lambda e: (e.src, e.dst)):
            extras = dict(e.cov.extras)
            row = [e.src, e.dst, repr(e.cov.distance), e.cov.downstream, e.cov.barrier]
            row += [repr(extras[n]) for n in extra_names]
            w.writerow(row)


def write_trajectory_csv(traj, path):
    """Trajectory to CSV: columns t, node_0 .. node_{M-1} (normalized density)."""
    dens = traj.density()
    m = dens.shape[1]
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["t"] + [f"node_{i}" for i in range(m)])
        for t, row in zip(traj.times, dens):
            w.writerow([repr(float(t))] + [repr(float(v)) for v in row])


def write_field_csv(pi, path):
    """Field sample to CSV: node_id, value."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["node_id", "value"])
        for i, v in enumerate(pi):
            w.writerow([i, repr(float(v))])


def write_samples_csv(samples: PosteriorSamples, path):
    """Posterior draws to CSV, one column per parameter plus log_likelihood."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(list(samples.names) + ["log_likelihood"])
        for row, ll in zip(samples.draws, samples.loglik):
            w.writerow([repr(float(v)) for v in row] + [repr(float(ll))])


def read_samples_csv(path, metadata=None) -> PosteriorSamples:
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        data = np.array([[float(v) for v in row] for row in reader])
    if header[-1] != "log_likelihood":
        raise DataError(f"{path}: expected trailing log_likelihood column")
    if data.size == 0:
        raise DataError(f"{path}: no draws")
    return PosteriorSamples(
        tuple(header[:-1]), data[:, :-1], data[:, -1], metadata or {"source": str(path)}
    )


def write_json(obj, path):
    with open(path, "w") as f:
        json.dump(obj, f, indent=2, sort_keys=True)
        f.write("\n")


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(path, command, inputs, seed, started, outputs):
    """Run manifest: hashed inputs, seed, version, wall time, output list."""
    from . import __version__

    write_json(
        {
            "command": command,
            "inputs": {str(p): file_sha256(p) for p in inputs},
            "outputs": [str(p) for p in outputs],
            "seed": seed,
            "version": __version__,
            "wall_time_s": time.time() - started,
        },
        path,
    )


def parse_config(path, allowed_keys) -> dict:
    """Flat key=value config; '#' starts a comment, unknown keys are errors."""
    out = {}
    with open(path) as f:
        for lineno, line in enumerate(f, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, value = (s.strip() for s in line.split("=", 1))
            if key not in allowed_keys:
                raise ConfigError(
                    f"{path}:{lineno}: unknown key {key!r} "
                    f"(allowed: {', '.join(sorted(allowed_keys))})"
                )
            if key in out:
                raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
            out[key] = value
    return out
