"""File formats. Everything round-trips byte-identically: floats are
written with 17 significant digits (exact for IEEE doubles), rows are
ordered deterministically, and JSON is dumped with sorted keys.
"""

import csv
import json
import os

import numpy as np

from .embedding import Embedding
from .errors import ConfigError, FileFormatError
from .experiments import TrialRecord
from .linalg import SIGN_CONVENTION, EigenPairs
from .model import AdjacencyMatrix, EdgeVector, LatentDistribution

EDGE_HEADER = "oos-ase graph n="


def fmt(x):
    """Canonical decimal form of a float: 17 significant digits."""
    return format(float(x), ".17g")


# ---------------------------------------------------------------- graphs

def write_edge_list(adj, path):
    with open(path, "w") as fh:
        fh.write(f"{EDGE_HEADER}{adj.n}\n")
        for i, j in adj.edges():
            fh.write(f"{i} {j}\n")


def read_edge_list(path):
    with open(path) as fh:
        header = fh.readline().rstrip("\n")
        if not header.startswith(EDGE_HEADER):
            raise FileFormatError(f"{path}: missing graph header")
        try:
            n = int(header[len(EDGE_HEADER):])
        except ValueError:
            raise FileFormatError(f"{path}: bad order in header {header!r}")
        dense_bits = np.zeros(n * (n - 1) // 2, dtype=np.uint8)
        for lineno, line in enumerate(fh, start=2):
            parts = line.split()
            if not parts:
                continue
            try:
                i, j = int(parts[0]), int(parts[1])
            except (ValueError, IndexError):
                raise FileFormatError(f"{path}:{lineno}: bad edge line {line!r}")
            if not 0 <= i < j < n:
                raise FileFormatError(
                    f"{path}:{lineno}: edge ({i},{j}) out of range for n={n}"
                )
            dense_bits[i * n - i * (i + 1) // 2 + (j - i - 1)] = 1
    return AdjacencyMatrix(n, dense_bits)


# --------------------------------------------------------------- matrices

def write_matrix_csv(m, path):
    m = np.atleast_2d(np.asarray(m, dtype=float))
    with open(path, "w") as fh:
        for row in m:
            fh.write(",".join(fmt(v) for v in row) + "\n")


def read_matrix_csv(path):
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rows.append([float(v) for v in line.split(",")])
            except ValueError:
                raise FileFormatError(f"{path}:{lineno}: bad numeric row")
    if not rows or any(len(r) != len(rows[0]) for r in rows):
        raise FileFormatError(f"{path}: empty or ragged matrix")
    return np.asarray(rows)


def write_edge_vector(e, path):
    bits = e.a if isinstance(e, EdgeVector) else np.asarray(e)
    with open(path, "w") as fh:
        for b in bits:
            fh.write(f"{int(b)}\n")


def read_edge_vector(path):
    bits = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if line not in ("0", "1"):
                raise FileFormatError(f"{path}:{lineno}: edge bits must be 0 or 1")
            bits.append(int(line))
    return EdgeVector(a=np.asarray(bits, dtype=np.uint8))


# -------------------------------------------------------------- embeddings

def write_embedding(emb, csv_path, sidecar_path):
    write_matrix_csv(emb.positions, csv_path)
    sidecar = {
        "d": emb.d,
        "eigenvalues": [float(v) for v in emb.eig.values],
        "sign_convention": SIGN_CONVENTION,
    }
    with open(sidecar_path, "w") as fh:
        json.dump(sidecar, fh, sort_keys=True, indent=2)
        fh.write("\n")


def read_embedding(csv_path, sidecar_path):
    positions = read_matrix_csv(csv_path)
    try:
        with open(sidecar_path) as fh:
            sidecar = json.load(fh)
        values = np.asarray(sidecar["eigenvalues"], dtype=float)
        d = int(sidecar["d"])
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise FileFormatError(f"{sidecar_path}: bad embedding sidecar ({exc})")
    if positions.shape[1] != d or values.shape[0] != d:
        raise FileFormatError(f"{sidecar_path}: dimension mismatch with positions")
    if np.any(values <= 0):
        raise FileFormatError(f"{sidecar_path}: eigenvalues must be positive")
    vectors = positions / np.sqrt(values)
    eig = EigenPairs(values=values, vectors=vectors)
    return Embedding(positions=positions, eig=eig, source_order=positions.shape[0])


# ----------------------------------------------------- distribution specs

def read_distribution(path):
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})")
    if not isinstance(raw, dict) or "dimension" not in raw or "atoms" not in raw:
        raise ConfigError(f"{path}: spec needs 'dimension' and 'atoms' fields")
    atoms = []
    for k, atom in enumerate(raw["atoms"]):
        if "point" not in atom or "weight" not in atom:
            raise ConfigError(f"{path}: atom {k} needs 'point' and 'weight'")
        atoms.append((atom["point"], atom["weight"]))
    return LatentDistribution(raw["dimension"], atoms)


def write_distribution(dist, path):
    spec = {
        "dimension": dist.dimension,
        "atoms": [
            {"point": [float(v) for v in p], "weight": float(w)}
            for p, w in zip(dist.points, dist.weights)
        ],
    }
    with open(path, "w") as fh:
        json.dump(spec, fh, sort_keys=True, indent=2)
        fh.write("\n")


# -------------------------------------------------------------- estimates

def estimate_json(est):
    doc = {
        "method": est.method,
        "w": [float(v) for v in est.w],
        "diagnostics": {
            "iterations": est.iterations,
            "grad_norm": est.grad_norm,
            "active_constraints": est.active_constraints,
        },
    }
    if est.objective is not None:
        doc["diagnostics"]["objective"] = est.objective
    return json.dumps(doc, sort_keys=True, indent=2)


# ----------------------------------------------------------- study output

def _vec_fields(prefix, vec, d):
    if vec is None:
        return [""] * d
    return [fmt(v) for v in np.asarray(vec).ravel()[:d]]


def write_trials_csv(records, d, path):
    """TrialRecords to CSV. Wall time is deliberately not persisted so that
    reruns with different worker counts stay byte-identical."""
    header = (
        ["trial", "n", "method", "status", "aligned_error"]
        + [f"wbar_{j}" for j in range(d)]
        + [f"w_{j}" for j in range(d)]
        + [f"rot_{i}{j}" for i in range(d) for j in range(d)]
        + ["message"]
    )
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for r in records:
            row = [
                r.trial,
                r.n,
                r.method,
                r.status,
                fmt(r.aligned_error) if r.aligned_error is not None else "",
            ]
            row += _vec_fields("wbar", r.wbar, d)
            row += _vec_fields("w", r.w, d)
            row += _vec_fields("rot", r.rotation, d * d)
            row.append(r.message)
            writer.writerow(row)


def read_trials_csv(path, d):
    records = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[0] != "trial":
            raise FileFormatError(f"{path}: missing trials header")
        for row in reader:
            trial, n, method, status, err = row[:5]
            off = 5
            wbar = row[off:off + d]
            w = row[off + d:off + 2 * d]
            rot = row[off + 2 * d:off + 2 * d + d * d]
            message = row[off + 2 * d + d * d]
            ok = status == "ok"
            records.append(TrialRecord(
                trial=int(trial),
                n=int(n),
                method=method,
                status=status,
                wbar=np.asarray([float(v) for v in wbar]) if ok else None,
                w=np.asarray([float(v) for v in w]) if ok else None,
                rotation=np.asarray([float(v) for v in rot]).reshape(d, d)
                if ok else None,
                aligned_error=float(err) if err else None,
                message=message,
            ))
    return records


def write_summary_json(summary, path):
    with open(path, "w") as fh:
        json.dump(summary, fh, sort_keys=True, indent=2)
        fh.write("\n")


def write_plotdata_csv(header, rows, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) if isinstance(v, float) else v for v in row])


def write_study(result, outdir):
    """Persist a StudyResult: trials.csv, summary.json, plotdata/*.csv."""
    os.makedirs(outdir, exist_ok=True)
    d = result.config.d if result.config.d is not None else 1
    if result.records:
        write_trials_csv(result.records, d, os.path.join(outdir, "trials.csv"))
    write_summary_json(result.summary, os.path.join(outdir, "summary.json"))
    plotdir = os.path.join(outdir, "plotdata")
    os.makedirs(plotdir, exist_ok=True)
    for name in sorted(result.plotdata):
        header, rows = result.plotdata[name]
        write_plotdata_csv(header, rows, os.path.join(plotdir, f"{name}.csv"))
