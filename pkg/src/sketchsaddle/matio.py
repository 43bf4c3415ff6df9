"""File formats: Matrix Market matrices, plain-text vectors, instance dirs.

Matrices travel as Matrix Market files (dense array or coordinate
format, as produced).  Projections carry their provenance (distribution,
seed, sketch size) in a JSON comment line inside the header so a file
round-trips to an equivalent object.  Vectors are one value per line.
An instance directory holds the coupling matrix, a ``meta.json`` with
scalars, and the reference vectors; loading rebuilds the objects from
the files alone, never by re-running a generator.
"""

import json
import os

import numpy as np
import scipy.io
import scipy.sparse as sp

from .errors import ConfigError
from .instances import (ErmInstance, PlantedInstance, loss_derivative,
                        make_conjugate)
from .model import ConvexFn, SaddleProblem
from .sketch import ProjectionMatrix
from .util import frozen_array

_VECTOR_FMT = "%.17g"


def write_matrix(path, A, comment=""):
    """Write a dense or sparse matrix as Matrix Market with full precision."""
    scipy.io.mmwrite(path, np.asarray(A) if not sp.issparse(A) else A,
                     comment=comment, precision=17)


def read_matrix(path):
    """Read a Matrix Market file; returns dense ndarray or sparse as stored."""
    M = scipy.io.mmread(path)
    return M if sp.issparse(M) else np.asarray(M)


def read_header_comments(path):
    """The '%' comment lines following the Matrix Market banner."""
    lines = []
    with open(path) as fh:
        first = fh.readline()
        if not first.startswith("%%MatrixMarket"):
            raise ConfigError(f"{path} is not a Matrix Market file")
        for line in fh:
            if not line.startswith("%"):
                break
            lines.append(line[1:].strip())
    return lines


def write_projection(path, R):
    """Persist a projection with its provenance in the header comment."""
    meta = {"distribution": R.distribution, "m": R.m,
            "seed": list(R.seed) if isinstance(R.seed, (tuple, list)) else R.seed}
    write_matrix(path, R.entries, comment=json.dumps(meta))


def read_projection(path):
    """Rebuild a ProjectionMatrix from a file written by write_projection."""
    entries = read_matrix(path)
    meta = None
    for line in read_header_comments(path):
        try:
            candidate = json.loads(line)
        except json.JSONDecodeError:
            continue
        if isinstance(candidate, dict) and "distribution" in candidate:
            meta = candidate
            break
    if meta is None:
        raise ConfigError(f"{path} has no projection provenance comment")
    seed = meta["seed"]
    if isinstance(seed, list):
        seed = tuple(seed)
    return ProjectionMatrix(entries=np.asarray(entries),
                            distribution=meta["distribution"],
                            seed=seed, m=int(meta["m"]))


def write_vector(path, x):
    np.savetxt(path, np.asarray(x, dtype=float), fmt=_VECTOR_FMT)


def read_vector(path):
    return np.loadtxt(path, ndmin=1)


def save_instance(dirpath, instance):
    """Write an instance as a directory of portable files."""
    os.makedirs(dirpath, exist_ok=True)
    problem = instance.problem
    if isinstance(instance, PlantedInstance):
        meta = {"schema": 1, "kind": "planted", "d": problem.d, "n": problem.n,
                "alpha": problem.alpha, "beta": problem.beta,
                "s_w": instance.s_w, "s_lambda": instance.s_lambda,
                "matrix_style": instance.matrix_style,
                "scale": instance.scale, "seed": instance.seed}
        write_vector(os.path.join(dirpath, "w_star.txt"), instance.w_star)
        write_vector(os.path.join(dirpath, "lambda_star.txt"), instance.lambda_star)
        write_vector(os.path.join(dirpath, "g_center.txt"), problem.g.center)
        write_vector(os.path.join(dirpath, "h_center.txt"), problem.h.center)
    elif isinstance(instance, ErmInstance):
        meta = {"schema": 1, "kind": "erm", "d": problem.d, "n": problem.n,
                "loss": instance.loss, "reg": instance.reg,
                "margin_fraction": instance.margin_fraction,
                "seed": instance.seed}
        write_vector(os.path.join(dirpath, "w_planted.txt"), instance.w_planted)
        write_vector(os.path.join(dirpath, "labels.txt"), instance.labels)
    else:
        raise ConfigError(f"cannot serialize instance type {type(instance).__name__}")
    write_matrix(os.path.join(dirpath, "A.mtx"), problem.A,
                 comment=json.dumps({"kind": meta["kind"]}))
    with open(os.path.join(dirpath, "meta.json"), "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_instance(dirpath):
    """Rebuild a planted or linear-model instance from its directory."""
    meta_path = os.path.join(dirpath, "meta.json")
    try:
        with open(meta_path) as fh:
            meta = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read {meta_path}: {exc}") from exc
    if meta.get("schema") != 1:
        raise ConfigError("unsupported instance schema")
    A = read_matrix(os.path.join(dirpath, "A.mtx"))
    kind = meta.get("kind")
    if kind == "planted":
        a = read_vector(os.path.join(dirpath, "g_center.txt"))
        b = read_vector(os.path.join(dirpath, "h_center.txt"))
        problem = SaddleProblem(g=ConvexFn.quadratic(a, meta["alpha"]),
                                h=ConvexFn.quadratic(b, meta["beta"]),
                                A=A, bound_style=meta["matrix_style"])
        return PlantedInstance(
            problem=problem,
            w_star=read_vector(os.path.join(dirpath, "w_star.txt")),
            lambda_star=read_vector(os.path.join(dirpath, "lambda_star.txt")),
            s_w=int(meta["s_w"]), s_lambda=int(meta["s_lambda"]),
            matrix_style=meta["matrix_style"], scale=float(meta["scale"]),
            seed=int(meta["seed"]))
    if kind == "erm":
        y = read_vector(os.path.join(dirpath, "labels.txt"))
        w_planted = read_vector(os.path.join(dirpath, "w_planted.txt"))
        if sp.issparse(A):
            A = A.toarray()
        X = -A * y  # undo the column signs
        n, d = y.shape[0], X.shape[0]
        loss = meta["loss"]
        h = make_conjugate(loss, n)
        problem = SaddleProblem(
            g=ConvexFn.quadratic(np.zeros(d), meta["reg"] * n), h=h, A=A,
            domain_lambda=h.domain, bound_style="columns")
        lambda_ref = loss_derivative(loss, y * (X.T @ w_planted))
        return ErmInstance(problem=problem, features=frozen_array(X),
                           labels=frozen_array(y),
                           w_planted=frozen_array(w_planted),
                           lambda_ref=frozen_array(lambda_ref), loss=loss,
                           reg=float(meta["reg"]),
                           margin_fraction=float(meta["margin_fraction"]),
                           seed=int(meta["seed"]))
    raise ConfigError(f"unknown instance kind {kind!r}")
