"""Comparison projections: joint PCA and LPP-style manifold alignment.

Both operate on the block-diagonal stacked system so the learned rows keep the
[ms-part, hs-part] layout expected by the classification pipeline. The
supervised and unsupervised alignment variants differ only in the graph
passed to `fit_lpp`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh

from .data import StackedSystem
from .errors import NumericalError, ValidationError
from .graph import JointGraph


@dataclass(frozen=True)
class LinearProjection:
    theta: np.ndarray
    d_m: int
    d_h: int
    method: str
    params: dict

    @property
    def theta_m(self):
        return self.theta[:, : self.d_m]

    @property
    def theta_h(self):
        return self.theta[:, self.d_m :]

    @property
    def dim(self):
        return self.theta.shape[0]


def _fix_signs(rows):
    """Make the first coordinate above round-off positive in every row."""
    rows = rows.copy()
    for i, row in enumerate(rows):
        nz = np.nonzero(np.abs(row) > 1e-12)[0]
        if nz.size and row[nz[0]] < 0:
            rows[i] = -row
    return rows


def fit_pjdr(sys: StackedSystem, d) -> LinearProjection:
    """PCA of the mean-centered stacked data; rows are top principal axes."""
    x = sys.xtilde
    n = x.shape[1]
    if n < 2:
        raise ValidationError("need at least 2 stacked samples")
    centered = x - x.mean(axis=1, keepdims=True)
    cov = centered @ centered.T / (n - 1)
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1]
    evals = evals[order]
    rank = int(np.sum(evals > 1e-12 * max(evals[0], 1.0)))
    if d > rank:
        raise ValidationError(f"d={d} exceeds the data rank {rank}")
    theta = _fix_signs(evecs[:, order[:d]].T)
    return LinearProjection(theta=theta, d_m=sys.d_m, d_h=sys.d_h,
                            method="pjdr", params={"d": d})


def fit_lpp(sys: StackedSystem, graph: JointGraph, d) -> LinearProjection:
    """Smallest-eigenvalue solutions of the pencil (X L X^T, X D X^T)."""
    x = sys.xtilde
    if graph.num_nodes != x.shape[1]:
        raise ValidationError("graph size does not match the stacked sample count")
    a = x @ graph.lap @ x.T
    b = x @ graph.d @ x.T
    a = 0.5 * (a + a.T)
    b = 0.5 * (b + b.T)
    # ridge floor keeps the pencil definite when some samples have zero degree
    floor = 1e-9 * max(np.trace(b) / b.shape[0], 1e-30)
    b = b + floor * np.eye(b.shape[0])
    if d > b.shape[0]:
        raise ValidationError(f"d={d} exceeds the available {b.shape[0]} eigenpairs")
    try:
        evals, evecs = eigh(a, b, subset_by_index=(0, d - 1))
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"generalized eigensolve failed: {exc}") from exc
    theta = _fix_signs(evecs.T)
    return LinearProjection(theta=theta, d_m=sys.d_m, d_h=sys.d_h,
                            method="lpp", params={"d": d, "eigenvalues": evals.tolist()})


def projection_to_dict(proj: LinearProjection):
    return {
        "method": proj.method,
        "dim": proj.dim,
        "d_m": proj.d_m,
        "d_h": proj.d_h,
        "params": {k: v for k, v in proj.params.items() if k != "eigenvalues"},
        "theta": [[float(v) for v in row] for row in proj.theta],
    }


def projection_from_dict(doc) -> LinearProjection:
    return LinearProjection(
        theta=np.asarray(doc["theta"], dtype=float),
        d_m=int(doc["d_m"]),
        d_h=int(doc["d_h"]),
        method=doc["method"],
        params=dict(doc.get("params", {})),
    )
