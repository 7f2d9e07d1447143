"""Joint subspace / classifier estimation.

The model couples a row-orthonormal projection of the block-stacked features
with a linear map to one-hot targets, plus a graph-alignment penalty. The
outer loop is block coordinate descent; the orthogonally-constrained
projection subproblem is solved by ADMM with an SVD projection step.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, svd

from .data import PairedDataset, StackedSystem, stack_system
from .errors import NumericalError, ValidationError
from .graph import JointGraph, laplacian, lda_like_adjacency


@dataclass(frozen=True)
class Hyperparams:
    alpha: float = 0.01
    beta: float = 0.01
    dim: int = 30
    outer_max_iter: int = 50
    outer_tol: float = 1e-4
    inner_max_iter: int = 500
    inner_tol: float = 1e-6
    mu0: float = 1e-3
    mu_max: float = 1e6
    rho: float = 1.5

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0:
            raise ValidationError("alpha and beta must be nonnegative")
        if self.dim < 1:
            raise ValidationError("dim must be positive")
        if self.outer_tol <= 0 or self.inner_tol <= 0:
            raise ValidationError("tolerances must be positive")
        if self.rho <= 1:
            raise ValidationError("rho must exceed 1")
        if not (0 < self.mu0 <= self.mu_max):
            raise ValidationError("need 0 < mu0 <= mu_max")


@dataclass(frozen=True)
class ObjectiveBreakdown:
    fidelity: float
    p_reg: float
    align: float

    @property
    def total(self):
        return self.fidelity + self.p_reg + self.align


@dataclass
class AdmmState:
    theta: np.ndarray
    j: np.ndarray
    g: np.ndarray
    lambda1: np.ndarray
    lambda2: np.ndarray
    mu: float
    iter: int = 0


@dataclass(frozen=True)
class AdmmResult:
    theta: np.ndarray
    converged: bool
    iterations: int
    primal_residual_j: float
    primal_residual_g: float


@dataclass(frozen=True)
class CoSpaceModel:
    theta: np.ndarray
    p: np.ndarray
    d_m: int
    d_h: int
    num_classes: int
    hyper: Hyperparams
    objective_trace: tuple
    converged: bool
    ref_embeddings: np.ndarray | None = None
    ref_labels: np.ndarray | None = None
    ref_modalities: np.ndarray | None = None

    @property
    def theta_m(self):
        return self.theta[:, : self.d_m]

    @property
    def theta_h(self):
        return self.theta[:, self.d_m :]

    @property
    def dim(self):
        return self.theta.shape[0]


def objective(sys: StackedSystem, graph: JointGraph, p, theta, hyper) -> ObjectiveBreakdown:
    """Evaluate the data-fit, ridge, and alignment terms (no constraint penalty)."""
    q = theta @ sys.xtilde
    if p.shape != (sys.ytilde.shape[0], theta.shape[0]):
        raise ValidationError(
            f"p has shape {p.shape}, expected "
            f"{(sys.ytilde.shape[0], theta.shape[0])}"
        )
    if graph.num_nodes != sys.xtilde.shape[1]:
        raise ValidationError("graph size does not match the stacked sample count")
    resid = sys.ytilde - p @ q
    fidelity = 0.5 * float(np.sum(resid**2))
    p_reg = 0.5 * hyper.alpha * float(np.sum(p**2))
    align = 0.5 * hyper.beta * float(np.trace(q @ graph.lap @ q.T))
    return ObjectiveBreakdown(fidelity=fidelity, p_reg=p_reg, align=align)


def update_p(ytilde, q, alpha):
    """Ridge solution P = (Y Q^T)(Q Q^T + alpha I)^-1."""
    if alpha < 0:
        raise ValidationError("alpha must be nonnegative")
    gram = q @ q.T
    if alpha == 0:
        eigs = np.linalg.eigvalsh(gram)
        if eigs[0] <= 1e-12 * max(eigs[-1], 1.0):
            raise NumericalError(
                "Q Q^T is singular with alpha=0; use alpha > 0 to regularize"
            )
    system = gram + alpha * np.eye(gram.shape[0])
    try:
        factor = cho_factor(system)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - guarded above
        raise NumericalError(f"normal equations not positive definite: {exc}") from exc
    return cho_solve(factor, (ytilde @ q.T).T).T


def admm_update_j(p, ytilde, theta_x, lambda1, mu):
    """Closed form for the data-fit split variable."""
    if mu <= 0:
        raise ValidationError("mu must be positive")
    system = p.T @ p + mu * np.eye(p.shape[1])
    factor = cho_factor(system)
    return cho_solve(factor, p.T @ ytilde + mu * theta_x - lambda1)


def admm_update_theta(j, g, lambda1, lambda2, xtilde, lap, beta, mu,
                      xxt=None, xlxt=None):
    """Closed form for the unconstrained projection iterate.

    xxt / xlxt allow reuse of X X^T and X L X^T across inner iterations.
    """
    if mu <= 0:
        raise ValidationError("mu must be positive")
    if xxt is None:
        xxt = xtilde @ xtilde.T
    if xlxt is None:
        xlxt = xtilde @ lap @ xtilde.T
    rhs = mu * (j @ xtilde.T) + lambda1 @ xtilde.T + mu * g + lambda2
    system = mu * xxt + mu * np.eye(xxt.shape[0]) + beta * xlxt
    if not np.all(np.isfinite(system)) or not np.all(np.isfinite(rhs)):
        raise NumericalError("non-finite values in the projection update")
    factor = cho_factor(system)
    return cho_solve(factor, rhs.T).T


def admm_update_g(theta, lambda2, mu):
    """Project theta - lambda2/mu onto row-orthonormal matrices (thin SVD)."""
    if mu <= 0:
        raise ValidationError("mu must be positive")
    m = theta - lambda2 / mu
    if not np.all(np.isfinite(m)):
        raise NumericalError("non-finite values entering the SVD projection")
    u, s, vt = svd(m, full_matrices=False)
    if s[-1] <= 1e-13 * max(s[0], 1.0):
        raise NumericalError(
            "rank-deficient input to the orthogonality projection; "
            "solution would be non-unique"
        )
    return u @ vt


def admm_update_duals(state: AdmmState, xtilde, rho, mu_max) -> AdmmState:
    """Gradient-ascent dual step followed by the penalty schedule."""
    lambda1 = state.lambda1 + state.mu * (state.j - state.theta @ xtilde)
    lambda2 = state.lambda2 + state.mu * (state.g - state.theta)
    mu = min(rho * state.mu, mu_max)
    return AdmmState(
        theta=state.theta,
        j=state.j,
        g=state.g,
        lambda1=lambda1,
        lambda2=lambda2,
        mu=mu,
        iter=state.iter + 1,
    )


def augmented_lagrangian(state: AdmmState, p, ytilde, xtilde, lap, beta):
    """Penalty-augmented objective of the split problem at the current state."""
    q = state.theta @ xtilde
    rj = state.j - q
    rg = state.g - state.theta
    value = 0.5 * float(np.sum((ytilde - p @ state.j) ** 2))
    value += 0.5 * beta * float(np.trace(q @ lap @ q.T))
    value += float(np.sum(state.lambda1 * rj)) + float(np.sum(state.lambda2 * rg))
    value += 0.5 * state.mu * (float(np.sum(rj**2)) + float(np.sum(rg**2)))
    return value


def solve_theta_admm(p, sys: StackedSystem, graph: JointGraph, hyper: Hyperparams,
                     warm_start=None, trace=None) -> AdmmResult:
    """Inner ADMM loop; returns the feasible (exactly row-orthonormal) iterate.

    When `trace` is a list, the augmented-Lagrangian value after each primal
    sweep is appended to it.
    """
    xtilde, ytilde = sys.xtilde, sys.ytilde
    d_total = xtilde.shape[0]
    dim = hyper.dim
    if warm_start is not None:
        theta = np.asarray(warm_start, dtype=float)
        if theta.shape != (dim, d_total):
            raise ValidationError("warm start has the wrong shape")
    else:
        theta = _pca_rows(xtilde, dim)
    xxt = xtilde @ xtilde.T
    xlxt = xtilde @ graph.lap @ xtilde.T
    state = AdmmState(
        theta=theta,
        j=np.zeros((dim, xtilde.shape[1])),
        g=np.zeros((dim, d_total)),
        lambda1=np.zeros((dim, xtilde.shape[1])),
        lambda2=np.zeros((dim, d_total)),
        mu=hyper.mu0,
    )
    best = None
    for _ in range(hyper.inner_max_iter):
        state.j = admm_update_j(p, ytilde, state.theta @ xtilde, state.lambda1, state.mu)
        state.theta = admm_update_theta(
            state.j, state.g, state.lambda1, state.lambda2,
            xtilde, graph.lap, hyper.beta, state.mu, xxt=xxt, xlxt=xlxt,
        )
        state.g = admm_update_g(state.theta, state.lambda2, state.mu)
        if trace is not None:
            trace.append(augmented_lagrangian(state, p, ytilde, xtilde, graph.lap, hyper.beta))
        res_j = float(np.linalg.norm(state.j - state.theta @ xtilde))
        res_g = float(np.linalg.norm(state.g - state.theta))
        current = AdmmResult(
            theta=state.g,
            converged=res_j < hyper.inner_tol and res_g < hyper.inner_tol,
            iterations=state.iter + 1,
            primal_residual_j=res_j,
            primal_residual_g=res_g,
        )
        if best is None or (max(res_j, res_g)
                            < max(best.primal_residual_j, best.primal_residual_g)):
            best = current
        if current.converged:
            break
        state = admm_update_duals(state, xtilde, hyper.rho, hyper.mu_max)
    return best


def _pca_rows(xtilde, dim):
    """Top-`dim` left singular directions of the stacked data, as rows."""
    # the full left basis is only needed when dim exceeds the economy width
    full = dim > min(xtilde.shape)
    u, _, _ = svd(xtilde, full_matrices=full)
    return u[:, :dim].T


def fit(ds: PairedDataset, hyper: Hyperparams, store_refs=True) -> CoSpaceModel:
    """Alternate the ridge map update and the ADMM projection solve.

    Stops when the relative objective change drops below `outer_tol`. The
    reported projection is always the feasible SVD-projected iterate, so a
    candidate that fails to decrease the objective is rejected (descent guard).
    """
    if ds.num_classes < 2:
        raise ValidationError("training data must contain at least 2 classes")
    sys = stack_system(ds)
    d_total = sys.d_m + sys.d_h
    if hyper.dim > d_total:
        raise ValidationError(
            f"dim={hyper.dim} exceeds d_M+d_H={d_total}; row-orthonormality "
            "is infeasible"
        )
    stacked_labels = np.concatenate([ds.labels, ds.labels])
    graph = laplacian(lda_like_adjacency(stacked_labels))

    theta = _pca_rows(sys.xtilde, hyper.dim)
    p = update_p(sys.ytilde, theta @ sys.xtilde, hyper.alpha)
    energy = objective(sys, graph, p, theta, hyper).total
    trace = [energy]
    converged = False
    for _ in range(hyper.outer_max_iter):
        p = update_p(sys.ytilde, theta @ sys.xtilde, hyper.alpha)
        inner = solve_theta_admm(p, sys, graph, hyper, warm_start=theta)
        candidate = inner.theta
        cand_energy = objective(sys, graph, p, candidate, hyper).total
        if cand_energy <= trace[-1]:
            theta = candidate
            energy = cand_energy
        else:
            # keep the previous feasible projection; the exact map update
            # alone cannot increase the objective
            energy = objective(sys, graph, p, theta, hyper).total
        prev = trace[-1]
        trace.append(energy)
        if prev <= 1e-15 or abs(energy - prev) / prev < hyper.outer_tol:
            converged = True
            break

    refs = None
    if store_refs:
        q = theta @ sys.xtilde
        refs = (q, stacked_labels,
                np.array([0] * ds.num_samples + [1] * ds.num_samples))
    return CoSpaceModel(
        theta=theta,
        p=p,
        d_m=sys.d_m,
        d_h=sys.d_h,
        num_classes=ds.num_classes,
        hyper=hyper,
        objective_trace=tuple(trace),
        converged=converged,
        ref_embeddings=refs[0] if refs else None,
        ref_labels=refs[1] if refs else None,
        ref_modalities=refs[2] if refs else None,
    )


def embed_ms(model: CoSpaceModel, x):
    x = np.asarray(x, dtype=float)
    if x.shape[0] != model.d_m:
        raise ValidationError(f"expected {model.d_m} MS bands, got {x.shape[0]}")
    return model.theta_m @ x


def embed_hs(model: CoSpaceModel, x):
    x = np.asarray(x, dtype=float)
    if x.shape[0] != model.d_h:
        raise ValidationError(f"expected {model.d_h} HS bands, got {x.shape[0]}")
    return model.theta_h @ x


# ---------------------------------------------------------------------------
# JSON serialization (shared layout with the baseline projections).
# ---------------------------------------------------------------------------


def model_to_dict(model: CoSpaceModel):
    doc = {
        "method": "cospace",
        "dim": model.dim,
        "d_m": model.d_m,
        "d_h": model.d_h,
        "num_classes": model.num_classes,
        "hyper": {
            "alpha": model.hyper.alpha,
            "beta": model.hyper.beta,
            "dim": model.hyper.dim,
            "outer_max_iter": model.hyper.outer_max_iter,
            "outer_tol": model.hyper.outer_tol,
            "inner_max_iter": model.hyper.inner_max_iter,
            "inner_tol": model.hyper.inner_tol,
            "mu0": model.hyper.mu0,
            "mu_max": model.hyper.mu_max,
            "rho": model.hyper.rho,
        },
        "theta": [[float(v) for v in row] for row in model.theta],
        "p": [[float(v) for v in row] for row in model.p],
        "objective_trace": [float(v) for v in model.objective_trace],
        "converged": model.converged,
    }
    if model.ref_embeddings is not None:
        doc["refs"] = {
            "embeddings": [[float(v) for v in row] for row in model.ref_embeddings],
            "labels": [int(v) for v in model.ref_labels],
            "modalities": [int(v) for v in model.ref_modalities],
        }
    return doc


def model_from_dict(doc) -> CoSpaceModel:
    refs = doc.get("refs")
    return CoSpaceModel(
        theta=np.asarray(doc["theta"], dtype=float),
        p=np.asarray(doc["p"], dtype=float),
        d_m=int(doc["d_m"]),
        d_h=int(doc["d_h"]),
        num_classes=int(doc["num_classes"]),
        hyper=Hyperparams(**doc["hyper"]),
        objective_trace=tuple(doc["objective_trace"]),
        converged=bool(doc["converged"]),
        ref_embeddings=None if refs is None else np.asarray(refs["embeddings"], dtype=float),
        ref_labels=None if refs is None else np.asarray(refs["labels"], dtype=int),
        ref_modalities=None if refs is None else np.asarray(refs["modalities"], dtype=int),
    )


def save_model(path, model: CoSpaceModel):
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh, sort_keys=True)
    os.replace(tmp, path)


def load_model(path) -> CoSpaceModel:
    with open(path, "r", encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
