"""Soft-margin SVMs trained by sequential minimal optimization.

The binary trainer solves the standard dual

    min_a  0.5 * sum_ij a_i a_j y_i y_j K(x_i, x_j) - sum_i a_i
    s.t.   0 <= a_i <= C,  sum_i y_i a_i = 0

by repeatedly picking the maximally KKT-violating pair and moving it along
the feasible equality-preserving direction with an exact line search.  Pair
selection breaks ties by lowest index, so training is order-deterministic.
Three pairwise binary machines vote to classify the three surface classes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from .errors import (
    ConvergenceError,
    DegenerateTrainingError,
    DimensionMismatchError,
    InvalidParameterError,
)

_BOUND_EPS = 1e-12


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family and soft-margin parameters.

    gamma None requests the variance heuristic 1 / (d * var(X)) resolved on
    the (standardized) training matrix at fit time; it is ignored by the
    linear kernel.
    """

    kind: str = "rbf"
    c: float = 10.0
    gamma: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("linear", "rbf"):
            raise InvalidParameterError(f"unknown kernel kind {self.kind!r}")
        if self.c <= 0:
            raise InvalidParameterError("C must be positive")
        if self.gamma is not None and self.gamma <= 0:
            raise InvalidParameterError("gamma must be positive")


def resolve_gamma(spec: KernelSpec, X: np.ndarray) -> KernelSpec:
    """Fill in the variance-heuristic gamma against a concrete training matrix."""
    if spec.kind != "rbf" or spec.gamma is not None:
        return spec
    var = float(np.var(X))
    if var < 1e-12:
        var = 1.0
    gamma = 1.0 / (X.shape[1] * var)
    return KernelSpec(kind=spec.kind, c=spec.c, gamma=gamma)


def kernel_matrix(spec: KernelSpec, A: np.ndarray, B: Optional[np.ndarray] = None) -> np.ndarray:
    """Gram matrix K[i, j] = k(A_i, B_j); B defaults to A."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = A if B is None else np.atleast_2d(np.asarray(B, dtype=float))
    if spec.kind == "linear":
        return A @ B.T
    if spec.gamma is None:
        raise InvalidParameterError("rbf kernel needs a resolved gamma")
    sq = (
        np.sum(A**2, axis=1)[:, None]
        + np.sum(B**2, axis=1)[None, :]
        - 2.0 * (A @ B.T)
    )
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-spec.gamma * sq)


@dataclass(frozen=True)
class Scaler:
    """Per-dimension standardization statistics from a training matrix."""

    mean: np.ndarray
    std: np.ndarray

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.mean.size:
            raise DimensionMismatchError(
                f"got {X.shape[1]} features, scaler was fit on {self.mean.size}"
            )
        return (X - self.mean) / self.std


def standardize_fit(X: np.ndarray) -> Scaler:
    """Population mean/std per dimension; std floored at 1e-12."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[0] < 2:
        raise ValueError("need at least 2 rows to fit a scaler")
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std = np.maximum(std, 1e-12)
    return Scaler(mean, std)


@dataclass
class SMODiagnostics:
    n_updates: int = 0
    final_violation: float = float("inf")
    dual_objective: float = 0.0
    objective_trace: Optional[List[float]] = None


@dataclass(frozen=True)
class BinarySVM:
    """Trained two-class machine: kept support vectors and signed dual weights."""

    support_vectors: np.ndarray  # (n_sv, d)
    dual_coef: np.ndarray  # (n_sv,), alpha_i * y_i
    bias: float
    kernel: KernelSpec
    diagnostics: Optional[SMODiagnostics] = None
    sv_indices: Optional[np.ndarray] = None  # rows of the training matrix kept


def _dual_objective(alpha: np.ndarray, y: np.ndarray, K: np.ndarray) -> float:
    ay = alpha * y
    return float(np.sum(alpha) - 0.5 * ay @ K @ ay)


def train_binary(
    X: np.ndarray,
    y: np.ndarray,
    kernel: KernelSpec,
    tol: float = 1e-3,
    max_passes: int = 10,
    debug: bool = False,
) -> BinarySVM:
    """Fit one soft-margin machine on labels in {-1, +1}.

    max_passes * n bounds the number of pair updates; running out raises
    ConvergenceError with the best iterate attached.  With debug=True the
    dual objective is recomputed after every accepted update and asserted
    non-decreasing (slow; for small problems and tests).
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if X.shape[0] != y.size:
        raise DimensionMismatchError("X and y row counts differ")
    if not np.all(np.isfinite(X)):
        raise InvalidParameterError("training matrix must be finite")
    if not set(np.unique(y)) <= {-1.0, 1.0}:
        raise InvalidParameterError("labels must be -1 or +1")
    if np.unique(y).size < 2:
        raise DegenerateTrainingError("training set holds a single class")

    kernel = resolve_gamma(kernel, X)
    n = y.size
    c_box = kernel.c
    K = kernel_matrix(kernel, X)
    if max_passes < 1:
        raise InvalidParameterError("max_passes must be >= 1")
    alpha = np.zeros(n)
    f_cache = np.zeros(n)  # f_i = sum_j alpha_j y_j K_ij
    budget = max_passes * n
    diag = SMODiagnostics(objective_trace=[] if debug else None)
    prev_objective = 0.0

    def _sets() -> Tuple[np.ndarray, np.ndarray]:
        up = ((y > 0) & (alpha < c_box - _BOUND_EPS)) | ((y < 0) & (alpha > _BOUND_EPS))
        low = ((y < 0) & (alpha < c_box - _BOUND_EPS)) | ((y > 0) & (alpha > _BOUND_EPS))
        return up, low

    def _finalize(violation: float) -> BinarySVM:
        errors = f_cache - y
        up, low = _sets()
        if up.any() and low.any():
            bias = -0.5 * (float(errors[up].min()) + float(errors[low].max()))
        else:
            bias = float(np.mean(y - f_cache))
        keep = alpha > _BOUND_EPS
        diag.final_violation = violation
        diag.dual_objective = _dual_objective(alpha, y, K)
        return BinarySVM(
            support_vectors=X[keep].copy(),
            dual_coef=(alpha * y)[keep].copy(),
            bias=bias,
            kernel=kernel,
            diagnostics=diag,
            sv_indices=np.flatnonzero(keep),
        )

    while True:
        up, low = _sets()
        if not up.any() or not low.any():
            return _finalize(0.0)
        errors = f_cache - y
        up_idx = np.flatnonzero(up)
        low_idx = np.flatnonzero(low)
        i = up_idx[np.argmin(errors[up_idx])]
        j = low_idx[np.argmax(errors[low_idx])]
        violation = float(errors[j] - errors[i])
        if violation <= tol:
            return _finalize(violation)
        if diag.n_updates >= budget:
            model = _finalize(violation)
            raise ConvergenceError(
                f"SMO exhausted {budget} updates with KKT violation "
                f"{violation:.3g} > tol {tol:.3g}",
                model=model,
            )

        # move alpha_i by +y_i * t and alpha_j by -y_j * t (keeps sum y.a fixed);
        # exact minimiser along the direction is violation / eta, capped by the box
        cap_i = (c_box - alpha[i]) if y[i] > 0 else alpha[i]
        cap_j = alpha[j] if y[j] > 0 else (c_box - alpha[j])
        eta = K[i, i] + K[j, j] - 2.0 * K[i, j]
        step = min(cap_i, cap_j)
        if eta > _BOUND_EPS:
            step = min(step, violation / eta)
        alpha[i] += y[i] * step
        alpha[j] -= y[j] * step
        np.clip(alpha, 0.0, c_box, out=alpha)
        f_cache += step * (K[:, i] - K[:, j])
        diag.n_updates += 1
        if debug:
            objective = _dual_objective(alpha, y, K)
            if objective < prev_objective - 1e-9:
                raise AssertionError(
                    f"dual objective decreased: {prev_objective} -> {objective}"
                )
            prev_objective = objective
            diag.objective_trace.append(objective)


def decision(model: BinarySVM, x: np.ndarray) -> Union[float, np.ndarray]:
    """Signed margin sum_i coef_i * k(sv_i, x) + bias; vectorised over rows."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    rows = np.atleast_2d(x)
    if rows.shape[1] != model.support_vectors.shape[1]:
        raise DimensionMismatchError(
            f"input has {rows.shape[1]} features, model expects "
            f"{model.support_vectors.shape[1]}"
        )
    scores = kernel_matrix(model.kernel, rows, model.support_vectors) @ model.dual_coef
    scores = scores + model.bias
    return float(scores[0]) if single else scores


@dataclass(frozen=True)
class MulticlassSVM:
    """One-vs-one ensemble with the standardization folded in."""

    class_ids: Tuple[int, ...]
    pairwise: Dict[Tuple[int, int], BinarySVM]
    scaler: Scaler
    kernel: KernelSpec


def train_multiclass(
    X: np.ndarray,
    labels: np.ndarray,
    kernel: KernelSpec,
    n_classes: int = 3,
    tol: float = 1e-3,
    max_passes: int = 10,
) -> MulticlassSVM:
    """Standardize on the full training fold, then fit every class pair.

    In each pairwise machine the lower class id takes label +1.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    labels = np.asarray(labels, dtype=int).ravel()
    class_ids = tuple(range(n_classes))
    present = set(np.unique(labels))
    missing = [c for c in class_ids if c not in present]
    if missing:
        raise DegenerateTrainingError(f"training fold is missing class(es) {missing}")
    scaler = standardize_fit(X)
    Xs = scaler.transform(X)
    kernel = resolve_gamma(kernel, Xs)
    pairwise = {}
    for a, b in combinations(class_ids, 2):
        mask = (labels == a) | (labels == b)
        y = np.where(labels[mask] == a, 1.0, -1.0)
        pairwise[(a, b)] = train_binary(
            Xs[mask], y, kernel, tol=tol, max_passes=max_passes
        )
    return MulticlassSVM(class_ids, pairwise, scaler, kernel)


def predict(model: MulticlassSVM, x: np.ndarray) -> Union[int, np.ndarray]:
    """Majority vote over the pairwise machines.

    Vote ties go to the class with the largest summed |margin| among its
    winning votes, then to the lowest class id.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    rows = model.scaler.transform(np.atleast_2d(x))
    n = rows.shape[0]
    k = len(model.class_ids)
    votes = np.zeros((n, k), dtype=int)
    margins = np.zeros((n, k), dtype=float)
    for (a, b), machine in model.pairwise.items():
        scores = np.asarray(decision(machine, rows), dtype=float).ravel()
        pick_a = scores >= 0.0
        votes[pick_a, a] += 1
        votes[~pick_a, b] += 1
        margins[pick_a, a] += np.abs(scores[pick_a])
        margins[~pick_a, b] += np.abs(scores[~pick_a])
    best = np.empty(n, dtype=np.int64)
    for r in range(n):
        top = votes[r].max()
        tied = np.flatnonzero(votes[r] == top)
        if tied.size > 1:
            tied = tied[margins[r, tied] == margins[r, tied].max()]
        best[r] = tied[0]
    return int(best[0]) if single else best


def model_to_dict(model: MulticlassSVM) -> dict:
    return {
        "class_ids": list(model.class_ids),
        "kernel": {
            "kind": model.kernel.kind,
            "C": model.kernel.c,
            "gamma": model.kernel.gamma,
        },
        "scaler": {
            "mean": model.scaler.mean.tolist(),
            "std": model.scaler.std.tolist(),
        },
        "pairwise": [
            {
                "classes": [a, b],
                "support_vectors": machine.support_vectors.tolist(),
                "dual_coef": machine.dual_coef.tolist(),
                "bias": machine.bias,
            }
            for (a, b), machine in sorted(model.pairwise.items())
        ],
    }


def model_from_dict(doc: dict) -> MulticlassSVM:
    kernel = KernelSpec(
        kind=doc["kernel"]["kind"], c=doc["kernel"]["C"], gamma=doc["kernel"]["gamma"]
    )
    scaler = Scaler(
        mean=np.array(doc["scaler"]["mean"], dtype=float),
        std=np.array(doc["scaler"]["std"], dtype=float),
    )
    pairwise = {}
    for entry in doc["pairwise"]:
        a, b = (int(v) for v in entry["classes"])
        pairwise[(a, b)] = BinarySVM(
            support_vectors=np.array(entry["support_vectors"], dtype=float),
            dual_coef=np.array(entry["dual_coef"], dtype=float),
            bias=float(entry["bias"]),
            kernel=kernel,
        )
    return MulticlassSVM(
        class_ids=tuple(int(c) for c in doc["class_ids"]),
        pairwise=pairwise,
        scaler=scaler,
        kernel=kernel,
    )


def save_model(path: Union[str, Path], model: MulticlassSVM, extra: Optional[dict] = None) -> None:
    """Persist as JSON; float round-trip is exact, so reloaded predictions match bit for bit."""
    doc = model_to_dict(model)
    if extra:
        doc.update(extra)
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True), encoding="utf-8")


def load_model(path: Union[str, Path]) -> Tuple[MulticlassSVM, dict]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return model_from_dict(doc), doc
