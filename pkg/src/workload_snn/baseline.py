"""Stratified splitting shared by every model, and the L2 logistic-regression baseline."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DegenerateLabelsError, InvalidSpecError, StratificationError
from .features import fit_scaler

DEFAULT_LAMBDAS = (0.01, 0.1, 1.0, 10.0)
DEFAULT_TOL = 1e-6
DEFAULT_MAX_ITER = 10_000


@dataclass(frozen=True)
class FoldPlan:
    folds: tuple  # of (train_idx, val_idx)
    seed: int

    def __iter__(self):
        return iter(self.folds)

    def __len__(self):
        return len(self.folds)


def stratified_kfold(labels, k: int = 5, seed: int = 0) -> FoldPlan:
    """Deal each class's shuffled members round-robin over ``k`` folds.

    The starting fold rotates between classes so fold sizes differ by at most
    one overall as well as per class.
    """
    y = np.asarray(labels)
    if k < 2:
        raise InvalidSpecError(f"k must be at least 2, got {k}")
    classes, counts = np.unique(y, return_counts=True)
    small = classes[counts < k]
    if small.size:
        raise StratificationError(
            f"class(es) {small.tolist()} have fewer than k={k} members ({counts[counts < k].tolist()})"
        )
    rng = np.random.default_rng(seed)
    assignment = np.empty(y.size, dtype=int)
    offset = 0
    for cls in classes:
        members = rng.permutation(np.flatnonzero(y == cls))
        assignment[members] = (offset + np.arange(members.size)) % k
        offset = (offset + members.size) % k
    everything = np.arange(y.size)
    folds = tuple(
        (everything[assignment != f], everything[assignment == f]) for f in range(k)
    )
    return FoldPlan(folds, seed)


def stratified_split(labels, test_frac: float = 0.2, seed: int = 0):
    """Per-class hold-out of ``round(n_class * test_frac)`` members; returns (train, test) indices."""
    y = np.asarray(labels)
    classes = np.unique(y)
    if classes.size < 2:
        raise DegenerateLabelsError("stratified split needs both classes present")
    if not 0 < test_frac < 1:
        raise InvalidSpecError(f"test fraction must lie in (0, 1), got {test_frac}")
    rng = np.random.default_rng(seed)
    test = []
    for cls in classes:
        members = rng.permutation(np.flatnonzero(y == cls))
        n_test = int(np.floor(members.size * test_frac + 0.5))
        test.extend(members[:n_test].tolist())
    test = np.sort(np.asarray(test, dtype=int))
    train = np.setdiff1d(np.arange(y.size), test)
    return train, test


def stratified_group_split(labels, groups, test_frac: float = 0.2, seed: int = 0):
    """Hold out whole groups (e.g. tasks): ``round(n_groups_c * test_frac)``, at least one, per class.

    Every group must carry a single label. Returns (train, test) indices.
    """
    y = np.asarray(labels)
    g = np.asarray(groups)
    if not 0 < test_frac < 1:
        raise InvalidSpecError(f"test fraction must lie in (0, 1), got {test_frac}")
    classes = np.unique(y)
    if classes.size < 2:
        raise DegenerateLabelsError("stratified split needs both classes present")
    rng = np.random.default_rng(seed)
    test_groups = []
    for cls in classes:
        names = list(dict.fromkeys(g[y == cls].tolist()))
        mixed = [n for n in names if np.unique(y[g == n]).size > 1]
        if mixed:
            raise StratificationError(f"groups {mixed} contain both labels")
        if len(names) < 2:
            raise StratificationError(f"class {cls} has {len(names)} group(s); need two to hold one out")
        n_test = min(len(names) - 1, max(1, int(np.floor(len(names) * test_frac + 0.5))))
        test_groups += [names[i] for i in rng.permutation(len(names))[:n_test]]
    test_mask = np.isin(g, test_groups)
    return np.flatnonzero(~test_mask), np.flatnonzero(test_mask)


# --------------------------------------------------------------------------- logistic regression


@dataclass
class LrModel:
    weights: np.ndarray
    bias: float
    lam: float
    converged: bool = True
    n_iter: int = 0
    loss_history: list = field(default_factory=list, repr=False)

    def decision_function(self, X) -> np.ndarray:
        return np.asarray(X, dtype=float) @ self.weights + self.bias

    def predict_proba(self, X) -> np.ndarray:
        return _sigmoid(self.decision_function(X))

    def predict(self, X) -> np.ndarray:
        return (self.decision_function(X) > 0).astype(int)

    def to_dict(self) -> dict:
        return {
            "weights": self.weights.tolist(),
            "bias": self.bias,
            "lambda": self.lam,
            "converged": self.converged,
            "n_iter": self.n_iter,
        }

    @classmethod
    def from_dict(cls, doc) -> "LrModel":
        return cls(np.asarray(doc["weights"], dtype=float), float(doc["bias"]), float(doc["lambda"]),
                   bool(doc.get("converged", True)), int(doc.get("n_iter", 0)))


def _sigmoid(z):
    return np.exp(-np.logaddexp(0.0, -z))


def lr_objective(w, b, X, y, lam):
    """Mean logistic loss plus ``lam/2 * ||w||^2`` (bias unpenalised), and its gradient."""
    z = X @ w + b
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z) + 0.5 * lam * (w @ w))
    r = (_sigmoid(z) - y) / y.size
    return loss, X.T @ r + lam * w, float(r.sum())


def train_lr(X, y, lam: float = 1.0, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> LrModel:
    """Gradient descent with Armijo backtracking until the gradient norm drops below ``tol``.

    Steps are diagonally preconditioned by a bound on each coordinate's
    curvature (``mean(x_j^2)/4 + lam``), so a large penalty on the weights
    does not slow down the unpenalised bias.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if lam < 0:
        raise InvalidSpecError("lambda must be non-negative")
    w = np.zeros(X.shape[1])
    b = 0.0
    pw = 1.0 / (0.25 * np.mean(X * X, axis=0) + lam + 1e-12)
    pb = 4.0
    loss, gw, gb = lr_objective(w, b, X, y, lam)
    history = [loss]
    step = 1.0
    converged = False
    for _ in range(max_iter):
        if np.sqrt(float(gw @ gw + gb * gb)) < tol:
            converged = True
            break
        dw, db = pw * gw, pb * gb
        decrease = float(gw @ dw + gb * db)
        step = min(step * 2.0, 1e6)
        while True:
            w_new, b_new = w - step * dw, b - step * db
            new_loss, ngw, ngb = lr_objective(w_new, b_new, X, y, lam)
            if new_loss <= loss - 0.5 * step * decrease or step < 1e-14:
                break
            step *= 0.5
        if new_loss > loss:
            # backtracking bottomed out without progress
            break
        w, b, loss, gw, gb = w_new, b_new, new_loss, ngw, ngb
        history.append(loss)
    else:
        converged = float(np.sqrt(gw @ gw + gb * gb)) < tol
    if not converged:
        warnings.warn(f"logistic regression did not converge in {max_iter} iterations", stacklevel=2)
    return LrModel(w, b, float(lam), converged, len(history) - 1, history)


# --------------------------------------------------------------------------- cross-validation


def cross_validate(X, y, plan: FoldPlan, fit_predict: Callable) -> list[float]:
    """Validation accuracy per fold; features are standardised with training-fold statistics only.

    ``fit_predict(X_train, y_train, X_val, y_val, fold_index)`` returns predicted labels for ``X_val``.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    accs = []
    for f, (tr, va) in enumerate(plan):
        scaler = fit_scaler(X[tr], on_degenerate="unit")
        pred = fit_predict(scaler.transform(X[tr]), y[tr], scaler.transform(X[va]), y[va], f)
        accs.append(float(np.mean(np.asarray(pred) == y[va])))
    return accs


@dataclass
class GridReport:
    entries: list  # dicts: {"params": ..., "fold_accuracies": [...], "mean_val_accuracy": ...}
    best: dict

    def to_dict(self):
        return {"entries": self.entries, "best": self.best}


def grid_search_lr(X, y, lambdas: Sequence[float] = DEFAULT_LAMBDAS, k: int = 5, seed: int = 0,
                   tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER):
    """Pick the L2 strength with the best mean validation accuracy; ties go to the larger lambda."""
    plan = stratified_kfold(y, k, seed)
    entries = []
    for lam in lambdas:
        def fit_predict(Xt, yt, Xv, yv, f, lam=lam):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                return train_lr(Xt, yt, lam, tol, max_iter).predict(Xv)

        accs = cross_validate(X, y, plan, fit_predict)
        entries.append({"params": {"lambda": float(lam)}, "fold_accuracies": accs,
                        "mean_val_accuracy": float(np.mean(accs))})
    best = min(entries, key=lambda e: (-e["mean_val_accuracy"], -e["params"]["lambda"]))
    return best["params"]["lambda"], GridReport(entries, best)
