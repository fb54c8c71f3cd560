"""Metrics under the 0-d-1 regime, repeated stratified k-fold cross
validation and hyperparameter grid search."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .data import Dataset, atomic_write_text
from .kernels import KernelSpec
from .model import Model, predict
from .trainer import Hyperparams, train

__all__ = [
    "Metrics",
    "CVReport",
    "evaluate",
    "kfold_cv",
    "grid_search",
    "stratified_fold_assignment",
    "DEFAULT_C_GRID",
    "DEFAULT_GAMMA_GRID",
]

DEFAULT_C_GRID = tuple(2.0 ** k for k in range(-1, 8))
DEFAULT_GAMMA_GRID = tuple(2.0 ** k for k in range(-4, 3))


@dataclass
class Metrics:
    """Counts and derived rates of reject-option prediction on one set.

    risk is (n_wrong + d * n_rejected) / n; accuracy_unrejected is None when
    every sample was rejected (printed as NA).
    """

    n_correct: int
    n_wrong: int
    n_rejected: int
    d: float

    @property
    def n(self) -> int:
        return self.n_correct + self.n_wrong + self.n_rejected

    @property
    def risk(self) -> float:
        return (self.n_wrong + self.d * self.n_rejected) / self.n

    @property
    def rejection_rate(self) -> float:
        return self.n_rejected / self.n

    @property
    def accuracy_unrejected(self) -> float | None:
        kept = self.n_correct + self.n_wrong
        if kept == 0:
            return None
        return self.n_correct / kept


def evaluate(model: Model, dataset: Dataset, d: float) -> Metrics:
    """Exact 0-d-1 counts of the model's predictions on a dataset."""
    preds = predict(model, dataset.X)
    rejected = int(np.sum(preds == 0))
    correct = int(np.sum(preds == dataset.y))
    wrong = dataset.n - rejected - correct
    return Metrics(n_correct=correct, n_wrong=wrong, n_rejected=rejected, d=d)


def _pooled(metrics: list[Metrics], d: float) -> Metrics:
    return Metrics(
        n_correct=sum(m.n_correct for m in metrics),
        n_wrong=sum(m.n_wrong for m in metrics),
        n_rejected=sum(m.n_rejected for m in metrics),
        d=d,
    )


def stratified_fold_assignment(y: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Assign every sample to one of k test folds, stratified by class.

    Within each class the samples are shuffled and dealt round-robin,
    continuing the fold counter across classes so fold sizes stay balanced.
    """
    folds = np.empty(y.shape[0], dtype=int)
    counter = 0
    for label in np.unique(y):
        members = np.flatnonzero(y == label)
        members = members[rng.permutation(members.size)]
        for idx in members:
            folds[idx] = counter % k
            counter += 1
    return folds


@dataclass
class CVReport:
    """Repetition-level metrics of a repeated k-fold run plus aggregates.

    Aggregate mean/std are computed over the repetition means (population
    std); with a single repetition the std is 0 and flagged degenerate.
    """

    d: float
    hyper: Hyperparams
    seed: int
    k: int
    per_repetition: list[Metrics] = field(default_factory=list)

    @property
    def degenerate_std(self) -> bool:
        return len(self.per_repetition) < 2

    def _agg(self, values: list[float | None]) -> tuple[float | None, float | None]:
        defined = [v for v in values if v is not None]
        if not defined:
            return None, None
        arr = np.asarray(defined)
        return float(arr.mean()), float(arr.std())

    @property
    def risk_mean_std(self):
        return self._agg([m.risk for m in self.per_repetition])

    @property
    def rr_mean_std(self):
        return self._agg([m.rejection_rate for m in self.per_repetition])

    @property
    def acc_mean_std(self):
        return self._agg([m.accuracy_unrejected for m in self.per_repetition])

    def _gamma(self):
        return self.hyper.kernel.gamma if self.hyper.kernel.kind == "rbf" else None

    def to_rows(self) -> list[dict]:
        """Fixed-schema rows: one per repetition plus one aggregate row."""
        def fmt(v):
            return "" if v is None else repr(float(v))

        rows = []
        gamma = self._gamma()
        for m in self.per_repetition:
            acc = m.accuracy_unrejected
            rows.append(
                {
                    "d": repr(self.d),
                    "C": repr(self.hyper.C),
                    "gamma": fmt(gamma),
                    "risk_mean": fmt(m.risk),
                    "risk_std": "",
                    "rr_mean": fmt(m.rejection_rate),
                    "rr_std": "",
                    "acc_mean": "NA" if acc is None else fmt(acc),
                    "acc_std": "",
                }
            )
        rk = self.risk_mean_std
        rr = self.rr_mean_std
        ac = self.acc_mean_std
        rows.append(
            {
                "d": repr(self.d),
                "C": repr(self.hyper.C),
                "gamma": fmt(gamma),
                "risk_mean": fmt(rk[0]),
                "risk_std": fmt(rk[1]),
                "rr_mean": fmt(rr[0]),
                "rr_std": fmt(rr[1]),
                "acc_mean": fmt(ac[0]) if ac[0] is not None else "NA",
                "acc_std": fmt(ac[1]) if ac[1] is not None else "NA",
            }
        )
        return rows

    def to_csv(self, path: str) -> None:
        header = "d,C,gamma,risk_mean,risk_std,rr_mean,rr_std,acc_mean,acc_std"
        lines = [f"# seed={self.seed}", header]
        for row in self.to_rows():
            lines.append(",".join(row[col] for col in header.split(",")))
        atomic_write_text(path, "\n".join(lines) + "\n")

    def to_json(self, path: str) -> None:
        rk, rr, ac = self.risk_mean_std, self.rr_mean_std, self.acc_mean_std
        doc = {
            "d": self.d,
            "C": self.hyper.C,
            "gamma": self._gamma(),
            "kernel": self.hyper.kernel.kind,
            "k": self.k,
            "seed": self.seed,
            "repetitions": [
                {
                    "risk": m.risk,
                    "rejection_rate": m.rejection_rate,
                    "accuracy_unrejected": m.accuracy_unrejected,
                    "counts": [m.n_correct, m.n_wrong, m.n_rejected],
                }
                for m in self.per_repetition
            ],
            "aggregate": {
                "risk_mean": rk[0],
                "risk_std": rk[1],
                "rr_mean": rr[0],
                "rr_std": rr[1],
                "acc_mean": ac[0],
                "acc_std": ac[1],
                "degenerate_std": self.degenerate_std,
            },
        }
        atomic_write_text(path, json.dumps(doc, indent=2) + "\n")


def kfold_cv(
    dataset: Dataset,
    hyper: Hyperparams,
    k: int = 10,
    repetitions: int = 10,
    seed: int = 0,
) -> CVReport:
    """Repeated stratified k-fold cross validation.

    Per fold, standardization is fitted inside the training fold (by the
    trainer) and the held-out fold is scored under the 0-d-1 loss with
    d = hyper.d.  Repetition metrics pool the fold counts, so every sample
    contributes exactly once per repetition.  Deterministic given the seed.
    """
    if dataset.n < k:
        raise ValueError(f"k = {k} exceeds the {dataset.n} available samples")
    rng = np.random.default_rng(seed)
    report = CVReport(d=hyper.d, hyper=hyper, seed=seed, k=k)
    for _ in range(repetitions):
        folds = stratified_fold_assignment(dataset.y, k, rng)
        fold_metrics = []
        for fold in range(k):
            test_mask = folds == fold
            train_set = Dataset(
                X=dataset.X[~test_mask], y=dataset.y[~test_mask], name=dataset.name
            )
            if np.unique(train_set.y).size < 2:
                raise ValueError(
                    f"fold {fold}: a class is absent from the training fold"
                )
            test_set = Dataset(
                X=dataset.X[test_mask], y=dataset.y[test_mask], name=dataset.name
            )
            fitted, _ = train(train_set, hyper)
            fold_metrics.append(evaluate(fitted, test_set, hyper.d))
        report.per_repetition.append(_pooled(fold_metrics, hyper.d))
    return report


def grid_search(
    dataset: Dataset,
    d: float,
    C_values=DEFAULT_C_GRID,
    gamma_values=None,
    kernel_kind: str = "rbf",
    k: int = 10,
    repetitions: int = 10,
    seed: int = 0,
    base: Hyperparams | None = None,
) -> tuple[Hyperparams, list[CVReport]]:
    """Exhaustive CV over a hyperparameter grid.

    gamma_values is ignored for the linear kernel.  The best cell minimizes
    mean CV risk; ties prefer smaller C, then smaller gamma, then grid
    order.  Returns the winning Hyperparams and every cell's CVReport.
    """
    if kernel_kind == "linear":
        cells = [(C, None) for C in C_values]
    else:
        gammas = DEFAULT_GAMMA_GRID if gamma_values is None else gamma_values
        cells = [(C, g) for C in C_values for g in gammas]
    if not cells:
        raise ValueError("empty hyperparameter grid")

    reports = []
    scored = []
    for order, (C, gamma) in enumerate(cells):
        kernel = KernelSpec(kind=kernel_kind, gamma=gamma)
        if base is None:
            hyper = Hyperparams(C=C, d=d, kernel=kernel)
        else:
            hyper = replace(base, C=C, d=d, kernel=kernel)
        report = kfold_cv(dataset, hyper, k=k, repetitions=repetitions, seed=seed)
        reports.append(report)
        risk = report.risk_mean_std[0]
        scored.append((risk, C, -1.0 if gamma is None else gamma, order))
    best = min(scored, key=lambda t: (t[0], t[1], t[2], t[3]))
    return reports[best[3]].hyper, reports
