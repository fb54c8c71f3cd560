"""Dataset ingestion, standardization, synthetic generators and the
mixture-posterior oracle.

All generators are pure functions of their seed: randomness comes from
numpy's PCG64 bit generator through numpy.random.Generator, so datasets are
byte-identical across runs and platforms for a fixed seed.
"""

from __future__ import annotations

import json
import logging
import os
import tempfile
import warnings
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Dataset",
    "Standardization",
    "PosteriorOracle",
    "DataFormatError",
    "load_csv",
    "load_libsvm",
    "load_feature_matrix",
    "save_csv",
    "standardize_fit",
    "standardize_apply",
    "gen_synth1",
    "gen_synth2",
    "gen_diagonal_band",
    "bayes_predict",
    "save_oracle",
    "load_oracle",
    "atomic_write_text",
]

log = logging.getLogger(__name__)


class DataFormatError(ValueError):
    """Raised for malformed dataset files; messages locate the bad cell."""


@dataclass
class Dataset:
    """Feature matrix X (N x p), labels y in {-1, +1} and a display name."""

    X: np.ndarray
    y: np.ndarray
    name: str = ""

    def __post_init__(self):
        self.X = np.atleast_2d(np.asarray(self.X, dtype=float))
        self.y = np.asarray(self.y, dtype=int).ravel()
        if self.X.shape[0] != self.y.shape[0]:
            raise ValueError(
                f"{self.X.shape[0]} rows of features but {self.y.shape[0]} labels"
            )
        if not np.all(np.isfinite(self.X)):
            raise ValueError("features contain NaN or Inf")
        if self.y.size and not np.all(np.isin(self.y, (-1, 1))):
            raise ValueError("labels must be -1 or +1")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]


@dataclass
class Standardization:
    """Per-feature z-score parameters fitted on training data."""

    mean: np.ndarray
    scale: np.ndarray


def standardize_fit(X) -> Standardization:
    """Fit per-feature mean and population standard deviation.

    Zero-variance features get scale 1 so they map to constant 0.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale = np.where(scale == 0.0, 1.0, scale)
    return Standardization(mean=mean, scale=scale)


def standardize_apply(params: Standardization, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return (X - params.mean) / params.scale


def atomic_write_text(path: str, text: str) -> None:
    """Write text to path via a temporary file in the same directory."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp_", text=True)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _parse_label(raw: str, where: str) -> int:
    try:
        value = float(raw)
    except ValueError:
        raise DataFormatError(f"unparseable label {raw!r} at {where}") from None
    if value in (-1.0, 0.0, 1.0):
        return int(value)
    raise DataFormatError(f"label {raw!r} at {where} is not in {{-1, 0, +1}}")


def _remap_binary_labels(labels: list[int], name: str) -> np.ndarray:
    y = np.asarray(labels, dtype=int)
    if y.size and set(np.unique(y)) <= {0, 1}:
        log.info("%s: labels {0, 1} remapped to {-1, +1}", name or "dataset")
        y = np.where(y == 0, -1, 1)
    if y.size and np.unique(y).size < 2:
        warnings.warn(f"{name or 'dataset'} contains a single class", stacklevel=3)
    return y


def _read_csv_rows(path: str, header: str):
    """Yield (line_number, cells) skipping blank and '#' comment lines.

    header is "auto", "yes" or "no"; with "auto" the first data line is
    treated as a header when any of its cells fails to parse as a number.
    """
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            rows.append((lineno, [c.strip() for c in text.split(",")]))
    if not rows:
        return []
    if header == "yes":
        return rows[1:]
    if header == "auto":
        def _numeric(cell):
            try:
                float(cell)
                return True
            except ValueError:
                return False

        if not all(_numeric(c) for c in rows[0][1]):
            return rows[1:]
    return rows


def load_csv(path: str, label_column: int = -1, header: str = "auto") -> Dataset:
    """Load a dense CSV dataset with one label column (default: last).

    Labels must be in {-1, +1} or {0, 1}; the latter are remapped to
    {-1, +1}.  Unparseable cells raise DataFormatError naming row and
    column.
    """
    rows = _read_csv_rows(path, header)
    features = []
    labels = []
    width = None
    for lineno, cells in rows:
        if width is None:
            width = len(cells)
            if width < 2:
                raise DataFormatError(f"line {lineno}: need at least 2 columns")
        elif len(cells) != width:
            raise DataFormatError(
                f"line {lineno}: expected {width} columns, found {len(cells)}"
            )
        col = label_column if label_column >= 0 else width + label_column
        if not 0 <= col < width:
            raise DataFormatError(f"label column {label_column} out of range for {width} columns")
        labels.append(_parse_label(cells[col], f"line {lineno}, column {col + 1}"))
        feat = []
        for j, cell in enumerate(cells):
            if j == col:
                continue
            try:
                feat.append(float(cell))
            except ValueError:
                raise DataFormatError(
                    f"unparseable value {cell!r} at line {lineno}, column {j + 1}"
                ) from None
        features.append(feat)
    if not features:
        return Dataset(X=np.empty((0, 0)), y=np.empty(0, dtype=int), name=os.path.basename(path))
    y = _remap_binary_labels(labels, os.path.basename(path))
    return Dataset(X=np.asarray(features, dtype=float), y=y, name=os.path.basename(path))


def load_feature_matrix(path: str, label_column: int | None = None, header: str = "auto") -> np.ndarray:
    """Load a CSV as a feature matrix, optionally dropping a label column."""
    rows = _read_csv_rows(path, header)
    out = []
    for lineno, cells in rows:
        if label_column is not None:
            col = label_column if label_column >= 0 else len(cells) + label_column
            cells = [c for j, c in enumerate(cells) if j != col]
        try:
            out.append([float(c) for c in cells])
        except ValueError:
            raise DataFormatError(f"unparseable value at line {lineno}") from None
    return np.asarray(out, dtype=float) if out else np.empty((0, 0))


def load_libsvm(path: str) -> Dataset:
    """Load a sparse `label idx:value ...` file into a dense Dataset.

    Feature indices are 1-based; p is the maximum index seen.
    """
    entries = []
    labels = []
    max_index = 0
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            parts = text.split()
            labels.append(_parse_label(parts[0], f"line {lineno}"))
            row = {}
            for token in parts[1:]:
                try:
                    idx_txt, val_txt = token.split(":", 1)
                    idx = int(idx_txt)
                    val = float(val_txt)
                except ValueError:
                    raise DataFormatError(
                        f"malformed feature token {token!r} at line {lineno}"
                    ) from None
                if idx < 1:
                    raise DataFormatError(
                        f"feature index {idx} at line {lineno}: indices are 1-based"
                    )
                row[idx - 1] = val
                max_index = max(max_index, idx)
            entries.append(row)
    if not entries:
        return Dataset(X=np.empty((0, 0)), y=np.empty(0, dtype=int), name=os.path.basename(path))
    X = np.zeros((len(entries), max_index))
    for i, row in enumerate(entries):
        for j, val in row.items():
            X[i, j] = val
    y = _remap_binary_labels(labels, os.path.basename(path))
    return Dataset(X=X, y=y, name=os.path.basename(path))


def save_csv(dataset: Dataset, path: str, comment: str | None = None) -> None:
    """Write a dataset as CSV with feature columns first and label last."""
    lines = []
    if comment:
        lines.append(f"# {comment}")
    lines.append(",".join([f"x{j + 1}" for j in range(dataset.p)] + ["label"]))
    for row, label in zip(dataset.X, dataset.y):
        lines.append(",".join([repr(float(v)) for v in row] + [str(int(label))]))
    atomic_write_text(path, "\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# synthetic generators


_SYNTH1_NEG = (
    # weight, x1 range, x2 range
    (0.45, (-1.0, 0.0), (-1.0, 1.0)),
    (0.50, (-4.0, -3.0), (0.0, 1.0)),
    (0.05, (-10.0, 0.0), (-5.0, 5.0)),
)
_SYNTH1_POS = (
    (0.45, (0.0, 1.0), (-1.0, 1.0)),
    (0.50, (9.0, 10.0), (-1.0, 0.0)),
    (0.05, (0.0, 10.0), (-5.0, 5.0)),
)


def _sample_box_mixture(rng: np.random.Generator, boxes, count: int) -> np.ndarray:
    weights = np.array([w for w, _, _ in boxes])
    lows = np.array([[x1[0], x2[0]] for _, x1, x2 in boxes])
    highs = np.array([[x1[1], x2[1]] for _, x1, x2 in boxes])
    comp = rng.choice(len(boxes), size=count, p=weights)
    u = rng.random((count, 2))
    return lows[comp] + u * (highs[comp] - lows[comp])


def gen_synth1(seed: int) -> Dataset:
    """Two 2-d uniform box mixtures (150 draws each) split by the x1 = 0
    hyperplane, with exactly 10% of the 300 labels flipped."""
    rng = np.random.default_rng(seed)
    neg = _sample_box_mixture(rng, _SYNTH1_NEG, 150)
    pos = _sample_box_mixture(rng, _SYNTH1_POS, 150)
    X = np.vstack([neg, pos])
    y = np.where(X[:, 0] > 0, 1, -1)
    flip = rng.choice(X.shape[0], size=X.shape[0] // 10, replace=False)
    y[flip] = -y[flip]
    return Dataset(X=X, y=y, name=f"synth1(seed={seed})")


@dataclass
class PosteriorOracle:
    """Exact class posterior of the two-class Gaussian-mixture generator.

    Each class density is an equal-weight mixture of 10 spherical Gaussians
    with covariance component_scale * I; priors are equal.
    """

    means1: np.ndarray
    means2: np.ndarray
    component_scale: float = 0.2
    priors: tuple[float, float] = (0.5, 0.5)

    def __post_init__(self):
        self.means1 = np.asarray(self.means1, dtype=float)
        self.means2 = np.asarray(self.means2, dtype=float)
        if self.means1.shape != (10, 2) or self.means2.shape != (10, 2):
            raise ValueError("oracle requires exactly 10 means of dimension 2 per class")

    def _log_density(self, means: np.ndarray, X: np.ndarray) -> np.ndarray:
        # log of (1/10) sum_k N(x; m_k, scale*I), stable via max-subtraction
        sq = np.sum((X[:, None, :] - means[None, :, :]) ** 2, axis=2)
        expo = -sq / (2.0 * self.component_scale)
        peak = expo.max(axis=1, keepdims=True)
        lse = peak[:, 0] + np.log(np.mean(np.exp(expo - peak), axis=1))
        return lse - np.log(2.0 * np.pi * self.component_scale)

    def posterior_positive(self, X) -> np.ndarray:
        """P(y = +1 | x) for each row of X."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        l1 = self._log_density(self.means1, X) + np.log(self.priors[0])
        l2 = self._log_density(self.means2, X) + np.log(self.priors[1])
        return 1.0 / (1.0 + np.exp(l2 - l1))


def gen_synth2(seed: int) -> tuple[Dataset, PosteriorOracle]:
    """Two-class Gaussian mixture data (100 observations per class).

    Ten component means per class are drawn from N((1,0), I) and
    N((0,1), I); observations come from the equal-weight mixture with
    covariance I/5.  The returned oracle keeps the drawn means and
    evaluates the exact posterior.
    """
    rng = np.random.default_rng(seed)
    means1 = np.array([1.0, 0.0]) + rng.standard_normal((10, 2))
    means2 = np.array([0.0, 1.0]) + rng.standard_normal((10, 2))
    std = np.sqrt(1.0 / 5.0)
    comp1 = rng.integers(0, 10, size=100)
    x1 = means1[comp1] + std * rng.standard_normal((100, 2))
    comp2 = rng.integers(0, 10, size=100)
    x2 = means2[comp2] + std * rng.standard_normal((100, 2))
    X = np.vstack([x1, x2])
    y = np.concatenate([np.ones(100, dtype=int), -np.ones(100, dtype=int)])
    oracle = PosteriorOracle(means1=means1, means2=means2, component_scale=1.0 / 5.0)
    return Dataset(X=X, y=y, name=f"synth2(seed={seed})"), oracle


DIAGONAL_BAND_WIDTH = 0.225


def gen_diagonal_band(seed: int) -> Dataset:
    """400 uniform points on the unit square labelled by the main diagonal,
    with 80 labels flipped inside the band of total width 0.225 around it."""
    rng = np.random.default_rng(seed)
    X = rng.random((400, 2))
    y = np.where(X[:, 1] > X[:, 0], 1, -1)
    dist = np.abs(X[:, 1] - X[:, 0]) / np.sqrt(2.0)
    band = np.flatnonzero(dist < DIAGONAL_BAND_WIDTH / 2.0)
    if band.size < 80:
        warnings.warn(
            f"only {band.size} points inside the band; flipping all of them",
            stacklevel=2,
        )
        flip = band
    else:
        flip = rng.choice(band, size=80, replace=False)
    y[flip] = -y[flip]
    return Dataset(X=X, y=y, name=f"diagonal-band(seed={seed})")


def bayes_predict(oracle: PosteriorOracle, x, d: float):
    """Risk-optimal reject rule: -1 below d, reject on [d, 1-d], +1 above 1-d."""
    if not 0.0 < d <= 0.5:
        raise ValueError(f"d must lie in (0, 0.5], got {d!r}")
    post = oracle.posterior_positive(np.atleast_2d(np.asarray(x, dtype=float)))
    out = np.where(post < d, -1, np.where(post <= 1.0 - d, 0, 1))
    if np.ndim(x) == 1:
        return int(out[0])
    return out


def save_oracle(oracle: PosteriorOracle, path: str, seed: int | None = None) -> None:
    doc = {
        "schema_version": 1,
        "kind": "synth2_mixture",
        "means1": oracle.means1.tolist(),
        "means2": oracle.means2.tolist(),
        "component_scale": oracle.component_scale,
        "priors": list(oracle.priors),
    }
    if seed is not None:
        doc["seed"] = seed
    atomic_write_text(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")


def load_oracle(path: str) -> PosteriorOracle:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    return PosteriorOracle(
        means1=np.asarray(doc["means1"], dtype=float),
        means2=np.asarray(doc["means2"], dtype=float),
        component_scale=float(doc["component_scale"]),
        priors=tuple(doc.get("priors", (0.5, 0.5))),
    )
