"""The trained reject-option predictor and its JSON serialization."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .data import Standardization, atomic_write_text, standardize_apply
from .kernels import KernelSpec, kernel_matrix

__all__ = [
    "Model",
    "ModelIOError",
    "ModelVersionError",
    "ModelChecksumError",
    "decision_function",
    "predict",
    "save",
    "load",
]

SCHEMA_VERSION = 1


class ModelIOError(Exception):
    """Malformed or unreadable model document."""


class ModelVersionError(ModelIOError):
    """Model document written with an unsupported schema version."""


class ModelChecksumError(ModelIOError):
    """Model document content does not match its checksum."""


@dataclass
class Model:
    """Kernel expansion classifier with a reject band.

    The decision function is f(x) = sum_i coeff_i k(x_i, z) + b evaluated in
    standardized feature space (z is the standardized input); predictions
    are +1 for f > rho, 0 (reject) for |f| <= rho and -1 for f < -rho.
    """

    kernel: KernelSpec
    support_x: np.ndarray
    coeffs: np.ndarray
    b: float
    rho: float
    standardization: Standardization
    hyper: dict
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        self.support_x = np.atleast_2d(np.asarray(self.support_x, dtype=float))
        self.coeffs = np.asarray(self.coeffs, dtype=float).ravel()
        if self.support_x.shape[0] != self.coeffs.shape[0]:
            raise ValueError("one coefficient is required per retained sample")
        if self.rho < -1e-6:
            raise ValueError(f"rho = {self.rho!r} is negative beyond tolerance")
        if self.rho < 0.0:
            self.rho = 0.0

    @property
    def n_features(self) -> int:
        return self.standardization.mean.shape[0]

    @property
    def n_support(self) -> int:
        return self.coeffs.shape[0]

    def decision_function(self, x):
        return decision_function(self, x)

    def predict(self, x):
        return predict(self, x)


def _standardized(model: Model, x) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if arr.shape[1] != model.n_features:
        raise ValueError(
            f"input has {arr.shape[1]} features, model expects {model.n_features}"
        )
    return standardize_apply(model.standardization, arr), single


def decision_function(model: Model, x):
    """f(x) for one feature vector (returns float) or a matrix of rows."""
    Z, single = _standardized(model, x)
    if model.n_support == 0:
        f = np.full(Z.shape[0], model.b)
    else:
        f = model.coeffs @ kernel_matrix(model.kernel, model.support_x, Z) + model.b
    return float(f[0]) if single else f


def predict(model: Model, x):
    """Label in {-1, 0, +1}; 0 means reject.  The band is closed: |f| = rho rejects."""
    f = decision_function(model, x)
    out = np.where(np.asarray(f) > model.rho, 1, np.where(np.abs(f) <= model.rho, 0, -1))
    if np.ndim(f) == 0:
        return int(out)
    return out


def _payload(model: Model) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kernel": {"kind": model.kernel.kind, "gamma": model.kernel.gamma},
        "b": model.b,
        "rho": model.rho,
        "hyper": {
            "C": model.hyper["C"],
            "d": model.hyper["d"],
            "mu": model.hyper["mu"],
        },
        "standardization": {
            "mean": model.standardization.mean.tolist(),
            "scale": model.standardization.scale.tolist(),
        },
        "support": [
            {"x": row.tolist(), "coeff": float(c)}
            for row, c in zip(model.support_x, model.coeffs)
        ],
        "diagnostics": model.diagnostics,
    }


def _checksum(payload: dict) -> str:
    canon = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def save(model: Model, path: str) -> None:
    """Write the model as a versioned, checksummed JSON document."""
    payload = _payload(model)
    doc = dict(payload)
    doc["checksum"] = _checksum(payload)
    atomic_write_text(path, json.dumps(doc, indent=2) + "\n")


def load(path: str) -> Model:
    """Read a model document; raises ModelIOError subclasses on bad input."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ModelIOError(f"cannot read model file {path!r}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ModelIOError("model document is not a JSON object")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ModelVersionError(
            f"unsupported schema_version {version!r}, this reader supports {SCHEMA_VERSION}"
        )
    stored = doc.pop("checksum", None)
    if stored is None:
        raise ModelIOError("model document has no checksum")
    if stored != _checksum(doc):
        raise ModelChecksumError("model checksum mismatch; file is corrupt")
    try:
        kernel = KernelSpec(kind=doc["kernel"]["kind"], gamma=doc["kernel"]["gamma"])
        support = doc["support"]
        support_x = np.asarray([sv["x"] for sv in support], dtype=float)
        coeffs = np.asarray([sv["coeff"] for sv in support], dtype=float)
        mean = np.asarray(doc["standardization"]["mean"], dtype=float)
        if support_x.size == 0:
            support_x = np.empty((0, mean.shape[0]))
        model = Model(
            kernel=kernel,
            support_x=support_x,
            coeffs=coeffs,
            b=float(doc["b"]),
            rho=float(doc["rho"]),
            standardization=Standardization(
                mean=mean,
                scale=np.asarray(doc["standardization"]["scale"], dtype=float),
            ),
            hyper={k: float(v) for k, v in doc["hyper"].items()},
            diagnostics=doc.get("diagnostics", {}),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelIOError(f"malformed model document: {exc}") from exc
    return model
