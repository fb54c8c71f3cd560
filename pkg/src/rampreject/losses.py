"""Losses for binary classification with a reject option.

Everything is expressed in terms of the margin y*f(x).  The reject band is
the closed interval [-rho, rho] around the decision surface, rejection
costs d in (0, 0.5], and the ramp segments of the continuous losses have
slope 1/mu with mu in (0, 1].

All evaluators accept scalars or numpy arrays of margins and broadcast.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "LossInputs",
    "loss_0d1",
    "loss_double_ramp",
    "loss_ramp",
    "loss_generalized_hinge",
    "loss_double_hinge",
    "binary_entropy",
    "empirical_r1_r2",
    "positive_part",
]


def positive_part(a):
    """Elementwise max(a, 0)."""
    return np.maximum(np.asarray(a, dtype=float), 0.0)


def _check_band(rho) -> None:
    if not np.all(np.isfinite(rho)) or np.any(np.asarray(rho) < 0):
        raise ValueError(f"reject bandwidth rho must be finite and >= 0, got {rho!r}")


def _check_cost(d) -> None:
    arr = np.asarray(d)
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0) or np.any(arr > 0.5):
        raise ValueError(f"rejection cost d must lie in (0, 0.5], got {d!r}")


def _check_slope(mu) -> None:
    arr = np.asarray(mu)
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0) or np.any(arr > 1.0):
        raise ValueError(f"ramp slope parameter mu must lie in (0, 1], got {mu!r}")


def _check_tradeoff(C: float) -> None:
    if not np.isfinite(C) or C <= 0:
        raise ValueError(f"regularization trade-off C must be finite and > 0, got {C!r}")


def _ret(out: np.ndarray, *templates):
    """Return a float when every input was scalar, an array otherwise."""
    if all(np.ndim(t) == 0 for t in templates):
        return float(out)
    return out


@dataclass(frozen=True)
class LossInputs:
    """A validated loss evaluation point (margin, rho, d, mu).

    Parameter ranges are enforced at construction: rho >= 0, d in (0, 0.5],
    mu in (0, 1].
    """

    margin: float
    rho: float
    d: float
    mu: float = 1.0

    def __post_init__(self):
        _check_band(self.rho)
        _check_cost(self.d)
        _check_slope(self.mu)

    def zero_d_one(self) -> float:
        return loss_0d1(self.margin, self.rho, self.d)

    def double_ramp(self) -> float:
        return loss_double_ramp(self.margin, self.rho, self.d, self.mu)


def loss_0d1(margin, rho, d):
    """Discrete 0-d-1 loss: 1 below -rho, d inside the closed band, else 0.

    A margin of exactly +/-rho counts as rejected.  Broadcasts over margin
    and parameter arrays alike.
    """
    _check_band(rho)
    _check_cost(d)
    m = np.asarray(margin, dtype=float)
    out = np.where(m < np.negative(rho), 1.0, np.where(m <= rho, d, 0.0))
    return _ret(out, margin, rho, d)


def _double_ramp_core(m: np.ndarray, rho: float, d: float, mu: float) -> np.ndarray:
    # Each bracketed hinge difference (1/mu)([mu - m +- rho]_+ - [-mu^2 - m +- rho]_+)
    # collapses to a clip onto [0, 1+mu]; the clip form is algebraically identical
    # and returns the plateau values d*(1+mu) and 1+mu exactly.
    hi = 1.0 + mu
    outer = np.clip((mu - m + rho) / mu, 0.0, hi)
    inner = np.clip((mu - m - rho) / mu, 0.0, hi)
    return inner + d * (outer - inner)


def loss_double_ramp(margin, rho, d, mu):
    """Double ramp loss, the continuous bounded surrogate of the 0-d-1 loss.

    Equals (d/mu)([mu-m+rho]_+ - [-mu^2-m+rho]_+)
         + ((1-d)/mu)([mu-m-rho]_+ - [-mu^2-m-rho]_+)  with m the margin.
    Broadcasts over margin and parameter arrays alike.
    """
    _check_band(rho)
    _check_cost(d)
    _check_slope(mu)
    m = np.asarray(margin, dtype=float)
    return _ret(_double_ramp_core(m, rho, d, mu), margin, rho, d, mu)


def loss_ramp(t, mu: float):
    """Single ramp loss (1/mu)([mu - t]_+ - [-mu^2 - t]_+).

    Monotonically non-increasing in t; saturates at 1 + mu.  Coincides with
    the double ramp loss at rho = 0 for every d.
    """
    _check_slope(mu)
    v = np.asarray(t, dtype=float)
    out = np.clip((mu - v) / mu, 0.0, 1.0 + mu)
    return _ret(out, t, mu)


def loss_generalized_hinge(margin, d: float):
    """Generalized hinge surrogate: steep slope (1-d)/d below zero margin."""
    _check_cost(d)
    m = np.asarray(margin, dtype=float)
    out = np.where(m < 0, 1.0 - ((1.0 - d) / d) * m, np.maximum(1.0 - m, 0.0))
    return _ret(out, margin, d)


def loss_double_hinge(margin, d: float):
    """Double hinge surrogate max(-(1-d)m + H(d), -d*m + H(d), 0)."""
    _check_cost(d)
    m = np.asarray(margin, dtype=float)
    h = binary_entropy(d)
    out = np.maximum(np.maximum(-(1.0 - d) * m + h, -d * m + h), 0.0)
    return _ret(out, margin)


def binary_entropy(d: float) -> float:
    """Natural-log binary entropy -d*log(d) - (1-d)*log(1-d) for d in (0, 1)."""
    if not np.isfinite(d) or not 0.0 < d < 1.0:
        raise ValueError(f"binary_entropy requires d in (0, 1), got {d!r}")
    return float(-d * np.log(d) - (1.0 - d) * np.log(1.0 - d))


def _r1_r2_data_core(m: np.ndarray, rho: float, d: float, mu: float):
    """Per-sample convex/concave hinge sums of the empirical risk, without C."""
    r1 = (d * positive_part(mu - m + rho) + (1.0 - d) * positive_part(mu - m - rho)) / mu
    r2 = (
        d * positive_part(-mu * mu - m + rho)
        + (1.0 - d) * positive_part(-mu * mu - m - rho)
    ) / mu
    return r1, r2


def empirical_r1_r2(margins, rho: float, C: float, d: float, mu: float):
    """Data terms of the convex decomposition of the empirical risk.

    Returns (R1_data, R2_data) where R1_data excludes the ||w||^2/2 part and
    R1_data - R2_data equals C * sum of the double ramp losses.
    """
    _check_band(rho)
    _check_tradeoff(C)
    _check_cost(d)
    _check_slope(mu)
    m = np.asarray(margins, dtype=float)
    r1, r2 = _r1_r2_data_core(m, rho, d, mu)
    return C * float(np.sum(r1)), C * float(np.sum(r2))
