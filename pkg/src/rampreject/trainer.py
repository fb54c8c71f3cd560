"""DC training loop for the double-ramp reject-option classifier.

Each outer iteration linearizes the concave part of the regularized risk at
the current iterate, which turns into per-sample box shifts (the beta
weights) of a convex dual subproblem.  Solving the subproblem yields the
kernel expansion coefficients; the offset b and band half-width rho are the
subproblem's equality multipliers, recovered from the samples whose dual
coordinates sit strictly inside their boxes.  The loop stops when the
parameters stall or the risk stops decreasing.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset, Standardization, standardize_apply, standardize_fit
from .kernels import KernelSpec, gram_matrix
from .losses import _double_ramp_core, _r1_r2_data_core
from .model import Model
from .qp import DualSolution, DualSubproblem, multiplier_intervals, solve_dual

__all__ = [
    "Hyperparams",
    "DCState",
    "SupportVectorSets",
    "SingleClassError",
    "compute_betas",
    "decision_values",
    "regularized_risk",
    "majorizer_value",
    "recover_bias_rho",
    "expected_dual_cells",
    "train",
]

COEFF_PRUNE_TOL = 1e-10
RISK_STALL_TOL = 1e-8


class SingleClassError(ValueError):
    """Training data contains a single class; the balance constraint would
    force a degenerate all-reject model."""


@dataclass(frozen=True)
class Hyperparams:
    """Training configuration: loss knobs, kernel and solver tolerances."""

    C: float
    d: float
    kernel: KernelSpec
    mu: float = 1.0
    dc_max_iter: int = 50
    dc_tol: float = 1e-4
    qp_tol: float = 1e-6
    sv_tol: float = 1e-4

    def __post_init__(self):
        if not np.isfinite(self.C) or self.C <= 0:
            raise ValueError(f"C must be finite and > 0, got {self.C!r}")
        if not np.isfinite(self.d) or not 0.0 < self.d <= 0.5:
            raise ValueError(f"d must lie in (0, 0.5], got {self.d!r}")
        if not np.isfinite(self.mu) or not 0.0 < self.mu <= 1.0:
            raise ValueError(f"mu must lie in (0, 1], got {self.mu!r}")
        if self.dc_max_iter < 0:
            raise ValueError("dc_max_iter must be >= 0")
        for name in ("dc_tol", "qp_tol", "sv_tol"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")

    @property
    def width1(self) -> float:
        """Box width C*d/mu of the first dual coordinate group."""
        return self.C * self.d / self.mu

    @property
    def width2(self) -> float:
        """Box width C*(1-d)/mu of the second dual coordinate group."""
        return self.C * (1.0 - self.d) / self.mu


@dataclass
class DCState:
    """One outer-loop iterate: dual coordinates, box shifts, offsets and
    the risk trajectory up to this iterate."""

    gamma1: np.ndarray
    gamma2: np.ndarray
    beta1: np.ndarray
    beta2: np.ndarray
    b: float
    rho: float
    iteration: int = 0
    risk_history: list[float] = field(default_factory=list)


@dataclass
class SupportVectorSets:
    """Samples whose dual coordinates are strictly interior to their boxes,
    plus a per-sample margin-category tag."""

    sv1: np.ndarray
    sv2: np.ndarray
    categories: list[str]


def compute_betas(margins, rho: float, hyper: Hyperparams):
    """Box shifts of the next subproblem: the linearization weights of the
    concave risk part, active where a margin falls below its ramp foot."""
    m = np.asarray(margins, dtype=float)
    musq = hyper.mu * hyper.mu
    beta1 = np.where(m - rho < -musq, hyper.width1, 0.0)
    beta2 = np.where(m + rho < -musq, hyper.width2, 0.0)
    return beta1, beta2


def decision_values(gamma1, gamma2, b: float, gram, labels) -> np.ndarray:
    """f(x_n) = sum_m y_m (gamma1_m + gamma2_m) k(x_m, x_n) + b."""
    s = np.asarray(gamma1, dtype=float) + np.asarray(gamma2, dtype=float)
    gram = np.asarray(gram, dtype=float)
    y = np.asarray(labels, dtype=float)
    return gram @ (y * s) + b


def _weight_norm_sq(gamma1, gamma2, gram, labels) -> float:
    s = np.asarray(gamma1, dtype=float) + np.asarray(gamma2, dtype=float)
    ys = np.asarray(labels, dtype=float) * s
    return float(ys @ np.asarray(gram, dtype=float) @ ys)


def regularized_risk(gamma1, gamma2, b: float, rho: float, gram, labels, hyper: Hyperparams) -> float:
    """||w||^2 / 2 plus C times the total double ramp loss of the margins."""
    f = decision_values(gamma1, gamma2, b, gram, labels)
    margins = np.asarray(labels, dtype=float) * f
    losses = _double_ramp_core(margins, rho, hyper.d, hyper.mu)
    return 0.5 * _weight_norm_sq(gamma1, gamma2, gram, labels) + hyper.C * float(np.sum(losses))


def majorizer_value(state_at: DCState, anchor: DCState, gram, labels, hyper: Hyperparams) -> float:
    """Convex upper bound of the risk at `state_at`, tangent at `anchor`.

    Equals R1(state) - R2(anchor) - <state - anchor, subgradient of R2 at
    anchor>; coincides with the risk at the anchor and dominates it
    everywhere.  Exposed for verification, not used on the training path.
    """
    y = np.asarray(labels, dtype=float)
    f_at = decision_values(state_at.gamma1, state_at.gamma2, state_at.b, gram, labels)
    m_at = y * f_at
    f_anchor = decision_values(anchor.gamma1, anchor.gamma2, anchor.b, gram, labels)
    m_anchor = y * f_anchor

    r1_data, _ = _r1_r2_data_core(m_at, state_at.rho, hyper.d, hyper.mu)
    r1 = 0.5 * _weight_norm_sq(state_at.gamma1, state_at.gamma2, gram, labels) + hyper.C * float(
        np.sum(r1_data)
    )
    _, r2_anchor_data = _r1_r2_data_core(m_anchor, anchor.rho, hyper.d, hyper.mu)
    r2_anchor = hyper.C * float(np.sum(r2_anchor_data))

    beta1, beta2 = compute_betas(m_anchor, anchor.rho, hyper)
    cross_at = float(np.sum(beta1 * (m_at - state_at.rho)) + np.sum(beta2 * (m_at + state_at.rho)))
    cross_anchor = float(
        np.sum(beta1 * (m_anchor - anchor.rho)) + np.sum(beta2 * (m_anchor + anchor.rho))
    )
    return r1 - r2_anchor + cross_at - cross_anchor


def recover_bias_rho(
    solution: DualSolution,
    gram,
    labels,
    lower1,
    upper1,
    lower2,
    upper2,
    mu: float,
    prev_b: float,
    prev_rho: float,
    sv_tol: float = 1e-4,
):
    """Recover (b, rho) from the box-interior dual coordinates.

    Every sample with gamma1 strictly inside its box pins its margin to
    rho + mu, every gamma2-interior sample pins it to -rho + mu; the stacked
    linear system is solved in least squares.  Degenerate systems fall back
    to the previous values: rank < 2 keeps rho and solves for b alone, no
    equations at all keeps both.  The result is finally projected onto the
    subproblem's valid equality-multiplier box (rho - b and rho + b each
    clamped into its interval), which is a no-op for a healthy system but
    keeps held fallback values optimal, preserving outer-loop descent.

    Returns (b, rho, SupportVectorSets, held_flag).
    """
    y = np.asarray(labels, dtype=float)
    g1, g2 = solution.gamma1, solution.gamma2
    w1 = np.asarray(upper1) - np.asarray(lower1)
    w2 = np.asarray(upper2) - np.asarray(lower2)
    sv1 = np.flatnonzero((g1 > lower1 + sv_tol * w1) & (g1 < upper1 - sv_tol * w1))
    sv2 = np.flatnonzero((g2 > lower2 + sv_tol * w2) & (g2 < upper2 - sv_tol * w2))

    wphi = np.asarray(gram, dtype=float) @ (y * (g1 + g2))
    rows = []
    rhs = []
    for n in sv1:
        rows.append((y[n], -1.0))
        rhs.append(mu - y[n] * wphi[n])
    for n in sv2:
        rows.append((y[n], 1.0))
        rhs.append(mu - y[n] * wphi[n])

    held = False
    if not rows:
        b, rho = prev_b, prev_rho
        held = True
    else:
        A = np.asarray(rows)
        t = np.asarray(rhs)
        sol, _, rank, _ = np.linalg.lstsq(A, t, rcond=None)
        if rank < 2:
            rho = prev_rho
            # with rho fixed each row reads y_n * b = rhs - e_n * rho
            b = float(np.mean(A[:, 0] * (t - A[:, 1] * rho)))
            held = True
        else:
            b, rho = float(sol[0]), float(sol[1])

    sub = DualSubproblem(
        gram=gram, labels=labels, mu=mu,
        lower1=lower1, upper1=upper1, lower2=lower2, upper2=upper2,
    )
    (lo_p, hi_p), (lo_m, hi_m) = multiplier_intervals(sub, g1, g2)
    lam_p = _clamp_interval(rho - b, lo_p, hi_p)
    lam_m = _clamp_interval(rho + b, lo_m, hi_m)
    if lam_p is not None and lam_m is not None:
        b = (lam_m - lam_p) / 2.0
        rho = (lam_p + lam_m) / 2.0

    margins = y * (wphi + b)
    categories = _margin_categories(margins, rho, mu)
    return b, rho, SupportVectorSets(sv1=sv1, sv2=sv2, categories=categories), held


_INTERVAL_INVERSION_TOL = 1e-3


def _clamp_interval(value: float, lo: float, hi: float) -> float | None:
    """Clamp into [lo, hi].  An interval inverted within solver tolerance
    collapses to its midpoint; a grossly inverted one means the dual point
    is far from optimal (the recovery precondition is broken), in which
    case None disables the projection and the caller keeps its value."""
    if lo > hi:
        if lo - hi > _INTERVAL_INVERSION_TOL:
            return None
        return (lo + hi) / 2.0
    return min(max(value, lo), hi)


def _margin_categories(margins: np.ndarray, rho: float, mu: float, tol: float = 1e-6) -> list[str]:
    """Tag each margin with its region of the converged dual structure."""
    musq = mu * mu
    out = []
    overlap = 2.0 * rho < mu + musq  # the two ramp windows intersect
    for m in margins:
        if abs(m - (rho + mu)) <= tol:
            out.append("sv_outer")
        elif abs(m - (mu - rho)) <= tol:
            out.append("sv_inner")
        elif m > rho + mu:
            out.append("clear_correct")
        elif m < -rho - musq:
            out.append("clear_wrong")
        elif overlap and rho - musq <= m < mu - rho:
            out.append("overlap_ramps")
        elif rho - musq <= m < rho + mu:
            out.append("upper_ramp")
        elif -rho - musq <= m < mu - rho:
            out.append("lower_ramp")
        else:
            out.append("reject_plateau")
    return out


def expected_dual_cells(margins, rho: float, beta1, beta2, hyper: Hyperparams, tol: float = 1e-6):
    """Closed interval [lo, hi] each dual coordinate must occupy at a
    converged solution, given the box shifts used for the final solve.

    Margins on a breakpoint (within tol) map to the full box; elsewhere the
    cell is a single value.  The intervals realize the converged-coefficient
    table: strictly outside-the-band margins pin the coordinate to a bound.
    """
    m = np.asarray(margins, dtype=float)
    beta1 = np.asarray(beta1, dtype=float)
    beta2 = np.asarray(beta2, dtype=float)
    cells1 = np.empty((m.shape[0], 2))
    cells2 = np.empty((m.shape[0], 2))
    outer = rho + hyper.mu
    inner = hyper.mu - rho
    for n, mn in enumerate(m):
        lo1, up1 = -beta1[n], hyper.width1 - beta1[n]
        lo2, up2 = -beta2[n], hyper.width2 - beta2[n]
        if mn > outer + tol:
            cells1[n] = (lo1, lo1)
        elif mn < outer - tol:
            cells1[n] = (up1, up1)
        else:
            cells1[n] = (lo1, up1)
        if mn > inner + tol:
            cells2[n] = (lo2, lo2)
        elif mn < inner - tol:
            cells2[n] = (up2, up2)
        else:
            cells2[n] = (lo2, up2)
    return cells1, cells2


def _repair_block(z: np.ndarray, lo: np.ndarray, up: np.ndarray, c: np.ndarray):
    """Shift a clipped block iterate back onto its balance equality.

    The imbalance is distributed over the coordinates proportionally to
    their slack in the correcting direction; returns None when the slack
    cannot absorb it.
    """
    imbalance = float(np.sum(c * z))
    if imbalance == 0.0:
        return z
    if imbalance > 0:
        slack = np.where(c > 0, z - lo, up - z)
    else:
        slack = np.where(c > 0, up - z, z - lo)
    total = float(np.sum(slack))
    if total < abs(imbalance):
        return None
    move = slack * (abs(imbalance) / total)
    z = z - np.sign(imbalance) * c * move
    return np.clip(z, lo, up)


def _warm_start(prev1, prev2, sub: DualSubproblem):
    """Clip the previous dual point into the new boxes and repair the
    equalities; fall back to the origin when repair is impossible."""
    g1 = np.clip(prev1, sub.lower1, sub.upper1)
    g2 = np.clip(prev2, sub.lower2, sub.upper2)
    y = sub.labels
    pos = y > 0
    neg = ~pos
    # block P: gamma1 of positive samples, gamma2 of negative ones
    zP = np.concatenate([g1[pos], g2[neg]])
    cP = np.concatenate([np.ones(pos.sum()), -np.ones(neg.sum())])
    loP = np.concatenate([sub.lower1[pos], sub.lower2[neg]])
    upP = np.concatenate([sub.upper1[pos], sub.upper2[neg]])
    zP = _repair_block(zP, loP, upP, cP)
    zM = np.concatenate([g1[neg], g2[pos]])
    cM = np.concatenate([np.ones(neg.sum()), -np.ones(pos.sum())])
    loM = np.concatenate([sub.lower1[neg], sub.lower2[pos]])
    upM = np.concatenate([sub.upper1[neg], sub.upper2[pos]])
    zM = _repair_block(zM, loM, upM, cM)
    if zP is None or zM is None:
        return None
    g1 = np.empty_like(np.asarray(prev1, dtype=float))
    g2 = np.empty_like(g1)
    g1[pos] = zP[: pos.sum()]
    g2[neg] = zP[pos.sum():]
    g1[neg] = zM[: neg.sum()]
    g2[pos] = zM[neg.sum():]
    return g1, g2


def train(
    dataset: Dataset,
    hyper: Hyperparams,
    init: tuple[float, float] | None = None,
    standardize: bool = True,
) -> tuple[Model, DCState]:
    """Fit a reject-option classifier; returns the model and the final
    outer-loop state (whose risk_history traces every iteration).

    The coefficients start at zero and (b, rho) at `init` (default (0, 0)),
    so the first subproblem is the plain convex part of the risk.
    Standardization is fitted on the given data and stored in the model.
    """
    if dataset.n < 2:
        raise ValueError("training requires at least 2 samples")
    if np.unique(dataset.y).size < 2:
        raise SingleClassError(
            "training data contains a single class; refusing to fit a degenerate model"
        )
    if not np.all(np.isfinite(dataset.X)):
        raise ValueError("training features contain NaN or Inf")

    if standardize:
        params = standardize_fit(dataset.X)
        X = standardize_apply(params, dataset.X)
    else:
        params = Standardization(
            mean=np.zeros(dataset.p), scale=np.ones(dataset.p)
        )
        X = dataset.X

    y = dataset.y.astype(float)
    K = gram_matrix(hyper.kernel, X)
    n = dataset.n

    b, rho = (0.0, 0.0) if init is None else (float(init[0]), float(init[1]))
    gamma1 = np.zeros(n)
    gamma2 = np.zeros(n)
    beta1 = np.zeros(n)
    beta2 = np.zeros(n)
    risk_history = [regularized_risk(gamma1, gamma2, b, rho, K, y, hyper)]

    converged = False
    qp_failures = 0
    guard_stops = 0
    iteration = 0
    for it in range(hyper.dc_max_iter):
        margins = y * decision_values(gamma1, gamma2, b, K, y)
        new_beta1, new_beta2 = compute_betas(margins, rho, hyper)
        sub = DualSubproblem(
            gram=K,
            labels=y,
            mu=hyper.mu,
            lower1=-new_beta1,
            upper1=hyper.width1 - new_beta1,
            lower2=-new_beta2,
            upper2=hyper.width2 - new_beta2,
        )
        start = _warm_start(gamma1, gamma2, sub) if it > 0 else None
        solution = solve_dual(sub, tol=hyper.qp_tol, init=start)
        if not solution.converged:
            qp_failures += 1
        new_b, new_rho, svsets, _ = recover_bias_rho(
            solution,
            K,
            y,
            sub.lower1,
            sub.upper1,
            sub.lower2,
            sub.upper2,
            hyper.mu,
            b,
            rho,
            hyper.sv_tol,
        )
        new_risk = regularized_risk(solution.gamma1, solution.gamma2, new_b, new_rho, K, y, hyper)
        if new_risk > risk_history[-1]:
            # solver accuracy exhausted: no certified progress left, keep the
            # previous iterate so the recorded risks stay non-increasing
            guard_stops += 1
            converged = True
            break
        delta = max(
            abs(new_b - b),
            abs(new_rho - rho),
            float(np.max(np.abs(solution.gamma1 - gamma1), initial=0.0)),
            float(np.max(np.abs(solution.gamma2 - gamma2), initial=0.0)),
        )
        gamma1, gamma2 = solution.gamma1, solution.gamma2
        beta1, beta2 = new_beta1, new_beta2
        b, rho = new_b, new_rho
        risk_history.append(new_risk)
        iteration = it + 1
        if delta <= hyper.dc_tol:
            converged = True
            break
        if len(risk_history) >= 3:
            d1 = risk_history[-3] - risk_history[-2]
            d2 = risk_history[-2] - risk_history[-1]
            if d1 < RISK_STALL_TOL and d2 < RISK_STALL_TOL:
                converged = True
                break

    state = DCState(
        gamma1=gamma1,
        gamma2=gamma2,
        beta1=beta1,
        beta2=beta2,
        b=b,
        rho=rho,
        iteration=iteration,
        risk_history=risk_history,
    )

    if rho < -1e-6:
        raise RuntimeError(
            f"training ended with rho = {rho!r}, negative beyond tolerance"
        )
    coeffs = y * (gamma1 + gamma2)
    keep = np.abs(gamma1 + gamma2) > COEFF_PRUNE_TOL
    if qp_failures:
        warnings.warn(
            f"{qp_failures} dual solve(s) stopped at the update budget", stacklevel=2
        )
    model = Model(
        kernel=hyper.kernel,
        support_x=X[keep] if keep.any() else np.empty((0, dataset.p)),
        coeffs=coeffs[keep],
        b=b,
        rho=max(rho, 0.0),
        standardization=params,
        hyper={"C": hyper.C, "d": hyper.d, "mu": hyper.mu},
        diagnostics={
            "dc_iterations": iteration,
            "final_risk": risk_history[-1],
            "converged": converged,
            "n_support": int(keep.sum()),
            "qp_failures": qp_failures,
            "guard_stops": guard_stops,
        },
    )
    return model, state
