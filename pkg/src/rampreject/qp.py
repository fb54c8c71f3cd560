"""Box-constrained QP solver for the per-iteration dual subproblem.

The subproblem minimizes, over coefficient vectors (gamma1, gamma2),

    0.5 * sum_nm y_n y_m (gamma1_n + gamma2_n)(gamma1_m + gamma2_m) k(x_n, x_m)
    - mu * sum_n (gamma1_n + gamma2_n)

subject to per-coordinate boxes and the two balance equalities

    sum_n y_n (gamma1_n + gamma2_n) = 0,      sum_n (gamma1_n - gamma2_n) = 0.

The objective depends on the coordinates only through the per-sample sums
s_n = gamma1_n + gamma2_n, so the quadratic form is the PSD matrix
Q = diag(y) K diag(y) and the gradient is identical for both coordinates of
a sample: g_n = (Q s)_n - mu.

Solver structure.  The pair of equalities is equivalent to one balance
equation on each of two disjoint coordinate blocks:

    block P: gamma1 of +1-labelled samples, gamma2 of -1-labelled samples
    block M: gamma1 of -1-labelled samples, gamma2 of +1-labelled samples

with constraint coefficient c = +1 on the gamma1 part and c = -1 on the
gamma2 part of each block.  Every sample owns exactly one coordinate per
block.  Each block is therefore a classic single-equality box QP, so
two-coordinate SMO moves inside one block keep the iterate feasible, and
blockwise optimality of the convex objective over the product feasible set
implies joint optimality.

With F = c * g, the first-order conditions of a block reduce to
max(F over down-movable coords) <= min(F over up-movable coords), and the
minimax projected-gradient magnitude over the block's equality multiplier
is exactly half the positive part of that gap.  The solver repeatedly picks
a violating pair across both blocks (most violating coordinate plus its
best second-order partner) and minimizes the objective exactly along the
admissible two-coordinate direction, clipped to the box.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "DualSubproblem",
    "DualSolution",
    "dual_objective",
    "solve_dual",
    "kkt_residual",
    "multiplier_intervals",
]

_EQ_TOL = 1e-8


@dataclass
class DualSubproblem:
    """One dual subproblem: Gram matrix, labels, linear weight and boxes.

    Bounds satisfy lower <= 0 <= upper elementwise, so the origin is always
    feasible, and each coordinate group has constant box width.
    """

    gram: np.ndarray
    labels: np.ndarray
    mu: float
    lower1: np.ndarray
    upper1: np.ndarray
    lower2: np.ndarray
    upper2: np.ndarray

    def __post_init__(self):
        self.gram = np.asarray(self.gram, dtype=float)
        self.labels = np.asarray(self.labels, dtype=float)
        n = self.labels.shape[0]
        for name in ("lower1", "upper1", "lower2", "upper2"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))
        if self.gram.shape != (n, n):
            raise ValueError(f"gram must be ({n}, {n}), got {self.gram.shape}")
        if not np.all(np.isfinite(self.gram)) or not np.isfinite(self.mu):
            raise ValueError("non-finite entries in subproblem data")
        if not np.all(np.isin(self.labels, (-1.0, 1.0))):
            raise ValueError("labels must be -1 or +1")
        for lo, up in ((self.lower1, self.upper1), (self.lower2, self.upper2)):
            if lo.shape != (n,) or up.shape != (n,):
                raise ValueError("bound vectors must have one entry per sample")
            if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(up))):
                raise ValueError("non-finite bounds")
            if np.any(lo > 0) or np.any(up < 0):
                raise ValueError("boxes must contain 0 (lower <= 0 <= upper)")
            width = up - lo
            if width.size and np.ptp(width) > 1e-9 * (1.0 + width.max()):
                raise ValueError("box widths must be constant within a coordinate group")

    @property
    def n(self) -> int:
        return self.labels.shape[0]


@dataclass
class DualSolution:
    gamma1: np.ndarray
    gamma2: np.ndarray
    objective: float
    kkt_residual: float
    iterations: int
    converged: bool
    objective_history: list[float] = field(default_factory=list)


def dual_objective(sub: DualSubproblem, gamma1, gamma2) -> float:
    """Objective value 0.5 s'Qs - mu 1's with s = gamma1 + gamma2."""
    s = np.asarray(gamma1, dtype=float) + np.asarray(gamma2, dtype=float)
    ys = sub.labels * s
    return float(0.5 * (ys @ sub.gram @ ys) - sub.mu * np.sum(s))


class _Blocks:
    """Index bookkeeping for the two single-equality coordinate blocks."""

    def __init__(self, sub: DualSubproblem):
        y = sub.labels
        pos = np.flatnonzero(y > 0)
        neg = np.flatnonzero(y < 0)
        # block coordinate order: gamma1 part first, then gamma2 part
        self.samp = [np.concatenate([pos, neg]), np.concatenate([neg, pos])]
        self.c = [
            np.concatenate([np.ones(len(pos)), -np.ones(len(neg))]),
            np.concatenate([np.ones(len(neg)), -np.ones(len(pos))]),
        ]
        self.lo = [
            np.concatenate([sub.lower1[pos], sub.lower2[neg]]),
            np.concatenate([sub.lower1[neg], sub.lower2[pos]]),
        ]
        self.up = [
            np.concatenate([sub.upper1[pos], sub.upper2[neg]]),
            np.concatenate([sub.upper1[neg], sub.upper2[pos]]),
        ]
        self.split = [len(pos), len(neg)]  # gamma1-part length per block
        self._pos, self._neg = pos, neg

    def gather(self, gamma1: np.ndarray, gamma2: np.ndarray) -> list[np.ndarray]:
        pos, neg = self._pos, self._neg
        return [
            np.concatenate([gamma1[pos], gamma2[neg]]),
            np.concatenate([gamma1[neg], gamma2[pos]]),
        ]

    def scatter(self, z: list[np.ndarray], n: int):
        pos, neg = self._pos, self._neg
        gamma1 = np.empty(n)
        gamma2 = np.empty(n)
        gamma1[pos] = z[0][: self.split[0]]
        gamma2[neg] = z[0][self.split[0]:]
        gamma1[neg] = z[1][: self.split[1]]
        gamma2[pos] = z[1][self.split[1]:]
        return gamma1, gamma2


_CURV_FLOOR = 1e-12


def _block_gap(z, lo, up, c, F):
    """Best violating pair (i_up, j_dn, gap) of one block; gap <= 0 means optimal."""
    up_ok = np.where(c > 0, z < up, z > lo)
    dn_ok = np.where(c > 0, z > lo, z < up)
    if not up_ok.any() or not dn_ok.any():
        return -1, -1, -np.inf
    i = int(np.argmin(np.where(up_ok, F, np.inf)))
    j = int(np.argmax(np.where(dn_ok, F, -np.inf)))
    return i, j, float(F[j] - F[i])


def _residual_and_pair(blocks: _Blocks, z: list[np.ndarray], g: np.ndarray):
    """KKT residual max(gap)/2 plus the maximal violating pair location."""
    best = (-np.inf, -1, -1, -1)
    for b in range(2):
        F = blocks.c[b] * g[blocks.samp[b]]
        i, j, gap = _block_gap(z[b], blocks.lo[b], blocks.up[b], blocks.c[b], F)
        if gap > best[0]:
            best = (gap, b, i, j)
    residual = max(0.0, best[0] / 2.0)
    return residual, best


def _select_pair(blocks: _Blocks, z, g, Q, qdiag):
    """Residual plus the working pair chosen by second-order gain.

    The first coordinate is the most violating up-movable one; its partner
    maximizes the exact one-step objective decrease among the violating
    down-movables.  Degenerate (flat) directions get a curvature floor so
    bound-hitting moves rank highest.  Second-order selection avoids the
    zigzagging of plain maximal-violating-pair steps on rank-deficient Gram
    matrices.
    """
    residual = 0.0
    best = (-np.inf, -1, -1, -1)
    for b in range(2):
        c, lo, up, samp, zb = blocks.c[b], blocks.lo[b], blocks.up[b], blocks.samp[b], z[b]
        F = c * g[samp]
        up_ok = np.where(c > 0, zb < up, zb > lo)
        dn_ok = np.where(c > 0, zb > lo, zb < up)
        if not up_ok.any() or not dn_ok.any():
            continue
        i = int(np.argmin(np.where(up_ok, F, np.inf)))
        gap = float(np.max(np.where(dn_ok, F, -np.inf))) - float(F[i])
        residual = max(residual, gap / 2.0)
        if gap <= 0:
            continue
        n_i = samp[i]
        diff = F - F[i]
        cand = dn_ok & (diff > 0)
        curv = qdiag[n_i] + qdiag[samp] - 2.0 * c[i] * c * Q[n_i, samp]
        gain = np.where(cand, diff * diff / np.maximum(curv, _CURV_FLOOR), -np.inf)
        j = int(np.argmax(gain))
        if gain[j] > best[0]:
            best = (float(gain[j]), b, i, j)
    return residual, best


def _check_feasible(sub: DualSubproblem, gamma1, gamma2, box_tol=1e-9):
    g1 = np.asarray(gamma1, dtype=float)
    g2 = np.asarray(gamma2, dtype=float)
    if not (np.all(np.isfinite(g1)) and np.all(np.isfinite(g2))):
        raise ValueError("non-finite point")
    w1 = 1.0 + float(np.max(sub.upper1 - sub.lower1, initial=0.0))
    w2 = 1.0 + float(np.max(sub.upper2 - sub.lower2, initial=0.0))
    if np.any(g1 < sub.lower1 - box_tol * w1) or np.any(g1 > sub.upper1 + box_tol * w1):
        raise ValueError("point violates the gamma1 box")
    if np.any(g2 < sub.lower2 - box_tol * w2) or np.any(g2 > sub.upper2 + box_tol * w2):
        raise ValueError("point violates the gamma2 box")
    e1 = abs(float(np.sum(sub.labels * (g1 + g2))))
    e2 = abs(float(np.sum(g1 - g2)))
    if e1 > _EQ_TOL or e2 > _EQ_TOL:
        raise ValueError(f"point violates the balance equalities ({e1:.2e}, {e2:.2e})")
    return np.clip(g1, sub.lower1, sub.upper1), np.clip(g2, sub.lower2, sub.upper2)


def kkt_residual(sub: DualSubproblem, gamma1, gamma2) -> float:
    """Projected-gradient residual of a feasible point; 0 at the exact optimum.

    Raises ValueError for infeasible points (distinct from a large residual).
    """
    g1, g2 = _check_feasible(sub, gamma1, gamma2)
    blocks = _Blocks(sub)
    z = blocks.gather(g1, g2)
    s = g1 + g2
    g = sub.labels * (sub.gram @ (sub.labels * s)) - sub.mu
    residual, _ = _residual_and_pair(blocks, z, g)
    return residual


def multiplier_intervals(sub: DualSubproblem, gamma1, gamma2):
    """Valid equality-multiplier intervals at a (near-)optimal point.

    Returns ((loP, hiP), (loM, hiM)) where any optimal offset pair must have
    rho - b inside the first interval and rho + b inside the second.  At an
    interior-supported optimum both intervals collapse to a point; empty
    movable sets yield infinite endpoints.
    """
    g1 = np.asarray(gamma1, dtype=float)
    g2 = np.asarray(gamma2, dtype=float)
    blocks = _Blocks(sub)
    z = blocks.gather(g1, g2)
    g = sub.labels * (sub.gram @ (sub.labels * (g1 + g2))) - sub.mu
    out = []
    for b in range(2):
        c, lo, up, zb = blocks.c[b], blocks.lo[b], blocks.up[b], z[b]
        F = c * g[blocks.samp[b]]
        up_ok = np.where(c > 0, zb < up, zb > lo)
        dn_ok = np.where(c > 0, zb > lo, zb < up)
        low = float(np.max(F[dn_ok])) if dn_ok.any() else -np.inf
        high = float(np.min(F[up_ok])) if up_ok.any() else np.inf
        out.append((low, high))
    return tuple(out)


def solve_dual(
    sub: DualSubproblem,
    tol: float = 1e-6,
    max_sweeps: int | None = None,
    init: tuple[np.ndarray, np.ndarray] | None = None,
    track_objective: bool = False,
) -> DualSolution:
    """Minimize the dual subproblem with a two-coordinate working-set method.

    The KKT residual drives convergence; the working pair couples the most
    violating coordinate with the partner of largest exact objective
    decrease (ties resolved toward the lowest index), and each update
    minimizes the objective exactly along the chosen direction, clipped to
    the box.  An optional feasible `init` warm-starts the solve.  If the
    update budget (max_sweeps sweeps of n updates, default 100*n sweeps) is
    exhausted the best iterate is returned flagged non-converged.
    """
    n = sub.n
    if max_sweeps is None:
        max_sweeps = 100 * max(n, 1)
    max_updates = max_sweeps * max(n, 1)

    if init is None:
        g1 = np.zeros(n)
        g2 = np.zeros(n)
    else:
        g1, g2 = _check_feasible(sub, init[0], init[1])

    blocks = _Blocks(sub)
    z = blocks.gather(g1, g2)
    y = sub.labels
    Q = (y[:, None] * y[None, :]) * sub.gram
    qdiag = np.diag(Q).copy()
    s = g1 + g2
    g = Q @ s - sub.mu

    history: list[float] = []
    if track_objective:
        history.append(dual_objective(sub, g1, g2))

    updates = 0
    converged = False
    while True:
        residual, (_, b, i, j) = _select_pair(blocks, z, g, Q, qdiag)
        if residual <= tol:
            converged = True
            break
        if updates >= max_updates:
            break

        c, lo, up, samp, zb = blocks.c[b], blocks.lo[b], blocks.up[b], blocks.samp[b], z[b]
        n_i, n_j = int(samp[i]), int(samp[j])
        d_i, d_j = c[i], -c[j]
        F_i = c[i] * g[n_i]
        F_j = c[j] * g[n_j]
        curv = qdiag[n_i] + qdiag[n_j] + 2.0 * d_i * d_j * Q[n_i, n_j]
        tmax_i = (up[i] - zb[i]) if c[i] > 0 else (zb[i] - lo[i])
        tmax_j = (zb[j] - lo[j]) if c[j] > 0 else (up[j] - zb[j])
        tau = min(tmax_i, tmax_j)
        if curv > 0.0:
            tau = min(tau, (F_j - F_i) / curv)

        # snap to the exact bound when the step saturates it
        if tau >= tmax_i:
            zb[i] = up[i] if c[i] > 0 else lo[i]
        else:
            zb[i] += d_i * tau
        if tau >= tmax_j:
            zb[j] = lo[j] if c[j] > 0 else up[j]
        else:
            zb[j] += d_j * tau

        step_i = d_i * tau
        step_j = d_j * tau
        s[n_i] += step_i
        s[n_j] += step_j
        g += Q[:, n_i] * step_i
        g += Q[:, n_j] * step_j
        updates += 1
        if track_objective:
            g1t, g2t = blocks.scatter(z, n)
            history.append(dual_objective(sub, g1t, g2t))

    gamma1, gamma2 = blocks.scatter(z, n)
    return DualSolution(
        gamma1=gamma1,
        gamma2=gamma2,
        objective=dual_objective(sub, gamma1, gamma2),
        kkt_residual=residual,
        iterations=updates,
        converged=converged,
        objective_history=history,
    )
