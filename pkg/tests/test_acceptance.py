"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest -s tests/test_acceptance.py` to see the per-criterion
lines as they complete.  The cross-validation sweeps behind criteria
10 to 12 take a few minutes each; they are computed once per session and
shared.
"""

import time

import numpy as np
import pytest

from rampreject.data import Dataset, gen_diagonal_band, gen_synth1, gen_synth2
from rampreject.evaluation import evaluate, kfold_cv
from rampreject.kernels import KernelSpec
from rampreject.losses import loss_0d1, loss_double_ramp, loss_ramp
from rampreject.qp import DualSubproblem, kkt_residual, solve_dual
from rampreject.trainer import (
    DCState,
    Hyperparams,
    expected_dual_cells,
    majorizer_value,
    regularized_risk,
    train,
)

from qp_reference import reference_minimize

BENCH_SEED = 0
D_SWEEP = [round(0.05 * i, 2) for i in range(1, 11)]


def report(num, desc, ok, detail=""):
    line = f"[ACCEPTANCE {num:02d}] {'PASS' if ok else 'FAIL'} {desc}"
    if detail:
        line += f" ({detail})"
    print(line, flush=True)
    assert ok, line


def random_tuples(rng, count):
    m = rng.uniform(-10, 10, count)
    rho = rng.uniform(0, 5, count)
    mu = rng.uniform(np.nextafter(0, 1), 1.0, count)
    d = rng.uniform(np.nextafter(0, 1), 0.5, count)
    return m, rho, d, mu


def test_criterion_01_loss_dominance():
    rng = np.random.default_rng(101)
    m, rho, d, mu = random_tuples(rng, 100_000)
    t0 = time.perf_counter()
    violations = int(np.sum(loss_double_ramp(m, rho, d, mu) < loss_0d1(m, rho, d)))
    elapsed = time.perf_counter() - t0
    report(
        1,
        "double ramp dominates the 0-d-1 loss on 1e5 random tuples",
        violations == 0 and elapsed < 1.0,
        f"violations={violations}, {elapsed:.2f}s",
    )


def test_criterion_02_pointwise_limit():
    rng = np.random.default_rng(102)
    mu = 1e-3
    m = rng.uniform(-10, 10, 100_000)
    rho = rng.uniform(0, 5, 100_000)
    d = rng.uniform(1e-6, 0.5, 100_000)
    away = (np.abs(m - rho) > 2 * mu) & (np.abs(m + rho) > 2 * mu)
    diff = np.abs(loss_double_ramp(m, rho, d, mu) - loss_0d1(m, rho, d))
    worst = float(diff[away].max())
    report(
        2,
        "small-slope double ramp converges to the 0-d-1 loss",
        worst <= mu,
        f"worst={worst:.2e} over {int(away.sum())} tuples",
    )


def test_criterion_03_plateau_and_bound():
    rng = np.random.default_rng(103)
    plateau_exact = True
    bound_ok = True
    attained_ok = True
    for _ in range(2000):
        mu = float(rng.uniform(0.05, 1.0))
        d = float(rng.uniform(1e-6, 0.5))
        rho = float(rng.uniform(0, 5))
        lo, hi = -rho + mu, rho - mu * mu
        if hi - lo > 1e-9:
            eps = 1e-9 * (1 + abs(lo) + abs(hi))
            for m in (lo + eps, (lo + hi) / 2, hi - eps):
                if loss_double_ramp(m, rho, d, mu) != d * (1.0 + mu):
                    plateau_exact = False
        m = float(rng.uniform(-10, 10))
        if loss_double_ramp(m, rho, d, mu) > 1.0 + mu:
            bound_ok = False
        if loss_double_ramp(-rho - mu * mu - 1e-6, rho, d, mu) != 1.0 + mu:
            attained_ok = False
    report(
        3,
        "plateau value d(1+mu) exact, global bound 1+mu attained below the band",
        plateau_exact and bound_ok and attained_ok,
    )


def test_criterion_04_rho_zero_reduction():
    margins = np.linspace(-12, 12, 10_000)
    exact = True
    for d in (0.05, 0.2, 0.5):
        for mu in (0.1, 0.55, 1.0):
            dr = loss_double_ramp(margins, 0.0, d, mu)
            ramp = loss_ramp(margins, mu)
            if not np.array_equal(dr, ramp):
                exact = False
    report(4, "zero-bandwidth double ramp equals the single ramp exactly", exact)


def test_criterion_05_majorization():
    rng = np.random.default_rng(105)
    bound_ok = True
    tangent_ok = True
    for _ in range(100):
        n = int(rng.integers(2, 31))
        X = rng.normal(size=(n, int(rng.integers(1, 4))))
        y = rng.choice([-1.0, 1.0], n)
        from rampreject.kernels import gram_matrix

        K = gram_matrix(KernelSpec("linear"), X)
        hyper = Hyperparams(
            C=float(rng.uniform(0.3, 4)), d=float(rng.uniform(0.02, 0.5)),
            mu=float(rng.uniform(0.1, 1.0)), kernel=KernelSpec("linear"),
        )

        def state():
            return DCState(
                gamma1=rng.normal(0, 0.4, n), gamma2=rng.normal(0, 0.4, n),
                beta1=np.zeros(n), beta2=np.zeros(n),
                b=float(rng.normal(0, 0.5)), rho=float(rng.uniform(0, 1.5)),
            )

        anchor, probe = state(), state()
        risk_anchor = regularized_risk(anchor.gamma1, anchor.gamma2, anchor.b, anchor.rho, K, y, hyper)
        risk_probe = regularized_risk(probe.gamma1, probe.gamma2, probe.b, probe.rho, K, y, hyper)
        if majorizer_value(probe, anchor, K, y, hyper) < risk_probe - 1e-9:
            bound_ok = False
        if abs(majorizer_value(anchor, anchor, K, y, hyper) - risk_anchor) > 1e-10 * (1 + abs(risk_anchor)):
            tangent_ok = False
    report(5, "majorizer dominates the risk and is tangent at its anchor", bound_ok and tangent_ok)


def _random_training_dataset(rng, n):
    p = int(rng.integers(2, 5))
    X = np.vstack([rng.normal(-1, 1, (n // 2, p)), rng.normal(1, 1, (n - n // 2, p))])
    y = np.concatenate([-np.ones(n // 2, int), np.ones(n - n // 2, int)])
    flip = rng.random(n) < 0.15
    y[flip] = -y[flip]
    return Dataset(X=X, y=y)


@pytest.fixture(scope="module")
def training_runs():
    rng = np.random.default_rng(1006)
    runs = []
    t0 = time.perf_counter()
    for trial in range(50):
        n = int(rng.integers(10, 101))
        ds = _random_training_dataset(rng, n)
        kern = (
            KernelSpec("linear")
            if trial % 2
            else KernelSpec("rbf", gamma=float(rng.uniform(0.1, 2.0)))
        )
        hyper = Hyperparams(
            C=float(rng.uniform(0.5, 8)), d=float(rng.uniform(0.05, 0.5)),
            mu=float(rng.choice([0.25, 0.5, 1.0])), kernel=kern,
        )
        model, state = train(ds, hyper)
        runs.append((ds, hyper, model, state))
    return runs, time.perf_counter() - t0


def test_criterion_06_dc_descent(training_runs):
    runs, elapsed = training_runs
    worst = -np.inf
    for _, _, _, state in runs:
        rh = state.risk_history
        worst = max(worst, max(rh[i + 1] - rh[i] for i in range(len(rh) - 1)))
    report(
        6,
        "risk history non-increasing on 50 seeded trainings",
        worst <= 1e-8 and elapsed < 60.0,
        f"worst step={worst:+.2e}, {elapsed:.1f}s",
    )


def test_criterion_07_nonnegative_bandwidth(training_runs):
    runs, _ = training_runs
    lowest = min(state.rho for _, _, _, state in runs)
    report(7, "final band half-width never below -1e-6", lowest >= -1e-6, f"min rho={lowest:.2e}")


def _random_qp_instance(rng):
    n = int(rng.integers(2, 7))
    p = int(rng.integers(1, 4))
    X = rng.normal(0, 1, (n, p))
    if rng.random() < 0.3 and n >= 3:
        X[1] = X[0]
    if rng.random() < 0.5:
        K = X @ X.T
    else:
        sq = ((X[:, None, :] - X[None, :, :]) ** 2).sum(-1)
        K = np.exp(-rng.uniform(0.1, 2.0) * sq)
    K = (K + K.T) / 2
    y = rng.choice([-1.0, 1.0], n)
    C = rng.uniform(0.25, 4)
    d = rng.uniform(0.05, 0.5)
    mu = rng.uniform(0.2, 1.0)
    b1 = np.where(rng.random(n) < 0.3, C * d / mu, 0.0)
    b2 = np.where(rng.random(n) < 0.3, C * (1 - d) / mu, 0.0)
    return DualSubproblem(
        gram=K, labels=y, mu=mu,
        lower1=-b1, upper1=C * d / mu - b1,
        lower2=-b2, upper2=C * (1 - d) / mu - b2,
    )


def test_criterion_08_qp_matches_oracle():
    rng = np.random.default_rng(108)
    subs = [_random_qp_instance(rng) for _ in range(200)]
    refs, _ = reference_minimize(subs, iterations=30_000)
    worst_obj = 0.0
    worst_kkt = 0.0
    worst_eq = 0.0
    for sub, ref in zip(subs, refs):
        sol = solve_dual(sub, tol=1e-6)
        worst_obj = max(worst_obj, abs(sol.objective - ref))
        worst_kkt = max(worst_kkt, kkt_residual(sub, sol.gamma1, sol.gamma2))
        worst_eq = max(
            worst_eq,
            abs(float(np.sum(sub.labels * (sol.gamma1 + sol.gamma2)))),
            abs(float(np.sum(sol.gamma1 - sol.gamma2))),
        )
    ok = worst_obj <= 1e-4 and worst_kkt <= 1e-6 and worst_eq <= 1e-8
    report(
        8,
        "dual solver matches the projected-descent oracle on 200 instances",
        ok,
        f"obj={worst_obj:.2e}, kkt={worst_kkt:.2e}, eq={worst_eq:.2e}",
    )


def test_criterion_09_converged_coefficient_table(training_runs):
    runs, _ = training_runs
    conforming = True
    structure_ok = True
    double_nonzero = 0
    for ds, hyper, model, state in runs:
        f = model.decision_function(ds.X)
        margins = ds.y * f
        cells1, cells2 = expected_dual_cells(
            margins, state.rho, state.beta1, state.beta2, hyper, tol=1e-5
        )
        slack1 = 1e-4 * hyper.width1
        slack2 = 1e-4 * hyper.width2
        ok1 = (state.gamma1 >= cells1[:, 0] - slack1) & (state.gamma1 <= cells1[:, 1] + slack1)
        ok2 = (state.gamma2 >= cells2[:, 0] - slack2) & (state.gamma2 <= cells2[:, 1] + slack2)
        if not (ok1.all() and ok2.all()):
            conforming = False
        # a sample may hold two nonzero coordinates only where its own
        # converged cell prescribes it (the two ramp windows intersect when
        # 2*rho < mu + mu^2, pinning both coordinates at their caps there)
        both = (np.abs(state.gamma1) > slack1) & (np.abs(state.gamma2) > slack2)
        allowed1 = np.maximum(np.abs(cells1[:, 0]), np.abs(cells1[:, 1])) > slack1
        allowed2 = np.maximum(np.abs(cells2[:, 0]), np.abs(cells2[:, 1])) > slack2
        if np.any(both & ~(allowed1 & allowed2)):
            structure_ok = False
        double_nonzero += int(np.sum(both))
    report(
        9,
        "converged dual coordinates match their margin-category cells",
        conforming and structure_ok,
        f"double-nonzero samples confined to intersecting ramp windows: {double_nonzero}",
    )


@pytest.fixture(scope="module")
def synth1_sweep():
    ds = gen_synth1(BENCH_SEED)
    out = {}
    for d in D_SWEEP:
        hyper = Hyperparams(C=2.0, d=d, kernel=KernelSpec("linear"))
        t0 = time.perf_counter()
        out[d] = (kfold_cv(ds, hyper, k=10, repetitions=10, seed=BENCH_SEED), time.perf_counter() - t0)
    return out


@pytest.fixture(scope="module")
def synth2_sweep():
    ds, _ = gen_synth2(BENCH_SEED)
    out = {}
    for d in D_SWEEP:
        hyper = Hyperparams(C=64.0, d=d, kernel=KernelSpec("rbf", gamma=0.25))
        t0 = time.perf_counter()
        out[d] = (kfold_cv(ds, hyper, k=10, repetitions=10, seed=BENCH_SEED), time.perf_counter() - t0)
    return out


def test_criterion_10_synth1_reproduction(synth1_sweep):
    rep5, sec5 = synth1_sweep[0.5]
    rep45, sec45 = synth1_sweep[0.45]
    risk5 = rep5.risk_mean_std[0]
    rr5 = rep5.rr_mean_std[0]
    acc5 = rep5.acc_mean_std[0]
    risk45 = rep45.risk_mean_std[0]
    rr45 = rep45.rr_mean_std[0]
    ok = (
        0.09 <= risk5 <= 0.19
        and rr5 <= 0.03
        and acc5 >= 0.82
        and risk45 <= 0.19
        and rr45 <= 0.06
        and sec5 < 300
        and sec45 < 300
    )
    report(
        10,
        "box-mixture benchmark risk/rejection inside the target bands (linear kernel)",
        ok,
        f"d=0.5: risk={risk5:.3f} RR={100*rr5:.2f}% acc={100*acc5:.2f}% [{sec5:.0f}s]; "
        f"d=0.45: risk={risk45:.3f} RR={100*rr45:.2f}% [{sec45:.0f}s]",
    )


def test_criterion_11_synth2_reproduction(synth2_sweep):
    rep5, _ = synth2_sweep[0.5]
    risk5 = rep5.risk_mean_std[0]
    rr5 = rep5.rr_mean_std[0]
    ok = 0.13 <= risk5 <= 0.23 and rr5 <= 0.03
    report(
        11,
        "gaussian-mixture benchmark risk/rejection inside the target bands (RBF kernel)",
        ok,
        f"d=0.5: risk={risk5:.3f} RR={100*rr5:.2f}%",
    )


def test_criterion_12_rejection_trend(synth1_sweep, synth2_sweep):
    ok = True
    details = []
    for name, sweep in (("boxes", synth1_sweep), ("mixtures", synth2_sweep)):
        rr = [sweep[d][0].rr_mean_std[0] for d in D_SWEEP]
        violations = [rr[i + 1] - rr[i] for i in range(len(rr) - 1) if rr[i + 1] > rr[i]]
        if len(violations) > 1 or any(v > 0.03 for v in violations):
            ok = False
        details.append(f"{name}: RR%=[{', '.join(f'{100*v:.1f}' for v in rr)}]")
    report(12, "rejection rate decreases along the d sweep", ok, "; ".join(details))


def test_criterion_13_diagonal_band_illustration():
    ds = gen_diagonal_band(BENCH_SEED)
    hyper = Hyperparams(
        C=100.0, d=0.2, kernel=KernelSpec("linear"), dc_tol=1e-6, qp_tol=1e-8
    )
    model, state = train(ds, hyper)
    metrics = evaluate(model, ds, hyper.d)
    margins = ds.y * model.decision_function(ds.X)
    keep = np.abs(state.gamma1 + state.gamma2) > 1e-10
    mu, rho = hyper.mu, state.rho
    tol = hyper.sv_tol
    localized = np.all(
        ((margins[keep] >= rho - mu * mu - tol) & (margins[keep] <= rho + mu + tol))
        | ((margins[keep] >= -rho - mu * mu - tol) & (margins[keep] <= -rho + mu + tol))
    )
    acc = metrics.accuracy_unrejected
    ok = (
        0.05 <= metrics.rejection_rate <= 0.40
        and acc is not None
        and acc >= 0.88
        and bool(localized)
    )
    report(
        13,
        "diagonal-band run rejects the noisy band and keeps support vectors on the ramps",
        ok,
        f"RR={100*metrics.rejection_rate:.1f}% acc={100*acc:.1f}% "
        f"sv={int(keep.sum())} localized={bool(localized)}",
    )
