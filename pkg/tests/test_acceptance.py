"""Acceptance suite, one ``test_criterion_<n>_...`` group per criterion.

The pass/fail line for each criterion is printed in the terminal summary
(see ``conftest.py``).
"""
import json
import math
import time
from dataclasses import replace

import numpy as np
import pytest

from gcbopt.curvature import (HoelderModel, QuadraticModel, delta_plus_and_lip,
                              example_1_1_model, gamma_hat, gamma_simple, invert_mu,
                              invert_sigma, mu_hat, sigma_hat)
from gcbopt.empirical import estimate_gcb
from gcbopt.harness import run_benchmark, sufficient_iterations, verify_trace
from gcbopt.problems import builtin_problem
from gcbopt.solvers import ggm_solve, solve
from gcbopt.trace import SolverConfig, Trace

TOL = 1e-10
MODELS = {
    "quadratic L=0.5": QuadraticModel(L=0.5),
    "quadratic L=1": QuadraticModel(L=1.0),
    "quadratic L=4": QuadraticModel(L=4.0),
    "hoelder nu=0": HoelderModel(nu=0.0, L=1.0),
    "hoelder nu=0.25": HoelderModel(nu=0.25, L=1.0),
    "hoelder nu=0.5": HoelderModel(nu=0.5, L=1.0),
    "hoelder nu=1": HoelderModel(nu=1.0, L=1.0),
    "sum quadratic + 3/2-power": example_1_1_model(),
}
GRID = np.linspace(0.05, 3.2, 64)
BETAS = np.arange(1, 10) / 10


def report(n, msg):
    print(f"[criterion {n}] {msg}")


# 1 -------------------------------------------------------------------------------------

def _tol(v):
    return TOL * (1.0 + abs(v))


@pytest.mark.parametrize("label", list(MODELS))
def test_criterion_1_gcb_properties(label):
    m = MODELS[label]
    mu = np.array([mu_hat(m, t) for t in GRID])
    sg = np.array([sigma_hat(m, t) for t in GRID])
    for t, mt, st in zip(GRID, mu, sg):
        assert mt <= 2 * st + _tol(mt)
        assert st <= mt + _tol(mt)
        for b in BETAS:
            mb = mu_hat(m, b * t)
            assert mb >= b * b * mt - _tol(mt)
            assert mb <= b * mt + _tol(mt)
    # tangent bound and midpoint concavity of sigma_hat(sqrt(.)) on all grid pairs
    for r, mr, sr in zip(GRID, mu, sg):
        rhs = sr - 0.5 * mr + 0.5 * (GRID / r) ** 2 * mr
        assert np.all(sg <= rhs + TOL * (1 + np.abs(rhs)))
    sq = GRID ** 2
    for a in sq:
        mid = np.array([sigma_hat(m, math.sqrt((a + b) / 2)) for b in sq])
        avg = 0.5 * (sigma_hat(m, math.sqrt(a)) + np.array([sigma_hat(m, math.sqrt(b)) for b in sq]))
        assert np.all(mid >= avg - TOL * (1 + avg))
    dl = np.array([delta_plus_and_lip(m, r) for r in GRID])
    assert np.all(np.diff(dl[:, 0]) >= -TOL * (1 + np.abs(dl[1:, 0])))
    assert np.all(np.diff(dl[:, 1]) <= TOL * (1 + np.abs(dl[1:, 1])))
    # gauge sandwich, with the grid values read as accuracies
    for e in GRID:
        s, sh = invert_mu(m, e), invert_sigma(m, e)
        for b in BETAS:
            sb = invert_mu(m, b * e)
            assert b * s <= sb * (1 + TOL)
            assert sb <= math.sqrt(b) * s * (1 + TOL)
            assert invert_sigma(m, b * e) <= math.sqrt(b) * sh * (1 + TOL)
    g = np.array([gamma_simple(m, e) for e in GRID])
    gh = np.array([gamma_hat(m, e) for e in GRID])
    assert np.all(np.diff(g) <= 1e-8 * g[1:])
    assert np.all(np.diff(gh) <= 1e-8 * gh[1:])
    report(1, f"{label}: all curvature invariants hold on 64 points")


# 2 -------------------------------------------------------------------------------------

def test_criterion_2_empirical_quadratic():
    p = builtin_problem("quadratic", 1, {"spectrum": "flat", "L": 1.0}, x0=[0.0])
    lo, hi = p.sample_box
    assert lo[0] == -1.0 and hi[0] == 1.0
    grid = np.linspace(2.0 / 64, 2.0, 64)
    per_bin = math.ceil(100_000 / grid.size)
    curve = estimate_gcb(p, grid, pairs_per_bin=per_bin, seed=0)
    rel = np.abs(curve.mu_values[1:] / (0.5 * grid ** 2) - 1.0)
    report(2, f"quadratic: {per_bin * grid.size} pairs, max relative error {rel.max():.2e}")
    assert np.all(rel <= 0.05)


def test_criterion_2_empirical_linear():
    p = builtin_problem("linear", 1, x0=[0.0])
    curve = estimate_gcb(p, np.linspace(2.0 / 64, 2.0, 64), pairs_per_bin=200, seed=0)
    report(2, f"linear: max sampled value {curve.mu_values.max()}")
    assert np.all(curve.mu_values == 0.0)


# 3 -------------------------------------------------------------------------------------

@pytest.mark.parametrize("L", [0.5, 1.0, 4.0])
def test_criterion_3_quadratic_exact(L):
    m = QuadraticModel(L=L)
    for r in np.concatenate([GRID, np.geomspace(1e-6, 1e6, 64)]):
        d, lip = delta_plus_and_lip(m, r)
        assert abs(d) <= 1e-14 and abs(lip - L) <= 1e-14 * L
    report(3, f"L={L}: (delta_plus, lip) = (0, L) on 128 probes")


# 4 -------------------------------------------------------------------------------------

def test_criterion_4_ggm():
    n = 10
    p = builtin_problem("quadratic", n, {"spectrum": "flat"}, x0=np.full(n, math.sqrt(0.2)))
    delta0 = float(p.f_oracle(p.x0)[0]) - p.f_star
    assert delta0 == pytest.approx(1.0, rel=1e-14)
    cfg = SolverConfig(delta=0.1, L0=1e-3)
    run, tr = ggm_solve(p, cfg)
    N = sufficient_iterations(p.known_model, "ggm", delta0, 0.1)
    M_max = max(run.M_bar, cfg.L0, *tr.column("L"))
    cap = gamma_hat(p.known_model, 2 * delta0 / N)
    report(4, f"stop after {len(tr)} iterations (bound {N}), |g| = {run.grad_map_norm:.3g}, "
              f"max M = {M_max:.4g}, gamma_hat = {cap:.6g}")
    assert N == 801
    assert run.termination == "gradient_norm" and run.grad_map_norm <= 0.1
    assert len(tr) <= N
    assert M_max <= 1.0 + 1e-9
    rep, viol = verify_trace(tr, p, cfg=cfg, delta0=delta0)
    assert viol == [] and rep.passed


# 5, 6 ----------------------------------------------------------------------------------

def _quad20():
    return builtin_problem("quadratic", 20, {"L": 1.0}, x0=np.ones(20))


@pytest.mark.parametrize("method", ["pgm", "dgm"])
@pytest.mark.parametrize("eps", [1e-1, 1e-2])
def test_criterion_5_primal_dual_rate(method, eps):
    p = _quad20()
    D = p.D()
    assert D == pytest.approx(10.0, rel=1e-14)
    cfg = SolverConfig(eps=eps)
    run, tr = solve(method, p, cfg)
    bound = math.ceil(4 * 1.0 * D / eps)
    gamma = gamma_simple(p.known_model, eps)
    report(5, f"{method} eps={eps:g}: {len(tr)} iterations (bound {bound}), certified gap "
              f"{run.certified_gap:.3g}, true gap {run.averaged_f_tilde - p.f_star:.3g}, "
              f"max L {max(tr.column('L')):.4g} (gamma {gamma:.6g})")
    assert run.termination == "accuracy"
    assert run.certified_gap <= eps
    assert run.averaged_f_tilde - p.f_star <= eps
    assert len(tr) <= bound
    assert gamma == pytest.approx(1.0, rel=1e-9)
    assert all(L <= gamma * (1 + 1e-12) for L in tr.column("L"))
    _, viol = verify_trace(tr, p, cfg=cfg)
    assert viol == []


@pytest.mark.parametrize("eps", [1e-2, 1e-4])
def test_criterion_6_fast_rate(eps):
    p = _quad20()
    D = p.D()
    cfg = SolverConfig(eps=eps)
    run, tr = solve("ufgm", p, cfg)
    bound = math.ceil(4 * math.sqrt(1.0 * D / eps)) - 1
    k_last = len(tr) - 1
    report(6, f"ufgm eps={eps:g}: last index {k_last} (bound {bound}), gap "
              f"{run.f_tilde - p.f_star:.3g}, certified {run.certified_gap:.3g}")
    assert run.termination == "accuracy"
    assert run.f_tilde - p.f_star <= eps and run.certified_gap <= eps
    assert k_last <= bound
    tau_prev = math.inf
    for r in tr:
        rhs = r.phi_star
        assert r.A * (r.f_tilde - eps / 2) <= rhs + 1e-9 * (1 + abs(rhs))
        assert r.tau <= 2 / (r.k + 1) * (1 + 1e-9)
        assert r.tau <= tau_prev * (1 + 1e-9)
        tau_prev = r.tau
    _, viol = verify_trace(tr, p, cfg=cfg)
    assert viol == []


# 7 -------------------------------------------------------------------------------------

def test_criterion_7_hoelder_slope():
    p = builtin_problem("hoelder", 10, {"nu": 0.5})
    x = np.array([0.3, -1.2, 2.0])
    assert float(builtin_problem("hoelder", 3, {"nu": 0.5}).f_oracle(x)[0]) == pytest.approx(
        2 / 3 * np.sum(np.abs(x) ** 1.5), rel=1e-14)
    eps_list = [1e-1, 1e-2, 1e-3, 1e-4]
    achieved, sufficient = [], []
    for eps in eps_list:
        cfg = SolverConfig(eps=eps)
        _, tr = solve("ufgm", p, cfg)
        rep, viol = verify_trace(tr, p, cfg=cfg)
        assert viol == []
        achieved.append(rep.achieved_k)
        sufficient.append(rep.sufficient_k)
    slope = np.polyfit(np.log(eps_list), np.log(achieved), 1)[0]
    report(7, f"achieved {achieved}, sufficient {sufficient}, slope {slope:.4f} (target -0.8)")
    assert abs(slope + 0.8) <= 0.15
    assert all(a <= s for a, s in zip(achieved, sufficient))


# 8 -------------------------------------------------------------------------------------

def test_criterion_8_sum_class():
    t0 = time.perf_counter()
    p = builtin_problem("example_1_1")
    model = example_1_1_model(1)
    assert p.known_model == model and p.D() == 0.5
    lines = []
    for method in ("ufgm", "pgm"):
        for eps in (1e-1, 1e-2, 1e-3):
            cfg = SolverConfig(eps=eps)
            _, tr = solve(method, p, cfg)
            rep, viol = verify_trace(tr, p, model=model, cfg=cfg)
            assert viol == []
            assert rep.achieved_k <= rep.sufficient_k
            lines.append(f"{method} eps={eps:g}: {rep.achieved_k}/{rep.sufficient_k}")
    elapsed = time.perf_counter() - t0
    report(8, "; ".join(lines) + f"; {elapsed:.1f} s")
    assert elapsed < 30


# 9 -------------------------------------------------------------------------------------

SUITE = {"problems": [
    {"name": "quad", "problem": "quadratic", "dim": 20},
    {"name": "l1", "problem": "l1_quadratic", "dim": 10},
    {"name": "box", "problem": "box_quadratic", "dim": 10},
    {"name": "simplex", "problem": "simplex_quadratic", "dim": 8},
    {"name": "hoelder", "problem": "hoelder", "dim": 10, "params": {"nu": 0.5}},
    {"name": "example", "problem": "example_1_1", "dim": 1},
]}


def test_criterion_9_line_search_accounting(tmp_path):
    methods = ["pgm", "dgm", "ufgm", "ggm"]
    eps_list = [1e-1, 1e-2]
    reports = run_benchmark(SUITE, methods, eps_list, tmp_path, SolverConfig(L0=1e-3))
    assert len(reports) == len(SUITE["problems"]) * len(methods) * len(eps_list)
    checked = 0
    for spec in SUITE["problems"]:
        p = builtin_problem(spec["problem"], spec["dim"], spec.get("params"))
        for method in methods:
            for eps in eps_list:
                stem = tmp_path / f"{spec['name']}_{method}_{eps:.0e}".replace("+", "")
                doc = json.loads(stem.with_suffix(".json").read_text())
                assert doc["error"] is None
                tr = Trace.from_csv(stem.with_suffix(".csv"), method)
                i = np.array(tr.column("i_k"), dtype=int)
                # the fast method never lowers L; the others halve after each accepted step
                net = int(i.sum()) if method == "ufgm" else int((i - 1).sum())
                assert net == math.log2(doc["L_final"] / 1e-3)
                names = {v["name"] for v in doc["violations"]}
                assert "doubling_count" not in names and "oracle_calls_bound" not in names
                if method == "ufgm":
                    D = p.D()
                    m2 = mu_hat(p.known_model, 2 * math.sqrt(D))
                    cap = 1 + math.log2(gamma_simple(p.known_model, eps ** 3 / (4 * m2 ** 2))) \
                        - math.log2(1e-3)
                    for r in tr:
                        if r.A <= 2 * D / eps:
                            assert math.log2(r.L / 1e-3) <= cap + 1e-9
                checked += 1
    report(9, f"{checked} benchmark runs: doublings reconcile with L_final exactly; "
              f"fast-method doubling cap holds")


# 10 ------------------------------------------------------------------------------------

def _clean(method, eps):
    p = _quad20()
    cfg = SolverConfig(eps=eps)
    _, tr = solve(method, p, cfg)
    _, viol = verify_trace(tr, p, cfg=cfg)
    assert viol == []
    return p, cfg, tr


def _flags(tr, p, cfg):
    return [(v.name, v.iteration) for v in verify_trace(tr, p, cfg=cfg)[1]]


def test_criterion_10_corrupted_tau():
    p, cfg, tr = _clean("ufgm", 1e-3)
    tr.records[5] = replace(tr[5], tau=min(1.0, 3 * tr[5].tau))
    flags = _flags(tr, p, cfg)
    report(10, f"tau corrupted at k=5 -> {flags}")
    assert ("tau_monotone", 5) in flags and ("tau_bound", 5) in flags


def test_criterion_10_corrupted_certificate():
    p, cfg, tr = _clean("ufgm", 1e-3)
    k = 9
    r = tr[k]
    tr.records[k] = replace(r, phi_star=r.A * (r.f_tilde - cfg.eps / 2) - 0.5)
    flags = _flags(tr, p, cfg)
    report(10, f"certificate corrupted at k={k} -> {flags}")
    assert flags == [("estimate_certificate", k)]


@pytest.mark.parametrize("method", ["pgm", "ufgm"])
def test_criterion_10_corrupted_doubling(method):
    p, cfg, tr = _clean(method, 1e-2)
    k = 6
    tr.records[k] = replace(tr[k], i_k=tr[k].i_k + 1)
    flags = _flags(tr, p, cfg)
    report(10, f"{method}: doubling count corrupted at k={k} -> {flags}")
    assert [f for f in flags if f[0] == "l_update"] == [("l_update", k)]
