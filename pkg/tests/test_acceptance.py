"""Acceptance criteria 1-9 at their stated tolerances.

Each criterion prints one PASS/FAIL line (visible under ``pytest -v`` and when
the file is run as a script) and then asserts.
"""
import subprocess
import sys
import time
from functools import lru_cache

import numpy as np
import pytest

from quasinv import gns as gnsmod
from quasinv.group import mean_over_group
from quasinv.linalg import Tolerance, matrix_units
from quasinv.modular import (
    ModularFlow,
    cesaro_mean,
    check_ergodic_coincidence,
    check_flow_group_commutation,
    invariance_predicates,
    modular_invariant_expectation,
)
from quasinv.quasi import FaithfulState, classify_invariance, cocycle_residuals, kappa
from quasinv.scenarios import (
    FUZZ_KINDS,
    example1,
    example2,
    example3,
    example4,
    fuzz_instance,
    random_density,
)
from quasinv.tracial import mean_density_checks, tracial_decomposition

TOL9 = Tolerance(1e-9, 0.0)
LN2 = float(np.log(2.0))


def _say(n, ok, detail):
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")


@lru_cache(maxsize=None)
def fuzz_families():
    """100 random families at dims 2-4, all three kinds, groups Z_2..Z_4."""
    out = []
    for i, seq in enumerate(np.random.SeedSequence(2024).spawn(100)):
        rng = np.random.default_rng(seq)
        state, act = fuzz_instance(rng, 2 + i % 3, 2 + (i // 3) % 3, FUZZ_KINDS[i % 3])
        out.append(classify_invariance(state, act, TOL9))
    return tuple(out)


@lru_cache(maxsize=None)
def strong_families():
    """50 strongly quasi-invariant random families (diagonal rho, signed permutations)."""
    out = []
    for i, seq in enumerate(np.random.SeedSequence(4096).spawn(50)):
        rng = np.random.default_rng(seq)
        state, act = fuzz_instance(rng, 2 + i % 3, 2 + (i // 3) % 3, "strong")
        fam = classify_invariance(state, act, TOL9)
        assert fam.strongly_quasi
        out.append(fam)
    return tuple(out)


@lru_cache(maxsize=None)
def example_families():
    out = {}
    for name, scen in (("ex2", example2()), ("ex2-b1", example2(1.0)), ("ex3", example3()),
                       ("ex3-uniform", example3(3, [np.diag([1.0, 3.0])] * 3)),
                       ("ex4", example4(0.7, 0.3)), ("ex4-half", example4(0.5, 0.5))):
        out[name] = classify_invariance(scen.state, scen.action, TOL9)
    return out


# ---------------------------------------------------------------- criteria

def criterion_1():
    start = time.perf_counter()
    beta = LN2
    lam = 1 / (1 + np.exp(-beta))
    scen = example2(beta)
    fam = classify_invariance(scen.state, scen.action)
    act = scen.action
    devs = [np.max(np.abs(fam[k] - np.eye(2))) for k in (0, 2)]
    devs += [np.max(np.abs(fam[k] - np.diag([np.exp(-beta), np.exp(beta)]))) for k in (1, 3)]
    devs.append(np.max(np.abs(kappa(fam) - np.diag([0.75, 1.5]))))
    units = matrix_units(2)
    devs.append(np.max(np.abs(scen.state(kappa(fam) @ units) - np.trace(units, axis1=1, axis2=2) / 2)))
    for a in units:
        s, d = a[0, 0] + a[1, 1], a[0, 1] - a[1, 0]
        devs.append(np.max(np.abs(mean_over_group(act, a) - 0.5 * np.array([[s, d], [-d, s]]))))
    elapsed = time.perf_counter() - start
    worst = float(max(devs))
    ok = worst <= 1e-12 and elapsed < 1.0 and abs(lam - 2 / 3) < 1e-15
    return ok, f"worst deviation {worst:.2e} (<= 1e-12), runtime {elapsed:.3f}s (< 1s)"


def criterion_2():
    start = time.perf_counter()
    worst = 0.0
    fams = list(example_families().values()) + list(fuzz_families())
    for fam in fams:
        res = cocycle_residuals(fam.cocycles, fam.action)
        worst = max(worst, *res.values())
    ex1 = {v.check_id: v for v in example1(3, 0, TOL9).example_verdicts}["ex1.cocycle_law"]
    worst = max(worst, ex1.max_deviation)
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-9 and ex1.holds and elapsed < 30.0
    return ok, (f"{len(fams)} finite families + ex1 (sampled R); worst residual {worst:.2e} (<= 1e-9), "
                f"runtime {elapsed:.2f}s (< 30s)")


def criterion_3():
    tol = Tolerance(1e-8, 0.0)
    fams = [example_families()["ex2"], *strong_families()]
    worst, bad = 0.0, []
    for i, fam in enumerate(fams):
        g = gnsmod.build_gns(fam.state)
        shifts = gnsmod.all_shifts(g, fam)
        vs = [*gnsmod.check_modular_relations(g, fam, shifts, tol),
              gnsmod.check_j_equality(g, fam, shifts, tol), gnsmod.check_natural_cone(g, fam, shifts, tol)]
        for v in vs:
            worst = max(worst, v.max_deviation)
            if not v.holds:
                bad.append((i, v.check_id))
    return not bad, (f"ex2 + {len(fams) - 1} strong fuzz instances, 6 relations + J_g + cone; "
                     f"worst {worst:.2e} (<= 1e-8); failures {bad[:3]}")


def criterion_4():
    fams = dict(example_families())
    fams.update({f"fuzz{i}": f for i, f in enumerate(fuzz_families())})
    fams.update({f"strong{i}": f for i, f in enumerate(strong_families())})
    inconsistent, bicond_bad, info = [], [], {}
    for name, fam in fams.items():
        flow = ModularFlow(fam.state)
        preds = invariance_predicates(flow, fam, TOL9)
        if len(set(preds.values())) != 1:
            inconsistent.append(name)
        v = check_flow_group_commutation(flow, fam.action, TOL9)
        if not v.holds:
            bicond_bad.append(name)
        info[name] = (v.details["commute"], v.details["central_cocycles"])
    designed = (info["ex3-uniform"] == (True, True) and info["ex4"] == (True, True)
                and info["ex2"] == (False, False) and info["ex2-b1"] == (False, False))
    ok = not inconsistent and not bicond_bad and designed
    return ok, (f"{len(fams)} instances; equivalence inconsistent on {inconsistent[:3]}, biconditional "
                f"broken on {bicond_bad[:3]}; designed positives/negatives as expected: {designed}")


def criterion_5():
    fam = example_families()["ex4"]
    flow = ModularFlow(fam.state)
    worst = max(float(np.max(np.abs(mean_over_group(fam.action, e) - modular_invariant_expectation(flow, e))))
                for e in matrix_units(2))
    v = check_ergodic_coincidence(flow, fam, Tolerance(1e-10, 0.0))
    half = example_families()["ex4-half"]
    v_half = check_ergodic_coincidence(ModularFlow(half.state), half, Tolerance(1e-10, 0.0))
    ok = worst <= 1e-10 and v.holds and v_half.status == "not-applicable"
    return ok, f"(0.7, 0.3): max |E_G - T~| = {worst:.2e} (<= 1e-10); lambda = mu: {v_half.status}"


def criterion_6():
    rng = np.random.default_rng(6)
    errs, bounds = [], []
    for _ in range(20):
        rho = random_density(rng, 3)
        flow = ModularFlow(FaithfulState(rho))
        errs.append(max(float(np.max(np.abs(cesaro_mean(flow, e, 200.0, 4001)
                                            - modular_invariant_expectation(flow, e))))
                        for e in matrix_units(3)))
        bounds.append(1.0 / (200.0 * np.min(np.diff(np.log(np.linalg.eigvalsh(rho))))))
    errs = np.array(errs)
    n_bad = int(np.sum(errs > 1e-3))
    return n_bad == 0, (f"{20 - n_bad}/20 instances within 1e-3, worst {errs.max():.2e}; "
                        f"Cesaro truncation bound 1/(T min log-gap) ranges "
                        f"{min(bounds):.1e}..{max(bounds):.1e}")


def criterion_7():
    fams = [example_families()[k] for k in ("ex2", "ex2-b1", "ex3", "ex3-uniform", "ex4", "ex4-half")]
    fams += list(strong_families())
    block_bad, disagree, worst = [], [], 0.0
    for i, fam in enumerate(fams):
        g = gnsmod.build_gns(fam.state)
        shifts = gnsmod.all_shifts(g, fam)
        p = gnsmod.projection_PG(g, shifts)
        v = gnsmod.lifted_expectation_checks(g, fam, p, shifts, TOL9)
        worst = max(worst, v.max_deviation)
        if not v.holds:
            block_bad.append(i)
        if not gnsmod.compressed_abelianness(g, fam, p, shifts, TOL9)["agree"]:
            disagree.append(i)
    fam = example_families()["ex2"]
    g = gnsmod.build_gns(fam.state)
    shifts = gnsmod.all_shifts(g, fam)
    rep = gnsmod.subgroup_chain_limit(g, fam, [[0], [0, 2], [0, 1, 2, 3]], shifts, TOL9)
    st = rep["stages"]
    nested = all(s["nested_deviation"] <= 1e-9 for s in st)
    ranks = [s["rank"] for s in st]
    exact = rep["final_projection_equal"] and st[-1]["limit_deviation"] <= 1e-9
    ok = not block_bad and not disagree and nested and exact
    return ok, (f"{len(fams)} instances; block worst {worst:.2e} (<= 1e-9), agree=false on {disagree}; "
                f"ex2 chain ranks {ranks}, nested {nested}, final stage exact {exact}")


def _lstsq_residual(c, basis):
    a = np.array([b.reshape(-1) for b in basis]).T
    coef, *_ = np.linalg.lstsq(a, c.reshape(-1), rcond=None)
    return float(np.linalg.norm(a @ coef - c.reshape(-1)))


def criterion_8():
    fams = [f for f in (*example_families().values(), *fuzz_families(), *strong_families()) if f.strongly_quasi]
    mean_bad, recon = [], 0.0
    for i, fam in enumerate(fams):
        if not mean_density_checks(fam.state, fam, TOL9)[0].holds:
            mean_bad.append(i)
        recon = max(recon, tracial_decomposition(fam.state, fam, TOL9).residuals["reconstruction"])
    ex2 = example_families()["ex2"]
    r2 = tracial_decomposition(ex2.state, ex2, TOL9).c_in_FG_residual
    oracle = _lstsq_residual(ex2.state.density, [np.eye(2), np.array([[0.0, 1.0], [-1.0, 0.0]])])
    ex4 = example_families()["ex4"]
    r4 = tracial_decomposition(ex4.state, ex4, TOL9).c_in_FG_residual
    ok = not mean_bad and recon <= 1e-10 and r2 > 0 and abs(r2 - oracle) <= 1e-10 and r4 <= 1e-12
    return ok, (f"{len(fams)} strongly quasi-invariant instances; mean_density failures {mean_bad[:3]}; "
                f"reconstruction {recon:.2e}; ex2 residual {r2:.12f} vs lstsq {oracle:.12f}; ex4 {r4:.1e}")


def criterion_9():
    cmd = [sys.executable, "-m", "quasinv", "fuzz", "--dim", "3", "--group", "cyclic:3",
           "--trials", "50", "--seed", "7"]
    runs = [subprocess.run(cmd, capture_output=True, check=False) for _ in range(2)]
    same = runs[0].stdout == runs[1].stdout and len(runs[0].stdout) > 0
    return same, (f"two runs byte-identical: {same} ({len(runs[0].stdout)} bytes, "
                  f"exit codes {[r.returncode for r in runs]})")


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9]


@pytest.mark.parametrize("n", range(1, 10))
def test_acceptance(n, capsys):
    ok, detail = CRITERIA[n - 1]()
    with capsys.disabled():
        print()
        _say(n, ok, detail)
    assert ok, detail


if __name__ == "__main__":
    results = []
    for n, crit in enumerate(CRITERIA, 1):
        ok, detail = crit()
        _say(n, ok, detail)
        results.append(ok)
    sys.exit(0 if all(results) else 1)
