"""Check registry, per-scenario runner, fuzz aggregation and report rendering."""
from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from . import gns as gnsmod
from . import modular as mod
from . import quasi as qmod
from . import tracial as tmod
from .group import cyclic_subgroup_chain
from .linalg import DEFAULT_TOL, Tolerance
from .scenarios import FUZZ_KINDS, Scenario, fuzz_instance
from .verdict import FAILS, HOLDS, HYP_NONE, NOT_APPLICABLE, Verdict, not_applicable, round_sig

SCHEMA = 1
GNS_MAX_BASE_DIM = 8  # GNS space of dimension 64; larger spaces are reported not-applicable

QUASI_IDS = (
    "quasi.defining_relation", "quasi.cocycle_identity", "quasi.cocycle_chain", "quasi.cocycle_inverse",
    "quasi.cocycle_adjoint_relation", "quasi.strong_structure", "quasi.kappa_centralizers",
    "quasi.averaged_state", "quasi.fixed_cocycle_lemma",
)
MODULAR_IDS = (
    "modular.flow_laws", "modular.expectation_properties", "modular.group_mean_properties",
    "modular.twisted_flow", "modular.factor_cocycle_relation", "modular.flow_group_commutation",
    "modular.invariant_case", "modular.state_level_commutation", "modular.mean_state_level",
    "modular.mean_map_level", "modular.sufficient_condition", "modular.inclusion",
    "modular.ergodic_coincidence", "modular.invariance_equivalence",
)
GNS_IDS = (
    "gns.structure", "gns.modular_flow_consistency", "gns.shift_state", "gns.natural_cone",
    "gns.j_equality", "gns.unitary_maps", "gns.representation", "gns.covariance",
    *gnsmod.MODULAR_RELATION_IDS,
    "gns.projection", "gns.lifted_expectation", "gns.compressed_abelianness", "gns.subgroup_chain",
)
TRACIAL_IDS = ("tracial.mean_density", "tracial.decomposition")
EXAMPLE_IDS = ("ex1.quasi_invariance", "ex1.cocycle_law", "ex1.normalization",
               "ex2.closed_forms", "ex3.closed_forms", "ex4.spin_flip")
REGISTRY = QUASI_IDS + MODULAR_IDS + GNS_IDS + TRACIAL_IDS + EXAMPLE_IDS

# in-scope results of the source article -> check ids that exercise them
TRACEABILITY = {
    "Definition (quasi-invariant state, Radon-Nikodym cocycle)": ["quasi.defining_relation"],
    "Definition (strongly quasi-invariant state)": ["quasi.strong_structure"],
    "Remark (normalized multiplicative cocycle law)": [
        "quasi.cocycle_identity", "quasi.cocycle_chain", "quasi.cocycle_inverse",
        "quasi.cocycle_adjoint_relation"],
    "Lemma (kappa in the centralizers)": ["quasi.kappa_centralizers", "quasi.averaged_state"],
    "Remark (kappa-twisted modular groups)": ["modular.twisted_flow"],
    "Theorem (cocycle relation on a factor)": ["modular.factor_cocycle_relation"],
    "Theorem (flow-group commutation iff central cocycles)": ["modular.flow_group_commutation"],
    "Corollary (invariant case)": ["modular.invariant_case"],
    "Proposition (state-level commutation)": ["modular.state_level_commutation"],
    "Lemma (cocycle fixed by G is trivial)": ["quasi.fixed_cocycle_lemma"],
    "Theorem (equivalent conditions for G-invariance)": ["modular.invariance_equivalence"],
    "Means (group mean and modular mean)": [
        "modular.flow_laws", "modular.group_mean_properties", "modular.expectation_properties"],
    "Propositions (mean and modular group commutation)": [
        "modular.mean_state_level", "modular.mean_map_level", "modular.sufficient_condition",
        "modular.inclusion"],
    "Theorem (ergodicity: group mean equals modular expectation)": ["modular.ergodic_coincidence"],
    "Example 1 (quasi-invariant states from K)": [
        "ex1.quasi_invariance", "ex1.cocycle_law", "ex1.normalization"],
    "Example 2 (rotation group in M_2)": ["ex2.closed_forms"],
    "Example 3 (translation group on cycles)": ["ex3.closed_forms"],
    "Example 4 (spin flip dynamics)": ["ex4.spin_flip"],
    "Lemma (mean density)": ["tracial.mean_density"],
    "Theorem (tracial characterization)": ["tracial.decomposition"],
    "GNS representation and modular objects": ["gns.structure", "gns.modular_flow_consistency"],
    "g-shifted cyclic representation": ["gns.shift_state"],
    "Positive vector in the natural cone": ["gns.natural_cone"],
    "Proposition (equality of modular conjugations)": ["gns.j_equality"],
    "Proposition (unitaries U_g and V_g)": ["gns.unitary_maps", "gns.covariance"],
    "Remark (unitary representation laws)": ["gns.representation"],
    "Proposition (exchange of antilinear operators)": ["gns.exchange_S", "gns.exchange_F"],
    "Corollary (factorization of modular operators)": ["gns.delta_factorization"],
    "Theorem (modular operator relations)": [
        "gns.relation_S", "gns.relation_delta", "gns.relation_US"],
    "Projection onto U_G-invariant vectors": ["gns.projection"],
    "Lemma (projection and Umegaki expectation)": ["gns.lifted_expectation"],
    "Theorem (abelianness in the compact case)": ["gns.compressed_abelianness"],
    "Lemma (martingale convergence along subgroups)": ["gns.subgroup_chain"],
}


def traceability_selftest() -> dict:
    """Every listed result maps to a registered check, and every check is mapped."""
    registered = set(REGISTRY)
    unmapped_results = sorted(r for r, ids in TRACEABILITY.items() if not ids)
    unknown = sorted({c for ids in TRACEABILITY.values() for c in ids} - registered)
    mapped = {c for ids in TRACEABILITY.values() for c in ids}
    orphan = sorted(registered - mapped)
    return {"ok": not (unmapped_results or unknown or orphan), "unmapped_results": unmapped_results,
            "unknown_check_ids": unknown, "unmapped_checks": orphan}


# ---------------------------------------------------------------- running

def _na_all(ids, reason) -> list[Verdict]:
    return [not_applicable(c, reason) for c in ids]


def _run_quasi(family, tol) -> list[Verdict]:
    return [qmod.check_defining_relation(family, tol), *qmod.check_cocycle_laws(family, tol),
            qmod.check_adjoint_relation(family, tol), qmod.check_strong_structure(family, tol),
            qmod.check_kappa_centralizers(family, tol), qmod.check_averaged_state(family, tol),
            qmod.check_fixed_cocycle_lemma(family, tol)]


def _run_modular(family, tol, extra) -> list[Verdict]:
    flow = mod.ModularFlow(family.state)
    act = family.action
    return [mod.check_flow_laws(flow, tol, extra), mod.check_expectation_properties(flow, tol),
            mod.check_group_mean_properties(act, tol), mod.check_twisted_flow(flow, family, tol),
            mod.check_factor_cocycle_relation(flow, family, tol, extra),
            mod.check_flow_group_commutation(flow, act, tol, extra),
            mod.check_invariant_case(flow, family, tol, extra),
            mod.check_state_level_commutation(flow, family, tol, extra),
            *mod.check_mean_modular_commutation(flow, family, tol, extra),
            mod.check_sufficient_condition(flow, family, tol, extra),
            mod.check_inclusion(flow, family, tol, extra),
            mod.check_ergodic_coincidence(flow, family, tol),
            mod.check_invariance_equivalence(flow, family, tol, extra)]


def _run_gns(family, chain, tol, extra) -> list[Verdict]:
    n = family.state.dim
    if n > GNS_MAX_BASE_DIM:
        return _na_all(GNS_IDS, f"GNS space of dimension {n * n} exceeds the limit "
                                f"{GNS_MAX_BASE_DIM ** 2}")
    g = gnsmod.build_gns(family.state, tol)
    times = [*mod.DEFAULT_TIMES, *extra]
    out = [gnsmod.check_gns_structure(g, tol), gnsmod.check_flow_consistency(g, times, tol)]
    rest = [c for c in GNS_IDS if c not in ("gns.structure", "gns.modular_flow_consistency")]
    if not family.strongly_quasi:
        return out + _na_all(rest, "state is not G-strongly quasi invariant")
    shifts = gnsmod.all_shifts(g, family)
    proj = gnsmod.projection_PG(g, shifts)
    out += [gnsmod.check_shift_state(g, family, shifts, tol),
            gnsmod.check_natural_cone(g, family, shifts, tol),
            gnsmod.check_j_equality(g, family, shifts, tol),
            gnsmod.check_unitary_maps(g, family, shifts, tol),
            gnsmod.check_representation(g, family, shifts, tol),
            gnsmod.check_covariance(g, family, shifts, tol),
            *gnsmod.check_modular_relations(g, family, shifts, tol),
            gnsmod.check_projection(g, family, shifts, tol),
            gnsmod.lifted_expectation_checks(g, family, proj, shifts, tol),
            gnsmod.check_compressed_abelianness(g, family, shifts, tol)]
    if chain is None:
        out.append(not_applicable("gns.subgroup_chain", "no subgroup chain for this scenario"))
    else:
        out.append(gnsmod.check_subgroup_chain(g, family, chain, shifts, tol))
    return out


def run_scenario(scen: Scenario, tol: Tolerance = DEFAULT_TOL) -> tuple[list[Verdict], dict]:
    """All registered checks, in registry order, plus scenario facts (classification etc.)."""
    found: dict[str, Verdict] = {}
    facts: dict = {}
    extra = tuple(scen.extra_times)
    if scen.state is None:
        reason = "the group is R (sampled), not a finite group"
        for v in _na_all(QUASI_IDS + MODULAR_IDS + GNS_IDS + TRACIAL_IDS, reason):
            found[v.check_id] = v
        facts["classification"] = scen.classification
    else:
        family = qmod.classify_invariance(scen.state, scen.action, tol)
        facts["classification"] = family.classification
        facts["cocycle_residuals"] = {k: round_sig(v) for k, v in family.residuals.items()}
        verdicts = (_run_quasi(family, tol) + _run_modular(family, tol, extra)
                    + _run_gns(family, scen.chain, tol, extra)
                    + tmod.mean_density_checks(scen.state, family, tol)
                    + [tmod.check_tracial_decomposition(scen.state, family, tol)])
        for v in verdicts:
            found[v.check_id] = v
        if family.strongly_quasi:
            dec = tmod.tracial_decomposition(scen.state, family, tol)
            facts["c_in_FG_residual"] = round_sig(dec.c_in_FG_residual)
    for v in scen.example_verdicts:
        found[v.check_id] = v
    out = []
    for cid in REGISTRY:
        if cid in found:
            out.append(found.pop(cid))
        else:
            out.append(not_applicable(cid, f"only evaluated for scenario {cid.split('.')[0]}"))
    if found:
        raise RuntimeError(f"unregistered check ids produced: {sorted(found)}")
    return out, facts


def _summary(verdicts) -> dict:
    counts = {HOLDS: 0, FAILS: 0, NOT_APPLICABLE: 0}
    for v in verdicts:
        counts[v.status] += 1
    return counts


def _environment(tol: Tolerance, seed) -> dict:
    return {"tol_abs": tol.abs, "tol_rel": tol.rel, "seed": seed,
            "sample_times": [round_sig(t) for t in mod.DEFAULT_TIMES], "quasinv_version": __version__}


def build_report(scen: Scenario, tol: Tolerance = DEFAULT_TOL, seed=None) -> dict:
    verdicts, facts = run_scenario(scen, tol)
    return {
        "schema": SCHEMA,
        "scenario": scen.id,
        "parameters": scen.parameters,
        "environment": _environment(tol, seed),
        "classification": facts.pop("classification"),
        "facts": facts,
        "checks": [v.to_json() for v in verdicts],
        "summary": _summary(verdicts),
        "traceability": TRACEABILITY,
        "selftest": traceability_selftest(),
    }


def fuzz_trial(dim: int, order: int, kind: str, seed_seq, tol: Tolerance) -> tuple[str, list[Verdict]]:
    rng = np.random.default_rng(seed_seq)
    state, action = fuzz_instance(rng, dim, order, kind, tol)
    extra = tuple(float(t) for t in rng.uniform(-5.0, 5.0, size=8))
    scen = Scenario("fuzz", {}, state, action, chain=cyclic_subgroup_chain(order), extra_times=extra)
    verdicts, facts = run_scenario(scen, tol)
    return facts["classification"], verdicts


def fuzz(dim: int, order: int, trials: int, seed: int, kind: str = "mixed",
         tol: Tolerance = DEFAULT_TOL, jobs: int = 1) -> dict:
    """Random instances; verdicts aggregated per check in trial order."""
    if dim < 2 or trials < 1:
        raise ValueError("fuzz needs dim >= 2 and trials >= 1")
    if kind != "mixed" and kind not in FUZZ_KINDS:
        raise ValueError(f"unknown kind {kind!r}")
    seqs = np.random.SeedSequence(seed).spawn(trials)
    kinds = [FUZZ_KINDS[i % len(FUZZ_KINDS)] if kind == "mixed" else kind for i in range(trials)]
    args = [(dim, order, kinds[i], seqs[i], tol) for i in range(trials)]
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(lambda a: fuzz_trial(*a), args))
    else:
        results = [fuzz_trial(*a) for a in args]
    return aggregate_fuzz(results, kinds, tol, {"dim": dim, "group": f"cyclic:{order}",
                                               "trials": trials, "kind": kind}, seed)


def aggregate_fuzz(results, kinds, tol, params, seed) -> dict:
    classes: dict[str, int] = {}
    for cls, _ in results:
        classes[cls] = classes.get(cls, 0) + 1
    merged = []
    for pos, cid in enumerate(REGISTRY):
        per = [(i, res[1][pos]) for i, res in enumerate(results)]
        assert all(v.check_id == cid for _, v in per)
        counts = _summary(v for _, v in per)
        applicable = [(i, v) for i, v in per if v.applicable]
        if counts[FAILS]:
            status = FAILS
        elif counts[HOLDS]:
            status = HOLDS
        else:
            status = NOT_APPLICABLE
        worst = max((v.max_deviation for _, v in applicable), default=0.0)
        witnesses = [{"trial": i, "kind": kinds[i], **(v.witnesses[0] if v.witnesses else {})}
                     for i, v in per if v.status == FAILS][:5]
        if not witnesses and applicable:
            i, v = max(applicable, key=lambda p: p[1].max_deviation)
            witnesses = [{"trial": i, "kind": kinds[i], **(v.witnesses[0] if v.witnesses else {})}]
        hyp = sorted({v.hypothesis_status for _, v in applicable}) or [HYP_NONE]
        merged.append(Verdict(cid, status, worst, hyp[-1] if len(hyp) == 1 else "mixed",
                              witnesses, {"trials": counts}))
    return {
        "schema": SCHEMA,
        "scenario": "fuzz",
        "parameters": params,
        "environment": _environment(tol, seed),
        "classification": dict(sorted(classes.items())),
        "checks": [v.to_json() for v in merged],
        "summary": _summary(merged),
        "traceability": TRACEABILITY,
        "selftest": traceability_selftest(),
    }


def report_ok(report: dict) -> bool:
    return report["summary"][FAILS] == 0 and report["selftest"]["ok"]


def to_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def to_text(report: dict) -> str:
    lines = [f"scenario: {report['scenario']}  parameters: {json.dumps(report['parameters'], sort_keys=True)}",
             f"classification: {report['classification']}",
             f"tolerance: abs={report['environment']['tol_abs']:g} rel={report['environment']['tol_rel']:g}"]
    if report.get("facts", {}).get("c_in_FG_residual") is not None:
        lines.append(f"c_in_FG_residual: {report['facts']['c_in_FG_residual']:.6g}")
    lines.append("")
    for c in report["checks"]:
        note = ""
        if c["status"] == NOT_APPLICABLE:
            note = c.get("details", {}).get("reason", "")
        elif c["status"] == FAILS and c["witnesses"]:
            note = json.dumps(c["witnesses"][0], sort_keys=True)
        lines.append(f"{c['status']:<15} {c['max_deviation']:<12.3e} {c['check_id']:<36} {note}".rstrip())
    s = report["summary"]
    lines += ["", f"summary: {s[HOLDS]} holds, {s[FAILS]} fails, {s[NOT_APPLICABLE]} not-applicable",
              f"traceability self-test: {'ok' if report['selftest']['ok'] else 'FAILED'}"]
    return "\n".join(lines) + "\n"
