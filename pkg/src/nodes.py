"""
Pipeline Nodes
The stages of the `run` graph: generate, autocorrelate, diffract, dworkin,
eigengroup and judge. Every stage prints a short status block, records a
log_experiment entry and appends its gate verdicts to the state.
"""

import os

import numpy as np

from src import tools
from src.autocorrelation import autocorrelation_of, pairing
from src.diffraction import peak_scan, purity
from src.dynamics import dworkin_identity_report, eigenvalue_group_check
from src.errors import AperiodicaError
from src.measures import TestFunction
from src.state import PipelineState
from src.utils.logger import ActionType, log_experiment

PURITY_CEILING = 1.02


# =============================================================================
# HELPER FUNCTIONS
# =============================================================================

def _banner(title: str):
    print(f"\n{'=' * 60}")
    print(title)
    print(f"{'=' * 60}\n")


def _artifact(state: PipelineState, name: str) -> str:
    path = os.path.join(state["config"].output_dir, name)
    state.setdefault("artifacts", {})[name] = path
    return path


def gate(name: str, value: float, tolerance: float | None, rule: str) -> dict:
    """
    One report entry: ``value`` tested against ``tolerance`` with ``rule``.

    Rules: ">=", "<=", "==" and "report" (recorded, always passes).
    """
    value = float(value)
    if rule == ">=":
        passed = value >= tolerance
    elif rule == "<=":
        passed = value <= tolerance
    elif rule == "==":
        passed = value == tolerance
    elif rule == "report":
        passed = True
    else:
        raise ValueError(f"❌ Unknown gate rule '{rule}'")
    return {"name": name, "value": value, "tolerance": tolerance, "gate": rule, "passed": bool(passed)}


def _record(state: PipelineState, entries: list[dict]):
    state.setdefault("gates", []).extend(entries)
    for entry in entries:
        if entry["gate"] == "report":
            print(f"📊 {entry['name']}: {entry['value']:.6g}")
            continue
        mark = "✅" if entry["passed"] else "❌"
        print(f"{mark} {entry['name']}: {entry['value']:.6g} {entry['gate']} {entry['tolerance']}")


def _fail(state: PipelineState, stage: str, action: ActionType, inputs: dict, error: Exception) -> PipelineState:
    print(f"❌ {stage} failed: {error}")
    log_experiment(
        stage=stage,
        action=action,
        details={"inputs": inputs, "outputs": {}, "error": str(error)},
        status="FAILURE",
    )
    state["status"] = "ERROR"
    state["error"] = f"{stage}: {error}"
    return state


# =============================================================================
# GENERATE NODE
# =============================================================================

def generate_node(state: PipelineState) -> PipelineState:
    """Produces the comb on the largest van Hove box and writes comb.csv."""
    config = state["config"]
    _banner(f"🔬 GENERATE: {config.name}")
    inputs = {"generator": config.generator, "box": config.sequence().largest.to_list()}
    try:
        gen = config.make_generator()
        comb = gen.produce(config.sequence().largest)
        tools.write_comb(comb, _artifact(state, "comb.csv"))
    except (AperiodicaError, IOError) as e:
        return _fail(state, "generate", ActionType.GENERATE, inputs, e)

    state["generator"] = gen
    state["comb"] = comb
    print(f"✅ {len(comb)} points, density {comb.density():.6g} (expected {gen.density:.6g})")
    log_experiment(
        stage="generate",
        action=ActionType.GENERATE,
        details={"inputs": inputs, "outputs": {"count": len(comb), "density": comb.density()}},
        status="SUCCESS",
    )
    return state


# =============================================================================
# AUTOCORRELATE NODE
# =============================================================================

def autocorrelate_node(state: PipelineState) -> PipelineState:
    """Finite-volume autocorrelation of the comb up to range R; writes gamma.csv."""
    config = state["config"]
    _banner(f"🔬 AUTOCORRELATE: R = {config.R}, ε = {config.epsilon}")
    inputs = {"R": config.R, "epsilon": config.epsilon, "n": config.n_max}
    try:
        gamma = autocorrelation_of(state["comb"], config.epsilon, config.R, config.n_max, state.get("workers"))
        tools.write_autocorrelation(gamma, _artifact(state, "gamma.csv"))
    except (AperiodicaError, IOError) as e:
        return _fail(state, "autocorrelate", ActionType.AUTOCORRELATE, inputs, e)

    state["gamma"] = gamma
    entries = [
        gate("hermitian_defect", gamma.hermitian_defect(), 1e-9, "<="),
        gate("eta_zero", np.real(gamma.eta(np.zeros((1, gamma.dim)))[0]), None, "report"),
    ]
    _record(state, entries)
    log_experiment(
        stage="autocorrelate",
        action=ActionType.AUTOCORRELATE,
        details={"inputs": inputs, "outputs": {"support": len(gamma), "gates": entries}},
        status="SUCCESS",
    )
    return state


# =============================================================================
# DIFFRACT NODE
# =============================================================================

def diffract_node(state: PipelineState) -> PipelineState:
    """Peak scan, purity and the purity gate; writes spectrum.csv."""
    config = state["config"]
    _banner(f"🔬 DIFFRACT: k in [{config.k_min}, {config.k_max}]")
    phi = config.test_function()
    inputs = {"k_range": [config.k_min, config.k_max], "phi": config.phi, "residual_tol": config.residual_tol}
    try:
        spectrum = peak_scan(
            state["generator"], config.sequence(), config.k_range(),
            refine_tol=config.refine_tol, residual_tol=config.residual_tol, workers=state.get("workers"),
        )
        denominator = float(np.real(pairing(state["gamma"], phi, phi, np.zeros((1, phi.dim)))[0]))
        value = purity(state["gamma"], spectrum, phi)
        spectrum = spectrum.with_purity(value)
        tools.write_spectrum(spectrum, _artifact(state, "spectrum.csv"), denominator)
    except (AperiodicaError, IOError) as e:
        return _fail(state, "diffract", ActionType.DIFFRACT, inputs, e)

    state["spectrum"] = spectrum
    state["denominator"] = denominator
    entries = [
        gate("atoms", len(spectrum.atoms), None, "report"),
        gate("max_candidate_intensity", spectrum.scan["max_candidate_intensity"], None, "report"),
        gate("purity_ceiling", value, PURITY_CEILING, "<="),
    ]
    if config.expect == "pure-point":
        entries.append(gate("purity", value, config.purity_min, ">="))
    else:
        entries.append(gate("purity", value, config.purity_max, "<="))
        entries.append(gate("max_atom_intensity", spectrum.max_intensity(), config.max_atom_intensity, "<="))
    _record(state, entries)
    log_experiment(
        stage="diffract",
        action=ActionType.DIFFRACT,
        details={"inputs": inputs, "outputs": {"purity": value, "denominator": denominator, "gates": entries}},
        status="SUCCESS",
    )
    return state


# =============================================================================
# DWORKIN NODE
# =============================================================================

def dworkin_node(state: PipelineState) -> PipelineState:
    """Correlation averages against (φ̃ ∗ φ ∗ γ)(t) on the configured t-grid."""
    config = state["config"]
    _banner(f"🔬 DWORKIN: {len(config.t_grid)} lags")
    phi = config.test_function()
    inputs = {"t_grid": list(config.t_grid), "phi": config.phi}
    try:
        report = dworkin_identity_report(
            state["generator"], phi, phi, list(config.t_grid), config.sequence(),
            epsilon=config.epsilon, workers=state.get("workers"),
        )
    except AperiodicaError as e:
        return _fail(state, "dworkin", ActionType.VERIFY, inputs, e)

    state["dworkin"] = report
    entries = [gate("dworkin_max_rel_error", report.max_rel_error, config.dworkin_tol, "<=")]
    _record(state, entries)
    log_experiment(
        stage="dworkin",
        action=ActionType.VERIFY,
        details={"inputs": inputs, "outputs": {"max_rel_error": report.max_rel_error, "gates": entries}},
        status="SUCCESS",
    )
    return state


# =============================================================================
# EIGENGROUP NODE
# =============================================================================

def eigengroup_node(state: PipelineState) -> PipelineState:
    """Eigenvalue group generated by the top atoms, probed with tents of three widths."""
    config = state["config"]
    _banner(f"🔬 EIGENGROUP: top {config.eigen_top} atoms, |m_i| ≤ {config.eigen_M}")
    base = config.test_function()
    phis = [TestFunction(base.shape, base.center, base.h * scale) for scale in (0.5, 1.0, 1.5)]
    inputs = {"top": config.eigen_top, "M": config.eigen_M, "halfwidths": [float(p.h[0]) for p in phis]}
    try:
        report = eigenvalue_group_check(
            state["spectrum"], state["generator"], phis, M=config.eigen_M, top=config.eigen_top,
        )
    except AperiodicaError as e:
        return _fail(state, "eigengroup", ActionType.VERIFY, inputs, e)

    state["eigengroup"] = report
    entries = [
        gate("eigen_accepted", len(report.accepted), None, "report"),
        gate("eigen_negation_rate", report.negation_rate, 1.0, "=="),
        gate("eigen_sum_accept_rate", report.sum_accept_rate, config.sum_rate_min, ">="),
        gate("eigen_closure_rate", report.closure_rate, None, "report"),
    ]
    _record(state, entries)
    log_experiment(
        stage="eigengroup",
        action=ActionType.VERIFY,
        details={"inputs": inputs, "outputs": {"accepted": report.accepted, "gates": entries}},
        status="SUCCESS",
    )
    return state


# =============================================================================
# JUDGE NODE
# =============================================================================

def judge_node(state: PipelineState) -> PipelineState:
    """Final verdict over every gate; writes report.json."""
    config = state["config"]
    _banner(f"⚖️ JUDGE: {config.name}")
    gates = state.get("gates", [])
    failed = [g["name"] for g in gates if not g["passed"]]

    if state.get("status") == "ERROR":
        verdict = "ERROR"
        print(f"❌ VERDICT: a stage could not complete ({state.get('error')})")
    elif failed:
        verdict = "FAILED"
        print(f"❌ VERDICT: failed gates {failed}")
    else:
        verdict = "PASSED"
        print(f"✅ VERDICT: all {sum(g['gate'] != 'report' for g in gates)} gates passed")
    state["status"] = verdict

    report = {
        "name": config.name,
        "status": verdict,
        "error": state.get("error"),
        "config": config.to_dict(),
        "checks": {g["name"]: {k: g[k] for k in ("value", "tolerance", "gate", "passed")} for g in gates},
        "artifacts": state.get("artifacts", {}),
    }
    try:
        tools.write_json(_artifact(state, "report.json"), report)
    except (ValueError, IOError) as e:
        print(f"❌ Could not write report.json: {e}")
        state["status"] = "ERROR"

    log_experiment(
        stage="judge",
        action=ActionType.VERIFY,
        details={"inputs": {"gates": len(gates)}, "outputs": {"status": verdict, "failed": failed}},
        status="SUCCESS" if verdict == "PASSED" else "FAILURE",
    )
    print(f"\n{'=' * 60}\n")
    return state
