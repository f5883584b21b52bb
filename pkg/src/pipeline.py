"""
Pipeline Graph
LangGraph workflow of the `run` command:

    generate -> autocorrelate -> diffract -> dworkin -> [eigengroup] -> judge -> END

A stage that cannot complete sets status ERROR and jumps straight to judge,
which always writes report.json.
"""

from langgraph.graph import END, StateGraph

from src.config import RunConfig
from src.nodes import (
    autocorrelate_node,
    diffract_node,
    dworkin_node,
    eigengroup_node,
    generate_node,
    judge_node,
)
from src.state import PipelineState

EXIT_PASSED = 0
EXIT_FAILED = 1
EXIT_INVALID = 2


def _proceed(state: PipelineState) -> str:
    """Routes to the next stage unless the previous one errored."""
    return "judge" if state.get("status") == "ERROR" else "continue"


def should_check_eigengroup(state: PipelineState) -> str:
    """
    The eigenvalue-group stage only runs for pure point expectations whose
    purity gate passed, and only when the configuration asks for it.
    """
    config = state["config"]
    if state.get("status") == "ERROR":
        return "judge"
    if not (config.eigengroup and config.expect == "pure-point"):
        return "judge"
    purity_gate = next((g for g in state.get("gates", []) if g["name"] == "purity"), None)
    if purity_gate is None or not purity_gate["passed"]:
        print("⚠️ Purity gate not passed: skipping the eigenvalue group stage")
        return "judge"
    return "eigengroup"


def build_graph():
    """
    Builds the LangGraph workflow of one pipeline run.

    Returns:
        Compiled StateGraph
    """
    workflow = StateGraph(PipelineState)

    workflow.add_node("generate", generate_node)
    workflow.add_node("autocorrelate", autocorrelate_node)
    workflow.add_node("diffract", diffract_node)
    workflow.add_node("dworkin", dworkin_node)
    workflow.add_node("eigengroup", eigengroup_node)
    workflow.add_node("judge", judge_node)

    workflow.set_entry_point("generate")

    for stage, following in (("generate", "autocorrelate"), ("autocorrelate", "diffract"), ("diffract", "dworkin")):
        workflow.add_conditional_edges(stage, _proceed, {"continue": following, "judge": "judge"})
    workflow.add_conditional_edges(
        "dworkin",
        should_check_eigengroup,
        {"eigengroup": "eigengroup", "judge": "judge"},
    )
    workflow.add_edge("eigengroup", "judge")
    workflow.add_edge("judge", END)

    return workflow.compile()


def run_pipeline(config: RunConfig, workers: int | None = None) -> tuple[int, PipelineState]:
    """
    Runs every stage for ``config``.

    Returns:
        (exit code, final state): 0 when every gate passed, 1 otherwise.
    """
    print("\n" + "=" * 70)
    print(f"🧬 APERIODICA PIPELINE: {config.name}")
    print("=" * 70)
    print(f"📐 Generator: {config.generator}")
    print(f"📦 Van Hove: base {config.base}, factor {config.factor}, n_max {config.n_max}")
    print(f"📁 Output: {config.output_dir}")
    print("=" * 70 + "\n")

    initial_state: PipelineState = {
        "config": config,
        "workers": workers,
        "gates": [],
        "artifacts": {},
        "status": "IN_PROGRESS",
    }
    graph = build_graph()
    final_state = graph.invoke(initial_state, config={"recursion_limit": 50})
    code = EXIT_PASSED if final_state.get("status") == "PASSED" else EXIT_FAILED
    return code, final_state
