import json
import os
import uuid
from datetime import datetime
from enum import Enum

# Experiment log location (override the directory with APERIODICA_LOG_DIR)
LOG_FILE = os.path.join(os.getenv("APERIODICA_LOG_DIR", "logs"), "experiment_data.json")


class ActionType(str, Enum):
    """
    Kinds of recorded computations, used to filter the experiment log.
    """
    GENERATE = "GENERATE"            # Comb production
    AUTOCORRELATE = "AUTOCORRELATE"  # Van Hove / closed-formula autocorrelation
    DIFFRACT = "DIFFRACT"            # Peak scan, purity, Wiener oracle
    VERIFY = "VERIFY"                # Dworkin, spectral mass, eigenvalue group
    TOPOLOGY = "TOPOLOGY"            # U_{K,V}, repetitivity, FLC, Fell conversions
    SELFTEST = "SELFTEST"


def _to_jsonable(value):
    """Converts numpy scalars/arrays and complex numbers for json.dump."""
    if hasattr(value, "tolist"):
        value = value.tolist()
    if isinstance(value, complex):
        return {"re": value.real, "im": value.imag}
    if isinstance(value, dict):
        return {str(k): _to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_to_jsonable(v) for v in value]
    return value


def log_experiment(stage: str, action: ActionType, details: dict, status: str):
    """
    Appends one computation record to the experiment log.

    Args:
        stage (str): Pipeline stage or CLI command (ex: "diffract").
        action (ActionType): Kind of computation (use the ActionType enum).
        details (dict): Must contain 'inputs' and 'outputs'.
        status (str): "SUCCESS" or "FAILURE".

    Raises:
        ValueError: If mandatory keys are missing or the action is unknown.
    """

    # --- 1. ACTION VALIDATION ---
    valid_actions = [a.value for a in ActionType]
    if isinstance(action, ActionType):
        action_str = action.value
    elif action in valid_actions:
        action_str = action
    else:
        raise ValueError(f"❌ Invalid action: '{action}'. Use the ActionType enum (ex: ActionType.DIFFRACT).")

    # --- 2. MANDATORY FIELDS ---
    required_keys = ["inputs", "outputs"]
    missing_keys = [key for key in required_keys if key not in details]
    if missing_keys:
        raise ValueError(
            f"❌ Logging error (stage: {stage}): "
            f"fields {missing_keys} are missing from 'details'."
        )

    # --- 3. ENTRY ---
    log_dir = os.path.dirname(LOG_FILE) or "."
    os.makedirs(log_dir, exist_ok=True)

    entry = {
        "id": str(uuid.uuid4()),
        "timestamp": datetime.now().isoformat(),
        "stage": stage,
        "action": action_str,
        "details": _to_jsonable(details),
        "status": status
    }

    # --- 4. READ & WRITE ---
    data = []
    if os.path.exists(LOG_FILE):
        try:
            with open(LOG_FILE, 'r', encoding='utf-8') as f:
                content = f.read().strip()
                if content:
                    data = json.loads(content)
        except json.JSONDecodeError:
            print(f"⚠️ Warning: log file {LOG_FILE} was corrupted. Starting a new list.")
            data = []

    data.append(entry)

    with open(LOG_FILE, 'w', encoding='utf-8') as f:
        json.dump(data, f, indent=4, ensure_ascii=False)
