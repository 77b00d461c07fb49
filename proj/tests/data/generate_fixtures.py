#!/usr/bin/env python3
"""Regenerates the record and annotation fixtures used by the metric oracles.

records_40x5.ndjson: 40 targets x 5 runs, MaxA 5. Ten targets succeed on run 1,
two more only on a later run, the rest never. The twelve collapsed successes
carry TCA values {1 x7, 2 x2, 3 x3}, summing to 20.

annotations_25.ndjson: 25 failure annotations with agent counts 19/2/4, primary
counts 15/11/11/6/5 and one secondary per primary label.
"""

import json
import pathlib

HERE = pathlib.Path(__file__).resolve().parent
MAXA = 5


def record(target, run, tca=None):
    success = tca is not None
    attempts = tca if success else MAXA
    summaries = [f"loop {i + 1}: exploit not confirmed" for i in range(attempts - (1 if success else 0))]
    if success:
        summaries.append(f"loop {tca}: exploit confirmed")
    return {
        "target_id": target,
        "run_index": run,
        "mode": "greybox_multi",
        "success": success,
        "tca": tca,
        "attempts_used": attempts,
        "max_attempts": MAXA,
        "loop_summaries": summaries,
    }


def records():
    tcas = [1] * 7 + [2] * 2 + [3] * 3
    out = []
    for t in range(40):
        target = f"cve-{t + 1:02d}"
        for run in range(1, 6):
            tca = None
            if t < 10 and run == 1:
                tca = tcas[t]
            elif t == 10 and run == 3:
                tca = tcas[10]
            elif t == 11 and run == 5:
                tca = tcas[11]
            out.append(record(target, run, tca))
    return out


SECONDARIES = {
    "vulnerability_semantics_misread": [
        ("wrong_auth_assumptions", 6),
        ("misleading_cwe", 4),
        ("nonexistent_defenses_assumed", 3),
        ("not_exploitable_claim", 2),
    ],
    "targeting_attack_surface_selection": [("wrong_entrypoint", 10), ("wrong_request_shape", 1)],
    "preconditions_not_met": [
        ("ignored_auth_or_role_requirements", 5),
        ("ignored_config_or_feature_flags", 3),
        ("missing_trigger_steps", 2),
        ("missing_session_csrf_nonce_state", 1),
    ],
    "payload_execution_construction_error": [("bad_payload_values", 4), ("malformed_request_format", 2)],
    "control_loop_inefficiency": [("repetition_without_learning", 4), ("budget_exhaustion", 1)],
}

# Which annotations (0-based) carry each primary label.
PRIMARY_SPANS = {
    "vulnerability_semantics_misread": range(0, 15),
    "targeting_attack_surface_selection": range(14, 25),
    "preconditions_not_met": range(0, 11),
    "payload_execution_construction_error": range(11, 17),
    "control_loop_inefficiency": range(17, 22),
}


def annotations():
    agents = ["strategist"] * 19 + ["explorer"] * 2 + ["exploiter"] * 4
    rows = [
        {
            "target_id": f"cve-{i + 13:02d}",
            "run_index": 1,
            "failure_agent": agents[i],
            "primary_causes": [],
            "secondary_causes": [],
            "notes": "",
        }
        for i in range(25)
    ]
    for primary, span in PRIMARY_SPANS.items():
        labels = [label for label, n in SECONDARIES[primary] for _ in range(n)]
        assert len(labels) == len(span)
        for i, label in zip(span, labels):
            rows[i]["primary_causes"].append(primary)
            rows[i]["secondary_causes"].append(label)
    for row in rows:
        row["primary_causes"].sort()
        row["secondary_causes"].sort()
        assert row["primary_causes"]
    return rows


def write(name, rows):
    with open(HERE / name, "w") as f:
        for row in rows:
            f.write(json.dumps(row, separators=(",", ":")) + "\n")


if __name__ == "__main__":
    write("records_40x5.ndjson", records())
    write("annotations_25.ndjson", annotations())
