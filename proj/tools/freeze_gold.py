"""Freezes the A001 replay gold used by the acceptance suite.

Runs the case through the extension with the test clock, then recomputes the
whole chain with hashlib so the frozen values do not rest on the C++ hasher.
"""

import hashlib
import json
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
CLOCK_BASE = 1767225600
GENESIS = "cognitive-core-genesis-v1"


def canonical(value):
    return json.dumps(value, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def main():
    sys.path.insert(0, str(ROOT / "build" / "python"))
    import govdec

    with tempfile.TemporaryDirectory() as work:
        state = govdec.run_case(
            ROOT / "configs/domains/appeal.yaml",
            ROOT / "configs/workflows/appeal.yaml",
            ROOT / "fixtures/cases/A001.json",
            ROOT / "fixtures/scripts",
            work,
            CLOCK_BASE,
        )
        raw = Path(state["ledger_path"]).read_bytes()

    prior = hashlib.sha256(GENESIS.encode()).hexdigest()
    for n, line in enumerate(raw.decode().splitlines()):
        entry = json.loads(line)
        assert entry["prior_hash"] == prior, f"entry {n}: prior hash"
        h = hashlib.sha256((prior + canonical(entry["content"])).encode()).hexdigest()
        assert entry["hash"] == h, f"entry {n}: hash"
        prior = h
    assert prior == state["head_hash"]

    gold = {"case_id": "A001", "entries": n + 1, "head_hash": prior, "ledger_sha256": hashlib.sha256(raw).hexdigest()}
    out = ROOT / "fixtures/gold/A001.json"
    out.write_text(json.dumps(gold, indent=2) + "\n")
    print(json.dumps(gold))


if __name__ == "__main__":
    main()
