import hashlib
import json

import pytest

import govdec

GENESIS = "cognitive-core-genesis-v1"
CLOCK_BASE = 1767225600


def test_sha256_matches_hashlib():
    for text in ["", "abc", "ledger⟨x⟩"]:
        assert govdec.sha256_hex(text) == hashlib.sha256(text.encode()).hexdigest()


def test_chain_seed_is_sha256_of_genesis():
    assert govdec.chain_seed() == hashlib.sha256(GENESIS.encode()).hexdigest()


def test_canonical_json_sorts_and_escapes():
    assert govdec.canonical_json('{"b": 1, "a": ["x", {"d": 2, "c": "é"}]}') == (
        '{"a":["x",{"c":"\\u00e9","d":2}],"b":1}'
    )
    with pytest.raises(govdec.GovdecError):
        govdec.canonical_json('{"x": 0.5}')


def test_entry_hash_matches_hashlib():
    content = {"index": 0, "entry_type": "system", "event": "instance_started"}
    canon = json.dumps(content, sort_keys=True, separators=(",", ":"))
    expected = hashlib.sha256((govdec.chain_seed() + canon).encode()).hexdigest()
    assert govdec.entry_hash(govdec.chain_seed(), json.dumps(content)) == expected


def test_tiers_only_rise():
    assert govdec.apply_tiers(["SPOT_CHECK", "AUTO", "GATE", "SPOT_CHECK"]) == "GATE"
    assert govdec.apply_tiers([], "SPOT_CHECK") == "SPOT_CHECK"
    assert govdec.apply_tiers(["AUTO"], "GATE") == "GATE"
    with pytest.raises(ValueError):
        govdec.apply_tiers(["MAYBE"])


def test_hitl_table():
    states = govdec.hitl_states()
    assert len(states) == 9
    legal = [(a, b) for a in states for b in states if govdec.hitl_legal(a, b)]
    assert len(legal) == 13
    assert govdec.hitl_legal("under_review", "approved")
    assert not govdec.hitl_legal("approved", "terminated")


def test_qa_sample_frozen():
    ids = ["A001-1", "B004-1", "G005-1", "C004-1", "X-1", "Y-1", "Z-1", "W-1", "V-1", "U-1"]
    assert govdec.qa_sample(ids, 0.3, "qa") == ["U-1", "Y-1", "A001-1"]


def test_run_case_and_verify(root, tmp_path):
    state = govdec.run_case(
        root / "configs/domains/appeal.yaml",
        root / "configs/workflows/appeal.yaml",
        root / "fixtures/cases/A001.json",
        root / "fixtures/scripts",
        tmp_path,
        CLOCK_BASE,
    )
    assert state["status"] == "completed"
    gold = json.loads((root / "fixtures/gold/A001.json").read_text())
    assert state["head_hash"] == gold["head_hash"]
    verdict = govdec.verify_ledger_file(state["ledger_path"])
    assert verdict["chain_valid"]
    assert verdict["entries_checked"] == gold["entries"]


def test_tampered_ledger_is_caught(root, tmp_path):
    state = govdec.run_case(
        root / "configs/domains/appeal.yaml",
        root / "configs/workflows/appeal.yaml",
        root / "fixtures/cases/A001.json",
        root / "fixtures/scripts",
        tmp_path,
        CLOCK_BASE,
    )
    path = tmp_path / "tampered.ndjson"
    lines = open(state["ledger_path"]).read().splitlines()
    entry = json.loads(lines[5])
    entry["content"]["timestamp"] = "2030-01-01T00:00:00Z"
    lines[5] = json.dumps(entry)
    path.write_text("\n".join(lines) + "\n")
    verdict = govdec.verify_ledger_file(path)
    assert not verdict["chain_valid"]
    assert verdict["first_broken_index"] == 5


def test_domain_summary_and_redaction(root):
    domain = root / "configs/domains/appeal.yaml"
    summary = govdec.load_domain_summary(domain)
    assert summary["domain_id"] == "appeal"
    assert "OVERTURN" in summary["vocabulary"]
    text, mapping = govdec.redact("Call 555-201-7788 about member M20418833.", domain)
    assert "555-201-7788" not in text and "M20418833" not in text
    assert mapping


def test_bench_report_json(root, tmp_path):
    report = govdec.bench_report(root / "fixtures/bench/manifest.json", tmp_path, "json")
    systems = {s["system"]: s for s in report["systems"]}
    assert set(systems) >= {"react", "plan_and_solve"}
    assert len(report["systems"]) == 3
