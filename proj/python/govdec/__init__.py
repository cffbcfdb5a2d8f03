"""Python access to the governed decision core.

Structured results come back from the extension as JSON text and are decoded
here so callers get plain dicts.
"""

import json as _json

from . import _govdec
from ._govdec import (  # noqa: F401
    GovdecError,
    apply_tiers,
    canonical_json,
    chain_seed,
    entry_hash,
    hitl_legal,
    hitl_states,
    qa_sample,
    sha256_hex,
)


def verify_ledger_file(path):
    return _json.loads(_govdec.verify_ledger_file(str(path)))


def run_case(domain, workflow, case, scripts, data_dir, clock_base=-1):
    """Runs one case under the scripted backend; returns the instance state."""
    return _json.loads(
        _govdec.run_case(str(domain), str(workflow), str(case), str(scripts), str(data_dir), clock_base)
    )


def load_domain_summary(path):
    return _json.loads(_govdec.load_domain_summary(str(path)))


def bench_report(manifest, work_dir, fmt="json"):
    text = _govdec.bench_report(str(manifest), str(work_dir), fmt)
    return _json.loads(text) if fmt == "json" else text


def redact(text, domain):
    redacted, mapping = _govdec.redact(text, str(domain))
    return redacted, _json.loads(mapping)
