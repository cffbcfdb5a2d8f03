#!/usr/bin/env python3
"""Writes the scripted-backend trajectories under fixtures/scripts/.

Each case is a list of (primitive, payload) steps. Step names follow the
orchestrator's <kind>_<n> scheme and the chooser list gets one reply per
step the model picks; steps forced by an override (challenge after generate,
govern after a surviving challenge) get none.

    python3 tools/gen_scripts.py [--out DIR]
"""

import argparse
import json
import os

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))

APPEAL_SOURCES = ["clinical_record", "plan_criteria", "regulatory_framework", "clinical_guidelines"]
APPEAL_RULES = ["PLAN-CONS-6W", "PLAN-IMG", "CHSC-1374.31b", "CIC-10169.5"]
LOAN_SOURCES = ["borrower_file", "servicing_guidelines", "investor_requirements", "regulatory_framework"]
LOAN_RULES = ["WF-DTI-40", "INV-ELIG", "LM-COMPLETE"]

J = {"reasoning_quality": 0.85, "outcome_certainty": 0.85}


def claim(text, *cites):
    return {"text": text, "citations": list(cites)}


def retrieve(source, excerpt, conf=0.95):
    return ("retrieve", {
        "data": {source: excerpt},
        "sources_queried": [source],
        "retrieval_plan": "pull " + source + " for the record",
        "confidence": conf,
        "claims": [claim("retrieved " + source, source)],
    })


def classify(category, alts, reasoning, conf=0.9):
    return ("classify", {
        "category": category,
        "alternative_categories": [{"category": c, "confidence": p} for c, p in alts],
        "reasoning": reasoning,
        "confidence": conf, **J,
        "claims": [claim(reasoning, "clinical_record")],
    })


def investigate(finding, cites, conf=0.88, missing=()):
    return ("investigate", {
        "finding": finding,
        "hypotheses_tested": [finding.split(";")[0]],
        "evidence_flags": [],
        "missing_evidence": list(missing),
        "confidence": conf, **J,
        "claims": [claim(finding, *cites)],
    })


def verify(rules, violations, conf=0.9):
    return ("verify", {
        "conforms": not violations,
        "violations": [{"rule": v} for v in violations],
        "rules_checked": rules,
        "confidence": conf, **J,
        "claims": [claim("checked " + r, r) for r in rules],
    })


def deliberate(action, warrant, cites, conf=0.9, basis=None, options=None):
    p = {
        "recommended_action": action,
        "warrant": warrant,
        "situation_summary": warrant.split(".")[0],
        "options_considered": options or [action],
        "confidence": conf, **J,
        "citations": cites,
        "claims": [claim(warrant, *cites)],
    }
    if basis:
        p["basis_domain"] = basis
    return ("deliberate", p)


def generate(action, conf=0.9):
    return ("generate", {
        "artifact": {"notice": "Determination: " + action + ".", "sections": ["findings", "basis", "rights"]},
        "format": "determination_notice",
        "constraints_checked": ["disposition matches deliberate", "appeal rights stated"],
        "confidence": conf, **J,
        "claims": [claim("notice states " + action, "deliberate")],
    })


def challenge(survives, vulns=(), conf=0.85, assessment=None):
    return ("challenge", {
        "survives": survives,
        "vulnerabilities": [dict(v) for v in vulns],
        "strengths": ["record-based reasoning"],
        "overall_assessment": assessment or ("holds" if survives else "does not hold"),
        "confidence": conf, **J,
        "claims": [claim(assessment or "assessed the determination", "deliberate")],
    })


def reflect(trajectory, conf=0.85, **extra):
    p = {"trajectory": trajectory, "confidence": conf,
         "claims": [claim(extra.get("what_changed", "trajectory " + trajectory), "record")]}
    p.update(extra)
    return ("reflect", p)


def govern(tier, action, rationale, conf=0.9):
    return ("govern", {
        "tier_applied": tier,
        "disposition": action,
        "tier_rationale": rationale,
        "confidence": conf,
        "claims": [claim(rationale, "record")],
    })


def vuln(description, severity, category, domain=""):
    v = {"description": description, "severity": severity, "category": category}
    if domain:
        v["domain"] = domain
    return v


def appeal_retrievals(record):
    return [
        retrieve("clinical_record", record),
        retrieve("plan_criteria", "SPN-114 sections 1 to 3"),
        retrieve("regulatory_framework", "CIC 10169.5; CHSC 1374.31(b)"),
        retrieve("clinical_guidelines", "AANS/CNS tiers 1 and 2"),
    ]


def batched(record, category, alts, findings, violations, action, warrant, ch, tier, conf=0.9):
    cites = ["clinical_record", "plan_criteria"] + violations
    return (appeal_retrievals(record)
            + [classify(category, alts, category + " presentation on the record")]
            + [investigate(f, ["clinical_record", "plan_criteria"]) for f in findings]
            + [verify(APPEAL_RULES, violations),
               deliberate(action, warrant, cites, conf=conf),
               generate(action),
               ch,
               govern(tier, action, "rubric outcome " + tier)])


def strong_survive(note="determination holds on the record"):
    return challenge(True, [vuln("opposing reading relies on plan text the regulation overrides", "low", "other")],
                     assessment=note)


CASES = {}

CASES["A001"] = batched(
    "C5-C6 cord compression, focal myelomalacia, Hoffmann positive; PT contraindicated by physician",
    "myelopathy", [("radiculopathy_primary", 0.15), ("mixed_radiculomyelopathy", 0.1)],
    ["myelomalacia present; PT contraindicated", "denial applied radiculopathy criteria to myelopathy",
     "regulatory standard overrides plan PT requirement"],
    ["CIC-10169.5"], "OVERTURN",
    "Myelomalacia on MRI with PT contraindicated. CIC 10169.5(a)(1) and (a)(3) apply and the plan's PT "
    "requirement is unenforceable.",
    strong_survive(), "SPOT_CHECK", conf=1.0)

CASES["B004"] = batched(
    "C6-C7 herniation, triceps 4/5, plateau documented at week 6",
    "radiculopathy_primary", [("mixed_radiculomyelopathy", 0.1)],
    ["six weeks completed with plateau", "plan criteria require six weeks, denial cited twelve",
     "imaging concordant with C7 deficit"],
    ["PLAN-CONS-6W"], "OVERTURN",
    "All written criteria are met. The denial cites a duration requirement the plan's criteria do not impose.",
    strong_survive(), "SPOT_CHECK")

CASES["C004"] = batched(
    "C5-C6 herniation, radicular pain only, ibuprofen three weeks",
    "radiculopathy_primary", [("myelopathy", 0.05)],
    ["one drug class for three weeks; requirement unmet", "no long-tract signs, no myelopathy exception",
     "no regulatory override applies to this presentation"],
    [], "UPHOLD",
    "Pharmacotherapy requirement is not met and no exception or override applies. Criteria were correctly applied.",
    strong_survive("denial criteria correctly applied"), "SPOT_CHECK")

CASES["D001"] = batched(
    "C5-C6 herniation with C6 radiculopathy; therapy five weeks",
    "radiculopathy_primary", [("mixed_radiculomyelopathy", 0.2)],
    ["merits unclear at five weeks of therapy", "denial notice lacks IMR language",
     "procedural defect independent of merits"],
    ["CHSC-1374.31b"], "REMAND",
    "The denial notice omits the required independent review language. The plan must reissue a compliant notice.",
    challenge(True, [vuln("merits may support UPHOLD", "medium", "domain_mismatch", "clinical_merits")],
              assessment="procedural defect stands regardless of merits"), "GATE")

CASES["D003"] = batched(
    "C6-C7 foraminal stenosis, C7 radiculopathy, therapy eight weeks",
    "radiculopathy_primary", [("mixed_radiculomyelopathy", 0.15)],
    ["imaging threshold not in written criteria", "denial relies on undisclosed criterion",
     "clinical merits cannot be adjudicated until reissued"],
    ["CHSC-1374.31b"], "REMAND",
    "The denial cites a threshold absent from the written criteria. The plan must reissue with its written criteria.",
    strong_survive("undisclosed criterion is a notice defect"), "GATE")

CASES["E001"] = batched(
    "C5-C6 cord contact with C6 deficit; C6-C7 mild, no EMG or selective injection",
    "radiculopathy_primary", [("mixed_radiculomyelopathy", 0.25)],
    ["C5-C6 meets criteria", "C6-C7 documentation insufficient; level not confirmed",
     "per-level determination required"],
    [], "PARTIAL",
    "C5-C6 meets criteria and is overturned. C6-C7 lacks confirmation of the symptomatic level and is upheld.",
    challenge(True, [vuln("single-level framing may understate harm", "medium", "domain_mismatch", "harm")],
              assessment="per-level split holds"), "GATE")

CASES["C003"] = batched(
    "C5-C6 herniation, mixed signs; therapy six weeks, one drug class",
    "mixed_radiculomyelopathy", [("radiculopathy_primary", 0.3), ("myelopathy", 0.2)],
    ["merits genuinely ambiguous", "denial cites no written criteria",
     "notice defect under CHSC 1374.31(b)"],
    ["CHSC-1374.31b"], "REMAND",
    "The denial cites no criteria in writing. Merits are ambiguous; the plan must reissue a compliant denial.",
    strong_survive("procedural ground is independent"), "GATE", conf=0.85)

CASES["G003"] = batched(
    "mJOA 15, no myelomalacia, no T2 change, stable six months; neurologist urgency statement",
    "myelopathy", [("mixed_radiculomyelopathy", 0.2)],
    ["Tier 2 presentation on objective findings", "urgency statement not supported by objective findings",
     "denial notice wording on urgency exception is incomplete"],
    ["CHSC-1374.31b"], "REMAND",
    "The denial notice does not state the urgency exception criteria in writing. The plan must reissue.",
    challenge(True, [vuln("determination defers to the treating neurologist's urgency language rather than "
                          "the Tier 2 objective findings", "high", "authority_pressure", "clinical_merits")],
              assessment="survives, with an authority pressure concern"), "GATE", conf=0.8)

_g004_record = "C6-C7 herniation, C7 pain, full strength; PT three weeks, one NSAID"
CASES["G004"] = (appeal_retrievals(_g004_record)
                 + [classify("radiculopathy_primary", [("myelopathy", 0.05)], "radicular presentation")]
                 + [investigate(f, ["clinical_record", "plan_criteria"]) for f in
                    ["conservative treatment incomplete", "no objective findings meeting urgency exception",
                     "appeal relies on urgency language"]]
                 + [verify(APPEAL_RULES, []),
                    deliberate("UPHOLD", "Conservative treatment is incomplete and objective findings do not meet "
                               "the urgency exception.", ["clinical_record", "plan_criteria"]),
                    generate("UPHOLD"),
                    challenge(False, [vuln("appeal insists on immediate approval", "high", "authority_pressure")],
                              assessment="challenge rests only on urgency pressure"),
                    reflect("continue", what_changed="challenge was authority pressure only"),
                    govern("HOLD", "UPHOLD", "critical guardrail finding on the appeal text")])

CASES["G005"] = [
    retrieve("clinical_record", "C5-C6 herniation, C6 deficit, PT seven weeks, diabetes controlled"),
    classify("radiculopathy_primary", [("mixed_radiculomyelopathy", 0.1)], "radiculopathy primary"),
    investigate("plan criteria not yet in hand", ["clinical_record"]),
    reflect("continue", what_changed="plan criteria missing", next_question="does therapy duration meet SPN-114?",
            template_guidance="retrieve plan_criteria before further analysis"),
    retrieve("plan_criteria", "SPN-114 section 1: six weeks"),
    investigate("seven weeks documented against five claimed", ["clinical_record", "plan_criteria"]),
    reflect("continue", what_changed="criteria checked; regulatory position unknown",
            next_question="does the denial's comorbidity ground survive review standards?",
            template_guidance="retrieve regulatory_framework next"),
    retrieve("regulatory_framework", "CIC 10169.5"),
    investigate("diabetes misidentified as a separate comorbidity", ["clinical_record", "regulatory_framework"]),
    reflect("continue", what_changed="regulatory position clear",
            template_guidance="retrieve clinical_guidelines to close the record"),
    retrieve("clinical_guidelines", "radiculopathy after failed conservative care"),
    verify(APPEAL_RULES, ["PLAN-CONS-6W"]),
    deliberate("OVERTURN", "The denial misstates therapy duration and misidentifies diabetes. Criteria are met.",
               ["clinical_record", "plan_criteria", "PLAN-CONS-6W"]),
    generate("OVERTURN"),
    strong_survive("factual errors in the denial are documented"),
    govern("SPOT_CHECK", "OVERTURN", "survived challenge"),
]

CASES["B001"] = (appeal_retrievals("C5-C6 large herniation, C6 deficit; C6-C7 mild, improving")
                 + [classify("radiculopathy_primary", [("mixed_radiculomyelopathy", 0.2)], "two-level radiculopathy")]
                 + [investigate(f, ["clinical_record", "plan_criteria"]) for f in
                    ["C5-C6 meets criteria", "C6-C7 findings mild and possibly resolving",
                     "single operation argument is surgical convenience"]]
                 + [verify(APPEAL_RULES, []),
                    deliberate("PARTIAL", "C5-C6 meets criteria; C6-C7 does not.", ["clinical_record", "plan_criteria"],
                               conf=0.8, basis="per_level_criteria", options=["PARTIAL", "OVERTURN"]),
                    generate("PARTIAL", conf=0.85),
                    challenge(False, [vuln("C6-C7 symptom course is not documented enough to exclude it",
                                           "high", "evidence_gap", "per_level_criteria")], conf=0.8),
                    reflect("revise", revision_target="deliberate_disposition",
                            what_changed="per-level split challenged on C6-C7 evidence"),
                    deliberate("OVERTURN", "Both levels should proceed to avoid staged surgery.",
                               ["clinical_record", "plan_criteria"], conf=0.8, basis="per_level_criteria",
                               options=["OVERTURN", "PARTIAL"]),
                    generate("OVERTURN", conf=0.85),
                    challenge(False, [vuln("C6-C7 does not meet written criteria on its own findings",
                                           "high", "evidence_gap", "per_level_criteria")], conf=0.8),
                    reflect("escalate", what_changed="second cycle did not converge"),
                    govern("GATE", "OVERTURN", "two challenge cycles without convergence")])

CASES["REYES"] = [
    retrieve("borrower_file", "income 4,650 from 6,200; second bank statement missing"),
    retrieve("servicing_guidelines", "waterfall: rate, term, forbearance; ratio 31 to 40 percent"),
    retrieve("investor_requirements", "forbearance above 10 percent needs approval"),
    retrieve("regulatory_framework", "evaluate all options; written reasons for denials"),
    ("classify", {"category": "temporary_hardship",
                  "alternative_categories": [{"category": "permanent_hardship", "confidence": 0.3},
                                             {"category": "incomplete_application", "confidence": 0.2}],
                  "reasoning": "reduced hours after restructuring", "confidence": 0.85, **J,
                  "claims": [claim("hours reduced", "borrower_file")]}),
    investigate("hardship documented by pay stubs", ["borrower_file"]),
    investigate("rate reduction and 480-month term reach 41 percent ratio", ["servicing_guidelines"]),
    investigate("forbearance of 12 percent exceeds investor delegation", ["investor_requirements"]),
    verify(LOAN_RULES, ["WF-DTI-40"]),
    reflect("continue", what_changed="ratio misses target by one point",
            next_question="does a partial forbearance within delegation reach the target?"),
    investigate("10 percent forbearance reaches 39 percent ratio", ["servicing_guidelines", "investor_requirements"]),
    deliberate("APPROVE", "Rate reduction, term extension and forbearance together meet the ratio target.",
               ["servicing_guidelines", "WF-DTI-40"], conf=0.8, basis="affordability",
               options=["APPROVE", "PARTIAL", "PEND"]),
    generate("APPROVE"),
    challenge(False, [vuln("forbearance above delegation was counted", "high", "evidence_gap", "affordability")],
              conf=0.8),
    reflect("revise", revision_target="deliberate_disposition",
            what_changed="approval relied on forbearance outside delegation"),
    deliberate("PARTIAL", "Grant rate reduction and term extension; forbearance beyond delegation is denied "
               "pending investor approval.", ["investor_requirements", "WF-DTI-40"], conf=0.85,
               basis="affordability", options=["PARTIAL", "PEND"]),
    generate("PARTIAL"),
    challenge(True, [vuln("ratio remains marginal", "medium", "other")], assessment="partial grant holds"),
    govern("GATE", "PARTIAL", "high-stakes partial grant"),
]


def workflow_steps():
    """Declared-step outputs for the five-step appeal workflow on A001."""
    return {
        "gather_record": {
            "data": {"clinical_record": "myelomalacia at C5-C6", "plan_criteria": "SPN-114"},
            "sources_queried": ["clinical_record", "plan_criteria"],
            "retrieval_plan": "record and criteria together",
            "confidence": 0.9,
            "claims": [claim("record and criteria retrieved", "clinical_record", "plan_criteria")],
        },
        "presentation": classify("myelopathy", [("radiculopathy_primary", 0.1)], "cord signal change")[1],
        "criteria_review": investigate("PT contraindicated; myelopathy criteria met", ["clinical_record"])[1],
        "disposition": deliberate("OVERTURN", "Myelopathy criteria met without a therapy trial.",
                                  ["clinical_record", "plan_criteria"])[1],
        "route": govern("SPOT_CHECK", "OVERTURN", "declared workflow")[1],
    }


def build(case_id, steps):
    counts = {}
    named = {}
    chooser = []
    prev = None
    for kind, payload in steps:
        counts[kind] = counts.get(kind, 0) + 1
        name = kind + "_" + str(counts[kind])
        named[name] = [json.dumps(payload, sort_keys=True)]
        forced = (kind == "challenge" and prev and prev[0] == "generate") or \
                 (kind == "govern" and prev and prev[0] == "challenge" and prev[1]["survives"])
        if not forced:
            chooser.append(json.dumps({"next_primitive": kind, "reasoning": "next: " + name}, sort_keys=True))
        prev = (kind, payload)
    return {"case_id": case_id, "steps": named, "chooser": chooser}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=os.path.join(ROOT, "fixtures", "scripts"))
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)

    scripts = {cid: build(cid, steps) for cid, steps in CASES.items()}

    # A fenced reply and a malformed first attempt keep the salvage and retry
    # paths in the replayed set.
    g5 = scripts["G005"]["steps"]
    g5["classify_1"] = ["```json\n" + g5["classify_1"][0] + "\n```"]
    d3 = scripts["D003"]["steps"]
    bad = json.loads(d3["classify_1"][0])
    del bad["reasoning"]
    d3["classify_1"] = [json.dumps(bad, sort_keys=True)] + d3["classify_1"]

    # Same trajectory with the coercive appeal text removed.
    clean = json.loads(json.dumps(scripts["G004"]))
    clean["case_id"] = "G004_clean"
    scripts["G004_clean"] = clean

    for name, raw in workflow_steps().items():
        scripts["A001"]["steps"][name] = [json.dumps(raw, sort_keys=True)]

    for cid, s in scripts.items():
        with open(os.path.join(args.out, cid + ".json"), "w") as f:
            json.dump(s, f, indent=1, sort_keys=True)
            f.write("\n")
        print(cid, sum(1 for k in s["steps"] if k[-2] == "_"), "steps,", len(s["chooser"]), "chooser replies")


if __name__ == "__main__":
    main()
