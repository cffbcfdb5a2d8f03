// Python surface. Structured results cross as JSON text; the package's
// __init__ decodes them.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "govdec/bench.hpp"
#include "govdec/error.hpp"
#include "govdec/engine.hpp"
#include "govdec/service.hpp"

namespace py = pybind11;
using namespace govdec;

namespace {

std::string run_case(const std::string& domain_path, const std::string& workflow_path, const std::string& case_path,
                     const std::string& scripts, const std::string& data_dir, std::int64_t clock_base) {
  ScriptedBackend backend;
  backend.load(scripts);
  const DomainConfig domain = load_domain(domain_path);
  InstanceSpec spec;
  spec.case_input = load_case(case_path, &domain);
  spec.instance_id = spec.case_input.case_id;
  spec.workflow = load_workflow(workflow_path);
  spec.domain = domain;
  RuntimeOptions ro;
  if (clock_base >= 0) {
    ro.ledger_clock = deterministic_clock(clock_base);
    ro.now = [clock_base] { return clock_base; };
  }
  Instance inst(std::move(spec), data_dir, backend, ModelPolicy::defaults(), ro);
  {
    py::gil_scoped_release release;
    inst.run();
  }
  json out = inst.to_json();
  out["ledger_path"] = inst.ledger_path().string();
  out["head_hash"] = inst.ledger().head_hash();
  return out.dump();
}

std::string apply_tiers(const std::vector<std::string>& proposals, const std::string& domain_default) {
  std::optional<TierLock> lock;
  const Tier def = parse_tier(domain_default).value_or(Tier::Auto);
  std::uint64_t i = 0;
  for (const auto& p : proposals) {
    const auto t = parse_tier(p);
    if (!t) throw py::value_error("unknown tier " + p);
    lock = apply_tier(lock, *t, "proposal", def, i++).lock;
  }
  return lock ? std::string(to_string(lock->tier)) : std::string(to_string(def));
}

}  // namespace

PYBIND11_MODULE(_govdec, m) {
  m.doc() = "governed decision execution core";

  py::register_exception<govdec::Error>(m, "GovdecError");

  m.def("sha256_hex", [](const std::string& s) { return sha256_hex(s); });
  m.def("canonical_json", [](const std::string& text) { return canonical_json(json::parse(text)); },
        "canonical form of a JSON document");
  m.def("chain_seed", &chain_seed);
  m.def("entry_hash", [](const std::string& prior, const std::string& content) {
    return entry_hash(prior, json::parse(content));
  });
  m.def("verify_ledger_file", [](const std::string& path) { return verify_ledger_file(path).to_json().dump(); });
  m.def("run_case", &run_case, py::arg("domain"), py::arg("workflow"), py::arg("case"), py::arg("scripts"),
        py::arg("data_dir"), py::arg("clock_base") = -1);
  m.def("qa_sample", &qa_sample, py::arg("ids"), py::arg("rate"), py::arg("seed"));
  m.def("apply_tiers", &apply_tiers, py::arg("proposals"), py::arg("domain_default") = "AUTO");
  m.def("hitl_legal", [](const std::string& from, const std::string& to) {
    const auto f = parse_hitl_state(from);
    const auto t = parse_hitl_state(to);
    if (!f || !t) throw py::value_error("unknown HITL state");
    return hitl_legal(*f, *t);
  });
  m.def("hitl_states", [] {
    std::vector<std::string> out;
    for (auto s : kAllHitlStates) out.emplace_back(to_string(s));
    return out;
  });
  m.def("load_domain_summary", [](const std::string& path) {
    const DomainConfig d = load_domain(path);
    return json{{"domain_id", d.domain_id},
                {"vocabulary", d.deliberate_vocabulary},
                {"default_tier", std::string(to_string(d.governance.default_tier))},
                {"guardrails", d.guardrails.size()}}
        .dump();
  });
  m.def("bench_report", [](const std::string& manifest, const std::string& work_dir, const std::string& format) {
    const auto fmt = parse_report_format(format);
    if (!fmt) throw py::value_error("format must be text, csv or json");
    const BenchManifest man = BenchManifest::load(manifest);
    std::vector<BenchResult> results;
    {
      py::gil_scoped_release release;
      results.push_back(run_bench_scripted(man, work_dir));
    }
    for (const char* b : {"react", "plan_and_solve"}) {
      if (man.baselines.count(b)) results.push_back(run_bench_baseline(man, b));
    }
    return emit_report(results, *fmt);
  });
  m.def("redact", [](const std::string& text, const std::string& domain_path) {
    const DomainConfig d = load_domain(domain_path);
    const Redaction r = redact(text, d.pii);
    return py::make_tuple(r.text, r.map.to_json().dump());
  });
}
