#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <memory>
#include <string>
#include <unistd.h>

#include "govdec/runtime.hpp"

namespace support {

namespace fs = std::filesystem;

inline const fs::path kRoot = GOVDEC_SOURCE_ROOT;
inline constexpr std::int64_t kClockBase = 1767225600;  // 2026-01-01T00:00:00Z

inline fs::path domain_path(const std::string& name) { return kRoot / "configs" / "domains" / (name + ".yaml"); }
inline fs::path workflow_path(const std::string& name) { return kRoot / "configs" / "workflows" / (name + ".yaml"); }
inline fs::path case_path(const std::string& id) { return kRoot / "fixtures" / "cases" / (id + ".json"); }

/// Fresh directory under the system temp dir, unique per process and call.
inline fs::path scratch(const std::string& tag) {
  static std::atomic<int> n{0};
  fs::path p = fs::temp_directory_path() /
               ("govdec-test-" + std::to_string(::getpid()) + "-" + tag + "-" + std::to_string(n++));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

inline govdec::ScriptedBackend& fixture_backend() {
  static govdec::ScriptedBackend b = [] {
    govdec::ScriptedBackend s;
    s.load(kRoot / "fixtures" / "scripts");
    return s;
  }();
  return b;
}

inline govdec::InstanceSpec spec_for(const std::string& case_id, const std::string& domain = "appeal",
                                     const std::string& workflow = "") {
  govdec::InstanceSpec spec;
  spec.domain = govdec::load_domain(domain_path(domain));
  spec.workflow = govdec::load_workflow(workflow_path(workflow.empty() ? domain : workflow));
  spec.case_input = govdec::load_case(case_path(case_id), &spec.domain);
  spec.instance_id = case_id;
  return spec;
}

inline govdec::RuntimeOptions deterministic_options() {
  govdec::RuntimeOptions o;
  o.ledger_clock = govdec::deterministic_clock(kClockBase);
  o.now = [] { return kClockBase; };
  return o;
}

inline std::unique_ptr<govdec::Instance> open_instance(const std::string& case_id, const fs::path& dir,
                                                       govdec::Backend& backend,
                                                       govdec::RuntimeOptions options = deterministic_options(),
                                                       const std::string& domain = "appeal",
                                                       const std::string& workflow = "") {
  return std::make_unique<govdec::Instance>(spec_for(case_id, domain, workflow), dir, backend,
                                            govdec::ModelPolicy::defaults(), std::move(options));
}

inline std::unique_ptr<govdec::Instance> run_fixture(const std::string& case_id, const fs::path& dir,
                                                     const std::string& domain = "appeal",
                                                     const std::string& workflow = "") {
  auto inst = open_instance(case_id, dir, fixture_backend(), deterministic_options(), domain, workflow);
  inst->run();
  return inst;
}

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace support
