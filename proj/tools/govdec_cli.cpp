// Operator CLI: run, verify-ledger, serve, bench, list.

#include <csignal>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "govdec/bench.hpp"
#include "govdec/engine.hpp"
#include "govdec/error.hpp"
#include "govdec/service.hpp"

namespace fs = std::filesystem;
using namespace govdec;

namespace {

const fs::path kRoot = GOVDEC_SOURCE_ROOT;

struct BackendFlags {
  std::string kind = "scripted";
  fs::path scripts = kRoot / "fixtures" / "scripts";
  fs::path llm_config;
};

std::unique_ptr<Backend> make_backend(const BackendFlags& f) {
  if (f.kind == "scripted") {
    auto b = std::make_unique<ScriptedBackend>();
    b->load(f.scripts);
    return b;
  }
  if (f.kind == "http") return std::make_unique<HttpBackend>(HttpBackendConfig::from_environment());
  throw ContractError("unknown backend '" + f.kind + "' (scripted or http)");
}

ModelPolicy make_policy(const BackendFlags& f) {
  ModelPolicy p = f.llm_config.empty() ? ModelPolicy::defaults() : ModelPolicy::load(f.llm_config);
  p.apply_environment();
  return p;
}

/// A bare name resolves inside the config tree; anything with a slash or
/// extension is a path.
fs::path resolve(const std::string& name, const fs::path& dir, const std::string& ext) {
  if (name.find('/') != std::string::npos || fs::path(name).has_extension()) return name;
  return dir / (name + ext);
}

Service* g_service = nullptr;
void on_signal(int) {
  if (g_service) g_service->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"governed decision runner"};
  app.require_subcommand(1);
  fs::path config_root = kRoot / "configs";
  app.add_option("--config-root", config_root, "directory holding domains/ and workflows/");

  BackendFlags bf;
  auto add_backend = [&](CLI::App* sub) {
    sub->add_option("--backend", bf.kind, "scripted | http");
    sub->add_option("--scripts", bf.scripts, "script file or directory for the scripted backend");
    sub->add_option("--llm-config", bf.llm_config, "model policy yaml");
  };

  // run
  auto* run = app.add_subcommand("run", "run one case and print disposition and tier");
  std::string domain_name, workflow_name, case_ref;
  fs::path data_dir = fs::temp_directory_path() / "govdec";
  bool as_json = false;
  run->add_option("--domain", domain_name, "domain name or yaml path")->required();
  run->add_option("--workflow", workflow_name, "workflow name or yaml path (default: the domain's)");
  run->add_option("--case", case_ref, "case id under fixtures/cases or a json path")->required();
  run->add_option("--data-dir", data_dir, "where instance directories go");
  run->add_flag("--json", as_json, "print the full instance summary");
  add_backend(run);

  // verify-ledger
  auto* verify = app.add_subcommand("verify-ledger", "check a ledger file's hash chain");
  fs::path ledger_file;
  verify->add_option("ledger", ledger_file, "ndjson ledger")->required();

  // serve
  auto* serve = app.add_subcommand("serve", "REST + SSE service");
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string operator_token, reviewer_token;
  fs::path static_dir;
  serve->add_option("--host", host);
  serve->add_option("--port", port);
  serve->add_option("--data-dir", data_dir);
  serve->add_option("--operator-token", operator_token)->envname("GOVDEC_OPERATOR_TOKEN");
  serve->add_option("--reviewer-token", reviewer_token)->envname("GOVDEC_REVIEWER_TOKEN");
  serve->add_option("--static", static_dir, "reviewer console build directory");
  add_backend(serve);

  // bench
  auto* bench = app.add_subcommand("bench", "replay the benchmark set and print the comparison table");
  fs::path manifest = kRoot / "fixtures" / "bench" / "manifest.json";
  std::string format = "text";
  fs::path work_dir = fs::temp_directory_path() / "govdec-bench";
  fs::path out_file;
  bench->add_option("--manifest", manifest);
  bench->add_option("--format", format, "text | csv | json");
  bench->add_option("--work-dir", work_dir);
  bench->add_option("--out", out_file, "write the report here instead of stdout");

  // list
  auto* list = app.add_subcommand("list", "list instances in a data directory");
  list->add_option("--data-dir", data_dir);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (*run) {
      const fs::path domain_path = resolve(domain_name, config_root / "domains", ".yaml");
      const fs::path workflow_path =
          resolve(workflow_name.empty() ? domain_name : workflow_name, config_root / "workflows", ".yaml");
      const fs::path case_path = resolve(case_ref, kRoot / "fixtures" / "cases", ".json");
      std::ifstream in(case_path);
      if (!in) throw CaseSchemaError("cannot open case " + case_path.string());
      auto backend = make_backend(bf);
      EngineOptions eo;
      eo.data_dir = data_dir;
      eo.backend = backend.get();
      eo.policy = make_policy(bf);
      Engine engine(eo);
      const std::string id = engine.start({json::parse(in), workflow_path, domain_path});
      auto inst = engine.get(id);
      if (as_json) {
        std::cout << inst->summary().dump(2) << "\n";
      } else {
        const auto d = inst->determination();
        std::cout << (d ? d->disposition : std::string("-")) << " "
                  << (d ? std::string(to_string(d->tier_applied)) : std::string("-")) << "\n";
      }
      std::cerr << id << " " << to_string(inst->status()) << " " << inst->ledger_path().string() << "\n";
      return 0;
    }
    if (*verify) {
      const ChainVerification v = verify_ledger_file(ledger_file);
      if (v.chain_valid) {
        std::cout << "valid (" << v.entries_checked << " entries)\n";
        return 0;
      }
      std::cout << "broken at index " << v.first_broken_index.value_or(0) << "\n";
      return 1;
    }
    if (*serve) {
      auto backend = make_backend(bf);
      EngineOptions eo;
      eo.data_dir = data_dir;
      eo.backend = backend.get();
      eo.policy = make_policy(bf);
      Engine engine(eo);
      engine.recover_all(true);
      ServiceOptions so;
      so.host = host;
      so.port = port;
      so.operator_token = operator_token;
      so.reviewer_token = reviewer_token;
      so.config_root = config_root;
      so.static_dir = static_dir;
      if (operator_token.empty() || reviewer_token.empty()) {
        std::cerr << "warning: a role without a token cannot authenticate\n";
      }
      Service service(engine, so);
      g_service = &service;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cerr << "listening on " << host << ":" << port << "\n";
      if (!service.listen()) {
        std::cerr << "error: cannot listen on " << host << ":" << port << "\n";
        return 1;
      }
      return 0;
    }
    if (*bench) {
      const auto fmt = parse_report_format(format);
      if (!fmt) throw ContractError("unknown format '" + format + "'");
      const BenchManifest m = BenchManifest::load(manifest);
      std::vector<BenchResult> results{run_bench_scripted(m, work_dir)};
      for (const auto& [name, _] : m.baselines) results.push_back(run_bench_baseline(m, name));
      // Fixed column order: react before plan_and_solve, as published.
      std::stable_sort(results.begin() + 1, results.end(),
                       [](const BenchResult& a, const BenchResult& b) { return a.system == "react" && b.system != "react"; });
      const std::string report = emit_report(results, *fmt);
      if (out_file.empty()) {
        std::cout << report;
      } else {
        std::ofstream(out_file) << report;
      }
      return 0;
    }
    if (*list) {
      ScriptedBackend none;
      EngineOptions eo;
      eo.data_dir = data_dir;
      eo.backend = &none;
      Engine engine(eo);
      for (const auto& [id, s] : engine.store().list("instances")) {
        std::cout << id << "\t" << s.value("status", "") << "\t"
                  << (s["tier"].is_string() ? s["tier"].get<std::string>() : "-") << "\t"
                  << (s["disposition"].is_string() ? s["disposition"].get<std::string>() : "-") << "\n";
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
