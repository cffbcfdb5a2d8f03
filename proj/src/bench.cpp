#include "govdec/bench.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include "govdec/error.hpp"
#include "govdec/runtime.hpp"

namespace govdec {

namespace {

constexpr std::int64_t kBenchEpoch = 1767225600;  // 2026-01-01T00:00:00Z

json read_json(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ConfigError(p.string(), "cannot open");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(p.string(), e.what());
  }
}

std::string short_code(const std::string& disposition) {
  static const std::map<std::string, std::string> codes = {
      {"OVERTURN", "OT"}, {"UPHOLD", "UP"}, {"REMAND", "RE"}, {"PARTIAL", "PA"}};
  auto it = codes.find(disposition);
  return it == codes.end() ? (disposition.empty() ? "-" : disposition) : it->second;
}

std::string tier_code(const std::optional<Tier>& t) {
  if (!t) return "";
  return *t == Tier::SpotCheck ? "SC" : std::string(to_string(*t));
}

const char* kCategoryOrder[] = {"OVERTURN", "UPHOLD", "REMAND", "PARTIAL", "CONTESTED"};

std::string category_title(const std::string& c, int n) {
  if (c == "CONTESTED") return "Contested ground truth (" + std::to_string(n) + ")";
  return c + " (" + std::to_string(n) + ")";
}

std::string fraction(int a, int b) {
  std::ostringstream ss;
  ss << a << "/" << b << " = " << (b ? static_cast<int>(std::lround(100.0 * a / b)) : 0) << "%";
  return ss.str();
}

std::vector<std::string> ordered_categories(const BenchResult& r) {
  std::vector<std::string> out;
  for (const char* c : kCategoryOrder) {
    for (const auto& row : r.rows) {
      if (row.category == c) {
        out.emplace_back(c);
        break;
      }
    }
  }
  for (const auto& row : r.rows) {
    if (std::find(out.begin(), out.end(), row.category) == out.end()) out.push_back(row.category);
  }
  return out;
}

}  // namespace

BenchManifest BenchManifest::load(const std::filesystem::path& path) {
  const json j = read_json(path);
  const auto base = path.parent_path();
  BenchManifest m;
  m.domain_path = base / j.at("domain").get<std::string>();
  m.workflow_path = base / j.at("workflow").get<std::string>();
  m.scripts_dir = base / j.at("scripts").get<std::string>();
  for (const auto& c : j.at("cases")) {
    BenchCase bc;
    bc.case_id = c.at("case_id").get<std::string>();
    bc.ground_truth = c.at("ground_truth").get<std::string>();
    bc.category = c.at("category").get<std::string>();
    bc.case_path = base / c.at("case").get<std::string>();
    m.cases.push_back(std::move(bc));
  }
  const json baselines = j.value("baselines", json::object());
  for (const auto& [name, p] : baselines.items()) m.baselines[name] = base / p.get<std::string>();
  return m;
}

BaselineFixture load_baseline(const std::filesystem::path& path) {
  const json j = read_json(path);
  BaselineFixture f;
  f.system = j.at("system").get<std::string>();
  f.label = j.value("label", f.system);
  for (const auto& [id, d] : j.at("outcomes").items()) {
    f.outcomes[id] = d.is_object() ? d.at("disposition").get<std::string>() : d.get<std::string>();
  }
  return f;
}

BenchResult score(std::string system, std::string label, bool governed, std::vector<BenchRow> rows) {
  BenchResult r;
  r.system = std::move(system);
  r.label = std::move(label);
  r.governed = governed;
  for (auto& row : rows) {
    row.correct = !row.disposition.empty() && row.disposition == row.ground_truth;
    if (governed) {
      const bool executes = !row.tier || *row.tier == Tier::Auto || *row.tier == Tier::SpotCheck;
      row.silent_error = !row.correct && executes;
    } else {
      row.silent_error = !row.correct;
    }
    r.correct += row.correct ? 1 : 0;
    r.silent_errors += row.silent_error ? 1 : 0;
    r.spot_check += governed && row.tier == Tier::SpotCheck ? 1 : 0;
  }
  r.total = static_cast<int>(rows.size());
  r.rows = std::move(rows);
  return r;
}

BenchResult run_bench_scripted(const BenchManifest& manifest, const std::filesystem::path& work_dir) {
  ScriptedBackend backend;
  backend.load(manifest.scripts_dir);
  const DomainConfig domain = load_domain(manifest.domain_path);
  const WorkflowConfig workflow = load_workflow(manifest.workflow_path);

  std::vector<BenchRow> rows;
  for (const auto& bc : manifest.cases) {
    if (!backend.has_case(bc.case_id)) throw MissingScript("no script for case " + bc.case_id);
    InstanceSpec spec;
    spec.instance_id = bc.case_id + "-bench";
    spec.case_input = load_case(bc.case_path, &domain);
    spec.workflow = workflow;
    spec.domain = domain;
    const auto dir = work_dir / spec.instance_id;
    std::filesystem::remove_all(dir);
    RuntimeOptions ro;
    ro.ledger_clock = deterministic_clock(kBenchEpoch);
    ro.now = [] { return kBenchEpoch; };
    Instance inst(std::move(spec), dir, backend, ModelPolicy::defaults(), ro);
    inst.run();

    BenchRow row;
    row.case_id = bc.case_id;
    row.category = bc.category;
    row.ground_truth = bc.ground_truth;
    row.steps = static_cast<int>(inst.steps().size());
    if (auto d = inst.determination()) {
      row.disposition = d->disposition;
      row.tier = d->tier_applied;
    }
    rows.push_back(std::move(row));
  }
  return score("cc_scripted", "CC", true, std::move(rows));
}

BenchResult run_bench_baseline(const BenchManifest& manifest, const std::string& system) {
  auto it = manifest.baselines.find(system);
  if (it == manifest.baselines.end()) throw MissingScript("no baseline fixture for " + system);
  const BaselineFixture f = load_baseline(it->second);
  std::vector<BenchRow> rows;
  for (const auto& bc : manifest.cases) {
    auto o = f.outcomes.find(bc.case_id);
    if (o == f.outcomes.end()) throw MissingScript(system + " fixture has no outcome for " + bc.case_id);
    BenchRow row;
    row.case_id = bc.case_id;
    row.category = bc.category;
    row.ground_truth = bc.ground_truth;
    row.disposition = o->second;
    rows.push_back(std::move(row));
  }
  return score(f.system, f.label, false, std::move(rows));
}

double CalibrationReport::fraction(Tier t) const {
  auto it = counts.find(t);
  return total && it != counts.end() ? static_cast<double>(it->second) / total : 0.0;
}

json CalibrationReport::to_json() const {
  json tiers = json::object();
  for (Tier t : {Tier::Auto, Tier::SpotCheck, Tier::Gate, Tier::Hold}) {
    auto it = counts.find(t);
    tiers[std::string(to_string(t))] = {{"count", it == counts.end() ? 0 : it->second},
                                        {"fraction", fixed6(fraction(t))}};
  }
  return {{"total", total}, {"tiers", tiers}, {"degenerate", degenerate}, {"warnings", warnings}};
}

CalibrationReport tier_calibration(const BenchResult& governed) {
  CalibrationReport r;
  for (const auto& row : governed.rows) {
    if (!row.tier) continue;
    ++r.counts[*row.tier];
    ++r.total;
  }
  if (r.total == 0) return r;
  const int reviewed = (r.counts.count(Tier::Gate) ? r.counts.at(Tier::Gate) : 0) +
                       (r.counts.count(Tier::Hold) ? r.counts.at(Tier::Hold) : 0);
  if (reviewed == r.total) {
    r.degenerate = true;
    r.warnings.push_back("every determination was routed to mandatory review; the tiers carry no signal and "
                         "reviewer workload is not reduced");
  }
  for (const auto& row : governed.rows) {
    if (row.silent_error) r.warnings.push_back(row.case_id + " executed an incorrect determination without review");
  }
  return r;
}

std::optional<ReportFormat> parse_report_format(std::string_view s) noexcept {
  if (s == "text") return ReportFormat::Text;
  if (s == "csv") return ReportFormat::Csv;
  if (s == "json") return ReportFormat::Json;
  return std::nullopt;
}

json report_json(const std::vector<BenchResult>& results) {
  json systems = json::array();
  for (const auto& r : results) {
    json by_cat = json::object();
    for (const auto& row : r.rows) {
      auto& c = by_cat[row.category];
      if (c.is_null()) c = {{"correct", 0}, {"total", 0}};
      c["correct"] = c["correct"].get<int>() + (row.correct ? 1 : 0);
      c["total"] = c["total"].get<int>() + 1;
    }
    json rows = json::array();
    for (const auto& row : r.rows) {
      rows.push_back({{"case_id", row.case_id},
                      {"category", row.category},
                      {"ground_truth", row.ground_truth},
                      {"disposition", row.disposition},
                      {"tier", row.tier ? json(std::string(to_string(*row.tier))) : json(nullptr)},
                      {"correct", row.correct},
                      {"silent_error", row.silent_error}});
    }
    json s = {{"system", r.system},
              {"label", r.label},
              {"governed", r.governed},
              {"correct", r.correct},
              {"total", r.total},
              {"accuracy", fixed6(r.accuracy())},
              {"silent_errors", r.silent_errors},
              {"by_category", by_cat},
              {"rows", rows}};
    if (r.governed) {
      s["spot_check"] = r.spot_check;
      s["spot_check_fraction"] = fixed6(r.spot_check_fraction());
      s["calibration"] = tier_calibration(r).to_json();
    }
    systems.push_back(std::move(s));
  }
  return {{"systems", systems}};
}

std::string emit_report(const std::vector<BenchResult>& results, ReportFormat format) {
  if (results.empty()) return format == ReportFormat::Json ? report_json(results).dump(2) + "\n" : std::string();
  if (format == ReportFormat::Json) return report_json(results).dump(2) + "\n";

  const BenchResult& lead = results.front();
  std::ostringstream out;
  if (format == ReportFormat::Csv) {
    out << "case_id,category,ground_truth";
    for (const auto& r : results) {
      out << "," << r.system << "_disposition";
      if (r.governed) out << "," << r.system << "_tier";
      out << "," << r.system << "_correct," << r.system << "_silent_error";
    }
    out << "\n";
    for (std::size_t i = 0; i < lead.rows.size(); ++i) {
      const auto& base = lead.rows[i];
      out << base.case_id << "," << base.category << "," << base.ground_truth;
      for (const auto& r : results) {
        const auto& row = r.rows.at(i);
        out << "," << row.disposition;
        if (r.governed) out << "," << (row.tier ? std::string(to_string(*row.tier)) : std::string());
        out << "," << (row.correct ? 1 : 0) << "," << (row.silent_error ? 1 : 0);
      }
      out << "\n";
    }
    out << "score,,";
    for (const auto& r : results) out << "," << r.correct << "/" << r.total << (r.governed ? ",," : ",") << ",";
    out << "\nsilent_errors,,";
    for (const auto& r : results) out << "," << r.silent_errors << (r.governed ? ",," : ",") << ",";
    out << "\n";
    return out.str();
  }

  auto cell = [](const std::string& s, int w) {
    std::string c = s;
    if (static_cast<int>(c.size()) < w) c.append(w - c.size(), ' ');
    return c;
  };
  out << cell("Case", 7) << cell("GT", 5);
  for (const auto& r : results) {
    out << cell(r.label, 11);
    if (r.governed) out << cell(r.label + " Tier", 10);
  }
  out << "\n";
  for (const auto& cat : ordered_categories(lead)) {
    int n = 0;
    for (const auto& row : lead.rows) n += row.category == cat ? 1 : 0;
    out << category_title(cat, n) << "\n";
    for (std::size_t i = 0; i < lead.rows.size(); ++i) {
      if (lead.rows[i].category != cat) continue;
      out << cell(lead.rows[i].case_id, 7) << cell(short_code(lead.rows[i].ground_truth), 5);
      for (const auto& r : results) {
        const auto& row = r.rows.at(i);
        out << cell(short_code(row.disposition) + (row.correct ? " ok" : " x"), 11);
        if (r.governed) out << cell(tier_code(row.tier), 10);
      }
      out << "\n";
    }
  }
  out << cell("Score", 12);
  for (const auto& r : results) out << cell(fraction(r.correct, r.total), r.governed ? 21 : 11);
  out << "\n" << cell("Silent", 12);
  for (const auto& r : results) out << cell(std::to_string(r.silent_errors), r.governed ? 21 : 11);
  out << "\n";
  for (const auto& r : results) {
    if (!r.governed) continue;
    const CalibrationReport cal = tier_calibration(r);
    out << r.label << " SPOT_CHECK " << r.spot_check << "/" << r.total;
    for (Tier t : {Tier::Auto, Tier::Gate, Tier::Hold}) {
      auto it = cal.counts.find(t);
      out << ", " << to_string(t) << " " << (it == cal.counts.end() ? 0 : it->second);
    }
    out << "\n";
    for (const auto& w : cal.warnings) out << "warning: " << w << "\n";
  }
  return out.str();
}

}  // namespace govdec
