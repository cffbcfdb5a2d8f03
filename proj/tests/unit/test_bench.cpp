#include <doctest.h>

#include "govdec/bench.hpp"
#include "govdec/error.hpp"
#include "support.hpp"

using namespace govdec;

namespace {

const std::filesystem::path kManifest = support::kRoot / "fixtures" / "bench" / "manifest.json";

BenchRow row(std::string id, std::string gt, std::string disp, std::optional<Tier> tier) {
  BenchRow r;
  r.case_id = std::move(id);
  r.category = gt;
  r.ground_truth = std::move(gt);
  r.disposition = std::move(disp);
  r.tier = tier;
  return r;
}

}  // namespace

TEST_SUITE("bench") {

TEST_CASE("silent errors are wrong answers that execute") {
  const auto r = score("cc", "CC", true,
                       {row("a", "OVERTURN", "OVERTURN", Tier::SpotCheck), row("b", "UPHOLD", "OVERTURN", Tier::Gate),
                        row("c", "UPHOLD", "OVERTURN", Tier::SpotCheck), row("d", "REMAND", "REMAND", Tier::Hold),
                        row("e", "UPHOLD", "OVERTURN", Tier::Auto)});
  CHECK(r.correct == 2);
  CHECK(r.silent_errors == 2);
  CHECK(r.spot_check == 2);
  CHECK(r.accuracy() == doctest::Approx(0.4));
  const auto u = score("b", "B", false, {row("a", "OVERTURN", "UPHOLD", std::nullopt), row("b", "X", "", std::nullopt)});
  CHECK(u.silent_errors == 2);
  CHECK(u.spot_check == 0);
}

TEST_CASE("calibration flags a degenerate tier distribution") {
  const auto all_gate = score("cc", "CC", true, {row("a", "X", "X", Tier::Gate), row("b", "Y", "Y", Tier::Hold)});
  CHECK(tier_calibration(all_gate).degenerate);
  const auto mixed = score("cc", "CC", true, {row("a", "X", "X", Tier::Gate), row("b", "Y", "Y", Tier::SpotCheck)});
  const auto cal = tier_calibration(mixed);
  CHECK_FALSE(cal.degenerate);
  CHECK(cal.fraction(Tier::SpotCheck) == doctest::Approx(0.5));
}

TEST_CASE("manifest and baselines load") {
  const auto m = BenchManifest::load(kManifest);
  CHECK(m.cases.size() == 11);
  CHECK(m.baselines.size() == 2);
  const auto react = load_baseline(m.baselines.at("react"));
  CHECK(react.label == "ReAct");
  CHECK(react.outcomes.size() == 11);
  CHECK(react.outcomes.at("G004") == "REMAND");
}

TEST_CASE("baseline scores") {
  const auto m = BenchManifest::load(kManifest);
  const auto react = run_bench_baseline(m, "react");
  CHECK(react.correct == 6);
  CHECK(react.silent_errors == 5);
  const auto ps = run_bench_baseline(m, "plan_and_solve");
  CHECK(ps.correct == 5);
  CHECK(ps.silent_errors == 6);
  CHECK_THROWS(run_bench_baseline(m, "nonesuch"));
}

TEST_CASE("missing scripts are reported by case") {
  auto m = BenchManifest::load(kManifest);
  m.scripts_dir = support::scratch("empty-scripts");
  CHECK_THROWS_AS(run_bench_scripted(m, support::scratch("bench-missing")), MissingScript);
}

TEST_CASE("report formats") {
  const std::vector<BenchResult> results = {
      score("cc", "CC", true, {row("a", "OVERTURN", "OVERTURN", Tier::SpotCheck)}),
      score("react", "ReAct", false, {row("a", "OVERTURN", "UPHOLD", std::nullopt)})};
  const json j = json::parse(emit_report(results, ReportFormat::Json));
  CHECK(j["systems"].size() == 2);
  CHECK(j["systems"][0]["spot_check_fraction"] == "1.000000");
  const std::string csv = emit_report(results, ReportFormat::Csv);
  CHECK(csv.rfind("case_id,category,ground_truth,cc_disposition,cc_tier,cc_correct,cc_silent_error,"
                  "react_disposition,react_correct,react_silent_error\n",
                  0) == 0);
  CHECK(csv.find("a,OVERTURN,OVERTURN,OVERTURN,SPOT_CHECK,1,0,UPHOLD,0,1\n") != std::string::npos);
  const std::string text = emit_report(results, ReportFormat::Text);
  CHECK(text.find("CC SPOT_CHECK 1/1") != std::string::npos);
  CHECK(parse_report_format("xml") == std::nullopt);
}

TEST_CASE("full replay matches the frozen report") {
  // Regenerate with: govdec bench --format json --out fixtures/bench/golden_report.json
  const auto manifest = BenchManifest::load(kManifest);
  std::vector<BenchResult> results{run_bench_scripted(manifest, support::scratch("golden"))};
  for (const char* b : {"react", "plan_and_solve"}) results.push_back(run_bench_baseline(manifest, b));
  const json gold = json::parse(support::read_file(support::kRoot / "fixtures" / "bench" / "golden_report.json"));
  CHECK(report_json(results) == gold);
}

}
