#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "govdec/types.hpp"

namespace govdec {

using json = nlohmann::json;

struct BenchCase {
  std::string case_id;
  std::string ground_truth;
  /// OVERTURN | UPHOLD | REMAND | PARTIAL | CONTESTED
  std::string category;
  std::filesystem::path case_path;
};

struct BaselineFixture {
  std::string system;
  std::string label;
  std::map<std::string, std::string> outcomes;
};

struct BenchManifest {
  std::filesystem::path domain_path;
  std::filesystem::path workflow_path;
  std::filesystem::path scripts_dir;
  std::vector<BenchCase> cases;
  std::map<std::string, std::filesystem::path> baselines;

  /// Paths inside the file are relative to it.
  static BenchManifest load(const std::filesystem::path& path);
};

BaselineFixture load_baseline(const std::filesystem::path& path);

struct BenchRow {
  std::string case_id;
  std::string category;
  std::string ground_truth;
  std::string disposition;
  std::optional<Tier> tier;
  bool correct = false;
  bool silent_error = false;
  int steps = 0;
};

struct BenchResult {
  std::string system;
  std::string label;
  bool governed = false;
  std::vector<BenchRow> rows;
  int correct = 0;
  int total = 0;
  int silent_errors = 0;
  int spot_check = 0;

  double accuracy() const { return total ? static_cast<double>(correct) / total : 0.0; }
  double spot_check_fraction() const { return total ? static_cast<double>(spot_check) / total : 0.0; }
};

/// Fills correct / silent_error on every row and the aggregates. Pure.
/// Correctness ignores the tier; a governed error is silent only at AUTO or
/// SPOT_CHECK, an ungoverned one always.
BenchResult score(std::string system, std::string label, bool governed, std::vector<BenchRow> rows);

/// Runs every case through a fresh instance under the scripted backend.
/// Throws MissingScript when a case has no script.
BenchResult run_bench_scripted(const BenchManifest& manifest, const std::filesystem::path& work_dir);

BenchResult run_bench_baseline(const BenchManifest& manifest, const std::string& system);

struct CalibrationReport {
  std::map<Tier, int> counts;
  int total = 0;
  bool degenerate = false;
  std::vector<std::string> warnings;

  double fraction(Tier t) const;
  json to_json() const;
};

CalibrationReport tier_calibration(const BenchResult& governed);

enum class ReportFormat : std::uint8_t { Text, Csv, Json };
std::optional<ReportFormat> parse_report_format(std::string_view s) noexcept;

/// Renders the comparison table: governed system first, then baselines.
std::string emit_report(const std::vector<BenchResult>& results, ReportFormat format);
json report_json(const std::vector<BenchResult>& results);

}  // namespace govdec
