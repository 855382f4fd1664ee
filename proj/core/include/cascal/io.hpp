#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "cascal/eval.hpp"
#include "cascal/optimizer.hpp"
#include "cascal/types.hpp"

namespace cascal {

// Stage files: UTF-8 CSV, header `sample_id,true_label,p_0,...,p_{C-1}`,
// LF endings, no quoting. Probabilities are written with 6 fractional
// digits. One file per cascade stage; rows join on sample_id.

PredictionSet load_prediction_set(const std::filesystem::path& stage1_path,
                                  const std::filesystem::path& stage2_path,
                                  bool renormalize);

void save_stage_files(const PredictionSet& predictions,
                      const std::filesystem::path& stage1_path,
                      const std::filesystem::path& stage2_path);

// Policy files: JSON, one record per alpha, thresholds stored at full
// round-trip precision. Metadata holds creation parameters only (never
// input paths), so outputs are byte-stable across directories.
struct PolicyFile {
  int class_count = 0;
  PolicyKind kind = PolicyKind::Global;
  std::vector<ThresholdPolicy> policies;
  std::map<std::string, std::string> metadata;
};

void save_policy(const PolicyFile& file, const std::filesystem::path& path);
PolicyFile load_policy(const std::filesystem::path& path);

std::string policy_to_json(const PolicyFile& file);
PolicyFile policy_from_json(const std::string& text, const std::string& context);

// Trade-off curve files: CSV with the two single-stage baselines repeated
// on every row so a curve file is self-contained.
void save_curve(const TradeoffCurve& curve, const std::filesystem::path& path);
TradeoffCurve load_curve(const std::filesystem::path& path);

std::string curve_to_csv(const TradeoffCurve& curve);
TradeoffCurve curve_from_csv(const std::string& text, const std::string& context);

std::string report_to_json(const EvaluationReport& report,
                           const std::optional<std::vector<std::string>>& class_names);

std::string histogram_to_csv(const Histogram& histogram);

std::string objective_curve_to_csv(std::span<const ObjectiveCurvePoint> points);

std::string comparison_to_csv(std::span<const PolicyComparison> rows);

// Fixed "%.6f" formatting used by every delimited output.
std::string fixed6(double value);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace cascal
