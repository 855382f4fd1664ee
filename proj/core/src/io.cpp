#include "cascal/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "cascal/errors.hpp"

namespace cascal {

namespace {

using nlohmann::json;

std::vector<std::string> split_line(const std::string& line, char sep) {
  std::vector<std::string> fields;
  size_t start = 0;
  for (;;) {
    const size_t pos = line.find(sep, start);
    if (pos == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  size_t start = 0;
  while (start < text.size()) {
    size_t pos = text.find('\n', start);
    if (pos == std::string::npos) pos = text.size();
    std::string line = text.substr(start, pos - start);
    if (!line.empty() && line.back() == '\r') line.pop_back();  // tolerate CRLF input
    lines.push_back(std::move(line));
    start = pos + 1;
  }
  return lines;
}

double parse_double(const std::string& token, const std::string& where) {
  double value = 0.0;
  const char* begin = token.data();
  const char* end = begin + token.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
    throw ValidationError(where + ": '" + token + "' is not a finite number");
  }
  return value;
}

int parse_int(const std::string& token, const std::string& where) {
  int value = 0;
  const char* begin = token.data();
  const char* end = begin + token.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw ValidationError(where + ": '" + token + "' is not an integer");
  }
  return value;
}

struct StageRows {
  int class_count = 0;
  std::vector<std::string> ids;           // in file order
  std::vector<int> labels;
  std::vector<std::vector<double>> probs;
};

StageRows parse_stage_file(const std::filesystem::path& path, bool renormalize) {
  const std::string text = read_text_file(path);
  const std::vector<std::string> lines = split_lines(text);
  const std::string file = path.string();
  if (lines.empty()) {
    throw ValidationError(file + ": empty file, expected a header row");
  }

  const std::vector<std::string> header = split_line(lines[0], ',');
  if (header.size() < 4 || header[0] != "sample_id" || header[1] != "true_label") {
    throw ValidationError(file + ": header must be sample_id,true_label,p_0,...,p_{C-1}");
  }
  const int class_count = static_cast<int>(header.size()) - 2;
  for (int c = 0; c < class_count; ++c) {
    if (header[static_cast<size_t>(c) + 2] != "p_" + std::to_string(c)) {
      throw ValidationError(file + ": header column " + std::to_string(c + 3) +
                            " must be p_" + std::to_string(c));
    }
  }

  StageRows rows;
  rows.class_count = class_count;
  std::unordered_set<std::string> seen;
  for (size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty() && i + 1 == lines.size()) break;  // trailing newline
    const std::string where = file + " row " + std::to_string(i + 1);
    const std::vector<std::string> fields = split_line(lines[i], ',');
    if (static_cast<int>(fields.size()) != class_count + 2) {
      throw ValidationError(where + ": expected " + std::to_string(class_count + 2) +
                            " fields, got " + std::to_string(fields.size()));
    }
    if (fields[0].empty()) {
      throw ValidationError(where + ": empty sample_id");
    }
    if (!seen.insert(fields[0]).second) {
      throw JoinError(file + ": duplicate sample_id '" + fields[0] + "'");
    }
    const int label = parse_int(fields[1], where + " true_label");
    if (label < 0 || label >= class_count) {
      throw ValidationError(where + ": true_label " + std::to_string(label) +
                            " out of range [0, " + std::to_string(class_count) + ")");
    }

    std::vector<double> probs(static_cast<size_t>(class_count), 0.0);
    double sum = 0.0;
    for (int c = 0; c < class_count; ++c) {
      const double p = parse_double(fields[static_cast<size_t>(c) + 2],
                                    where + " p_" + std::to_string(c));
      if (p < 0.0) {
        throw ValidationError(where + ": negative probability p_" + std::to_string(c));
      }
      probs[static_cast<size_t>(c)] = p;
      sum += p;
    }
    if (renormalize) {
      if (sum <= 0.0) {
        throw ValidationError(where + ": probabilities sum to 0, cannot renormalize");
      }
      for (double& p : probs) p /= sum;
    } else {
      if (std::abs(sum - 1.0) > kProbSumTolerance) {
        std::ostringstream msg;
        msg << where << ": probabilities sum to " << sum << ", outside 1 +/- "
            << kProbSumTolerance << " (rerun with renormalization to accept)";
        throw ValidationError(msg.str());
      }
      for (double p : probs) {
        if (p > 1.0) {
          throw ValidationError(where + ": probability above 1");
        }
      }
    }

    rows.ids.push_back(fields[0]);
    rows.labels.push_back(label);
    rows.probs.push_back(std::move(probs));
  }
  return rows;
}

}  // namespace

PredictionSet load_prediction_set(const std::filesystem::path& stage1_path,
                                  const std::filesystem::path& stage2_path,
                                  bool renormalize) {
  const StageRows stage1 = parse_stage_file(stage1_path, renormalize);
  const StageRows stage2 = parse_stage_file(stage2_path, renormalize);
  if (stage1.class_count != stage2.class_count) {
    throw ConsistencyError("stage files disagree on class count: " +
                           std::to_string(stage1.class_count) + " vs " +
                           std::to_string(stage2.class_count));
  }

  std::unordered_map<std::string, size_t> stage2_index;
  stage2_index.reserve(stage2.ids.size());
  for (size_t i = 0; i < stage2.ids.size(); ++i) {
    stage2_index.emplace(stage2.ids[i], i);
  }

  PredictionSet set;
  set.class_count = stage1.class_count;
  set.samples.reserve(stage1.ids.size());
  for (size_t i = 0; i < stage1.ids.size(); ++i) {
    const auto it = stage2_index.find(stage1.ids[i]);
    if (it == stage2_index.end()) {
      throw JoinError(stage2_path.string() + ": missing sample_id '" + stage1.ids[i] +
                      "' present in " + stage1_path.string());
    }
    const size_t j = it->second;
    if (stage1.labels[i] != stage2.labels[j]) {
      throw ConsistencyError("sample_id '" + stage1.ids[i] + "': true_label " +
                             std::to_string(stage1.labels[i]) + " in " +
                             stage1_path.string() + " but " +
                             std::to_string(stage2.labels[j]) + " in " +
                             stage2_path.string());
    }
    SampleRecord sample;
    sample.sample_id = stage1.ids[i];
    sample.true_label = stage1.labels[i];
    sample.stage_probs[0] = stage1.probs[i];
    sample.stage_probs[1] = stage2.probs[j];
    set.samples.push_back(std::move(sample));
  }
  if (stage2.ids.size() != stage1.ids.size()) {
    std::unordered_set<std::string> stage1_ids(stage1.ids.begin(), stage1.ids.end());
    for (const std::string& id : stage2.ids) {
      if (!stage1_ids.count(id)) {
        throw JoinError(stage2_path.string() + ": sample_id '" + id + "' missing from " +
                        stage1_path.string());
      }
    }
  }
  validate(set);
  return set;
}

std::string fixed6(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", value);
  return buf;
}

void save_stage_files(const PredictionSet& predictions,
                      const std::filesystem::path& stage1_path,
                      const std::filesystem::path& stage2_path) {
  validate(predictions);
  for (int stage = 0; stage < kStageCount; ++stage) {
    std::string out = "sample_id,true_label";
    for (int c = 0; c < predictions.class_count; ++c) {
      out += ",p_" + std::to_string(c);
    }
    out += '\n';
    for (const SampleRecord& sample : predictions.samples) {
      out += sample.sample_id;
      out += ',';
      out += std::to_string(sample.true_label);
      for (double p : sample.stage_probs[static_cast<size_t>(stage)]) {
        out += ',';
        out += fixed6(p);
      }
      out += '\n';
    }
    write_text_file(stage == 0 ? stage1_path : stage2_path, out);
  }
}

namespace {

constexpr int kPolicyFormatVersion = 1;

const char* kind_name(PolicyKind kind) {
  return kind == PolicyKind::Global ? "global" : "per_class";
}

}  // namespace

std::string policy_to_json(const PolicyFile& file) {
  json records = json::array();
  for (const ThresholdPolicy& policy : file.policies) {
    json record;
    record["alpha"] = policy.alpha ? json(*policy.alpha) : json(nullptr);
    if (policy.kind == PolicyKind::Global) {
      record["threshold"] = policy.global_th;
    } else {
      record["thresholds"] = policy.per_class_th;
    }
    records.push_back(std::move(record));
  }
  json root;
  root["format"] = "cascal-policy";
  root["version"] = kPolicyFormatVersion;
  root["class_count"] = file.class_count;
  root["kind"] = kind_name(file.kind);
  root["records"] = std::move(records);
  root["metadata"] = file.metadata;
  return root.dump(2) + "\n";
}

PolicyFile policy_from_json(const std::string& text, const std::string& context) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(context + ": not valid JSON: " + e.what());
  }
  try {
    if (root.at("format").get<std::string>() != "cascal-policy") {
      throw ValidationError(context + ": not a cascal policy file");
    }
    PolicyFile file;
    file.class_count = root.at("class_count").get<int>();
    const std::string kind = root.at("kind").get<std::string>();
    if (kind == "global") {
      file.kind = PolicyKind::Global;
    } else if (kind == "per_class") {
      file.kind = PolicyKind::PerClass;
    } else {
      throw ValidationError(context + ": unknown policy kind '" + kind + "'");
    }
    for (const json& record : root.at("records")) {
      ThresholdPolicy policy;
      policy.kind = file.kind;
      if (!record.at("alpha").is_null()) {
        policy.alpha = record.at("alpha").get<double>();
      }
      if (file.kind == PolicyKind::Global) {
        policy.global_th = record.at("threshold").get<double>();
      } else {
        policy.per_class_th = record.at("thresholds").get<std::vector<double>>();
      }
      validate(policy, file.class_count);
      file.policies.push_back(std::move(policy));
    }
    if (root.contains("metadata")) {
      file.metadata = root.at("metadata").get<std::map<std::string, std::string>>();
    }
    if (file.class_count < 2) {
      throw ValidationError(context + ": class_count must be >= 2");
    }
    if (file.policies.empty()) {
      throw ValidationError(context + ": policy file has no records");
    }
    return file;
  } catch (const json::exception& e) {
    throw ValidationError(context + ": malformed policy file: " + e.what());
  }
}

void save_policy(const PolicyFile& file, const std::filesystem::path& path) {
  if (file.policies.empty()) {
    throw InvalidInput("refusing to save a policy file with no records");
  }
  for (const ThresholdPolicy& policy : file.policies) {
    if (policy.kind != file.kind) {
      throw InvalidInput("policy records must all share the file's kind");
    }
    validate(policy, file.class_count);
  }
  write_text_file(path, policy_to_json(file));
}

PolicyFile load_policy(const std::filesystem::path& path) {
  return policy_from_json(read_text_file(path), path.string());
}

namespace {

constexpr const char* kCurveHeader =
    "alpha,accuracy,mean_energy_mj,escalation_rate,"
    "m1_accuracy,m1_energy_mj,m2_accuracy,m2_energy_mj";

}  // namespace

std::string curve_to_csv(const TradeoffCurve& curve) {
  std::string out = kCurveHeader;
  out += '\n';
  for (const TradeoffPoint& point : curve.points) {
    out += fixed6(point.alpha);
    out += ',' + fixed6(point.accuracy);
    out += ',' + fixed6(point.mean_energy_mj);
    out += ',' + fixed6(point.escalation_rate);
    out += ',' + fixed6(curve.baseline_m1.accuracy);
    out += ',' + fixed6(curve.baseline_m1.energy_mj);
    out += ',' + fixed6(curve.baseline_m2.accuracy);
    out += ',' + fixed6(curve.baseline_m2.energy_mj);
    out += '\n';
  }
  return out;
}

TradeoffCurve curve_from_csv(const std::string& text, const std::string& context) {
  const std::vector<std::string> lines = split_lines(text);
  if (lines.empty() || lines[0] != kCurveHeader) {
    throw ValidationError(context + ": not a cascal curve file (unexpected header)");
  }
  TradeoffCurve curve;
  bool have_baselines = false;
  for (size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty() && i + 1 == lines.size()) break;
    const std::string where = context + " row " + std::to_string(i + 1);
    const std::vector<std::string> fields = split_line(lines[i], ',');
    if (fields.size() != 8) {
      throw ValidationError(where + ": expected 8 fields, got " +
                            std::to_string(fields.size()));
    }
    TradeoffPoint point;
    point.alpha = parse_double(fields[0], where + " alpha");
    point.accuracy = parse_double(fields[1], where + " accuracy");
    point.mean_energy_mj = parse_double(fields[2], where + " mean_energy_mj");
    point.escalation_rate = parse_double(fields[3], where + " escalation_rate");
    BaselinePoint m1{parse_double(fields[4], where), parse_double(fields[5], where)};
    BaselinePoint m2{parse_double(fields[6], where), parse_double(fields[7], where)};
    if (!have_baselines) {
      curve.baseline_m1 = m1;
      curve.baseline_m2 = m2;
      have_baselines = true;
    } else if (m1.accuracy != curve.baseline_m1.accuracy ||
               m1.energy_mj != curve.baseline_m1.energy_mj ||
               m2.accuracy != curve.baseline_m2.accuracy ||
               m2.energy_mj != curve.baseline_m2.energy_mj) {
      throw ValidationError(where + ": baseline columns differ between rows");
    }
    curve.points.push_back(point);
  }
  if (curve.points.empty()) {
    throw ValidationError(context + ": curve file has no data rows");
  }
  return curve;
}

void save_curve(const TradeoffCurve& curve, const std::filesystem::path& path) {
  write_text_file(path, curve_to_csv(curve));
}

TradeoffCurve load_curve(const std::filesystem::path& path) {
  return curve_from_csv(read_text_file(path), path.string());
}

std::string report_to_json(const EvaluationReport& report,
                           const std::optional<std::vector<std::string>>& class_names) {
  json per_class = json::array();
  for (const PerClassStats& stats : report.per_class) {
    json row;
    row["class_id"] = stats.class_id;
    if (class_names) {
      row["class_name"] = (*class_names)[static_cast<size_t>(stats.class_id)];
    }
    row["m_c"] = stats.m_c;
    row["fp"] = stats.fp;
    row["escalations"] = stats.escalations;
    row["th_used"] = stats.th_used;
    per_class.push_back(std::move(row));
  }
  json root;
  root["format"] = "cascal-report";
  root["version"] = 1;
  root["accuracy"] = report.accuracy;
  root["mean_energy_mj"] = report.mean_energy_mj;
  root["escalation_rate"] = report.escalation_rate;
  root["stage_accuracies"] = {{"stage1", report.stage_accuracies.stage1},
                              {"stage2", report.stage_accuracies.stage2}};
  root["per_class"] = std::move(per_class);
  return root.dump(2) + "\n";
}

std::string histogram_to_csv(const Histogram& histogram) {
  std::string out = "bin_start,bin_end,correct_count,incorrect_count\n";
  for (size_t i = 0; i < histogram.correct_counts.size(); ++i) {
    out += fixed6(histogram.bin_edges[i]);
    out += ',' + fixed6(histogram.bin_edges[i + 1]);
    out += ',' + std::to_string(histogram.correct_counts[i]);
    out += ',' + std::to_string(histogram.incorrect_counts[i]);
    out += '\n';
  }
  return out;
}

std::string objective_curve_to_csv(std::span<const ObjectiveCurvePoint> points) {
  std::string out = "threshold,false_positives,escalations,total,is_argmin\n";
  for (const ObjectiveCurvePoint& point : points) {
    out += fixed6(point.th);
    out += ',' + std::to_string(point.fp);
    out += ',' + std::to_string(point.escalations);
    out += ',' + fixed6(point.total);
    out += ',';
    out += point.is_argmin ? '1' : '0';
    out += '\n';
  }
  return out;
}

std::string comparison_to_csv(std::span<const PolicyComparison> rows) {
  std::string out =
      "quantile,target_accuracy,energy_per_class_mj,energy_global_mj,relative_difference\n";
  for (const PolicyComparison& row : rows) {
    out += fixed6(row.quantile);
    out += ',' + fixed6(row.target_accuracy);
    out += ',';
    out += row.energy_per_class ? fixed6(*row.energy_per_class) : "unreachable";
    out += ',';
    out += row.energy_global ? fixed6(*row.energy_global) : "unreachable";
    out += ',';
    out += row.relative_difference ? fixed6(*row.relative_difference) : "undefined";
    out += '\n';
  }
  return out;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open '" + path.string() + "' for reading");
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) {
    throw IoError("read failure on '" + path.string() + "'");
  }
  return std::move(buffer).str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot open '" + path.string() + "' for writing");
  }
  out << content;
  out.flush();
  if (!out) {
    throw IoError("write failure on '" + path.string() + "'");
  }
}

}  // namespace cascal
