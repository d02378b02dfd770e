#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "hiconform/classifier.hpp"
#include "hiconform/evaluation.hpp"
#include "hiconform/graph_crc.hpp"
#include "hiconform/label_shift.hpp"
#include "hiconform/prediction_set.hpp"
#include "hiconform/split_conformal.hpp"
#include "hiconform/synthgen.hpp"

namespace hiconform::io {

using nlohmann::json;

std::string_view tool_version() noexcept;

/// FNV-1a over the compact dump of `config`. Object keys are sorted, so
/// equal configs hash equally regardless of how they were written.
std::string config_hash(const json& config);
/// Adds `config_hash` and `tool_version` to an output document.
void stamp(json& doc, const json& config);

json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const json& doc);

json to_json(const LogitModel& m);
LogitModel model_from_json(const json& j);

json to_json(const SplitCalibration& c);
json to_json(const LambdaCalibration& c);

/// A calibration document holds either a split q_hat or a graph lambda_hat.
struct StoredCalibration {
  Method method = Method::Split;
  double alpha = 0.1;
  std::size_t n = 0;
  double threshold = 1.0;
};
StoredCalibration calibration_from_json(const json& j);
SplitCalibration as_split(const StoredCalibration& c);

/// One JSONL record: {id, leaves, anchor, size, homogeneity}.
json set_record(const std::string& id, const PredictionSet& s);
PredictionSet set_from_record(const json& j);

json to_json(const EvalReport& r);
json to_json(const ShiftCorrectionPlan& plan, const std::vector<std::string>& classes);
json to_json(const CoverageStudy& s);

/// Class proportions given as an array in class order, or as an object of
/// non-negative weights keyed by class name (missing classes get 0; weights
/// are normalized). Throws Error{InvalidProps}.
std::vector<double> props_from_json(const json& j, const std::vector<std::string>& classes);

/// Parses a synthetic data config. `graph` (a TSV path) is resolved relative
/// to `base_dir`. Throws Error{InvalidConfig}.
SynthConfig synth_config_from_json(const json& j, const std::filesystem::path& base_dir);
json to_json(const SynthConfig& cfg);

/// Scenario plus the trial count and seed stored alongside it.
struct StudySpec {
  Scenario scenario;
  std::size_t trials = 100;
  std::uint64_t seed = 1;
};
StudySpec study_from_json(const json& j, const std::filesystem::path& base_dir);

}  // namespace hiconform::io
