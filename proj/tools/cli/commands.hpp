#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace hiconform::cli {

/// Inputs accepted by the single-batch commands: a probability CSV, or a
/// feature CSV scored with a saved model.
struct InputOptions {
  std::string probs;
  std::string data;
  std::string model;
  std::string labels;
};

struct SynthOptions {
  std::string config;
  std::size_t n = 5136;
  std::string out;
  std::string graph_out;
  std::optional<std::uint64_t> seed;
};

struct TrainOptions {
  std::string data;
  std::string labels;
  std::string out;
  std::size_t k_features = 50;
  double l2 = 1e-2;
  std::size_t max_iter = 2000;
  double tol = 1e-6;
};

struct CalibrateOptions {
  InputOptions input;
  std::string graph;
  double alpha = 0.1;
  double loss_bound = 1.0;
  std::size_t threads = 1;
  std::string out;
};

struct PredictOptions {
  InputOptions input;
  std::string graph;
  std::string calibration;
  std::string out;
};

struct CorrectOptions {
  std::string calib;
  std::string test;
  std::string model;
  std::string graph;
  std::string method = "graph";
  std::string correction = "two_fold";
  std::string estimator = "soft";
  double alpha = 0.1;
  double loss_bound = 1.0;
  std::size_t resample_size = 0;
  std::uint64_t seed = 1;
  std::string out;
  std::string audit;
};

struct EvaluateOptions {
  std::string sets;
  std::string truth;
  std::string graph;
  std::string out;
};

struct StudyOptions {
  std::string scenario;
  std::optional<std::size_t> trials;
  std::optional<std::uint64_t> seed;
  std::size_t threads = 1;
  std::string out;
  std::string emit_hist;
};

/// Every field is optional so that flags, a config file and defaults can be
/// layered; resolve() fills the gaps.
struct PipelineOptions {
  std::string config;
  std::optional<std::string> graph;
  std::optional<std::string> data;
  std::optional<std::string> probs;
  std::optional<std::string> labels;
  std::optional<std::string> out_dir;
  std::optional<std::string> method;
  std::optional<std::string> correction;
  std::optional<std::string> estimator;
  std::optional<double> alpha;
  std::optional<double> l2;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> k_features;
  std::optional<std::size_t> n_train;
  std::optional<std::size_t> n_calib;
  std::optional<std::size_t> max_iter;
  std::optional<std::size_t> threads;
};

int run_synth(const SynthOptions& o);
int run_train(const TrainOptions& o);
int run_split_calibrate(const CalibrateOptions& o);
int run_crc_calibrate(const CalibrateOptions& o);
int run_split_predict(const PredictOptions& o);
int run_crc_predict(const PredictOptions& o);
int run_correct(const CorrectOptions& o);
int run_evaluate(const EvaluateOptions& o);
int run_study(const StudyOptions& o);
int run_pipeline(const PipelineOptions& o);

/// HICONFORM_SEED when set, otherwise `fallback`. Throws Error{InvalidConfig}
/// on a malformed value.
std::uint64_t resolve_seed(std::uint64_t fallback);

}  // namespace hiconform::cli
