#include "json_io.hpp"

#include <cstdio>
#include <fstream>

#include "hiconform/error.hpp"

#ifndef HICONFORM_VERSION
#define HICONFORM_VERSION "0.0.0"
#endif

namespace hiconform::io {

namespace {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("field '") + key + "': " + e.what());
  }
}

template <typename T>
T require(const json& j, const char* key) {
  if (!j.contains(key)) throw Error(ErrorCode::ParseError, std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("field '") + key + "': " + e.what());
  }
}

}  // namespace

std::string_view tool_version() noexcept { return HICONFORM_VERSION; }

std::string config_hash(const json& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : config.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void stamp(json& doc, const json& config) {
  doc["config_hash"] = config_hash(config);
  doc["tool_version"] = tool_version();
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidConfig, "cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const json& doc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::InvalidConfig, "cannot write '" + path.string() + "'");
  out << doc.dump(2) << '\n';
}

json to_json(const LogitModel& m) {
  const auto& log = m.training_log;
  return {
      {"type", "multinomial_logit"},
      {"classes", m.classes},
      {"selected_features", m.selected_features},
      {"feature_means", m.feature_means},
      {"feature_scales", m.feature_scales},
      {"weights", m.weights},
      {"l2", m.l2},
      {"training_log",
       {{"iterations", log.iterations},
        {"final_objective", log.final_objective},
        {"final_gradient_norm", log.final_gradient_norm},
        {"converged", log.converged}}},
  };
}

LogitModel model_from_json(const json& j) {
  LogitModel m;
  m.classes = require<std::vector<std::string>>(j, "classes");
  m.selected_features = require<std::vector<std::string>>(j, "selected_features");
  m.feature_means = require<std::vector<double>>(j, "feature_means");
  m.feature_scales = require<std::vector<double>>(j, "feature_scales");
  m.weights = require<std::vector<double>>(j, "weights");
  m.l2 = get_or(j, "l2", 0.0);
  const std::size_t p = m.selected_features.size();
  if (m.feature_means.size() != p || m.feature_scales.size() != p ||
      m.weights.size() != m.classes.size() * (p + 1)) {
    throw Error(ErrorCode::ParseError, "model arrays have inconsistent lengths");
  }
  if (j.contains("training_log")) {
    const auto& t = j.at("training_log");
    m.training_log.iterations = get_or<std::size_t>(t, "iterations", 0);
    m.training_log.final_objective = get_or(t, "final_objective", 0.0);
    m.training_log.final_gradient_norm = get_or(t, "final_gradient_norm", 0.0);
    m.training_log.converged = get_or(t, "converged", false);
  }
  return m;
}

json to_json(const SplitCalibration& c) {
  return {{"method", "split"}, {"alpha", c.alpha}, {"n", c.n}, {"rank", c.rank}, {"q_hat", c.q_hat}};
}

json to_json(const LambdaCalibration& c) {
  json curve = json::array();
  for (const auto& p : c.risk_curve) curve.push_back({{"lambda", p.lambda}, {"risk", p.risk}});
  return {{"method", "graph"},
          {"alpha", c.alpha},
          {"n", c.n},
          {"loss_bound", c.loss_bound},
          {"target", c.target},
          {"lambda_hat", c.lambda_hat},
          {"risk_curve", std::move(curve)}};
}

StoredCalibration calibration_from_json(const json& j) {
  StoredCalibration c;
  c.method = parse_method(require<std::string>(j, "method"));
  c.alpha = require<double>(j, "alpha");
  c.n = require<std::size_t>(j, "n");
  c.threshold = require<double>(j, c.method == Method::Split ? "q_hat" : "lambda_hat");
  return c;
}

SplitCalibration as_split(const StoredCalibration& c) {
  if (c.method != Method::Split) {
    throw Error(ErrorCode::InvalidConfig, "expected a split calibration, got a graph calibration");
  }
  SplitCalibration s;
  s.q_hat = c.threshold;
  s.alpha = c.alpha;
  s.n = c.n;
  return s;
}

json set_record(const std::string& id, const PredictionSet& s) {
  return {{"id", id},
          {"leaves", s.leaves},
          {"anchor", s.seed_node ? json(*s.seed_node) : json(nullptr)},
          {"size", s.size},
          {"homogeneity", s.homogeneity}};
}

PredictionSet set_from_record(const json& j) {
  PredictionSet s;
  s.leaves = require<std::vector<std::string>>(j, "leaves");
  std::sort(s.leaves.begin(), s.leaves.end());
  if (j.contains("anchor") && !j.at("anchor").is_null()) s.seed_node = j.at("anchor").get<std::string>();
  s.size = s.leaves.size();
  s.homogeneity = get_or(j, "homogeneity", 0.0);
  return s;
}

json to_json(const EvalReport& r) {
  json hist = json::object();
  for (const auto& [size, count] : r.size_histogram) hist[std::to_string(size)] = count;
  return {{"n", r.n},
          {"coverage", r.coverage},
          {"mean_size", r.mean_size},
          {"mean_homogeneity", r.mean_homogeneity},
          {"size_histogram", std::move(hist)},
          {"per_class_coverage", r.per_class_coverage}};
}

json to_json(const ShiftCorrectionPlan& plan, const std::vector<std::string>& classes) {
  json folds = json::array();
  for (std::size_t f = 0; f < plan.folds.size(); ++f) {
    const auto& a = plan.folds[f];
    folds.push_back({{"fold", f + 1},
                     {"size", a.size},
                     {"estimated_props", plan.estimated_props.at(f)},
                     {"props_used", a.props_used},
                     {"resample_counts", a.resample_counts},
                     {"threshold", a.threshold}});
  }
  return {{"classes", classes},
          {"estimator", to_string(plan.estimator)},
          {"seed", plan.seed},
          {"resample_size", plan.resample_size},
          {"folds", std::move(folds)}};
}

json to_json(const CoverageStudy& s) {
  json j = {{"trials", s.per_trial_coverage.size()},
            {"n", s.n},
            {"alpha", s.alpha},
            {"method", to_string(s.method)},
            {"correction", to_string(s.correction)},
            {"mean_coverage", s.mean_coverage},
            {"coverage_se", s.coverage_se},
            {"mean_size", s.mean_size},
            {"mean_homogeneity", s.mean_homogeneity},
            {"model_test_accuracy", s.model_test_accuracy},
            {"per_trial_coverage", s.per_trial_coverage},
            {"per_trial_size", s.per_trial_size},
            {"per_trial_homogeneity", s.per_trial_homogeneity},
            {"per_trial_threshold", s.per_trial_threshold}};
  if (s.beta_params) j["beta_params"] = {s.beta_params->a, s.beta_params->b};
  else j["beta_params"] = nullptr;
  if (s.ks_statistic_vs_beta) j["ks_statistic_vs_beta"] = *s.ks_statistic_vs_beta;
  else j["ks_statistic_vs_beta"] = nullptr;
  return j;
}

std::vector<double> props_from_json(const json& j, const std::vector<std::string>& classes) {
  std::vector<double> props;
  if (j.is_array()) {
    props = j.get<std::vector<double>>();
  } else if (j.is_object()) {
    props.assign(classes.size(), 0.0);
    for (const auto& [name, v] : j.items()) {
      auto it = std::find(classes.begin(), classes.end(), name);
      if (it == classes.end()) throw Error(ErrorCode::InvalidProps, "unknown class '" + name + "'");
      props[static_cast<std::size_t>(it - classes.begin())] = v.get<double>();
    }
    double total = 0.0;
    for (double w : props) {
      if (!(w >= 0.0)) throw Error(ErrorCode::InvalidProps, "class weights must be non-negative");
      total += w;
    }
    if (!(total > 0.0)) throw Error(ErrorCode::InvalidProps, "class weights sum to zero");
    for (double& w : props) w /= total;
  } else {
    throw Error(ErrorCode::InvalidProps, "proportions must be an array or an object");
  }
  if (props.size() != classes.size()) {
    throw Error(ErrorCode::InvalidProps, "expected " + std::to_string(classes.size()) + " proportions");
  }
  return props;
}

SynthConfig synth_config_from_json(const json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "data config must be an object");
  SynthConfig cfg;
  if (j.contains("graph")) {
    auto path = std::filesystem::path(j.at("graph").get<std::string>());
    if (path.is_relative()) path = base_dir / path;
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::InvalidConfig, "cannot open graph '" + path.string() + "'");
    cfg.edges = read_edge_list(in);
  } else if (j.contains("edges")) {
    for (const auto& e : j.at("edges")) {
      if (!e.is_array() || e.size() != 2) throw Error(ErrorCode::InvalidConfig, "edges must be [parent, child] pairs");
      cfg.edges.emplace_back(e[0].get<std::string>(), e[1].get<std::string>());
    }
  } else {
    TreeShape shape;
    if (j.contains("tree")) {
      shape.depth = get_or<std::size_t>(j.at("tree"), "depth", shape.depth);
      shape.branching = get_or<std::size_t>(j.at("tree"), "branching", shape.branching);
    }
    cfg.tree = shape;
  }
  cfg.n_features = get_or<std::size_t>(j, "n_features", cfg.n_features);
  cfg.n_noise_features = get_or<std::size_t>(j, "n_noise_features", cfg.n_noise_features);
  cfg.class_separation = get_or(j, "class_separation", cfg.class_separation);
  cfg.seed = get_or<std::uint64_t>(j, "seed", cfg.seed);
  if (j.contains("class_props")) {
    // Leaf order is only known once the graph is built.
    const SynthGenerator probe(cfg);
    cfg.class_props = props_from_json(j.at("class_props"), probe.class_names());
  }
  SynthGenerator{cfg};
  return cfg;
}

json to_json(const SynthConfig& cfg) {
  json edges = json::array();
  for (const auto& [p, c] : cfg.edges) edges.push_back({p, c});
  json j = {{"n_features", cfg.n_features},
            {"n_noise_features", cfg.n_noise_features},
            {"class_separation", cfg.class_separation},
            {"seed", cfg.seed},
            {"class_props", cfg.class_props}};
  if (cfg.tree) j["tree"] = {{"depth", cfg.tree->depth}, {"branching", cfg.tree->branching}};
  else j["edges"] = std::move(edges);
  return j;
}

StudySpec study_from_json(const json& j, const std::filesystem::path& base_dir) {
  StudySpec spec;
  auto& s = spec.scenario;
  s.data = synth_config_from_json(j.value("data", json::object()), base_dir);
  const SynthGenerator gen(s.data);
  const auto& classes = gen.class_names();
  if (j.contains("train_props")) s.train_props = props_from_json(j.at("train_props"), classes);
  if (j.contains("calib_props")) s.calib_props = props_from_json(j.at("calib_props"), classes);
  if (j.contains("test_props")) s.test_props = props_from_json(j.at("test_props"), classes);
  s.n_train = get_or<std::size_t>(j, "n_train", s.n_train);
  s.n_calib = get_or<std::size_t>(j, "n_calib", s.n_calib);
  s.n_test = get_or<std::size_t>(j, "n_test", s.n_test);
  s.method = parse_method(get_or<std::string>(j, "method", "split"));
  s.correction = parse_correction(get_or<std::string>(j, "correction", "none"));
  s.alpha = get_or(j, "alpha", s.alpha);
  s.k_features = get_or<std::size_t>(j, "k_features", s.k_features);
  s.fit.l2 = get_or(j, "l2", s.fit.l2);
  s.fit.max_iter = get_or<std::size_t>(j, "max_iter", s.fit.max_iter);
  s.fit.tol = get_or(j, "tol", s.fit.tol);
  s.estimator = parse_estimator(get_or<std::string>(j, "estimator", "soft"));
  spec.trials = get_or<std::size_t>(j, "trials", spec.trials);
  spec.seed = get_or<std::uint64_t>(j, "seed", spec.seed);
  return spec;
}

}  // namespace hiconform::io
