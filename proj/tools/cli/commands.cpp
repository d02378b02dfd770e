#include "commands.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <set>

#include "hiconform/error.hpp"
#include "hiconform/evaluation.hpp"
#include "hiconform/graph_crc.hpp"
#include "hiconform/label_shift.hpp"
#include "hiconform/random.hpp"
#include "hiconform/split_conformal.hpp"
#include "hiconform/synthgen.hpp"
#include "json_io.hpp"
#include "table.hpp"

namespace fs = std::filesystem;

namespace hiconform::cli {

using io::json;

namespace {

void require_file(const std::string& path, const char* what) {
  if (path.empty()) throw Error(ErrorCode::InvalidConfig, std::string("missing ") + what);
  if (!fs::is_regular_file(path)) {
    throw Error(ErrorCode::InvalidConfig, std::string(what) + " '" + path + "' does not exist");
  }
}

LabelGraph load_graph(const std::string& path) {
  require_file(path, "graph file");
  return load_label_graph(path);
}

/// Writes to `path`, or stdout when it is empty or "-".
void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::InvalidConfig, "cannot write '" + path + "'");
  out << text;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

struct Loaded {
  std::vector<std::string> ids;
  ProbMatrix probs;
  std::optional<std::vector<std::string>> labels;
};

std::optional<std::vector<std::string>> resolve_labels(const io::Table& t, const std::string& labels_path) {
  if (labels_path.empty()) return t.labels;
  require_file(labels_path, "labels file");
  auto labels = io::read_labels(labels_path);
  if (labels.size() != t.rows()) {
    throw Error(ErrorCode::LengthMismatch, std::to_string(labels.size()) + " labels for " +
                                               std::to_string(t.rows()) + " rows");
  }
  return labels;
}

Loaded load_scored(const std::string& path, const std::string& model_path, const std::string& labels_path) {
  require_file(path, "input file");
  const auto table = io::read_table(fs::path(path));
  Loaded out;
  out.ids = table.ids;
  out.labels = resolve_labels(table, labels_path);
  if (model_path.empty()) {
    out.probs = io::to_probs(table);
  } else {
    require_file(model_path, "model file");
    const auto model = io::model_from_json(io::read_json(model_path));
    out.probs = predict_probs(model, io::to_features(table));
  }
  return out;
}

Loaded load_input(const InputOptions& in) {
  if (!in.probs.empty()) return load_scored(in.probs, "", in.labels);
  if (!in.data.empty() && !in.model.empty()) return load_scored(in.data, in.model, in.labels);
  throw Error(ErrorCode::InvalidConfig, "give --probs, or --data together with --model");
}

LabeledBatch labeled(const Loaded& l) {
  if (!l.labels) throw Error(ErrorCode::InvalidConfig, "calibration input needs a label column or --labels");
  return LabeledBatch::from_names(l.probs, *l.labels);
}

json input_config(const InputOptions& in) {
  return {{"probs", in.probs}, {"data", in.data}, {"model", in.model}, {"labels", in.labels}};
}

std::string jsonl(const std::vector<std::string>& ids, const std::vector<PredictionSet>& sets) {
  std::string text;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    text += io::set_record(ids[i], sets[i]).dump();
    text += '\n';
  }
  return text;
}

/// One parent above every class; used when no ontology is supplied.
LabelGraph star_graph(const std::vector<std::string>& classes) {
  std::string root = "all_classes";
  while (std::find(classes.begin(), classes.end(), root) != classes.end()) root.insert(0, "_");
  std::vector<Edge> edges;
  for (const auto& c : classes) edges.emplace_back(root, c);
  return LabelGraph::build(edges);
}

CorrectedCalibration calibrate(const GraphBinding* binding, const LabeledBatch& calib, const LabeledBatch& test,
                               double alpha, Method method, Correction correction, std::uint64_t seed,
                               const CorrectionOptions& options, std::size_t threads) {
  switch (correction) {
    case Correction::TwoFold:
      return calibrate_two_fold(binding, calib, test.probs, alpha, method, seed, options);
    case Correction::Oracle:
      return calibrate_oracle(binding, calib, test, alpha, method, seed, options);
    case Correction::None:
      break;
  }
  CorrectedCalibration cc;
  cc.plan.fold_assignment.assign(test.size(), 1);
  if (method == Method::Split) {
    cc.split.push_back(calibrate_split(calib, alpha));
  } else {
    if (!binding) throw Error(ErrorCode::InvalidConfig, "the graph method needs --graph");
    cc.graph.push_back(calibrate_lambda(*binding, calib, alpha, options.loss_bound, threads));
  }
  return cc;
}

json calibration_doc(const CorrectedCalibration& cc, Method method, Correction correction,
                     const std::vector<std::string>& classes) {
  json folds = json::array();
  if (method == Method::Split) {
    for (const auto& c : cc.split) folds.push_back(io::to_json(c));
  } else {
    for (const auto& c : cc.graph) folds.push_back(io::to_json(c));
  }
  json doc;
  if (correction == Correction::None) {
    doc = folds.at(0);
  } else {
    doc = {{"method", to_string(method)}, {"folds", std::move(folds)}};
    doc["audit"] = io::to_json(cc.plan, classes);
  }
  doc["correction"] = to_string(correction);
  return doc;
}

std::string histogram(const CoverageStudy& s) {
  constexpr std::size_t kBins = 30;
  const auto [lo_it, hi_it] = std::minmax_element(s.per_trial_coverage.begin(), s.per_trial_coverage.end());
  double lo = *lo_it;
  double hi = *hi_it;
  if (hi - lo < 1e-9) {
    lo -= 0.005;
    hi += 0.005;
  }
  const double width = (hi - lo) / kBins;
  std::vector<std::size_t> counts(kBins, 0);
  for (double c : s.per_trial_coverage) {
    const auto b = std::min(kBins - 1, static_cast<std::size_t>((c - lo) / width));
    ++counts[b];
  }
  const double r = static_cast<double>(s.per_trial_coverage.size());
  std::string out = "# coverage histogram: bin_center count density";
  out += s.beta_params ? " beta_density\n" : "\n";
  for (std::size_t b = 0; b < kBins; ++b) {
    const double x = lo + (static_cast<double>(b) + 0.5) * width;
    out += io::format_double(x) + ' ' + std::to_string(counts[b]) + ' ' +
           io::format_double(static_cast<double>(counts[b]) / (r * width));
    if (s.beta_params) {
      const double a = s.beta_params->a;
      const double bb = s.beta_params->b;
      const double log_pdf = std::lgamma(a + bb) - std::lgamma(a) - std::lgamma(bb) + (a - 1.0) * std::log(x) +
                             (bb - 1.0) * std::log1p(-x);
      out += ' ' + io::format_double(std::exp(log_pdf));
    }
    out += '\n';
  }
  return out;
}

}  // namespace

std::uint64_t resolve_seed(std::uint64_t fallback) {
  const char* env = std::getenv("HICONFORM_SEED");
  if (env == nullptr || *env == '\0') return fallback;
  std::uint64_t v = 0;
  const char* end = env + std::char_traits<char>::length(env);
  const auto [ptr, ec] = std::from_chars(env, end, v);
  if (ec != std::errc() || ptr != end) {
    throw Error(ErrorCode::InvalidConfig, std::string("HICONFORM_SEED='") + env + "' is not an unsigned integer");
  }
  return v;
}

int run_synth(const SynthOptions& o) {
  SynthConfig cfg;
  cfg.tree = TreeShape{};
  json config_json = json::object();
  if (!o.config.empty()) {
    require_file(o.config, "config file");
    config_json = io::read_json(o.config);
    cfg = io::synth_config_from_json(config_json, fs::path(o.config).parent_path());
  }
  cfg.seed = resolve_seed(o.seed.value_or(cfg.seed));
  if (o.n == 0) throw Error(ErrorCode::InvalidConfig, "--n must be at least 1");
  const auto sample = generate(cfg, o.n);
  auto table = io::from_features(sample.features, &sample.labels);
  io::write_table(fs::path(o.out), table);
  if (!o.graph_out.empty()) {
    const SynthGenerator gen(cfg);
    std::string text;
    for (const auto& [p, c] : gen.graph().edges()) text += p + '\t' + c + '\n';
    emit(o.graph_out, text);
  }
  return 0;
}

int run_train(const TrainOptions& o) {
  require_file(o.data, "data file");
  const auto table = io::read_table(fs::path(o.data));
  const auto labels = resolve_labels(table, o.labels);
  if (!labels) throw Error(ErrorCode::InvalidConfig, "training data needs a label column or --labels");
  const auto x = io::to_features(table);
  FitOptions fit{o.l2, o.max_iter, o.tol};
  const auto features = select_top_variance(x, std::min(o.k_features, x.cols()));
  const auto model = fit_logit(x, *labels, fit, features);
  json doc = io::to_json(model);
  io::stamp(doc, {{"command", "train"},
                  {"data", o.data},
                  {"labels", o.labels},
                  {"k_features", o.k_features},
                  {"l2", o.l2},
                  {"max_iter", o.max_iter},
                  {"tol", o.tol}});
  emit(o.out, dump(doc));
  return 0;
}

int run_split_calibrate(const CalibrateOptions& o) {
  const auto batch = labeled(load_input(o.input));
  json doc = io::to_json(calibrate_split(batch, o.alpha));
  io::stamp(doc, {{"command", "split-calibrate"}, {"input", input_config(o.input)}, {"alpha", o.alpha}});
  emit(o.out, dump(doc));
  return 0;
}

int run_crc_calibrate(const CalibrateOptions& o) {
  const auto g = load_graph(o.graph);
  const auto batch = labeled(load_input(o.input));
  const GraphBinding binding(g, batch.probs.class_names());
  json doc = io::to_json(calibrate_lambda(binding, batch, o.alpha, o.loss_bound, o.threads));
  io::stamp(doc, {{"command", "crc-calibrate"},
                  {"input", input_config(o.input)},
                  {"graph", o.graph},
                  {"alpha", o.alpha},
                  {"loss_bound", o.loss_bound}});
  emit(o.out, dump(doc));
  return 0;
}

int run_split_predict(const PredictOptions& o) {
  require_file(o.calibration, "calibration file");
  const auto stored = io::calibration_from_json(io::read_json(o.calibration));
  if (stored.method != Method::Split) {
    throw Error(ErrorCode::InvalidConfig, "split-predict needs a split calibration");
  }
  const auto cal = io::as_split(stored);
  const auto in = load_input(o.input);
  std::optional<LabelGraph> g;
  std::optional<GraphBinding> binding;
  if (!o.graph.empty()) {
    g = load_graph(o.graph);
    binding.emplace(*g, in.probs.class_names());
  }
  std::vector<PredictionSet> sets;
  for (std::size_t i = 0; i < in.probs.rows(); ++i) {
    sets.push_back(binding ? split_predict_set(cal, *binding, in.probs, i) : split_predict_set(cal, in.probs, i));
  }
  emit(o.out, jsonl(in.ids, sets));
  return 0;
}

int run_crc_predict(const PredictOptions& o) {
  require_file(o.calibration, "calibration file");
  const auto stored = io::calibration_from_json(io::read_json(o.calibration));
  if (stored.method != Method::Graph) {
    throw Error(ErrorCode::InvalidConfig, "crc-predict needs a graph calibration");
  }
  const auto g = load_graph(o.graph);
  const auto in = load_input(o.input);
  const GraphBinding binding(g, in.probs.class_names());
  std::vector<PredictionSet> sets;
  for (std::size_t i = 0; i < in.probs.rows(); ++i) sets.push_back(graph_set(binding, in.probs, i, stored.threshold));
  emit(o.out, jsonl(in.ids, sets));
  return 0;
}

int run_correct(const CorrectOptions& o) {
  const Method method = parse_method(o.method);
  const Correction correction = parse_correction(o.correction);
  const std::uint64_t seed = resolve_seed(o.seed);
  const auto calib_in = load_scored(o.calib, o.model, "");
  const auto test_in = load_scored(o.test, o.model, "");
  const auto calib = labeled(calib_in);

  std::optional<LabelGraph> g;
  std::optional<GraphBinding> binding;
  if (!o.graph.empty()) {
    g = load_graph(o.graph);
    binding.emplace(*g, calib.probs.class_names());
  } else if (method == Method::Graph) {
    throw Error(ErrorCode::InvalidConfig, "the graph method needs --graph");
  }
  const GraphBinding* bp = binding ? &*binding : nullptr;

  CorrectionOptions options;
  options.estimator = parse_estimator(o.estimator);
  options.resample_size = o.resample_size;
  options.loss_bound = o.loss_bound;

  CorrectionResult result;
  if (correction == Correction::Oracle) {
    if (!test_in.labels) throw Error(ErrorCode::InvalidConfig, "the oracle correction needs test labels");
    result = oracle_correct(bp, calib, LabeledBatch::from_names(test_in.probs, *test_in.labels), o.alpha, method,
                            seed, options);
  } else if (correction == Correction::TwoFold) {
    result = two_fold_correct(bp, calib, test_in.probs, o.alpha, method, seed, options);
  } else {
    throw Error(ErrorCode::InvalidConfig, "correct needs --correction two_fold or oracle");
  }

  emit(o.out, jsonl(test_in.ids, result.sets));
  json audit = io::to_json(result.plan, calib.probs.class_names());
  audit["method"] = to_string(method);
  audit["correction"] = to_string(correction);
  audit["alpha"] = o.alpha;
  io::stamp(audit, {{"command", "correct"},
                    {"calib", o.calib},
                    {"test", o.test},
                    {"model", o.model},
                    {"graph", o.graph},
                    {"method", o.method},
                    {"correction", o.correction},
                    {"estimator", o.estimator},
                    {"alpha", o.alpha},
                    {"loss_bound", o.loss_bound},
                    {"resample_size", o.resample_size},
                    {"seed", seed}});
  emit(o.audit, dump(json{{"audit", std::move(audit)}}));
  return 0;
}

int run_evaluate(const EvaluateOptions& o) {
  require_file(o.sets, "sets file");
  require_file(o.truth, "truth file");
  const auto g = load_graph(o.graph);
  std::vector<std::string> ids;
  std::vector<PredictionSet> sets;
  {
    std::ifstream in(o.sets);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      json j;
      try {
        j = json::parse(line);
      } catch (const json::parse_error& e) {
        throw Error(ErrorCode::ParseError, o.sets + ": " + e.what());
      }
      ids.push_back(j.value("id", std::to_string(ids.size())));
      sets.push_back(io::set_from_record(j));
    }
  }
  std::vector<std::string> truth;
  if (fs::path(o.truth).extension() == ".csv") {
    const auto t = io::read_table(fs::path(o.truth));
    if (!t.labels) throw Error(ErrorCode::InvalidConfig, o.truth + " has no label column");
    truth = *t.labels;
  } else {
    truth = io::read_labels(o.truth);
  }
  json doc = io::to_json(evaluate(sets, truth, g));
  io::stamp(doc, {{"command", "evaluate"}, {"sets", o.sets}, {"truth", o.truth}, {"graph", o.graph}});
  emit(o.out, dump(doc));
  return 0;
}

int run_study(const StudyOptions& o) {
  require_file(o.scenario, "scenario file");
  const json config = io::read_json(o.scenario);
  auto spec = io::study_from_json(config, fs::path(o.scenario).parent_path());
  if (o.trials) spec.trials = *o.trials;
  spec.seed = resolve_seed(o.seed.value_or(spec.seed));
  const auto study = hiconform::run_study(spec.scenario, spec.trials, spec.seed, o.threads);
  json doc = io::to_json(study);
  doc["seed"] = spec.seed;
  json hashed = config;
  hashed["trials"] = spec.trials;
  hashed["seed"] = spec.seed;
  io::stamp(doc, hashed);
  emit(o.out, dump(doc));
  if (!o.emit_hist.empty()) emit(o.emit_hist, histogram(study));
  return 0;
}

namespace {

/// Fully resolved pipeline settings.
struct RunConfig {
  std::string graph;
  std::string data;
  std::string probs;
  std::string labels;
  std::string out_dir = "hiconform_out";
  Method method = Method::Split;
  Correction correction = Correction::None;
  ProportionEstimator estimator = ProportionEstimator::Soft;
  double alpha = 0.1;
  double l2 = 1e-2;
  std::uint64_t seed = 1;
  std::size_t k_features = 50;
  std::size_t n_train = 500;
  std::size_t n_calib = 1000;
  std::size_t max_iter = 2000;
  std::size_t threads = 1;

  json to_json() const {
    return {{"graph", graph},
            {"data", data},
            {"probs", probs},
            {"labels", labels},
            {"method", to_string(method)},
            {"correction", to_string(correction)},
            {"estimator", to_string(estimator)},
            {"alpha", alpha},
            {"l2", l2},
            {"seed", seed},
            {"k_features", k_features},
            {"n_train", n_train},
            {"n_calib", n_calib},
            {"max_iter", max_iter}};
  }
};

template <typename T>
void layer(T& dst, const std::optional<T>& flag, const json& file, const char* key) {
  if (flag) {
    dst = *flag;
  } else if (file.contains(key) && !file.at(key).is_null()) {
    try {
      dst = file.at(key).get<T>();
    } catch (const json::exception& e) {
      throw Error(ErrorCode::InvalidConfig, std::string("config field '") + key + "': " + e.what());
    }
  }
}

RunConfig resolve(const PipelineOptions& o) {
  json file = json::object();
  fs::path base;
  if (!o.config.empty()) {
    require_file(o.config, "config file");
    file = io::read_json(o.config);
    base = fs::path(o.config).parent_path();
  }
  RunConfig c;
  std::string method = "split";
  std::string correction = "none";
  std::string estimator = "soft";
  layer(c.graph, o.graph, file, "graph");
  layer(c.data, o.data, file, "data");
  layer(c.probs, o.probs, file, "probs");
  layer(c.labels, o.labels, file, "labels");
  layer(c.out_dir, o.out_dir, file, "out_dir");
  layer(method, o.method, file, "method");
  layer(correction, o.correction, file, "correction");
  layer(estimator, o.estimator, file, "estimator");
  layer(c.alpha, o.alpha, file, "alpha");
  layer(c.l2, o.l2, file, "l2");
  layer(c.seed, o.seed, file, "seed");
  layer(c.k_features, o.k_features, file, "k_features");
  layer(c.n_train, o.n_train, file, "n_train");
  layer(c.n_calib, o.n_calib, file, "n_calib");
  layer(c.max_iter, o.max_iter, file, "max_iter");
  layer(c.threads, o.threads, file, "threads");
  c.method = parse_method(method);
  c.correction = parse_correction(correction);
  c.estimator = parse_estimator(estimator);
  c.seed = resolve_seed(c.seed);
  // Paths from a config file are relative to that file; flag paths are not.
  auto rebase = [&](std::string& p, const std::optional<std::string>& flag) {
    if (!flag && !p.empty() && fs::path(p).is_relative()) p = (base / p).string();
  };
  rebase(c.graph, o.graph);
  rebase(c.data, o.data);
  rebase(c.probs, o.probs);
  rebase(c.labels, o.labels);
  if (c.data.empty() == c.probs.empty()) {
    throw Error(ErrorCode::InvalidConfig, "give exactly one of data (features) or probs");
  }
  if (c.method == Method::Graph && c.graph.empty()) {
    throw Error(ErrorCode::InvalidConfig, "the graph method needs a graph");
  }
  return c;
}

}  // namespace

int run_pipeline(const PipelineOptions& o) {
  const RunConfig c = resolve(o);
  const json config = c.to_json();

  const bool train = !c.data.empty();
  const std::string& input = train ? c.data : c.probs;
  require_file(input, train ? "data file" : "probs file");
  const auto table = io::read_table(fs::path(input));
  const auto labels = resolve_labels(table, c.labels);
  if (!labels) throw Error(ErrorCode::InvalidConfig, "pipeline input needs a label column or labels file");

  const std::size_t n = table.rows();
  const std::size_t n_train = train ? c.n_train : 0;
  if (n_train + c.n_calib >= n) {
    throw Error(ErrorCode::InvalidConfig, "split sizes " + std::to_string(n_train) + " + " +
                                              std::to_string(c.n_calib) + " leave no test rows out of " +
                                              std::to_string(n));
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng split_rng = make_rng(c.seed, 0);
  std::shuffle(order.begin(), order.end(), split_rng);
  const std::span<const std::size_t> all(order);
  const auto train_rows = all.subspan(0, n_train);
  const auto calib_rows = all.subspan(n_train, c.n_calib);
  const auto test_rows = all.subspan(n_train + c.n_calib);

  auto pick = [&](std::span<const std::size_t> rows) {
    std::vector<std::string> out;
    for (std::size_t i : rows) out.push_back((*labels)[i]);
    return out;
  };

  fs::create_directories(c.out_dir);
  const fs::path out_dir(c.out_dir);

  ProbMatrix calib_probs;
  ProbMatrix test_probs;
  std::vector<std::string> classes;
  if (train) {
    const auto x = io::to_features(table);
    std::set<std::string> distinct(labels->begin(), labels->end());
    classes.assign(distinct.begin(), distinct.end());
    const auto x_train = x.select_rows(train_rows);
    FitOptions fit;
    fit.l2 = c.l2;
    fit.max_iter = c.max_iter;
    const auto features = select_top_variance(x_train, std::min(c.k_features, x_train.cols()));
    const auto model = fit_logit(x_train, pick(train_rows), fit, features, classes);
    json model_doc = io::to_json(model);
    io::stamp(model_doc, config);
    io::write_json(out_dir / "model.json", model_doc);
    calib_probs = predict_probs(model, x.select_rows(calib_rows));
    test_probs = predict_probs(model, x.select_rows(test_rows));
  } else {
    const auto p = io::to_probs(table);
    classes = p.class_names();
    calib_probs = p.select_rows(calib_rows);
    test_probs = p.select_rows(test_rows);
  }

  const auto calib = LabeledBatch::from_names(calib_probs, pick(calib_rows));
  const auto test_labels = pick(test_rows);
  const auto test = LabeledBatch::from_names(test_probs, test_labels);

  const LabelGraph g = c.graph.empty() ? star_graph(classes) : load_graph(c.graph);
  const GraphBinding binding(g, classes);

  CorrectionOptions options;
  options.estimator = c.estimator;
  const auto cc = calibrate(&binding, calib, test, c.alpha, c.method, c.correction, c.seed, options, c.threads);
  json cal_doc = calibration_doc(cc, c.method, c.correction, classes);
  io::stamp(cal_doc, config);
  io::write_json(out_dir / "calibration.json", cal_doc);

  const auto sets = predict_corrected(cc, &binding, test.probs, c.method);
  std::vector<std::string> test_ids;
  for (std::size_t i : test_rows) test_ids.push_back(table.ids[i]);
  emit((out_dir / "sets.jsonl").string(), jsonl(test_ids, sets));

  std::size_t correct = 0;
  for (std::size_t i = 0; i < test.size(); ++i) correct += point_prediction(test.probs, i) == test.labels[i];
  json report = io::to_json(evaluate(sets, test_labels, g));
  report["method"] = to_string(c.method);
  report["correction"] = to_string(c.correction);
  report["alpha"] = c.alpha;
  report["split_sizes"] = {{"train", n_train}, {"calib", c.n_calib}, {"test", test_rows.size()}};
  report["point_accuracy"] = static_cast<double>(correct) / static_cast<double>(test.size());
  if (c.correction != Correction::None) report["audit"] = io::to_json(cc.plan, classes);
  io::stamp(report, config);
  io::write_json(out_dir / "report.json", report);

  json run_doc = config;
  io::stamp(run_doc, config);
  io::write_json(out_dir / "run_config.json", run_doc);
  return 0;
}

}  // namespace hiconform::cli
