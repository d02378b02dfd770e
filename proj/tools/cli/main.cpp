#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"
#include "hiconform/error.hpp"
#include "json.hpp"
#include "json_io.hpp"

namespace {

using hiconform::ErrorKind;

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config: return 1;
    case ErrorKind::Data: return 2;
    case ErrorKind::Calibration: return 3;
  }
  return 2;
}

int report_error(std::string_view code, std::string_view kind, const std::string& message, int status) {
  const nlohmann::json err = {
      {"error", {{"code", code}, {"kind", kind}, {"message", message}, {"exit_code", status}}}};
  std::cerr << err.dump() << '\n';
  return status;
}

std::string_view kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::Config: return "config";
    case ErrorKind::Data: return "data";
    case ErrorKind::Calibration: return "calibration";
  }
  return "data";
}

void add_input(CLI::App* cmd, hiconform::cli::InputOptions& in) {
  cmd->add_option("--probs", in.probs, "Probability CSV (class columns, optional id/label)");
  cmd->add_option("--data", in.data, "Feature CSV, scored with --model");
  cmd->add_option("--model", in.model, "Model JSON written by `train`");
  cmd->add_option("--labels", in.labels, "Labels file, one per line (overrides a label column)");
}

}  // namespace

int main(int argc, char** argv) {
  namespace cli = hiconform::cli;
  CLI::App app{"Conformal prediction sets over label ontologies"};
  app.set_version_flag("--version", std::string(hiconform::io::tool_version()));
  app.require_subcommand(1);

  cli::SynthOptions synth;
  auto* c_synth = app.add_subcommand("synth", "Sample a synthetic labelled feature table");
  c_synth->add_option("--config", synth.config, "Data config JSON");
  c_synth->add_option("--n", synth.n, "Rows to sample")->capture_default_str();
  c_synth->add_option("--out", synth.out, "Output feature CSV")->required();
  c_synth->add_option("--graph-out", synth.graph_out, "Also write the label graph as TSV");
  c_synth->add_option("--seed", synth.seed, "Overrides the config seed");

  cli::TrainOptions train;
  auto* c_train = app.add_subcommand("train", "Fit a multinomial logit on the top-variance features");
  c_train->add_option("--data", train.data, "Feature CSV with a label column")->required();
  c_train->add_option("--labels", train.labels, "Labels file");
  c_train->add_option("--out", train.out, "Model JSON (stdout when omitted)");
  c_train->add_option("--k-features", train.k_features)->capture_default_str();
  c_train->add_option("--l2", train.l2)->capture_default_str();
  c_train->add_option("--max-iter", train.max_iter)->capture_default_str();
  c_train->add_option("--tol", train.tol)->capture_default_str();

  cli::CalibrateOptions split_cal;
  auto* c_split_cal = app.add_subcommand("split-calibrate", "Split-conformal threshold q_hat");
  add_input(c_split_cal, split_cal.input);
  c_split_cal->add_option("--alpha", split_cal.alpha)->capture_default_str();
  c_split_cal->add_option("--out", split_cal.out, "Calibration JSON (stdout when omitted)");

  cli::CalibrateOptions crc_cal;
  auto* c_crc_cal = app.add_subcommand("crc-calibrate", "Graph risk-control threshold lambda_hat");
  add_input(c_crc_cal, crc_cal.input);
  c_crc_cal->add_option("--graph", crc_cal.graph, "Label graph TSV")->required();
  c_crc_cal->add_option("--alpha", crc_cal.alpha)->capture_default_str();
  c_crc_cal->add_option("--loss-bound", crc_cal.loss_bound)->capture_default_str();
  c_crc_cal->add_option("--threads", crc_cal.threads)->capture_default_str();
  c_crc_cal->add_option("--out", crc_cal.out, "Calibration JSON (stdout when omitted)");

  cli::PredictOptions split_pred;
  auto* c_split_pred = app.add_subcommand("split-predict", "Split-conformal sets as JSONL");
  add_input(c_split_pred, split_pred.input);
  c_split_pred->add_option("--calibration", split_pred.calibration)->required();
  c_split_pred->add_option("--graph", split_pred.graph, "Fill summaries and homogeneity");
  c_split_pred->add_option("--out", split_pred.out, "JSONL output (stdout when omitted)");

  cli::PredictOptions crc_pred;
  auto* c_crc_pred = app.add_subcommand("crc-predict", "Graph sets as JSONL");
  add_input(c_crc_pred, crc_pred.input);
  c_crc_pred->add_option("--calibration", crc_pred.calibration)->required();
  c_crc_pred->add_option("--graph", crc_pred.graph)->required();
  c_crc_pred->add_option("--out", crc_pred.out, "JSONL output (stdout when omitted)");

  cli::CorrectOptions correct;
  auto* c_correct = app.add_subcommand("correct", "Label-shift corrected sets plus an audit block");
  c_correct->add_option("--calib", correct.calib, "Calibration CSV (probabilities, or features with --model)")
      ->required();
  c_correct->add_option("--test", correct.test, "Test CSV")->required();
  c_correct->add_option("--model", correct.model);
  c_correct->add_option("--graph", correct.graph);
  c_correct->add_option("--method", correct.method)->check(CLI::IsMember({"split", "graph"}))->capture_default_str();
  c_correct->add_option("--correction", correct.correction)
      ->check(CLI::IsMember({"two_fold", "oracle"}))
      ->capture_default_str();
  c_correct->add_option("--estimator", correct.estimator)->check(CLI::IsMember({"soft", "hard"}))->capture_default_str();
  c_correct->add_option("--alpha", correct.alpha)->capture_default_str();
  c_correct->add_option("--loss-bound", correct.loss_bound)->capture_default_str();
  c_correct->add_option("--resample-size", correct.resample_size, "0 keeps the calibration size")
      ->capture_default_str();
  c_correct->add_option("--seed", correct.seed)->capture_default_str();
  c_correct->add_option("--out", correct.out, "JSONL sets (stdout when omitted)");
  c_correct->add_option("--audit", correct.audit, "Audit JSON (stdout when omitted)");

  cli::EvaluateOptions eval;
  auto* c_eval = app.add_subcommand("evaluate", "Coverage, size and homogeneity of JSONL sets");
  c_eval->add_option("--sets", eval.sets)->required();
  c_eval->add_option("--truth", eval.truth, "CSV with a label column, or a labels file")->required();
  c_eval->add_option("--graph", eval.graph)->required();
  c_eval->add_option("--out", eval.out, "Report JSON (stdout when omitted)");

  cli::StudyOptions study;
  auto* c_study = app.add_subcommand("study", "Repeated-split coverage simulation");
  c_study->add_option("--scenario", study.scenario, "Scenario JSON")->required();
  c_study->add_option("--trials", study.trials, "Overrides the scenario trial count");
  c_study->add_option("--seed", study.seed, "Overrides the scenario seed");
  c_study->add_option("--threads", study.threads)->capture_default_str();
  c_study->add_option("--out", study.out, "Report JSON (stdout when omitted)");
  c_study->add_option("--emit-hist", study.emit_hist, "gnuplot-ready coverage histogram");

  cli::PipelineOptions pipe;
  auto* c_pipe = app.add_subcommand("pipeline", "Train, calibrate, predict and evaluate in one run");
  c_pipe->add_option("--config", pipe.config, "RunConfig JSON; flags override its fields");
  c_pipe->add_option("--graph", pipe.graph);
  c_pipe->add_option("--data", pipe.data, "Feature CSV with labels");
  c_pipe->add_option("--probs", pipe.probs, "Probability CSV with labels; skips training");
  c_pipe->add_option("--labels", pipe.labels);
  c_pipe->add_option("--out-dir", pipe.out_dir);
  c_pipe->add_option("--method", pipe.method)->check(CLI::IsMember({"split", "graph"}));
  c_pipe->add_option("--correction", pipe.correction)->check(CLI::IsMember({"none", "two_fold", "oracle"}));
  c_pipe->add_option("--estimator", pipe.estimator)->check(CLI::IsMember({"soft", "hard"}));
  c_pipe->add_option("--alpha", pipe.alpha);
  c_pipe->add_option("--l2", pipe.l2);
  c_pipe->add_option("--seed", pipe.seed);
  c_pipe->add_option("--k-features", pipe.k_features);
  c_pipe->add_option("--n-train", pipe.n_train);
  c_pipe->add_option("--n-calib", pipe.n_calib);
  c_pipe->add_option("--max-iter", pipe.max_iter);
  c_pipe->add_option("--threads", pipe.threads);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("InvalidConfig", "config", e.what(), 1);
  }

  try {
    if (c_synth->parsed()) return cli::run_synth(synth);
    if (c_train->parsed()) return cli::run_train(train);
    if (c_split_cal->parsed()) return cli::run_split_calibrate(split_cal);
    if (c_crc_cal->parsed()) return cli::run_crc_calibrate(crc_cal);
    if (c_split_pred->parsed()) return cli::run_split_predict(split_pred);
    if (c_crc_pred->parsed()) return cli::run_crc_predict(crc_pred);
    if (c_correct->parsed()) return cli::run_correct(correct);
    if (c_eval->parsed()) return cli::run_evaluate(eval);
    if (c_study->parsed()) return cli::run_study(study);
    if (c_pipe->parsed()) return cli::run_pipeline(pipe);
  } catch (const hiconform::Error& e) {
    const auto kind = hiconform::kind_of(e.code());
    return report_error(hiconform::to_string(e.code()), kind_name(kind), e.detail(), exit_code(kind));
  } catch (const nlohmann::json::exception& e) {
    return report_error("ParseError", "data", e.what(), 2);
  } catch (const std::filesystem::filesystem_error& e) {
    return report_error("InvalidConfig", "config", e.what(), 1);
  } catch (const std::exception& e) {
    return report_error("Internal", "data", e.what(), 2);
  }
  return 1;
}
