// Command-line front end: one subcommand per pipeline stage plus `run`.

#include "fired/fired.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace fired;

namespace {

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> select;
  std::optional<std::string> ensemble;
  std::optional<double> train_fraction;
  std::optional<Index> shift;
  std::optional<double> alpha;
  std::optional<Index> walks;
  std::optional<std::string> labels;
  std::optional<std::string> metrics;
  std::optional<double> fraction;
  bool timings = false;
};

void add_common(CLI::App* app, Overrides& o) {
  app->add_option("--config", o.config, "JSON pipeline config")->check(CLI::ExistingFile);
  app->add_option("--seed", o.seed, "master seed");
  app->add_option("--out", o.out, "output directory");
}

PipelineConfig resolve(const Overrides& o) {
  PipelineConfig c;
  if (!o.config.empty()) c = load_config(o.config);
  if (o.seed) c.seed = *o.seed;
  if (o.out) c.out = *o.out;
  if (o.select) c.selection = selection_method_from_string(*o.select);
  if (o.ensemble) c.ensemble = ensemble_kind_from_string(*o.ensemble);
  if (o.train_fraction) c.train_fraction = *o.train_fraction;
  if (o.shift) c.shift = *o.shift;
  if (o.alpha) c.rca.alpha = *o.alpha;
  if (o.walks) c.rca.walks = *o.walks;
  if (o.fraction) c.detectors.anomaly_fraction = *o.fraction;
  if (o.metrics) {
    c.data = DataSource{};
    c.data.metrics = *o.metrics;
  }
  if (o.labels) c.data.labels = *o.labels;
  if (o.timings) c.record_timings = true;
  if (c.out.empty()) c.out = "out";
  return c;
}

std::string out_path(const PipelineConfig& c, const std::string& name) {
  fs::create_directories(c.out);
  return (fs::path(c.out) / name).string();
}

std::vector<ScoreVector> load_scores(const std::string& dir, std::vector<Timestamp>* timestamps) {
  std::vector<ScoreVector> out;
  for (const char* name : {"iforest", "knn", "lof", "ocsvm"}) {
    const auto path = fs::path(dir) / (std::string(name) + ".csv");
    if (!fs::exists(path)) continue;
    const std::string text = read_file(path.string());
    out.push_back(parse_score_csv(text, name));
    if (timestamps && timestamps->empty()) *timestamps = parse_metric_csv(text, path.string()).timestamps();
  }
  if (out.empty()) throw Error(ErrorCode::Io, "no score CSVs in '" + dir + "'");
  return out;
}

std::set<std::string> truth_set(const std::string& path) {
  GroundTruth g = read_json(path).get<GroundTruth>();
  return {g.root_causes.begin(), g.root_causes.end()};
}

int cmd_gen(const Overrides& o) {
  GenConfig g;
  if (!o.config.empty()) {
    const Json j = read_json(o.config);
    if (j.contains("data") && j.at("data").contains("generator")) {
      g = j.at("data").at("generator").get<GenConfig>();
    } else {
      g = j.get<GenConfig>();
    }
  }
  PipelineConfig c = resolve(o);
  const Generated data = generate(g, derive_seed(c.seed, "generate"));
  write_file(out_path(c, "metrics.csv"), to_csv(data.frame));
  write_file(out_path(c, "labels.csv"), to_csv(data.labels));
  write_json(out_path(c, "truth.json"), data.truth);
  std::cout << "generated " << data.frame.rows() << " x " << data.frame.cols() << " into " << c.out << '\n';
  return 0;
}

int cmd_select(const Overrides& o) {
  PipelineConfig c = resolve(o);
  LoadedData data = load_data(c.data, c.seed);
  const Index boundary = split_boundary(data.frame.rows(), c.train_fraction);
  const SelectionOutcome s = select_stage(c, data.frame, data.labels, boundary);
  for (const auto& w : s.warnings) std::cerr << "warning: " << w << '\n';
  const MetricFrame selected(s.frame.timestamps, s.frame.values, s.frame.names, data.frame.interval());
  write_file(out_path(c, "selected.csv"), to_csv(selected));
  Json info = s.frame;
  info.erase("values");
  info.erase("timestamps");
  write_json(out_path(c, "selection.json"), info);
  if (s.correlation) write_file(out_path(c, "correlation.csv"), to_csv(*s.correlation));
  std::cout << to_string(s.frame.method) << ": kept " << s.frame.cols() << " of " << data.frame.cols() << '\n';
  return 0;
}

int cmd_detect(const Overrides& o) {
  PipelineConfig c = resolve(o);
  LoadedData data = load_data(c.data, c.seed);
  const SelectedFrame frame = select_all(data.frame);
  double fraction = c.detectors.anomaly_fraction.value_or(0.1);
  if (!c.detectors.anomaly_fraction && data.labels) {
    const Index boundary = split_boundary(data.frame.rows(), c.train_fraction);
    const auto pos = data.labels->slice(0, boundary).positives();
    if (pos > 0) {
      fraction = std::clamp(static_cast<double>(pos) / static_cast<double>(boundary),
                            1.0 / static_cast<double>(data.frame.rows()), 0.5);
    }
  }
  for (const auto& spec : detector_specs(c.detectors, fraction, derive_seed(c.seed, "detect"))) {
    const ScoreVector s = fit_score(spec, frame);
    write_file(out_path(c, spec.name() + ".csv"), to_csv(s, frame.timestamps));
    std::cout << spec.name() << " scored " << s.values.size() << " rows\n";
  }
  return 0;
}

int cmd_train(const Overrides& o, const std::string& scores_dir) {
  PipelineConfig c = resolve(o);
  if (!c.data.labels) throw Error(ErrorCode::InvalidConfig, "train needs --labels");
  const Assembled m = assemble(load_scores(scores_dir, nullptr));
  const LabelSeries labels = parse_label_csv(read_file(*c.data.labels), *c.data.labels);
  const Split parts = split(m.matrix, labels, c.train_fraction);
  for (const auto& w : parts.warnings) std::cerr << "warning: " << w << '\n';
  const MlpModel model = train_deep(parts.train, parts.train_labels, c.train, derive_seed(c.seed, "deep"), c.shift);
  save_model(model, out_path(c, "model.json"));
  std::cout << "trained on " << parts.boundary << " rows (shift " << c.shift << ")\n";
  return 0;
}

int cmd_predict(const Overrides& o, const std::string& model_path, const std::string& scores_dir) {
  PipelineConfig c = resolve(o);
  const MlpModel model = load_model(model_path);
  std::vector<Timestamp> timestamps;
  const auto raw = load_scores(scores_dir, &timestamps);
  ScoreMatrix reference;
  reference.learners = model.learners;
  reference.means = model.score_means;
  reference.stds = model.score_stds;
  const DeepPrediction p = predict_deep(model, normalize_with(reference, raw));
  std::ostringstream csv;
  csv << "timestamp,verdict,probability\n";
  for (std::size_t i = 0; i < p.verdicts.size(); ++i) {
    csv << timestamps[i] << ',' << int(p.verdicts[i]) << ',' << format_double(p.probabilities[i]) << '\n';
  }
  write_file(out_path(c, "verdicts.csv"), csv.str());
  if (c.data.labels) {
    const LabelSeries labels = parse_label_csv(read_file(*c.data.labels), *c.data.labels);
    const Index begin = split_boundary(static_cast<Index>(p.verdicts.size()), c.train_fraction);
    const Evaluation e = evaluate_shifted(p.verdicts, labels.labels(), begin, model.shift);
    std::cout << "precision " << e.precision << " recall " << e.recall << " f1 " << e.f1 << '\n';
  }
  std::cout << "predicted " << p.verdicts.size() << " rows\n";
  return 0;
}

int cmd_rca(const Overrides& o, const std::string& graph_path, const std::string& truth_path,
            const std::string& undirected, Index length) {
  PipelineConfig c = resolve(o);
  if (!undirected.empty()) c.rca.undirected = undirected_policy_from_string(undirected);
  if (length > 0) c.rca.length = length;
  CausalGraph graph;
  if (!graph_path.empty()) {
    if (fs::path(graph_path).extension() == ".json") {
      graph = read_json(graph_path).get<CausalGraph>();
    } else {
      graph = parse_edge_list(read_file(graph_path), {kIndicator});
    }
  } else {
    LoadedData data = load_data(c.data, c.seed);
    if (!data.labels) throw Error(ErrorCode::InvalidConfig, "rca needs --graph or --metrics with --labels");
    const SelectedFrame frame = select_all(data.frame);
    const auto d = frame.rows();
    const RcaOutcome r = rca_stage(c.rca, frame.values, frame.names, data.labels->labels(), 0, d - 1, c.seed,
                                   std::nullopt);
    graph = r.pc.graph;
    write_file(out_path(c, "graph.txt"), to_edge_list(graph));
    write_json(out_path(c, "graph.json"), graph);
  }
  WalkOptions walk;
  walk.walks = c.rca.walks;
  walk.length = c.rca.length;
  walk.undirected = c.rca.undirected;
  walk.self_avoiding = c.rca.self_avoiding;
  walk.seed = derive_seed(c.seed, "walk");
  const RootCauseRanking ranking = localize(graph, walk);
  for (const auto& w : ranking.warnings) std::cerr << "warning: " << w << '\n';
  write_file(out_path(c, "ranking.csv"), ranking_to_csv(ranking.causes));
  std::cout << ranking_to_csv(ranking.causes);
  if (!truth_path.empty()) {
    const auto truth = truth_set(truth_path);
    for (Index k = 1; k <= c.rca.k; ++k) {
      std::cout << "AC@" << k << ' ' << ac_at_k(ranking.causes, truth, k) << '\n';
    }
    std::cout << "Avg@" << c.rca.k << ' ' << avg_at_k(ranking.causes, truth, c.rca.k) << '\n';
  }
  return 0;
}

int cmd_eval(const Overrides& o, const std::vector<std::string>& result_files, const std::string& verdicts_path) {
  PipelineConfig c = resolve(o);
  if (!verdicts_path.empty()) {
    if (!c.data.labels) throw Error(ErrorCode::InvalidConfig, "eval --verdicts needs --labels");
    const MetricFrame v = parse_metric_csv(read_file(verdicts_path), verdicts_path);
    const LabelSeries labels = parse_label_csv(read_file(*c.data.labels), *c.data.labels);
    const auto col = v.column("verdict");
    if (!col) throw Error(ErrorCode::ParseError, "verdicts CSV lacks a 'verdict' column");
    std::vector<std::uint8_t> verdicts;
    for (Index r = 0; r < v.rows(); ++r) verdicts.push_back(v.values()(r, *col) != 0.0 ? 1 : 0);
    const Index begin = o.train_fraction ? split_boundary(v.rows(), c.train_fraction) : 0;
    const Evaluation e = evaluate_shifted(verdicts, labels.labels(), begin, o.shift.value_or(0));
    std::cout << "precision,recall,f1\n"
              << format_double(e.precision) << ',' << format_double(e.recall) << ',' << format_double(e.f1) << '\n';
    return 0;
  }
  if (result_files.empty()) throw Error(ErrorCode::InvalidConfig, "eval needs result CSVs or --verdicts");
  std::vector<MethodResult> all;
  for (const auto& path : result_files) {
    auto rows = parse_results_csv(read_file(path));
    for (auto& r : rows) {
      if (r.dataset.empty() || result_files.size() > 1) r.dataset = fs::path(path).stem().string();
    }
    all.insert(all.end(), rows.begin(), rows.end());
  }
  const std::string table = robustness_to_csv(robustness(ranks_per_dataset(all)));
  write_file(out_path(c, "robustness.csv"), table);
  std::cout << table;
  return 0;
}

int cmd_run(const Overrides& o) {
  PipelineConfig c = resolve(o);
  const PipelineResult r = run_pipeline(c);
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
  const auto& det = r.report_json.at("detection");
  std::cout << "ensemble " << det.at("method").get<std::string>();
  if (det.contains("f1")) std::cout << " f1 " << det.at("f1").get<double>();
  std::cout << '\n';
  if (r.rca) {
    for (std::size_t i = 0; i < std::min<std::size_t>(r.rca->ranking.causes.size(), 5); ++i) {
      const auto& rc = r.rca->ranking.causes[i];
      std::cout << "  #" << rc.rank << ' ' << rc.node << " (" << rc.count << ")\n";
    }
  }
  std::cout << "report: " << (fs::path(c.out) / "report.json").string() << '\n';
  return 0;
}

void print_error(const std::string& code, const std::string& message, const std::optional<std::string>& out) {
  const Json record{{"error", {{"code", code}, {"message", message}}}};
  std::cerr << record.dump() << '\n';
  if (out) {
    try {
      fs::create_directories(*out);
      write_json((fs::path(*out) / "error.json").string(), record);
    } catch (...) {
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Performance anomaly detection and root-cause localization"};
  app.require_subcommand(1);
  Overrides o;
  std::string scores_dir, model_path, graph_path, truth_path, undirected, verdicts_path;
  std::vector<std::string> result_files;
  Index length = 0;

  auto* run = app.add_subcommand("run", "run every stage");
  add_common(run, o);
  run->add_option("--metrics", o.metrics, "metric CSV (timestamp,<m1>,...)");
  run->add_option("--labels", o.labels, "label CSV (timestamp,label)");
  run->add_option("--select", o.select, "correlation|pca|none");
  run->add_option("--ensemble", o.ensemble, "max|avg|weighted|deep");
  run->add_option("--train-fraction", o.train_fraction, "labelled prefix fraction");
  run->add_option("--shift", o.shift, "prediction shift in samples");
  run->add_option("--alpha", o.alpha, "CI test significance level");
  run->add_option("--walks", o.walks, "number of random walks");
  run->add_option("--fraction", o.fraction, "anomaly fraction for score thresholds");
  run->add_flag("--timings", o.timings, "include wall-clock timings in the report");

  auto* gen = app.add_subcommand("gen", "generate synthetic data with known root causes");
  add_common(gen, o);

  auto* select = app.add_subcommand("select", "metric selection");
  add_common(select, o);
  select->add_option("--metrics", o.metrics, "metric CSV");
  select->add_option("--labels", o.labels, "label CSV");
  select->add_option("--select", o.select, "correlation|pca|none");
  select->add_option("--train-fraction", o.train_fraction, "labelled prefix fraction");

  auto* detect = app.add_subcommand("detect", "score with the four base learners");
  add_common(detect, o);
  detect->add_option("--metrics", o.metrics, "metric CSV (e.g. selected.csv)");
  detect->add_option("--labels", o.labels, "label CSV, used for the anomaly fraction");
  detect->add_option("--fraction", o.fraction, "anomaly fraction");
  detect->add_option("--train-fraction", o.train_fraction, "labelled prefix fraction");

  auto* train = app.add_subcommand("train", "train the deep ensemble");
  add_common(train, o);
  train->add_option("--scores", scores_dir, "directory of <learner>.csv score files")->required();
  train->add_option("--labels", o.labels, "label CSV")->required();
  train->add_option("--train-fraction", o.train_fraction, "labelled prefix fraction");
  train->add_option("--shift", o.shift, "prediction shift in samples");

  auto* predict = app.add_subcommand("predict", "apply a trained model");
  add_common(predict, o);
  predict->add_option("--model", model_path, "model.json")->required()->check(CLI::ExistingFile);
  predict->add_option("--scores", scores_dir, "directory of <learner>.csv score files")->required();
  predict->add_option("--labels", o.labels, "label CSV, to report F1 on the test rows");
  predict->add_option("--train-fraction", o.train_fraction, "labelled prefix fraction");

  auto* rca = app.add_subcommand("rca", "causal graph and random-walk root-cause ranking");
  add_common(rca, o);
  rca->add_option("--graph", graph_path, "edge list (a -> b / a -- b) or graph JSON");
  rca->add_option("--metrics", o.metrics, "metric CSV, to build the graph");
  rca->add_option("--labels", o.labels, "label CSV used as the indicator column");
  rca->add_option("--alpha", o.alpha, "CI test significance level");
  rca->add_option("--walks", o.walks, "number of random walks");
  rca->add_option("--length", length, "walk length (default: node count)");
  rca->add_option("--undirected", undirected, "traverse|ignore undirected edges");
  rca->add_option("--truth", truth_path, "ground-truth JSON for AC@k");

  auto* eval = app.add_subcommand("eval", "precision/recall/F1 or robustness ranking");
  add_common(eval, o);
  eval->add_option("results", result_files, "results CSVs, one per dataset");
  eval->add_option("--verdicts", verdicts_path, "verdicts CSV");
  eval->add_option("--labels", o.labels, "label CSV");
  eval->add_option("--train-fraction", o.train_fraction, "evaluate only rows after this prefix");
  eval->add_option("--shift", o.shift, "compare verdict t with label t+shift");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(o);
    if (gen->parsed()) return cmd_gen(o);
    if (select->parsed()) return cmd_select(o);
    if (detect->parsed()) return cmd_detect(o);
    if (train->parsed()) return cmd_train(o, scores_dir);
    if (predict->parsed()) return cmd_predict(o, model_path, scores_dir);
    if (rca->parsed()) return cmd_rca(o, graph_path, truth_path, undirected, length);
    if (eval->parsed()) return cmd_eval(o, result_files, verdicts_path);
  } catch (const Error& e) {
    print_error(std::string(to_string(e.code())), e.what(), o.out);
    return 2;
  } catch (const std::exception& e) {
    print_error("Internal", e.what(), o.out);
    return 3;
  }
  return 1;
}
