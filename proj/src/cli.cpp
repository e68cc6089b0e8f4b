#include "flare/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>

#include "flare/baselines.hpp"
#include "flare/data.hpp"
#include "flare/error.hpp"
#include "flare/feasibility.hpp"
#include "flare/io.hpp"
#include "flare/metrics.hpp"
#include "flare/parallel.hpp"
#include "flare/random.hpp"
#include "flare/trainer.hpp"

#ifndef FLARE_VERSION
#define FLARE_VERSION "unknown"
#endif

namespace flare::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kManifestFormat = "flare-run";
constexpr int kManifestVersion = 1;

std::string absolute_string(const std::string& p) {
  return fs::absolute(fs::path(p)).lexically_normal().generic_string();
}

fs::path suffixed(const fs::path& output, const std::string& suffix) {
  fs::path p = output;
  if (!p.has_filename()) p = p.parent_path();
  return p.parent_path() / (p.filename().string() + suffix);
}

// ------------------------------------------------------------ predictors --

using Predictor = std::function<Eigen::MatrixXd(const Eigen::VectorXd&, const Eigen::MatrixXd&)>;

struct LoadedModel {
  std::string method;
  Predictor predict;
};

LoadedModel load_model(const fs::path& path) {
  io::Checkpoint ckpt = io::load_checkpoint(path);
  const std::string kind = ckpt.meta.value("kind", "");
  if (kind == "flare" || kind == "lamp") {
    auto ens = std::make_shared<train::TrainedEnsemble>(train::ensemble_from_checkpoint(ckpt));
    return {kind, [ens](const Eigen::VectorXd& p, const Eigen::MatrixXd& x) {
              return train::predict_field(*ens, p, x);
            }};
  }
  if (kind == "nn") {
    auto set = std::make_shared<baselines::NeighborSet>(baselines::neighbors_from_checkpoint(ckpt));
    return {kind, [set](const Eigen::VectorXd& p, const Eigen::MatrixXd& x) {
              return baselines::nn_predict(*set, p, x);
            }};
  }
  if (kind == "concat" || kind == "film" || kind == "deeponet") {
    auto model = std::make_shared<baselines::ConditionalModel>(baselines::conditional_from_checkpoint(ckpt));
    return {kind, [model](const Eigen::VectorXd& p, const Eigen::MatrixXd& x) {
              return baselines::predict_conditional(*model, p, x);
            }};
  }
  throw Error(ErrorCode::FormatError, path.string() + ": checkpoint kind '" + kind + "' has no field predictor");
}

metrics::MetricsBundle evaluate_on(const Predictor& predict, const data::Dataset& dataset,
                                   const std::vector<std::uint32_t>& ids, int threads) {
  if (ids.empty()) throw Error(ErrorCode::InsufficientData, "evaluation set is empty");
  std::vector<metrics::MetricsBundle> per_sample(ids.size());
  parallel_for(ids.size(), threads, [&](std::size_t i) {
    const auto& s = dataset.by_id(ids[i]);
    per_sample[i] = metrics::evaluate(s.targets, predict(s.params, s.coords));
  });
  return metrics::average(per_sample);
}

std::vector<data::FieldSample> gather(const data::Dataset& dataset, const std::vector<std::uint32_t>& ids) {
  std::vector<data::FieldSample> out;
  out.reserve(ids.size());
  for (auto id : ids) out.push_back(dataset.by_id(id));
  return out;
}

std::string training_log(const std::vector<train::EpochRecord>& records) {
  std::string s = "phase,epoch,objective,regularization,lr\n";
  for (const auto& r : records)
    s += std::to_string(r.phase) + ',' + std::to_string(r.epoch) + ',' + metrics::format_double(r.objective) +
         ',' + metrics::format_double(r.regularization) + ',' + metrics::format_double(r.lr) + '\n';
  return s;
}

Eigen::MatrixXd read_coords_csv(const fs::path& path) {
  std::istringstream in(io::read_text(path));
  std::vector<std::array<double, 3>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::array<double, 3> row{};
    std::istringstream ls(line);
    std::string cell;
    int col = 0;
    bool numeric = true;
    while (std::getline(ls, cell, ',')) {
      if (col >= 3) throw Error(ErrorCode::FormatError, path.string() + ":" + std::to_string(line_no) + ": expected 3 columns");
      try {
        std::size_t used = 0;
        row[col] = std::stod(cell, &used);
        if (used != cell.size()) numeric = false;
      } catch (const std::exception&) {
        numeric = false;
      }
      ++col;
    }
    if (!numeric && rows.empty() && line_no == 1) continue;  // header
    if (!numeric || col != 3)
      throw Error(ErrorCode::FormatError, path.string() + ":" + std::to_string(line_no) + ": expected x,y,z");
    rows.push_back(row);
  }
  Eigen::MatrixXd coords(static_cast<Eigen::Index>(rows.size()), 3);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (int c = 0; c < 3; ++c) coords(static_cast<Eigen::Index>(i), c) = rows[i][c];
  for (Eigen::Index i = 0; i < coords.rows(); ++i)
    for (int c = 0; c < 3; ++c)
      if (!(coords(i, c) >= 0.0 && coords(i, c) <= 1.0))
        throw Error(ErrorCode::FormatError, path.string() + ": coordinates must lie in [0, 1]");
  return coords;
}

std::vector<std::size_t> scaled_sizes(const std::vector<int>& requested, std::size_t pool) {
  std::vector<std::size_t> out;
  for (int s : requested) {
    if (s <= 0) throw Error(ErrorCode::ConfigError, "sweep sizes must be positive");
    const double scaled = std::round(static_cast<double>(s) * static_cast<double>(pool) / 80.0);
    const std::size_t v = std::clamp<std::size_t>(static_cast<std::size_t>(scaled), 1, pool);
    if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
  }
  return out;
}

// -------------------------------------------------------------- commands --

void cmd_generate(const json& c, const fs::path& output, std::ostream& out) {
  data::GenerateOptions o;
  o.count = c.at("count").get<std::size_t>();
  o.corners = c.at("corners").get<std::size_t>();
  o.points_per_ring = c.at("points_per_ring").get<std::size_t>();
  o.family = data::family_from_string(c.at("family").get<std::string>());
  o.seed = c.at("seed").get<std::uint64_t>();
  const data::Dataset ds = data::generate_dataset(o);
  io::save_dataset(output, ds);
  out << "generated " << ds.samples.size() << " samples in " << output.string() << '\n';
}

void cmd_split(const json& c, const fs::path& output, std::ostream& out) {
  const data::Dataset ds = io::load_dataset(c.at("data").get<std::string>());
  const auto kind = data::split_kind_from_string(c.at("kind").get<std::string>());
  const data::Split split = data::build_split(ds, kind, c.at("seed").get<std::uint64_t>(),
                                              c.at("size").get<std::size_t>());
  io::save_split(output, split);
  out << "split " << data::to_string(kind) << ": " << split.train_ids.size() << " train, "
      << split.test_ids.size() << " test\n";
}

void cmd_train(const json& c, const fs::path& output, int threads, std::ostream& out) {
  const data::Dataset ds = io::load_dataset(c.at("data").get<std::string>());
  const data::Split split = io::load_split(c.at("split").get<std::string>());
  const std::string method = c.at("method").get<std::string>();
  train::TrainConfig cfg = train::config_from_json(c.at("train"));
  cfg.threads = threads;
  const auto samples = gather(ds, split.train_ids);
  std::vector<train::EpochRecord> log;
  auto record = [&log](const train::EpochRecord& r) { log.push_back(r); };

  io::Checkpoint ckpt;
  if (method == "flare" || method == "lamp" || method == "nn") {
    if (method != "flare") cfg = cfg.as_lamp();
    cfg.validate();
    const train::TrainedEnsemble ens = train::train_ensemble(samples, ds.bounds, cfg, record);
    ckpt = method == "nn" ? baselines::to_checkpoint(baselines::neighbors_from_ensemble(ens))
                          : train::to_checkpoint(ens);
  } else {
    const auto kind = baselines::kind_from_string(method);
    const int latent = c.at("latent").get<int>();
    const baselines::ConditionalModel model = baselines::train_conditional(
        kind, samples, ds.bounds, cfg, cfg.phase1_epochs + cfg.phase2_epochs, record, latent);
    ckpt = baselines::to_checkpoint(model);
    ckpt.meta["config"] = train::to_json(cfg);
    ckpt.meta["sample_ids"] = split.train_ids;
  }
  io::save_checkpoint(output, ckpt);
  io::write_text(suffixed(output, ".log.csv"), training_log(log));
  out << "trained " << method << " on " << samples.size() << " samples, " << log.size() << " epochs logged\n";
}

void cmd_infer(const json& c, const fs::path& output, std::ostream& out) {
  const LoadedModel model = load_model(c.at("checkpoint").get<std::string>());
  const Eigen::VectorXd params = io::vector_from_json(c.at("params"));
  if (params.size() != static_cast<Eigen::Index>(kParamCount))
    throw Error(ErrorCode::ConfigError, "--params needs " + std::to_string(kParamCount) + " values");
  const Eigen::MatrixXd coords = read_coords_csv(c.at("coords").get<std::string>());
  const Eigen::MatrixXd field = model.predict(params, coords);
  std::string s = "x,y,z,u_x,u_y,u_z\n";
  for (Eigen::Index i = 0; i < coords.rows(); ++i) {
    for (int k = 0; k < 3; ++k) s += metrics::format_double(coords(i, k)) + ',';
    for (int k = 0; k < 3; ++k) s += metrics::format_double(field(i, k)) + (k == 2 ? '\n' : ',');
  }
  io::write_text(output, s);
  out << "wrote " << coords.rows() << " points to " << output.string() << '\n';
}

void cmd_eval(const json& c, const fs::path& output, int threads, std::ostream& out) {
  const data::Dataset ds = io::load_dataset(c.at("data").get<std::string>());
  const data::Split split = io::load_split(c.at("split").get<std::string>());
  std::vector<LoadedModel> models{load_model(c.at("checkpoint").get<std::string>())};
  if (!c.at("nearest").is_null()) models.push_back(load_model(c.at("nearest").get<std::string>()));
  std::string s = metrics::csv_header();
  for (const auto& m : models) {
    const auto bundle = evaluate_on(m.predict, ds, split.test_ids, threads);
    s += metrics::csv_rows(m.method, data::to_string(split.kind), bundle);
    out << m.method << " mean R2 " << metrics::format_double(metrics::mean_r2(bundle)) << '\n';
  }
  io::write_text(output, s);
}

void cmd_sweep(const json& c, const fs::path& output, int threads, std::ostream& out) {
  const data::Dataset ds = io::load_dataset(c.at("data").get<std::string>());
  const std::uint64_t seed = c.at("seed").get<std::uint64_t>();
  train::TrainConfig cfg = train::config_from_json(c.at("train"));
  cfg.threads = threads;
  cfg.validate();
  const data::Split reference = data::build_split(ds, data::SplitKind::Random8020, seed);
  const auto sizes = scaled_sizes(c.at("sizes").get<std::vector<int>>(), reference.train_ids.size());

  std::string s = "size,method,component,r2,rmse,wr2,wrmse\n";
  for (std::size_t size : sizes) {
    const data::Split split = data::build_split(ds, data::SplitKind::GreedyMaxMin, seed, size);
    const auto samples = gather(ds, split.train_ids);
    const auto flare_ens = train::train_ensemble(samples, ds.bounds, cfg);
    const auto lamp_ens = train::train_ensemble(samples, ds.bounds, cfg.as_lamp());
    const auto neighbors = baselines::neighbors_from_ensemble(lamp_ens);
    const std::vector<std::pair<std::string, Predictor>> methods{
        {"flare", [&](const Eigen::VectorXd& p, const Eigen::MatrixXd& x) { return train::predict_field(flare_ens, p, x); }},
        {"lamp", [&](const Eigen::VectorXd& p, const Eigen::MatrixXd& x) { return train::predict_field(lamp_ens, p, x); }},
        {"nn", [&](const Eigen::VectorXd& p, const Eigen::MatrixXd& x) { return baselines::nn_predict(neighbors, p, x); }}};
    for (const auto& [name, predict] : methods) {
      const auto bundle = evaluate_on(predict, ds, split.test_ids, threads);
      std::istringstream rows(metrics::csv_rows(name, "greedy", bundle));
      std::string row;
      while (std::getline(rows, row)) {
        // csv_rows yields method,split,component,...; swap the split column for the size.
        const auto second = row.find(',', row.find(',') + 1);
        s += std::to_string(size) + ',' + name + row.substr(second) + '\n';
      }
      out << "size " << size << ' ' << name << " mean R2 " << metrics::format_double(metrics::mean_r2(bundle)) << '\n';
    }
  }
  io::write_text(output, s);
}

void cmd_feasibility(const json& c, const fs::path& output, std::ostream& out) {
  const data::Dataset ds = io::load_dataset(c.at("data").get<std::string>());
  const std::uint64_t seed = c.at("seed").get<std::uint64_t>();
  const int degree = c.at("degree").get<int>();
  const int folds = c.at("folds").get<int>();
  const auto grid = c.at("grid").get<std::vector<double>>();
  if (degree < 1) throw Error(ErrorCode::ConfigError, "--degree must be at least 1");

  const data::Split split = data::build_split(ds, data::SplitKind::Random8020, seed);
  auto design = [&](const std::vector<std::uint32_t>& ids, Eigen::MatrixXd& X, Eigen::VectorXd& y) {
    std::vector<std::uint32_t> labeled;
    for (auto id : ids)
      if (ds.by_id(id).feasible) labeled.push_back(id);
    if (labeled.empty()) throw Error(ErrorCode::InsufficientData, "no feasibility labels in the dataset");
    const Eigen::MatrixXd Q = ds.bounds.normalize(ds.parameter_matrix(labeled));
    X = feas::poly_features(Eigen::MatrixXd(Q.transpose()), degree);
    y.resize(static_cast<Eigen::Index>(labeled.size()));
    for (std::size_t i = 0; i < labeled.size(); ++i)
      y[static_cast<Eigen::Index>(i)] = *ds.by_id(labeled[i]).feasible ? 1.0 : 0.0;
  };
  Eigen::MatrixXd X_train, X_test;
  Eigen::VectorXd y_train, y_test;
  design(split.train_ids, X_train, y_train);
  design(split.test_ids, X_test, y_test);

  const double l1 = feas::select_l1_strength(X_train, y_train, grid, folds, derive_seed(seed, "cv"));
  feas::FeasibilityModel model = feas::train_logreg_l1(X_train, y_train, l1);
  model.degree = degree;

  Eigen::VectorXd scores(X_test.rows());
  long correct = 0;
  for (Eigen::Index i = 0; i < X_test.rows(); ++i) {
    scores[i] = X_test.row(i).dot(model.coefficients) + model.intercept;
    correct += ((scores[i] > 0.0) == (y_test[i] > 0.5)) ? 1 : 0;
  }
  const double auc = feas::roc_auc(y_test, scores);
  const double accuracy = static_cast<double>(correct) / static_cast<double>(X_test.rows());
  const long nonzero = (model.coefficients.array() != 0.0).count();

  io::save_checkpoint(output, feas::to_checkpoint(model, kParamCount));
  std::string report = "metric,value\n";
  report += "l1_strength," + metrics::format_double(l1) + '\n';
  report += "train_size," + std::to_string(X_train.rows()) + '\n';
  report += "test_size," + std::to_string(X_test.rows()) + '\n';
  report += "train_positive_rate," + metrics::format_double(y_train.mean()) + '\n';
  report += "nonzero_coefficients," + std::to_string(nonzero) + '\n';
  report += "auc," + metrics::format_double(auc) + '\n';
  report += "accuracy," + metrics::format_double(accuracy) + '\n';
  io::write_text(suffixed(output, ".report.csv"), report);
  out << report;
}

void write_manifest(const std::string& command, const json& config, const fs::path& output) {
  const json manifest = {{"format", kManifestFormat},
                         {"version", kManifestVersion},
                         {"flare_version", FLARE_VERSION},
                         {"command", command},
                         {"config", config}};
  io::write_text(manifest_path(output), manifest.dump(2) + '\n');
}

// ------------------------------------------------------------- argument --

struct TrainFlags {
  double lambda = 0.3;
  long epochs1 = 5000;
  long epochs2 = 5000;
  std::vector<int> hidden{64, 64};
  int octaves = 3;
  double lr = 1e-3;
  double min_lr = 1e-5;

  void add(CLI::App* app) {
    app->add_option("--lambda", lambda, "Alignment regularization weight")->capture_default_str();
    app->add_option("--epochs1", epochs1, "Base-network epochs")->capture_default_str();
    app->add_option("--epochs2", epochs2, "Joint epochs")->capture_default_str();
    app->add_option("--hidden", hidden, "Hidden widths, comma separated")->delimiter(',')->capture_default_str();
    app->add_option("--octaves", octaves, "Fourier octaves L")->capture_default_str();
    app->add_option("--lr", lr, "Peak learning rate")->capture_default_str();
    app->add_option("--min-lr", min_lr, "Learning-rate floor")->capture_default_str();
  }

  train::TrainConfig config(std::uint64_t seed) const {
    train::TrainConfig cfg;
    cfg.arch.octaves = octaves;
    cfg.arch.hidden = hidden;
    cfg.lambda = lambda;
    cfg.phase1_epochs = epochs1;
    cfg.phase2_epochs = epochs2;
    cfg.optimizer.base_lr = lr;
    cfg.optimizer.min_lr = min_lr;
    cfg.seed = seed;
    cfg.arch.validate();
    if (epochs1 < 0 || epochs2 < 0) throw Error(ErrorCode::ConfigError, "epoch counts must be nonnegative");
    if (!(lr > 0.0) || !(min_lr > 0.0)) throw Error(ErrorCode::ConfigError, "learning rates must be positive");
    return cfg;
  }
};

}  // namespace

fs::path manifest_path(const fs::path& output) { return suffixed(output, ".manifest.json"); }

void execute(const std::string& command, const json& config, const fs::path& output, int threads,
             std::ostream& out) {
  try {
    if (command == "generate") cmd_generate(config, output, out);
    else if (command == "split") cmd_split(config, output, out);
    else if (command == "train") cmd_train(config, output, threads, out);
    else if (command == "infer") cmd_infer(config, output, out);
    else if (command == "eval") cmd_eval(config, output, threads, out);
    else if (command == "sweep") cmd_sweep(config, output, threads, out);
    else if (command == "feasibility") cmd_feasibility(config, output, out);
    else throw Error(ErrorCode::FormatError, "unknown command '" + command + "' in manifest");
  } catch (const json::exception& e) {
    throw Error(ErrorCode::FormatError, "run configuration: " + std::string(e.what()));
  }
  write_manifest(command, config, output);
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Affine weight-space reconstruction of neural fields", "flare"};
  app.require_subcommand(1);
  app.set_version_flag("--version", FLARE_VERSION);
  int threads = default_thread_count();
  app.add_option("--threads", threads, "Worker threads (default: FLARE_THREADS or core count)")
      ->check(CLI::PositiveNumber);

  std::string output, data_dir, split_file, checkpoint, nearest, coords, manifest_file, family = "affine",
                                                                              kind = "random", method = "flare";
  std::uint64_t seed = 0;
  std::size_t count = 100, corners = 0, points = 100, size = 0;
  int latent = 64, degree = 2, folds = 5;
  std::vector<double> params;
  std::vector<int> sizes{10, 20, 40, 60, 80};
  TrainFlags tf;

  auto* gen = app.add_subcommand("generate", "Write a synthetic dataset directory");
  gen->add_option("--out", output, "Dataset directory")->required();
  gen->add_option("--count", count, "Latin hypercube samples")->capture_default_str();
  gen->add_option("--corners", corners, "Extra corner samples")->capture_default_str();
  gen->add_option("--points", points, "Points per ring")->capture_default_str();
  gen->add_option("--family", family, "affine | nonlinear")->capture_default_str();
  gen->add_option("--seed", seed)->capture_default_str();

  auto* spl = app.add_subcommand("split", "Write a train/test split");
  spl->add_option("--data", data_dir)->required();
  spl->add_option("--kind", kind, "random | greedy | trim")->capture_default_str();
  spl->add_option("--size", size, "Training size for greedy splits");
  spl->add_option("--seed", seed)->capture_default_str();
  spl->add_option("--out", output)->required();

  auto* trn = app.add_subcommand("train", "Train a model on the training ids of a split");
  trn->add_option("--data", data_dir)->required();
  trn->add_option("--split", split_file)->required();
  trn->add_option("--method", method, "flare | lamp | nn | concat | film | deeponet")->capture_default_str();
  trn->add_option("--latent", latent, "DeepONet basis size")->capture_default_str();
  trn->add_option("--seed", seed)->capture_default_str();
  trn->add_option("--out", output, "Checkpoint path")->required();
  tf.add(trn);

  auto* inf = app.add_subcommand("infer", "Evaluate a trained model at new parameters");
  inf->add_option("--checkpoint", checkpoint)->required();
  inf->add_option("--params", params, "Seven raw parameters, comma separated")->delimiter(',')->required();
  inf->add_option("--coords", coords, "CSV of unit coordinates x,y,z")->required();
  inf->add_option("--out", output, "Field CSV")->required();

  auto* evl = app.add_subcommand("eval", "Metrics on the test ids of a split");
  evl->add_option("--checkpoint", checkpoint)->required();
  evl->add_option("--nearest", nearest, "Also evaluate this checkpoint (e.g. an nn set)");
  evl->add_option("--data", data_dir)->required();
  evl->add_option("--split", split_file)->required();
  evl->add_option("--out", output, "Metrics CSV")->required();

  auto* swp = app.add_subcommand("sweep", "Train-size sensitivity with greedy splits");
  swp->add_option("--data", data_dir)->required();
  swp->add_option("--sizes", sizes, "Sizes for an 80-sample pool")->delimiter(',')->capture_default_str();
  swp->add_option("--seed", seed)->capture_default_str();
  swp->add_option("--out", output, "Sweep CSV")->required();
  tf.add(swp);

  auto* fea = app.add_subcommand("feasibility", "Fit and score the feasibility classifier");
  fea->add_option("--data", data_dir)->required();
  fea->add_option("--degree", degree)->capture_default_str();
  fea->add_option("--folds", folds)->capture_default_str();
  fea->add_option("--seed", seed)->capture_default_str();
  fea->add_option("--out", output, "Model checkpoint; the report goes to <out>.report.csv")->required();

  auto* rer = app.add_subcommand("rerun", "Repeat a run from its manifest");
  rer->add_option("manifest", manifest_file)->required();
  rer->add_option("--out", output)->required();

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, e2;
    const int code = app.exit(e, o, e2);
    out << o.str();
    err << e2.str();
    return code == 0 ? 0 : 2;
  }

  try {
    std::string command;
    json config;
    if (gen->parsed()) {
      command = "generate";
      config = {{"count", count}, {"corners", corners}, {"points_per_ring", points},
                {"family", data::to_string(data::family_from_string(family))}, {"seed", seed}};
    } else if (spl->parsed()) {
      command = "split";
      config = {{"data", absolute_string(data_dir)},
                {"kind", data::to_string(data::split_kind_from_string(kind))},
                {"size", size},
                {"seed", seed}};
    } else if (trn->parsed()) {
      command = "train";
      if (method != "flare" && method != "lamp" && method != "nn") baselines::kind_from_string(method);
      train::TrainConfig cfg = tf.config(seed);
      if (method != "flare") cfg = cfg.as_lamp();
      if (method == "flare") cfg.validate();
      config = {{"data", absolute_string(data_dir)}, {"split", absolute_string(split_file)},
                {"method", method}, {"latent", latent}, {"train", train::to_json(cfg)}};
    } else if (inf->parsed()) {
      command = "infer";
      config = {{"checkpoint", absolute_string(checkpoint)},
                {"params", params},
                {"coords", absolute_string(coords)}};
    } else if (evl->parsed()) {
      command = "eval";
      config = {{"checkpoint", absolute_string(checkpoint)},
                {"nearest", nearest.empty() ? json(nullptr) : json(absolute_string(nearest))},
                {"data", absolute_string(data_dir)},
                {"split", absolute_string(split_file)}};
    } else if (swp->parsed()) {
      command = "sweep";
      const train::TrainConfig cfg = tf.config(seed);
      cfg.validate();
      config = {{"data", absolute_string(data_dir)}, {"sizes", sizes}, {"seed", seed},
                {"train", train::to_json(cfg)}};
    } else if (fea->parsed()) {
      command = "feasibility";
      config = {{"data", absolute_string(data_dir)}, {"degree", degree}, {"folds", folds},
                {"seed", seed}, {"grid", feas::default_l1_grid()}};
    } else {
      json manifest;
      try {
        manifest = json::parse(io::read_text(manifest_file));
        if (manifest.at("format") != kManifestFormat)
          throw Error(ErrorCode::FormatError, manifest_file + ": not a run manifest");
        if (manifest.at("version") != kManifestVersion)
          throw Error(ErrorCode::VersionMismatch, manifest_file + ": unsupported manifest version");
        command = manifest.at("command").get<std::string>();
        config = manifest.at("config");
      } catch (const json::exception& e) {
        throw Error(ErrorCode::FormatError, manifest_file + ": " + e.what());
      }
    }
    execute(command, config, output, threads, out);
    return 0;
  } catch (const Error& e) {
    err << "flare: error: " << e.what() << '\n';
    return e.code() == ErrorCode::ConfigError || e.code() == ErrorCode::InvalidArgument ? 2 : 1;
  } catch (const std::exception& e) {
    err << "flare: error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace flare::cli
