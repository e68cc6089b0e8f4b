#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "flare/cli.hpp"
#include "flare/data.hpp"
#include "flare/io.hpp"
#include "flare/trainer.hpp"

using namespace flare;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result flare_run(std::vector<std::string> args) {
  args.insert(args.begin(), "flare");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("flare_test_cli_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

std::string bytes_of(const fs::path& p) { return io::read_text(p); }

// Relative path -> contents for every regular file below `dir`.
std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) files[fs::relative(e.path(), dir).generic_string()] = bytes_of(e.path());
  return files;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

const std::vector<std::string> kTiny{"--epochs1", "40", "--epochs2", "40", "--hidden", "8,8", "--octaves", "1"};

std::vector<std::string> with_tiny(std::vector<std::string> args) {
  args.insert(args.end(), kTiny.begin(), kTiny.end());
  return args;
}

}  // namespace

TEST_CASE("usage errors exit with 2, help and version with 0") {
  CHECK(flare_run({}).code == 2);
  CHECK(flare_run({"bogus"}).code == 2);
  CHECK(flare_run({"generate"}).code == 2);  // --out is required
  CHECK(flare_run({"generate", "--out", "x", "--count", "abc"}).code == 2);
  CHECK(flare_run({"--help"}).code == 0);
  CHECK(flare_run({"train", "--help"}).code == 0);
  const Result v = flare_run({"--version"});
  CHECK(v.code == 0);
  CHECK(v.out.find('.') != std::string::npos);
  TempDir tmp("usage");
  const Result bad_family = flare_run({"generate", "--out", tmp / "d", "--family", "cubic"});
  CHECK(bad_family.code == 2);
  CHECK(bad_family.err.rfind("flare: error: ", 0) == 0);
  CHECK_FALSE(fs::exists(tmp / "d"));
}

TEST_CASE("data errors exit with 1 and a diagnostic line") {
  TempDir tmp("dataerr");
  const Result r = flare_run({"split", "--data", tmp / "missing", "--out", tmp / "s.json"});
  CHECK(r.code == 1);
  CHECK(r.err.rfind("flare: error: FormatError", 0) == 0);
  CHECK(r.err.back() == '\n');
  CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);
  io::write_text(tmp / "bad.manifest.json", "{\"format\":\"flare-run\"}");
  CHECK(flare_run({"rerun", tmp / "bad.manifest.json", "--out", tmp / "o"}).code == 1);
  io::write_text(tmp / "worse.manifest.json", "not json");
  CHECK(flare_run({"rerun", tmp / "worse.manifest.json", "--out", tmp / "o"}).code == 1);
}

TEST_CASE("the installed binary reports failures through its exit status") {
  const char* exe = std::getenv("FLARE_CLI");
  if (exe == nullptr) return;
  TempDir tmp("binary");
  const std::string err_file = tmp / "err.txt";
  const int status = std::system((std::string(exe) + " split --data " + (tmp / "none") + " --out " +
                                  (tmp / "s.json") + " 2> " + err_file).c_str());
  CHECK(status != 0);
  CHECK(bytes_of(err_file).rfind("flare: error: ", 0) == 0);
  CHECK(std::system((std::string(exe) + " --version > " + (tmp / "v.txt")).c_str()) == 0);
}

TEST_CASE("generate is deterministic and writes a rerunnable manifest") {
  TempDir tmp("generate");
  const std::vector<std::string> args{"generate", "--count", "6", "--corners", "2", "--points", "3", "--seed", "5"};
  auto a = args, b = args;
  a.insert(a.end(), {"--out", tmp / "a"});
  b.insert(b.end(), {"--out", tmp / "b"});
  REQUIRE(flare_run(a).code == 0);
  REQUIRE(flare_run(b).code == 0);
  CHECK(snapshot(tmp.path / "a") == snapshot(tmp.path / "b"));
  CHECK(io::load_dataset(tmp.path / "a").samples.size() == 8);
  const auto manifest = nlohmann::json::parse(bytes_of(cli::manifest_path(tmp.path / "a")));
  CHECK(manifest.at("command") == "generate");
  CHECK(manifest.at("config").at("count") == 6);
  CHECK(bytes_of(cli::manifest_path(tmp.path / "a")) == bytes_of(cli::manifest_path(tmp.path / "b")));
  REQUIRE(flare_run({"rerun", cli::manifest_path(tmp.path / "a").string(), "--out", tmp / "c"}).code == 0);
  CHECK(snapshot(tmp.path / "c") == snapshot(tmp.path / "a"));
}

TEST_CASE("split, train, infer and eval pipeline") {
  TempDir tmp("pipeline");
  REQUIRE(flare_run({"generate", "--out", tmp / "data", "--count", "10", "--points", "4", "--seed", "1"}).code == 0);
  const auto before = snapshot(tmp.path / "data");
  REQUIRE(flare_run({"split", "--data", tmp / "data", "--kind", "random", "--seed", "2", "--out", tmp / "split.json"})
              .code == 0);
  const data::Split split = io::load_split(tmp / "split.json");
  CHECK(split.train_ids.size() + split.test_ids.size() == 10);

  for (const std::string method : {"flare", "lamp", "nn", "concat", "film", "deeponet"}) {
    CAPTURE(method);
    const std::string ckpt = tmp / (method + ".flw");
    const Result r = flare_run(with_tiny({"train", "--data", tmp / "data", "--split", tmp / "split.json",
                                          "--method", method, "--latent", "4", "--out", ckpt}));
    REQUIRE(r.code == 0);
    const auto log = lines_of(bytes_of(ckpt + ".log.csv"));
    CHECK(log.front() == "phase,epoch,objective,regularization,lr");
    CHECK(log.size() > 40);

    io::write_text(tmp / "coords.csv", "x,y,z\n0.5,0.5,0.5\n0.9,0.1,1\n");
    REQUIRE(flare_run({"infer", "--checkpoint", ckpt, "--params", "37,7,22,7,0.5,7,7", "--coords",
                       tmp / "coords.csv", "--out", tmp / "field.csv"})
                .code == 0);
    const auto field = lines_of(bytes_of(tmp / "field.csv"));
    REQUIRE(field.size() == 3);
    CHECK(field[0] == "x,y,z,u_x,u_y,u_z");
    CHECK(field[1].rfind("0.5,0.5,0.5,", 0) == 0);

    REQUIRE(flare_run({"eval", "--checkpoint", ckpt, "--data", tmp / "data", "--split", tmp / "split.json",
                       "--out", tmp / "metrics.csv"})
                .code == 0);
    const auto rows = lines_of(bytes_of(tmp / "metrics.csv"));
    REQUIRE(rows.size() == 4);
    CHECK(rows[0] == "method,split,component,r2,rmse,wr2,wrmse");
    CHECK(rows[1].rfind(method + ",random,u_x,", 0) == 0);
  }
  CHECK(flare_run({"infer", "--checkpoint", tmp / "flare.flw", "--params", "1,2,3", "--coords", tmp / "coords.csv",
                   "--out", tmp / "f.csv"})
            .code == 2);
  io::write_text(tmp / "outside.csv", "0.5,0.5,1.5\n");
  CHECK(flare_run({"infer", "--checkpoint", tmp / "flare.flw", "--params", "37,7,22,7,0.5,7,7", "--coords",
                   tmp / "outside.csv", "--out", tmp / "f.csv"})
            .code == 1);
  CHECK(flare_run(with_tiny({"train", "--data", tmp / "data", "--split", tmp / "split.json", "--method", "flare",
                             "--lambda", "0", "--out", tmp / "x.flw"}))
            .code == 2);
  CHECK(flare_run(with_tiny({"train", "--data", tmp / "data", "--split", tmp / "split.json", "--method", "mlp",
                             "--out", tmp / "x.flw"}))
            .code == 2);
  CHECK(snapshot(tmp.path / "data") == before);
}

TEST_CASE("eval of an exact model reports r2 = 1 and rmse = 0") {
  TempDir tmp("exact");
  // One network generates the targets and is also the single ensemble member.
  train::TrainedEnsemble ens;
  ens.arch.octaves = 1;
  ens.arch.hidden = {6};
  const auto net = nn::init_weights(ens.arch, 3);
  ens.W = net.flat;
  ens.config.arch = ens.arch;
  data::GenerateOptions o;
  o.count = 4;
  o.points_per_ring = 5;
  data::Dataset ds = data::generate_dataset(o);
  for (auto& s : ds.samples) s.targets = nn::forward(net, s.coords);
  ens.bounds = ds.bounds;
  ens.P = ds.samples[0].params;
  ens.alphas = Eigen::MatrixXd::Identity(1, 1);
  ens.final_losses = Eigen::VectorXd::Zero(1);
  ens.sample_ids = {ds.samples[0].id};
  io::save_dataset(tmp.path / "data", ds);
  io::save_checkpoint(tmp.path / "exact.flw", train::to_checkpoint(ens));
  data::Split split;
  split.train_ids = {0};
  split.test_ids = {1, 2, 3};
  io::save_split(tmp.path / "split.json", split);
  REQUIRE(flare_run({"eval", "--checkpoint", tmp / "exact.flw", "--data", tmp / "data", "--split",
                     tmp / "split.json", "--out", tmp / "m.csv"})
              .code == 0);
  const auto rows = lines_of(bytes_of(tmp / "m.csv"));
  REQUIRE(rows.size() == 4);
  CHECK(rows[1] == "flare,random,u_x,1,0,1,0");
  CHECK(rows[2] == "flare,random,u_y,1,0,1,0");
  CHECK(rows[3] == "flare,random,u_z,1,0,1,0");
}

TEST_CASE("train and eval reruns are byte-identical") {
  TempDir tmp("rerun");
  REQUIRE(flare_run({"generate", "--out", tmp / "data", "--count", "8", "--points", "4", "--seed", "3"}).code == 0);
  REQUIRE(flare_run({"split", "--data", tmp / "data", "--kind", "greedy", "--size", "5", "--out", tmp / "split.json"})
              .code == 0);
  REQUIRE(flare_run(with_tiny({"--threads", "2", "train", "--data", tmp / "data", "--split", tmp / "split.json",
                               "--seed", "9", "--out", tmp / "a.flw"}))
              .code == 0);
  REQUIRE(flare_run({"--threads", "1", "rerun", cli::manifest_path(tmp / "a.flw").string(), "--out", tmp / "b.flw"})
              .code == 0);
  CHECK(bytes_of(tmp / "a.flw") == bytes_of(tmp / "b.flw"));
  CHECK(bytes_of(tmp / "a.flw.json") == bytes_of(tmp / "b.flw.json"));
  CHECK(bytes_of(tmp / "a.flw.log.csv") == bytes_of(tmp / "b.flw.log.csv"));
  CHECK(bytes_of(cli::manifest_path(tmp / "a.flw")) == bytes_of(cli::manifest_path(tmp / "b.flw")));

  REQUIRE(flare_run({"eval", "--checkpoint", tmp / "a.flw", "--data", tmp / "data", "--split", tmp / "split.json",
                     "--out", tmp / "m1.csv"})
              .code == 0);
  REQUIRE(flare_run({"rerun", cli::manifest_path(tmp / "m1.csv").string(), "--out", tmp / "m2.csv"}).code == 0);
  CHECK(bytes_of(tmp / "m1.csv") == bytes_of(tmp / "m2.csv"));
}

TEST_CASE("sweep writes one row per size, method and component") {
  TempDir tmp("sweep");
  REQUIRE(flare_run({"generate", "--out", tmp / "data", "--count", "20", "--points", "3", "--seed", "4"}).code == 0);
  REQUIRE(flare_run(with_tiny({"sweep", "--data", tmp / "data", "--sizes", "20,40,80", "--out", tmp / "s.csv"}))
              .code == 0);
  const auto rows = lines_of(bytes_of(tmp / "s.csv"));
  CHECK(rows.front() == "size,method,component,r2,rmse,wr2,wrmse");
  REQUIRE(rows.size() == 1 + 3 * 3 * 3);
  // The 80/20 pool has 16 samples, so sizes scale to 4, 8 and 16.
  CHECK(rows[1].rfind("4,flare,u_x,", 0) == 0);
  CHECK(rows[4].rfind("4,lamp,u_x,", 0) == 0);
  CHECK(rows[7].rfind("4,nn,u_x,", 0) == 0);
  CHECK(rows[10].rfind("8,flare,", 0) == 0);
  CHECK(rows[19].rfind("16,flare,", 0) == 0);
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(std::count(rows[i].begin(), rows[i].end(), ',') == 6);
}

TEST_CASE("feasibility writes a model and a report") {
  TempDir tmp("feas");
  REQUIRE(flare_run({"generate", "--out", tmp / "data", "--count", "120", "--points", "2", "--seed", "6"}).code == 0);
  const Result r = flare_run({"feasibility", "--data", tmp / "data", "--seed", "1", "--out", tmp / "feas.flw"});
  REQUIRE(r.code == 0);
  const auto report = lines_of(bytes_of(tmp / "feas.flw.report.csv"));
  REQUIRE(report.size() == 8);
  CHECK(report[0] == "metric,value");
  std::map<std::string, double> values;
  for (std::size_t i = 1; i < report.size(); ++i) {
    const auto comma = report[i].find(',');
    values[report[i].substr(0, comma)] = std::stod(report[i].substr(comma + 1));
  }
  CHECK(values.at("train_size") == 96);
  CHECK(values.at("test_size") == 24);
  CHECK(values.at("auc") >= 0.0);
  CHECK(values.at("auc") <= 1.0);
  CHECK(values.at("nonzero_coefficients") <= 35);
  const auto ckpt = io::load_checkpoint(tmp / "feas.flw");
  CHECK(ckpt.meta.at("kind") == "feas");
  REQUIRE(flare_run({"rerun", cli::manifest_path(tmp / "feas.flw").string(), "--out", tmp / "again.flw"}).code == 0);
  CHECK(bytes_of(tmp / "feas.flw") == bytes_of(tmp / "again.flw"));
  CHECK(bytes_of(tmp / "feas.flw.report.csv") == bytes_of(tmp / "again.flw.report.csv"));
}
