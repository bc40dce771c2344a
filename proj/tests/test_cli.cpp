#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "daln/cli.hpp"
#include "daln/model.hpp"
#include "daln/rng.hpp"
#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;
using daln::cli::RunSpec;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

int count_lines(const fs::path& path) {
  std::ifstream in(path);
  int n = 0;
  for (std::string line; std::getline(in, line);) ++n;
  return n;
}

// Two epochs of five steps keeps a full artifact cycle under a second.
RunSpec quick_spec(const fs::path& out) {
  RunSpec spec;
  spec.config.epochs = 2;
  spec.config.steps_per_epoch = 5;
  spec.config.seed = 3;
  spec.out_dir = out.string();
  return spec;
}

int run_argv(const std::vector<std::string>& args) {
  std::vector<const char*> argv = {"daln"};
  for (const std::string& a : args) argv.push_back(a.c_str());
  return daln::cli::run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

TEST_CASE("train writes the four run artifacts") {
  const fs::path out = scratch("daln_cli_train");
  REQUIRE(daln::cli::cmd_train(quick_spec(out)) == 0);

  CHECK(fs::exists(out / "steps.csv"));
  CHECK(fs::exists(out / "metrics.jsonl"));
  CHECK(fs::exists(out / "checkpoint.json"));
  CHECK(fs::exists(out / "summary.json"));

  CHECK(count_lines(out / "steps.csv") == 11);  // header + 2 epochs x 5 steps
  CHECK(count_lines(out / "metrics.jsonl") == 2);

  const auto summary = nlohmann::json::parse(slurp(out / "summary.json"));
  CHECK(summary.at("schema") == 1);
  CHECK(summary.at("final_accuracy").is_number());
  CHECK(summary.at("best_accuracy").get<double>() >=
        summary.at("final_accuracy").get<double>() - 1e-15);
  CHECK(summary.at("final_mmd").get<double>() > 0.0);
  CHECK(summary.at("final_a_distance").is_number());
  CHECK(summary.at("wall_time_seconds").get<double>() > 0.0);
}

TEST_CASE("reruns are byte-identical except the recorded wall time") {
  const fs::path a = scratch("daln_cli_rerun_a");
  const fs::path b = scratch("daln_cli_rerun_b");
  REQUIRE(daln::cli::cmd_train(quick_spec(a)) == 0);
  REQUIRE(daln::cli::cmd_train(quick_spec(b)) == 0);

  CHECK(slurp(a / "steps.csv") == slurp(b / "steps.csv"));
  CHECK(slurp(a / "metrics.jsonl") == slurp(b / "metrics.jsonl"));
  CHECK(slurp(a / "checkpoint.json") == slurp(b / "checkpoint.json"));

  auto sa = nlohmann::json::parse(slurp(a / "summary.json"));
  auto sb = nlohmann::json::parse(slurp(b / "summary.json"));
  sa.erase("wall_time_seconds");
  sb.erase("wall_time_seconds");
  CHECK(sa == sb);
}

TEST_CASE("flag precedence: defaults, then config file, then flags") {
  const fs::path dir = scratch("daln_cli_precedence");
  const fs::path cfg = dir / "cfg.json";
  std::ofstream(cfg) << R"({"epochs": 1, "steps_per_epoch": 5, "seed": 9})";

  const fs::path out1 = dir / "from_file";
  REQUIRE(run_argv({"train", "--config", cfg.string(), "--out",
                    out1.string()}) == 0);
  CHECK(count_lines(out1 / "steps.csv") == 6);  // file's 1 epoch x 5 steps

  const fs::path out2 = dir / "flag_wins";
  REQUIRE(run_argv({"train", "--config", cfg.string(), "--epochs", "2",
                    "--out", out2.string()}) == 0);
  CHECK(count_lines(out2 / "steps.csv") == 11);  // flag's 2 epochs win
}

TEST_CASE("bad invocations exit with the config-error code") {
  CHECK(run_argv({}) == 2);                          // missing subcommand
  CHECK(run_argv({"train", "--bogus"}) == 2);        // unknown flag
  CHECK(run_argv({"train", "--mode", "warp"}) == 2); // unknown mode
  CHECK(run_argv({"train", "--dataset", "mnist"}) == 2);
  CHECK(run_argv({"train", "--config", "/no/such/file.json"}) == 2);

  RunSpec csv_spec = quick_spec(scratch("daln_cli_csv_missing"));
  csv_spec.dataset = "csv";  // no --source/--target given
  CHECK(daln::cli::cmd_train(csv_spec) == 2);
}

TEST_CASE("csv datasets train end to end") {
  const fs::path dir = scratch("daln_cli_csv");
  {
    std::ofstream src(dir / "src.csv");
    src << "# x,y,label\n";
    for (int i = 0; i < 8; ++i)
      src << 0.1 * i << ',' << (i % 2 ? 1.0 : -1.0) << ',' << i % 2 << '\n';
    std::ofstream tgt(dir / "tgt.csv");
    for (int i = 0; i < 8; ++i)
      tgt << 0.1 * i + 0.3 << ',' << (i % 2 ? 0.8 : -0.8) << '\n';
  }
  RunSpec spec = quick_spec(dir / "run");
  spec.dataset = "csv";
  spec.source_path = (dir / "src.csv").string();
  spec.target_path = (dir / "tgt.csv").string();
  spec.config.batch_size = 4;
  REQUIRE(daln::cli::cmd_train(spec) == 0);
  // unlabeled target: accuracy cannot be reported and stays at zero
  const auto summary =
      nlohmann::json::parse(slurp(dir / "run" / "summary.json"));
  CHECK(summary.at("final_accuracy").get<double>() == 0.0);
  CHECK(summary.at("final_mmd").get<double>() > 0.0);
}

TEST_CASE("sweep writes one row per value into sweep.csv") {
  const fs::path out = scratch("daln_cli_sweep");
  RunSpec base = quick_spec(out);
  REQUIRE(daln::cli::cmd_sweep("lambda", {0.5, 1.5}, base) == 0);

  CHECK(fs::exists(out / "lambda-0.5" / "summary.json"));
  CHECK(fs::exists(out / "lambda-1.5" / "summary.json"));
  const std::string csv = slurp(out / "sweep.csv");
  CHECK(csv.find("value,final_acc,best_acc\n") == 0);
  CHECK(count_lines(out / "sweep.csv") == 3);
}

TEST_CASE("sweep rejects empty value lists and propagates child failures") {
  RunSpec base = quick_spec(scratch("daln_cli_sweep_bad"));
  CHECK(daln::cli::cmd_sweep("lambda", {}, base) == 2);
  CHECK(daln::cli::cmd_sweep("alpha", {1.0}, base) == 2);

  RunSpec diverging = quick_spec(scratch("daln_cli_sweep_blow"));
  diverging.config.epochs = 1;
  diverging.config.steps_per_epoch = 0;  // auto: enough steps to overflow
  diverging.config.lr_classifier = 1e6;
  diverging.config.lr_extractor = 1e5;
  CHECK(daln::cli::cmd_sweep("lambda", {1.0}, diverging) == 3);
}

TEST_CASE("gradcheck passes clean and fails under the injected fault") {
  CHECK(daln::cli::cmd_gradcheck(false) == 0);
  CHECK(daln::cli::cmd_gradcheck(true) == 1);
  // the fault hook must be reset afterwards
  CHECK(daln::cli::cmd_gradcheck(false) == 0);
}

TEST_CASE("boundary export covers the grid and validates its input") {
  const fs::path out = scratch("daln_cli_boundary");
  REQUIRE(daln::cli::cmd_train(quick_spec(out)) == 0);

  const fs::path csv = out / "boundary.csv";
  REQUIRE(daln::cli::cmd_export_boundary((out / "checkpoint.json").string(),
                                         -1.5, 2.5, -1.0, 1.5, 20,
                                         csv.string()) == 0);
  CHECK(count_lines(csv) == 401);  // header + 20x20 grid

  std::ifstream in(csv);
  std::string line;
  std::getline(in, line);
  CHECK(line == "x,y,predicted_class,p_max");
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::string x, y, cls, p;
    std::getline(row, x, ',');
    std::getline(row, y, ',');
    std::getline(row, cls, ',');
    std::getline(row, p, ',');
    CHECK((cls == "0" || cls == "1"));
    const double p_max = std::stod(p);
    CHECK(p_max >= 0.5);  // two classes: the winner holds at least half
    CHECK(p_max <= 1.0);
  }

  // a model that does not take 2-D points cannot be exported
  daln::RngStream rng(11);
  daln::Model wide;
  wide.extractor = daln::make_extractor({3, 4}, daln::Activation::kTanh, rng);
  wide.classifier = daln::make_classifier(2, 4, rng);
  const fs::path wide_ckpt = out / "wide.json";
  daln::save_checkpoint(wide, wide_ckpt.string());
  CHECK(daln::cli::cmd_export_boundary(wide_ckpt.string(), 0, 1, 0, 1, 10,
                                       (out / "nope.csv").string()) == 2);
  CHECK(daln::cli::cmd_export_boundary("/no/such/checkpoint.json", 0, 1, 0, 1,
                                       10, (out / "nope2.csv").string()) == 2);
}
