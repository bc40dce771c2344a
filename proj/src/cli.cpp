#include "daln/cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "daln/autodiff.hpp"
#include "daln/data.hpp"
#include "daln/errors.hpp"
#include "daln/gradcheck.hpp"
#include "daln/metrics.hpp"
#include "daln/model.hpp"

namespace daln::cli {
namespace {

namespace fs = std::filesystem;

// 17 significant digits: the decimal text round-trips to the same bits, so
// reruns with the same seed stay byte-identical.
std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

TrainMode parse_mode(const std::string& s) {
  if (s == "daln") return TrainMode::kDaln;
  if (s == "dann") return TrainMode::kDann;
  if (s == "dann_nwd" || s == "dann-nwd") return TrainMode::kDannNwd;
  if (s == "source_only" || s == "source-only") return TrainMode::kSourceOnly;
  throw ValueError("unknown mode '" + s +
                   "' (expected daln, dann, dann_nwd or source_only)");
}

Activation parse_activation(const std::string& s) {
  if (s == "tanh") return Activation::kTanh;
  if (s == "relu") return Activation::kRelu;
  throw ValueError("unknown activation '" + s + "' (expected tanh or relu)");
}

void build_datasets(const RunSpec& spec, Dataset* source, Dataset* target) {
  if (spec.dataset == "moons" || spec.dataset == "moons-imbalanced") {
    *source = make_moons(300, spec.noise, spec.config.seed);
    *target = rotate(*source, spec.rotation_degrees);
    if (spec.dataset == "moons-imbalanced")
      *target = subsample_class(*target, 0, 38, spec.config.seed);
    target->domain_tag = DomainTag::kTarget;
  } else if (spec.dataset == "csv") {
    if (spec.source_path.empty() || spec.target_path.empty())
      throw ValueError("dataset csv needs --source and --target paths");
    *source = load_csv(spec.source_path, /*has_labels=*/true, spec.csv_classes);
    *target = load_csv(spec.target_path, spec.target_labeled, spec.csv_classes);
    source->domain_tag = DomainTag::kSource;
    target->domain_tag = DomainTag::kTarget;
  } else {
    throw ValueError("unknown dataset '" + spec.dataset +
                     "' (expected moons, moons-imbalanced or csv)");
  }
}

void write_steps_csv(const fs::path& path, const TrainLog& log) {
  std::ofstream out(path);
  if (!out) throw ValueError("cannot write " + path.string());
  out << "step,lr,grl_coeff,l_cls,l_nwd\n";
  for (const StepRecord& s : log.steps)
    out << s.step << ',' << fmt17(s.lr) << ',' << fmt17(s.grl_coeff) << ','
        << fmt17(s.l_cls) << ',' << fmt17(s.l_nwd) << '\n';
}

void write_metrics_jsonl(const fs::path& path, const TrainLog& log) {
  std::ofstream out(path);
  if (!out) throw ValueError("cannot write " + path.string());
  for (const MetricsReport& r : log.epochs) out << to_json_line(r) << '\n';
}

void write_summary(const fs::path& path, const TrainLog& log,
                   double wall_seconds) {
  double final_acc = 0.0, best_acc = 0.0, final_mmd = 0.0, final_ad = 0.0;
  if (!log.epochs.empty()) {
    for (const MetricsReport& r : log.epochs)
      best_acc = std::max(best_acc, r.accuracy);
    final_acc = log.epochs.back().accuracy;
    final_mmd = log.epochs.back().mmd;
    final_ad = log.epochs.back().a_distance;
  }
  nlohmann::ordered_json j;
  j["schema"] = 1;
  j["final_accuracy"] = final_acc;
  j["best_accuracy"] = best_acc;
  j["final_mmd"] = final_mmd;
  j["final_a_distance"] = final_ad;
  j["wall_time_seconds"] = wall_seconds;
  std::ofstream out(path);
  if (!out) throw ValueError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

// Config-file keys mirror the flag names; every TrainConfig field is also
// reachable here even when it has no dedicated flag.
void apply_config_file(const std::string& path, RunSpec* spec,
                       std::string* mode_name, std::string* activation_name) {
  std::ifstream in(path);
  if (!in) throw ValueError("cannot read config file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValueError("config file " + path + ": " + e.what());
  }
  if (!j.is_object()) throw ValueError("config file must be a JSON object");
  TrainConfig& c = spec->config;
  for (const auto& [key, val] : j.items()) {
    try {
      if (key == "mode") *mode_name = val.get<std::string>();
      else if (key == "dataset") spec->dataset = val.get<std::string>();
      else if (key == "source") spec->source_path = val.get<std::string>();
      else if (key == "target") spec->target_path = val.get<std::string>();
      else if (key == "noise") spec->noise = val.get<double>();
      else if (key == "rotation_degrees") spec->rotation_degrees = val.get<double>();
      else if (key == "out") spec->out_dir = val.get<std::string>();
      else if (key == "classes") spec->csv_classes = val.get<int>();
      else if (key == "target_labeled") spec->target_labeled = val.get<bool>();
      else if (key == "epochs") c.epochs = val.get<int>();
      else if (key == "steps_per_epoch") c.steps_per_epoch = val.get<int>();
      else if (key == "batch_size") c.batch_size = val.get<int>();
      else if (key == "momentum") c.momentum = val.get<double>();
      else if (key == "weight_decay") c.weight_decay = val.get<double>();
      else if (key == "lr") {
        c.lr_classifier = val.get<double>();
        c.lr_extractor = c.lr_classifier / 10.0;
      } else if (key == "lr_classifier") c.lr_classifier = val.get<double>();
      else if (key == "lr_extractor") c.lr_extractor = val.get<double>();
      else if (key == "lambda") c.lambda = val.get<double>();
      else if (key == "gamma") c.gamma = val.get<double>();
      else if (key == "grl_gamma") c.grl_gamma = val.get<double>();
      else if (key == "lr_alpha") c.lr_alpha = val.get<double>();
      else if (key == "lr_beta") c.lr_beta = val.get<double>();
      else if (key == "seed") c.seed = val.get<uint64_t>();
      else if (key == "hidden_dims") c.hidden_dims = val.get<std::vector<int>>();
      else if (key == "activation") *activation_name = val.get<std::string>();
      else throw ValueError("config file: unknown key '" + key + "'");
    } catch (const nlohmann::json::exception& e) {
      throw ValueError("config file key '" + key + "': " + e.what());
    }
  }
}

// Flag storage shared by train and sweep. Only the parsed subcommand's
// values are read, and only where count() shows the flag was given.
struct FlagVars {
  std::string config_path;
  std::string mode;
  std::string dataset;
  std::string source;
  std::string target;
  int epochs = 0;
  int batch_size = 0;
  double lambda = 0.0;
  double gamma = 0.0;
  uint64_t seed = 0;
  double lr = 0.0;
  double noise = 0.0;
  double rotation = 0.0;
  std::string out;
  int classes = 0;
  bool target_labeled = false;
};

void add_run_flags(CLI::App* cmd, FlagVars* v) {
  cmd->add_option("--config", v->config_path,
                  "JSON config file; precedence defaults < file < flags");
  cmd->add_option("--mode", v->mode, "daln | dann | dann_nwd | source_only");
  cmd->add_option("--dataset", v->dataset, "moons | moons-imbalanced | csv")
      ->check(CLI::IsMember({"moons", "moons-imbalanced", "csv"}));
  cmd->add_option("--source", v->source, "labeled source csv (dataset csv)");
  cmd->add_option("--target", v->target, "target csv (dataset csv)");
  cmd->add_option("--epochs", v->epochs)->check(CLI::PositiveNumber);
  cmd->add_option("--batch-size", v->batch_size)->check(CLI::PositiveNumber);
  cmd->add_option("--lambda", v->lambda, "adversarial weight");
  cmd->add_option("--gamma", v->gamma, "regularizer weight (dann_nwd)");
  cmd->add_option("--seed", v->seed);
  cmd->add_option("--lr", v->lr,
                  "classifier learning rate; the extractor uses a tenth");
  cmd->add_option("--noise", v->noise, "moons jitter standard deviation");
  cmd->add_option("--rotation-degrees", v->rotation, "moons target rotation");
  cmd->add_option("--out", v->out, "output directory");
  cmd->add_option("--classes", v->classes, "class count for csv datasets")
      ->check(CLI::PositiveNumber);
  cmd->add_flag("--target-labeled", v->target_labeled,
                "csv target has a label column (used for reporting only)");
}

RunSpec resolve_runspec(const CLI::App* cmd, const FlagVars& v) {
  RunSpec spec;
  std::string mode_name = "daln";
  std::string activation_name = "tanh";
  if (cmd->count("--config"))
    apply_config_file(v.config_path, &spec, &mode_name, &activation_name);
  if (cmd->count("--mode")) mode_name = v.mode;
  if (cmd->count("--dataset")) spec.dataset = v.dataset;
  if (cmd->count("--source")) spec.source_path = v.source;
  if (cmd->count("--target")) spec.target_path = v.target;
  if (cmd->count("--epochs")) spec.config.epochs = v.epochs;
  if (cmd->count("--batch-size")) spec.config.batch_size = v.batch_size;
  if (cmd->count("--lambda")) spec.config.lambda = v.lambda;
  if (cmd->count("--gamma")) spec.config.gamma = v.gamma;
  if (cmd->count("--seed")) spec.config.seed = v.seed;
  if (cmd->count("--lr")) {
    spec.config.lr_classifier = v.lr;
    spec.config.lr_extractor = v.lr / 10.0;
  }
  if (cmd->count("--noise")) spec.noise = v.noise;
  if (cmd->count("--rotation-degrees")) spec.rotation_degrees = v.rotation;
  if (cmd->count("--out")) spec.out_dir = v.out;
  if (cmd->count("--classes")) spec.csv_classes = v.classes;
  if (cmd->count("--target-labeled")) spec.target_labeled = v.target_labeled;
  spec.config.mode = parse_mode(mode_name);
  spec.config.activation = parse_activation(activation_name);
  return spec;
}

int sweep_worker_cap() {
  int cap = static_cast<int>(std::thread::hardware_concurrency());
  if (cap < 1) cap = 1;
  if (const char* env = std::getenv("DALN_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) cap = v;
  }
  return cap;
}

}  // namespace

int cmd_train(const RunSpec& spec) {
  try {
    validate_config(spec.config);
    Dataset source, target;
    build_datasets(spec, &source, &target);
    fs::create_directories(spec.out_dir);
    const fs::path out(spec.out_dir);

    const auto t0 = std::chrono::steady_clock::now();
    TrainResult result = train(spec.config, source, target);
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();

    write_steps_csv(out / "steps.csv", result.log);
    write_metrics_jsonl(out / "metrics.jsonl", result.log);
    save_checkpoint(result.model, (out / "checkpoint.json").string());
    write_summary(out / "summary.json", result.log, wall);
    return kOk;
  } catch (const NumericError& e) {
    std::cerr << "numeric abort: " << e.what() << '\n';
    return kNumericError;
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  }
}

int cmd_sweep(const std::string& param, const std::vector<double>& values,
              const RunSpec& base) {
  if (values.empty()) {
    std::cerr << "config error: sweep needs at least one value\n";
    return kConfigError;
  }
  if (param != "lambda" && param != "gamma") {
    std::cerr << "config error: sweep param must be lambda or gamma\n";
    return kConfigError;
  }

  std::vector<RunSpec> children;
  children.reserve(values.size());
  for (double v : values) {
    RunSpec child = base;
    if (param == "lambda")
      child.config.lambda = v;
    else
      child.config.gamma = v;
    child.out_dir = (fs::path(base.out_dir) / (param + "-" + fmt17(v))).string();
    children.push_back(std::move(child));
  }

  std::error_code ec;
  fs::create_directories(base.out_dir, ec);
  if (ec) {
    std::cerr << "config error: cannot create " << base.out_dir << '\n';
    return kConfigError;
  }

  std::vector<int> codes(children.size(), kOk);
  std::atomic<size_t> cursor{0};
  auto drain = [&] {
    for (size_t i = cursor.fetch_add(1); i < children.size();
         i = cursor.fetch_add(1))
      codes[i] = cmd_train(children[i]);
  };
  const int workers =
      std::min<int>(sweep_worker_cap(), static_cast<int>(children.size()));
  std::vector<std::thread> pool;
  for (int t = 1; t < workers; ++t) pool.emplace_back(drain);
  drain();
  for (std::thread& th : pool) th.join();

  std::ofstream csv(fs::path(base.out_dir) / "sweep.csv");
  if (!csv) {
    std::cerr << "config error: cannot write sweep.csv\n";
    return kConfigError;
  }
  csv << "value,final_acc,best_acc\n";
  int worst = kOk;
  for (size_t i = 0; i < children.size(); ++i) {
    worst = std::max(worst, codes[i]);
    if (codes[i] != kOk) continue;  // failed child: no summary to report
    std::ifstream in(fs::path(children[i].out_dir) / "summary.json");
    nlohmann::json j;
    in >> j;
    csv << fmt17(values[i]) << ',' << fmt17(j["final_accuracy"].get<double>())
        << ',' << fmt17(j["best_accuracy"].get<double>()) << '\n';
  }
  return worst;
}

int cmd_gradcheck(bool perturb_nuclear) {
  if (perturb_nuclear) ad::set_nuclear_grad_perturbation(1e-3);
  std::vector<CheckOutcome> outcomes = run_gradchecks();
  ad::set_nuclear_grad_perturbation(0.0);

  size_t width = 0;
  for (const CheckOutcome& o : outcomes) width = std::max(width, o.name.size());
  std::vector<std::string> failing;
  for (const CheckOutcome& o : outcomes) {
    std::printf("%-*s  %s  %s\n", static_cast<int>(width), o.name.c_str(),
                o.passed ? "pass" : "FAIL", o.detail.c_str());
    if (!o.passed) failing.push_back(o.name);
  }
  if (failing.empty()) {
    std::printf("all %zu checks passed\n", outcomes.size());
    return kOk;
  }
  std::string names;
  for (const std::string& n : failing) {
    if (!names.empty()) names += ", ";
    names += n;
  }
  std::fprintf(stderr, "failing checks: %s\n", names.c_str());
  return kCheckFailure;
}

int cmd_export_boundary(const std::string& checkpoint_path, double x_lo,
                        double x_hi, double y_lo, double y_hi, int resolution,
                        const std::string& out_path) {
  try {
    Model m = load_checkpoint(checkpoint_path);
    if (m.extractor.in_dim() != 2)
      throw ValueError("boundary export needs a 2-D input model, got d_in=" +
                       std::to_string(m.extractor.in_dim()));
    Matrix grid = boundary_grid(x_lo, x_hi, y_lo, y_hi, resolution);
    Matrix preds = classify_values(m, grid);

    const fs::path parent = fs::path(out_path).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
    std::ofstream out(out_path);
    if (!out) throw ValueError("cannot write " + out_path);
    out << "x,y,predicted_class,p_max\n";
    for (int i = 0; i < grid.rows(); ++i) {
      int cls = 0;
      double p_max = preds(i, 0);
      for (int j = 1; j < preds.cols(); ++j)
        if (preds(i, j) > p_max) {
          p_max = preds(i, j);
          cls = j;
        }
      out << fmt17(grid(i, 0)) << ',' << fmt17(grid(i, 1)) << ',' << cls << ','
          << fmt17(p_max) << '\n';
    }
    return kOk;
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  }
}

int run(int argc, const char* const* argv) {
  CLI::App app{"adversarial domain adaptation with a nuclear-norm critic"};
  app.require_subcommand(1);

  FlagVars train_vars;
  CLI::App* train_cmd =
      app.add_subcommand("train", "train one model and write run artifacts");
  add_run_flags(train_cmd, &train_vars);

  FlagVars sweep_vars;
  std::string sweep_param;
  std::vector<double> sweep_values;
  CLI::App* sweep_cmd = app.add_subcommand(
      "sweep", "one training run per value of lambda or gamma");
  add_run_flags(sweep_cmd, &sweep_vars);
  sweep_cmd->add_option("--param", sweep_param, "lambda | gamma")
      ->required()
      ->check(CLI::IsMember({"lambda", "gamma"}));
  sweep_cmd->add_option("--values", sweep_values, "comma-separated values")
      ->required()
      ->delimiter(',');

  bool perturb_nuclear = false;
  CLI::App* grad_cmd = app.add_subcommand(
      "gradcheck", "run all verification suites and print a pass/fail table");
  grad_cmd->add_flag(
      "--perturb-nuclear", perturb_nuclear,
      "corrupt the nuclear-norm backward rule to prove the checks catch it");

  std::string ckpt_path;
  std::string boundary_out = "boundary.csv";
  double x_lo = -1.5, x_hi = 2.5, y_lo = -1.0, y_hi = 1.5;
  int resolution = 100;
  CLI::App* export_cmd = app.add_subcommand(
      "export-boundary", "classify a grid over the plane from a checkpoint");
  export_cmd->add_option("--checkpoint", ckpt_path, "model checkpoint")
      ->required();
  export_cmd->add_option("--out", boundary_out, "output csv path");
  export_cmd->add_option("--x-lo", x_lo);
  export_cmd->add_option("--x-hi", x_hi);
  export_cmd->add_option("--y-lo", y_lo);
  export_cmd->add_option("--y-hi", y_hi);
  export_cmd->add_option("--resolution", resolution)
      ->check(CLI::Range(2, 4096));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);  // prints help or the parse error
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(resolve_runspec(train_cmd, train_vars));
    if (sweep_cmd->parsed())
      return cmd_sweep(sweep_param, sweep_values,
                       resolve_runspec(sweep_cmd, sweep_vars));
    if (grad_cmd->parsed()) return cmd_gradcheck(perturb_nuclear);
    if (export_cmd->parsed())
      return cmd_export_boundary(ckpt_path, x_lo, x_hi, y_lo, y_hi, resolution,
                                 boundary_out);
  } catch (const NumericError& e) {
    std::cerr << "numeric abort: " << e.what() << '\n';
    return kNumericError;
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  }
  return kConfigError;
}

}  // namespace daln::cli
