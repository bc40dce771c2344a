#pragma once

#include <string>
#include <vector>

#include "daln/trainer.hpp"

namespace daln::cli {

/// Exit codes shared by every subcommand.
enum ExitCode : int {
  kOk = 0,
  kCheckFailure = 1,   // gradcheck found a failing suite
  kConfigError = 2,    // bad flags, bad config file, unusable inputs
  kNumericError = 3,   // training aborted on a non-finite value
};

/// Everything a training run needs: the dataset recipe, the resolved
/// training configuration, and where to write artifacts.
struct RunSpec {
  std::string dataset = "moons";  // moons | moons-imbalanced | csv
  std::string source_path;        // csv only
  std::string target_path;        // csv only
  double noise = 0.1;
  double rotation_degrees = 30.0;
  int csv_classes = 2;          // class count for csv datasets
  bool target_labeled = false;  // csv target carries labels (reporting only)
  TrainConfig config;
  std::string out_dir = "runs/out";
};

/// Trains one model and writes steps.csv, metrics.jsonl, checkpoint.json and
/// summary.json into the output directory.
int cmd_train(const RunSpec& spec);

/// One training run per value of the swept parameter ("lambda" or "gamma"),
/// in parallel, each in its own subdirectory; writes sweep.csv. Returns the
/// worst child exit code.
int cmd_sweep(const std::string& param, const std::vector<double>& values,
              const RunSpec& base);

/// Runs all verification suites and prints a pass/fail table.
/// perturb_nuclear deliberately corrupts the nuclear-norm backward rule so
/// the checker can prove it detects faults.
int cmd_gradcheck(bool perturb_nuclear);

/// Loads a checkpoint and classifies a regular grid over the plane, writing
/// x,y,predicted_class,p_max rows.
int cmd_export_boundary(const std::string& checkpoint_path, double x_lo,
                        double x_hi, double y_lo, double y_hi, int resolution,
                        const std::string& out_path);

/// Full argv entry point: parses flags and dispatches to a subcommand.
int run(int argc, const char* const* argv);

}  // namespace daln::cli
