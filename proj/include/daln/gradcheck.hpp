#pragma once

#include <string>
#include <vector>

namespace daln {

/// One verification suite's outcome: a stable name, a verdict, and a short
/// human-readable detail (worst error observed or violation count).
struct CheckOutcome {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Runs every gradient / linear-algebra / bound verification suite with
/// fixed seeds. Deterministic: repeated calls return identical outcomes.
std::vector<CheckOutcome> run_gradchecks();

}  // namespace daln
