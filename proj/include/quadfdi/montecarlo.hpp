#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "quadfdi/analysis.hpp"
#include "quadfdi/config.hpp"
#include "quadfdi/simulation.hpp"

namespace quadfdi {

/// Per-step sum, min and max of the paired position deviation across runs.
/// Values are held in integer nanometres so merging is exact and the result
/// does not depend on the order runs are added in.
class DeviationAccumulator {
 public:
  DeviationAccumulator() = default;
  explicit DeviationAccumulator(std::size_t steps);

  void add(std::span<const double> deviation);
  void merge(const DeviationAccumulator& other);

  std::size_t steps() const { return sum_nm_.size(); }
  std::int64_t runs() const { return runs_; }
  double mean(std::size_t k) const;
  double min(std::size_t k) const;
  double max(std::size_t k) const;

  bool operator==(const DeviationAccumulator&) const = default;

 private:
  std::int64_t runs_ = 0;
  std::vector<std::int64_t> sum_nm_;
  std::vector<std::int64_t> min_nm_;
  std::vector<std::int64_t> max_nm_;
};

struct RunFailure {
  std::uint64_t seed = 0;
  bool attacked = false;
  std::optional<std::int64_t> step;  // set for non-finite plant states
  std::string message;

  bool operator==(const RunFailure&) const = default;
};

struct PairedRun {
  RunRecord attacked;
  RunRecord nominal;
};

struct MonteCarloOptions {
  int runs = 1;
  std::uint64_t base_seed = 1;
  bool stream = true;  // false keeps every RunRecord in memory
  int threads = 0;     // 0: hardware concurrency
  std::function<void(int done, int total)> progress;
};

struct MonteCarloResult {
  int runs = 0;
  std::uint64_t base_seed = 0;
  double dt = 1e-3;
  std::vector<RunFailure> failures;  // sorted by seed
  AlarmAccumulator alarms;
  DeviationAccumulator deviation;
  std::vector<PairedRun> records;  // non-stream mode only, ordered by seed

  int completed() const { return runs - static_cast<int>(failures.size()); }
};

/// Paired attacked/nominal runs with seed base_seed + i. A pair that throws
/// is recorded in `failures` and left out of the aggregates. `cfg` must
/// already have fixed detector thresholds (see with_resolved_detector).
MonteCarloResult run_monte_carlo(const ScenarioConfig& cfg, const MonteCarloOptions& opt);

/// One streamed pair folded into fresh accumulators; the unit of work
/// run_monte_carlo distributes.
struct PairSummary {
  AlarmAccumulator alarms;
  DeviationAccumulator deviation;
};
PairSummary run_pair_streamed(const ScenarioConfig& cfg, std::uint64_t seed);

}  // namespace quadfdi
