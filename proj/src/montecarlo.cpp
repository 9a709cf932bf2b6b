#include "quadfdi/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <thread>

namespace quadfdi {

namespace {

constexpr double kNanometresPerMetre = 1e9;

std::int64_t to_nm(double metres) {
  return static_cast<std::int64_t>(std::llround(metres * kNanometresPerMetre));
}

}  // namespace

DeviationAccumulator::DeviationAccumulator(std::size_t steps)
    : sum_nm_(steps, 0),
      min_nm_(steps, std::numeric_limits<std::int64_t>::max()),
      max_nm_(steps, 0) {}

void DeviationAccumulator::add(std::span<const double> deviation) {
  if (deviation.size() != steps()) {
    throw MismatchedRuns("deviation series has " + std::to_string(deviation.size()) +
                         " steps, expected " + std::to_string(steps()));
  }
  for (std::size_t k = 0; k < deviation.size(); ++k) {
    const std::int64_t d = to_nm(deviation[k]);
    sum_nm_[k] += d;
    min_nm_[k] = std::min(min_nm_[k], d);
    max_nm_[k] = std::max(max_nm_[k], d);
  }
  ++runs_;
}

void DeviationAccumulator::merge(const DeviationAccumulator& other) {
  if (other.runs_ == 0) return;
  if (runs_ == 0 && steps() == 0) {
    *this = other;
    return;
  }
  if (other.steps() != steps()) {
    throw MismatchedRuns("deviation accumulators cover different horizons");
  }
  for (std::size_t k = 0; k < steps(); ++k) {
    sum_nm_[k] += other.sum_nm_[k];
    min_nm_[k] = std::min(min_nm_[k], other.min_nm_[k]);
    max_nm_[k] = std::max(max_nm_[k], other.max_nm_[k]);
  }
  runs_ += other.runs_;
}

double DeviationAccumulator::mean(std::size_t k) const {
  if (runs_ == 0) return std::numeric_limits<double>::quiet_NaN();
  return static_cast<double>(sum_nm_.at(k)) / kNanometresPerMetre / static_cast<double>(runs_);
}

double DeviationAccumulator::min(std::size_t k) const {
  if (runs_ == 0) return std::numeric_limits<double>::quiet_NaN();
  return static_cast<double>(min_nm_.at(k)) / kNanometresPerMetre;
}

double DeviationAccumulator::max(std::size_t k) const {
  if (runs_ == 0) return std::numeric_limits<double>::quiet_NaN();
  return static_cast<double>(max_nm_.at(k)) / kNanometresPerMetre;
}

namespace {

struct PairTrace {
  std::vector<Verdict> nominal;
  std::vector<Verdict> attacked;
  std::vector<double> deviation;
};

// One shared warm-up. Nominal first, keeping only positions; the attacked run is then compared
// step by step, so neither full record is ever held.
PairTrace trace_pair(const ScenarioConfig& cfg, std::uint64_t seed, bool& attacked_phase) {
  const auto n = static_cast<std::size_t>(cfg.horizon_steps());
  PairTrace t;
  t.nominal.reserve(n);
  t.attacked.reserve(n);
  t.deviation.reserve(n);
  std::vector<Vec3> positions;
  positions.reserve(n);

  attacked_phase = false;
  const WarmStart warm = warm_start(cfg, seed);
  simulate_from(cfg, warm, false, [&](const StepRecord& r) {
    positions.push_back(r.state.segment<3>(StateVector::kPosition));
    t.nominal.push_back(r.verdict);
  });
  attacked_phase = true;
  simulate_from(cfg, warm, true, [&](const StepRecord& r) {
    const auto k = static_cast<std::size_t>(r.step);
    t.deviation.push_back((r.state.segment<3>(StateVector::kPosition) - positions[k]).norm());
    t.attacked.push_back(r.verdict);
  });
  return t;
}

RunFailure failure_from(std::uint64_t seed, bool attacked, const std::exception& e) {
  RunFailure f;
  f.seed = seed;
  f.attacked = attacked;
  f.message = e.what();
  if (const auto* nf = dynamic_cast<const NonFiniteState*>(&e)) f.step = nf->step();
  return f;
}

}  // namespace

PairSummary run_pair_streamed(const ScenarioConfig& cfg, std::uint64_t seed) {
  bool attacked = false;
  const PairTrace t = trace_pair(cfg, seed, attacked);
  PairSummary s{AlarmAccumulator(t.deviation.size()), DeviationAccumulator(t.deviation.size())};
  s.alarms.add_nominal(t.nominal);
  s.alarms.add_attacked(t.attacked);
  s.deviation.add(t.deviation);
  return s;
}

MonteCarloResult run_monte_carlo(const ScenarioConfig& cfg, const MonteCarloOptions& opt) {
  if (opt.runs < 1) throw ValidationError("runs", "must be at least 1");
  cfg.validate();
  if (cfg.detector.mode == DetectorMode::kCalibrate) {
    throw ValidationError("detector.mode",
                          "thresholds must be resolved (with_resolved_detector) before simulating");
  }

  const auto steps = static_cast<std::size_t>(cfg.horizon_steps());
  int threads = opt.threads > 0 ? opt.threads
                                : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = std::min(threads, opt.runs);

  struct Worker {
    AlarmAccumulator alarms;
    DeviationAccumulator deviation;
    std::vector<RunFailure> failures;
    std::vector<std::pair<int, PairedRun>> records;
  };
  std::vector<Worker> workers(static_cast<std::size_t>(threads));
  for (Worker& w : workers) {
    w.alarms = AlarmAccumulator(steps);
    w.deviation = DeviationAccumulator(steps);
  }

  std::atomic<int> next{0};
  std::atomic<int> done{0};
  std::mutex progress_mutex;

  auto work = [&](Worker& w) {
    for (int i = next.fetch_add(1); i < opt.runs; i = next.fetch_add(1)) {
      const std::uint64_t seed = opt.base_seed + static_cast<std::uint64_t>(i);
      bool attacked = false;
      try {
        if (opt.stream) {
          const PairTrace t = trace_pair(cfg, seed, attacked);
          w.alarms.add_nominal(t.nominal);
          w.alarms.add_attacked(t.attacked);
          w.deviation.add(t.deviation);
        } else {
          PairedRun pr;
          pr.nominal = run_scenario(cfg, seed, false);
          attacked = true;
          pr.attacked = run_scenario(cfg, seed, true);
          const DeviationSeries d = deviation_series(pr.attacked, pr.nominal);
          w.alarms.add_nominal(verdicts_of(pr.nominal));
          w.alarms.add_attacked(verdicts_of(pr.attacked));
          w.deviation.add(d.deviation);
          w.records.emplace_back(i, std::move(pr));
        }
      } catch (const Error& e) {
        w.failures.push_back(failure_from(seed, attacked, e));
      }
      const int finished = done.fetch_add(1) + 1;
      if (opt.progress) {
        std::lock_guard lock(progress_mutex);
        opt.progress(finished, opt.runs);
      }
    }
  };

  if (threads == 1) {
    work(workers.front());
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers.size());
    for (Worker& w : workers) pool.emplace_back([&work, &w] { work(w); });
  }

  MonteCarloResult out;
  out.runs = opt.runs;
  out.base_seed = opt.base_seed;
  out.dt = cfg.dt();
  out.alarms = AlarmAccumulator(steps);
  out.deviation = DeviationAccumulator(steps);
  std::vector<std::pair<int, PairedRun>> records;
  for (Worker& w : workers) {
    out.alarms.merge(w.alarms);
    out.deviation.merge(w.deviation);
    out.failures.insert(out.failures.end(), w.failures.begin(), w.failures.end());
    for (auto& r : w.records) records.push_back(std::move(r));
  }
  std::sort(out.failures.begin(), out.failures.end(),
            [](const RunFailure& a, const RunFailure& b) { return a.seed < b.seed; });
  std::sort(records.begin(), records.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  out.records.reserve(records.size());
  for (auto& r : records) out.records.push_back(std::move(r.second));
  return out;
}

}  // namespace quadfdi
