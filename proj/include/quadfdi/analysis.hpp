#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "quadfdi/config.hpp"
#include "quadfdi/errors.hpp"
#include "quadfdi/simulation.hpp"
#include "quadfdi/types.hpp"

namespace quadfdi {

// ---------------------------------------------------------------------------
// Stealthiness bound and effectiveness time

struct StealthBoundResult {
  double b_epsilon = 0.0;
  double epsilon = 0.0;
  // inputs, echoed
  double kappa = 1.0;
  double lambda = 1.0;  // per step
  double lh = 0.0;
  double lg = 0.0;
  double lfc = 0.0;
  double dt = 0.0;
  int gps_divisor = 1;
  double imu_information = 0.0;  // lambda_max of the inverse IMU covariance
  double gps_information = 0.0;  // lambda_max of the inverse GPS covariance
  double c_norm = 0.0;
};

/// KL bound on the attacked-vs-nominal observation sequences for a ramp of
/// slope `c`, with epsilon = sqrt(1 - exp(-b)). `lambda` is the per-step
/// contraction factor. Throws DivergentBound if lambda <= 1 and
/// SingularCovariance if either covariance is not positive definite.
StealthBoundResult stealth_bound(double kappa, double lambda, double lh, double lg, double lfc,
                                 double dt, int gps_divisor,
                                 const Eigen::Ref<const Eigen::MatrixXd>& imu_covariance,
                                 const Eigen::Ref<const Eigen::MatrixXd>& gps_covariance,
                                 const Vec3& c);

/// Smallest step k with ||C|| t_{k+1} - kappa ||C|| (1 + (lg + lfc) dt) >= alpha.
std::int64_t min_effective_step(double alpha, double c_norm, double kappa, double lg, double lfc,
                                double dt);

/// Same threshold with ||C|| placed inside the parenthesis, as it is
/// sometimes printed: kappa (1 + ||C|| (lg + lfc) dt).
std::int64_t min_effective_step_printed(double alpha, double c_norm, double kappa, double lg,
                                        double lfc, double dt);

/// Lower bound on the deviation at step k given the initial fake-state gap.
double deviation_lower_bound(std::int64_t k, double c_norm, double dt, double kappa,
                             double initial_gap);

// ---------------------------------------------------------------------------
// Paired-run deviation

struct DeviationSeries {
  std::vector<double> deviation;                    // ||p^a_k - p_k||
  std::vector<std::optional<std::int64_t>> first_exceeding;  // one per requested alpha
};

/// Throws MismatchedRuns unless both records come from the same seed and
/// config and have the same length.
DeviationSeries deviation_series(const RunRecord& attacked, const RunRecord& nominal,
                                 std::span<const double> alphas = {});

// ---------------------------------------------------------------------------
// Incremental exponential stability

struct IesFit {
  double kappa = 1.0;
  double lambda = 1.0;       // per unit of GapTrace::steps
  double r_squared = 0.0;    // of the envelope regression
  double horizon = 0.0;      // same unit
  int pairs = 0;
};

class NoDecay : public Error {
 public:
  explicit NoDecay(const IesFit& fit);
  IesFit fit;
};

/// Gap between two trajectories started from perturbed initial conditions
/// under identical inputs. `gaps[i]` is sampled at `steps[i]`, which are
/// simulation step indices for closed-loop traces.
struct GapTrace {
  double initial_gap = 0.0;
  std::vector<double> steps;
  std::vector<double> gaps;
};

/// Fits log(gap/initial_gap) <= log kappa - t log lambda on the upper envelope
/// across traces, then lifts the intercept so the line dominates every
/// envelope point. Traces with zero initial gap are ignored. Needs >= 10
/// usable traces whose initial gaps span two decades (InsufficientSamples).
/// Throws NoDecay if the fitted lambda is <= 1.
IesFit estimate_ies_constants(std::span<const GapTrace> traces);

struct IesOptions {
  int pairs = 40;
  double horizon = 5.0;           // s
  int sample_every = 10;          // steps between gap samples
  double min_perturbation = 1e-3;  // magnitudes are log-spaced over this range
  double max_perturbation = 1e-1;
  std::uint64_t seed = 1;
};

/// Closed-loop gap traces: from the post-warm-up hover state, pairs of
/// rollouts differing by a random perturbation of the closed-loop vector,
/// driven by the same noise toward a fixed hold reference.
std::vector<GapTrace> closed_loop_gap_traces(const ScenarioConfig& cfg, const IesOptions& opt);

/// Overwrites plant, estimate and integrators from a closed-loop vector.
void set_closed_loop_vector(ClosedLoopState& s, const Eigen::Matrix<double, 30, 1>& v);

// ---------------------------------------------------------------------------
// Lipschitz constants

using VectorMap = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Sampled lower bound on the Lipschitz constant of `f` over the box
/// [lo, hi]: the largest output/input gap ratio over `n` random pairs (half
/// independent, half local) and a Jacobian-guided refinement of the best
/// pairs. Throws InsufficientSamples if n < 10^4.
double estimate_lipschitz(const VectorMap& f, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                          int n, std::uint64_t seed);

struct ClosedLoopLipschitz {
  double lh = 0.0;   // IMU map on the attitude/rate box
  double lg = 0.0;   // fusion mean update (estimate, measurement) -> estimate
  double lfc = 0.0;  // controller state update (integrators, estimate) -> integrators
};

ClosedLoopLipschitz closed_loop_lipschitz(const ScenarioConfig& cfg, int n, std::uint64_t seed);

// ---------------------------------------------------------------------------
// KL and replay

/// KL between N(mu_q, sigma) and N(mu_p, sigma). Throws SingularCovariance.
double gaussian_kl(const Eigen::VectorXd& mu_q, const Eigen::VectorXd& mu_p,
                   const Eigen::MatrixXd& sigma);

/// Re-simulates the fake closed loop from X0^f = (p0 - C dt, v0 - C, Omega0,
/// estimator, controller) with the recorded noise and checks it tracks the
/// attacked run exactly: p^f = p^a - C t_{k+1}, v^f = v^a - C, equal attitude,
/// estimate and controller state. Returns the largest absolute discrepancy.
/// Requires a ramp attack starting at step 0 (ValidationError) and a record
/// matching `cfg` (MismatchedRuns). Throws ReplayMismatch above 1e-6.
double fake_replay(const ScenarioConfig& cfg, const RunRecord& attacked);

// ---------------------------------------------------------------------------
// Alarm statistics

/// Per-step alarm counts over paired runs. Merging is integer addition, so
/// results do not depend on the order runs finish in.
class AlarmAccumulator {
 public:
  AlarmAccumulator() = default;
  explicit AlarmAccumulator(std::size_t steps);

  void add_nominal(std::span<const Verdict> verdicts);
  void add_attacked(std::span<const Verdict> verdicts);
  void merge(const AlarmAccumulator& other);

  std::size_t steps() const { return steps_; }
  std::int64_t nominal_runs() const { return nominal_runs_; }
  std::int64_t attacked_runs() const { return attacked_runs_; }

  // index: 0 chi-square, 1 CUSUM
  const std::vector<std::int64_t>& nominal_counts(int detector) const {
    return nominal_[detector];
  }
  const std::vector<std::int64_t>& attacked_counts(int detector) const {
    return attacked_[detector];
  }

  bool operator==(const AlarmAccumulator&) const = default;

 private:
  std::size_t steps_ = 0;
  std::int64_t nominal_runs_ = 0;
  std::int64_t attacked_runs_ = 0;
  std::vector<std::int64_t> nominal_[2];
  std::vector<std::int64_t> attacked_[2];
};

struct AlarmCurve {
  std::vector<double> rate;  // per step
  double mean = 0.0;         // pooled over steps and runs
  double ci_low = 0.0;       // Wilson 95% on the pooled mean
  double ci_high = 0.0;
};

struct DetectorAlarms {
  AlarmCurve true_detection;  // attacked runs
  AlarmCurve false_alarm;     // nominal runs
};

struct AlarmStats {
  std::int64_t runs = 0;
  double dt = 1e-3;
  DetectorAlarms chi2;
  DetectorAlarms cusum;
};

AlarmStats alarm_stats(const AlarmAccumulator& acc, double dt);

/// Throws MismatchedRuns if the counts or horizons differ.
AlarmStats alarm_stats(std::span<const RunRecord> attacked, std::span<const RunRecord> nominal);

std::vector<Verdict> verdicts_of(const RunRecord& run);

}  // namespace quadfdi
