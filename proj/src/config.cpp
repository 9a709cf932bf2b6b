#include "quadfdi/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "quadfdi/errors.hpp"
#include "quadfdi/random.hpp"

namespace quadfdi {

Mat12 ScenarioConfig::default_process_covariance() {
  Vec12 diag;
  diag.head<6>().setConstant(1e-8);
  diag.tail<6>().setConstant(1e-6);
  return diag.asDiagonal();
}

Mat12 ScenarioConfig::default_estimator_process_covariance() {
  Mat12 q = default_process_covariance();
  q.diagonal().tail<3>().setConstant(1e-4);
  return q;
}

std::vector<Waypoint> ScenarioConfig::square_mission() {
  return {
      {Vec3(100.0, 0.0, 20.0), 2.0},
      {Vec3(100.0, 100.0, 20.0), 2.0},
      {Vec3(0.0, 100.0, 10.0), 2.0},
      {Vec3(0.0, 0.0, 10.0), 2.0},
  };
}

std::int64_t ScenarioConfig::warmup_steps() const {
  return static_cast<std::int64_t>(std::llround(warmup / timing.imu_period));
}

std::int64_t ScenarioConfig::horizon_steps() const {
  return static_cast<std::int64_t>(std::llround(horizon / timing.imu_period));
}

void ScenarioConfig::validate() const {
  vehicle.validate();
  timing.validate();
  gains.validate();
  if (!initial_position.allFinite()) {
    throw ValidationError("vehicle.initial_position", "must be finite");
  }
  if (drag.linear < 0.0 || drag.angular < 0.0) {
    throw ValidationError("disturbance.linear_drag", "drag coefficients must be >= 0");
  }
  validate_psd(process_covariance, "process_noise.covariance");
  validate_psd(estimator_process_covariance, "estimator.process_covariance");
  validate_psd(gps.covariance, "gps.covariance");
  validate_psd(imu.covariance, "imu.covariance");
  if (!imu.bias.allFinite()) throw ValidationError("imu.bias", "must be finite");
  if (!(warmup >= 0.0)) throw ValidationError("timing.warmup", "must be >= 0");
  if (!(horizon > 0.0)) throw ValidationError("timing.horizon", "must be > 0");
  if (static_cast<double>(warmup_steps() + horizon_steps()) > 1e7) {
    throw ValidationError("timing.horizon", "run exceeds 1e7 steps");
  }
  if (!(estimator_initial_covariance > 0.0)) {
    throw ValidationError("estimator.initial_covariance", "must be > 0");
  }
  if (!(estimator_initial_spread >= 0.0)) {
    throw ValidationError("estimator.initial_spread", "must be >= 0");
  }
  if (mission.empty()) throw ValidationError("mission.waypoints", "needs at least one waypoint");
  for (const Waypoint& w : mission) {
    if (!(w.capture_radius > 0.0)) {
      throw ValidationError("mission.capture_radius", "must be > 0");
    }
    if (!w.position.allFinite()) throw ValidationError("mission.waypoints", "must be finite");
    if (w.capture_radius != mission.front().capture_radius) {
      throw ValidationError("mission.capture_radius", "must be shared by all waypoints");
    }
  }
  if (attack.start_step < 0) throw ValidationError("attack.start", "must be >= 0");
  const double target = detector.target_pfa;
  if (!(target > 0.0 && target < 1.0)) {
    throw ValidationError("detector.target_pfa", "must lie in (0, 1)");
  }
  if (detector.calibration_runs < 1) {
    throw ValidationError("detector.calibration_runs", "must be >= 1");
  }
  if (!(detector.calibration_horizon > 0.0)) {
    throw ValidationError("detector.calibration_horizon", "must be > 0");
  }
  if (detector.mode == DetectorMode::kCalibrate) {
    // The 9-dof channel only gets one sample per GPS tick.
    const double gps_samples =
        detector.calibration_runs * std::floor(detector.calibration_horizon / timing.gps_period);
    if (gps_samples < 50.0 / target) {
      throw ValidationError("detector.calibration_runs",
                            "too few GPS samples to calibrate: need " +
                                std::to_string(static_cast<long long>(std::ceil(50.0 / target))) +
                                ", runs x horizon give " +
                                std::to_string(static_cast<long long>(gps_samples)));
    }
  }
  if (detector.thresholds.cusum_drift && !(*detector.thresholds.cusum_drift >= 0.0)) {
    throw ValidationError("detector.cusum_drift", "must be >= 0 or 'dof'");
  }
}

bool ScenarioConfig::operator==(const ScenarioConfig& o) const {
  return vehicle == o.vehicle && initial_position == o.initial_position && drag == o.drag &&
         process_covariance == o.process_covariance && timing == o.timing &&
         warmup == o.warmup && horizon == o.horizon && gps == o.gps && imu == o.imu &&
         estimator_process_covariance == o.estimator_process_covariance &&
         estimator_initial_covariance == o.estimator_initial_covariance &&
         estimator_initial_spread == o.estimator_initial_spread && gains == o.gains &&
         mission == o.mission && attack == o.attack && detector == o.detector && seed == o.seed;
}

namespace {

struct RawValue {
  std::string text;
  int line = 0;
};

using Section = std::map<std::string, RawValue>;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string strip_comment(std::string_view line) {
  const auto pos = line.find_first_of("#;");
  return trim(line.substr(0, pos));
}

bool is_identifier(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
  }
  return true;
}

// Reads the raw text into sections, checking only the line syntax.
std::map<std::string, Section> tokenize(std::string_view text) {
  std::map<std::string, Section> sections;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::string current;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = strip_comment(raw);
    if (line.empty()) continue;
    if (line.front() == '[' && line.find('=') == std::string::npos) {
      if (line.back() != ']') throw ParseError(line_no, "unterminated section header");
      current = trim(std::string_view(line).substr(1, line.size() - 2));
      if (!is_identifier(current)) throw ParseError(line_no, "invalid section name");
      if (sections.count(current)) throw ParseError(line_no, "duplicate section [" + current + "]");
      sections[current];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(line_no, "expected 'key = value'");
    if (current.empty()) throw ParseError(line_no, "key outside of any section");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    std::string value = trim(std::string_view(line).substr(eq + 1));
    if (!is_identifier(key)) throw ParseError(line_no, "invalid key name");
    if (value.empty()) throw ParseError(line_no, "missing value for '" + key + "'");
    const int key_line = line_no;
    if (value.front() == '[') {
      // Arrays may continue over several lines until the closing bracket.
      while (value.find(']') == std::string::npos) {
        if (!std::getline(in, raw)) throw ParseError(key_line, "unterminated array for '" + key + "'");
        ++line_no;
        value += " " + strip_comment(raw);
      }
      if (value.back() != ']') throw ParseError(line_no, "trailing text after array");
    }
    Section& sec = sections[current];
    if (sec.count(key)) throw ParseError(key_line, "duplicate key '" + key + "'");
    sec[key] = RawValue{value, key_line};
  }
  return sections;
}

double parse_number(const RawValue& v, std::string_view s) {
  const std::string t = trim(s);
  double out = 0.0;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  if (!t.empty() && *first == '+') ++first;
  const auto res = std::from_chars(first, last, out);
  if (t.empty() || res.ec != std::errc() || res.ptr != last) {
    throw ParseError(v.line, "expected a number, got '" + t + "'");
  }
  return out;
}

std::vector<double> parse_array(const RawValue& v) {
  const std::string& s = v.text;
  if (s.size() < 2 || s.front() != '[' || s.back() != ']') {
    throw ParseError(v.line, "expected a bracketed list");
  }
  std::vector<double> out;
  const std::string body = trim(std::string_view(s).substr(1, s.size() - 2));
  if (body.empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto comma = body.find(',', start);
    out.push_back(parse_number(v, std::string_view(body).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

bool parse_bool(const RawValue& v) {
  if (v.text == "true") return true;
  if (v.text == "false") return false;
  throw ParseError(v.line, "expected true or false, got '" + v.text + "'");
}

// Pulls declared keys out of a section, remembering which were consumed.
class SectionReader {
 public:
  SectionReader(std::map<std::string, Section>& all, const std::string& name)
      : name_(name) {
    auto it = all.find(name);
    if (it == all.end()) throw ValidationError(name, "missing required section [" + name + "]");
    section_ = &it->second;
  }

  const RawValue& raw(const std::string& key) {
    auto it = section_->find(key);
    if (it == section_->end()) throw ValidationError(name_ + "." + key, "missing required key");
    used_.insert(key);
    return it->second;
  }

  double number(const std::string& key) {
    const RawValue& v = raw(key);
    return parse_number(v, v.text);
  }

  bool boolean(const std::string& key) { return parse_bool(raw(key)); }

  template <int N>
  Eigen::Matrix<double, N, 1> vector(const std::string& key) {
    const RawValue& v = raw(key);
    const std::vector<double> a = parse_array(v);
    if (a.size() != static_cast<std::size_t>(N)) {
      throw ParseError(v.line, "'" + key + "' needs " + std::to_string(N) + " values, got " +
                                   std::to_string(a.size()));
    }
    return Eigen::Map<const Eigen::Matrix<double, N, 1>>(a.data());
  }

  /// Row-major N*N list, or N values meaning a diagonal matrix.
  template <int N>
  Eigen::Matrix<double, N, N> matrix(const std::string& key) {
    const RawValue& v = raw(key);
    const std::vector<double> a = parse_array(v);
    if (a.size() == static_cast<std::size_t>(N)) {
      return Eigen::Map<const Eigen::Matrix<double, N, 1>>(a.data()).asDiagonal();
    }
    if (a.size() != static_cast<std::size_t>(N * N)) {
      throw ParseError(v.line, "'" + key + "' needs " + std::to_string(N) + " or " +
                                   std::to_string(N * N) + " values, got " +
                                   std::to_string(a.size()));
    }
    return Eigen::Map<const Eigen::Matrix<double, N, N, Eigen::RowMajor>>(a.data());
  }

  std::vector<double> array(const std::string& key) { return parse_array(raw(key)); }

  void finish() const {
    for (const auto& [key, value] : *section_) {
      if (!used_.count(key)) {
        throw ParseError(value.line, "unknown key '" + key + "' in [" + name_ + "]");
      }
    }
  }

 private:
  std::string name_;
  Section* section_ = nullptr;
  std::set<std::string> used_;
};

const std::vector<std::string> kSections = {"vehicle", "disturbance", "process_noise", "timing",
                                            "gps",     "imu",         "estimator",     "controller",
                                            "mission", "attack",      "detector",      "run"};

}  // namespace

ScenarioConfig parse_config(std::string_view text) {
  auto sections = tokenize(text);
  for (const auto& [name, sec] : sections) {
    if (std::find(kSections.begin(), kSections.end(), name) == kSections.end()) {
      const int line = sec.empty() ? 0 : sec.begin()->second.line;
      throw ParseError(line, "unknown section [" + name + "]");
    }
  }

  ScenarioConfig cfg;
  {
    SectionReader r(sections, "vehicle");
    cfg.vehicle.mass = r.number("mass");
    cfg.vehicle.gravity = r.number("gravity");
    cfg.vehicle.inertia = r.vector<3>("inertia");
    cfg.vehicle.arm_length = r.number("arm_length");
    cfg.vehicle.thrust_coeff = r.number("thrust_coeff");
    cfg.vehicle.drag_coeff = r.number("drag_coeff");
    cfg.initial_position = r.vector<3>("initial_position");
    r.finish();
  }
  {
    SectionReader r(sections, "disturbance");
    cfg.drag.enabled = r.boolean("enabled");
    cfg.drag.linear = r.number("linear_drag");
    cfg.drag.angular = r.number("angular_drag");
    r.finish();
  }
  {
    SectionReader r(sections, "process_noise");
    cfg.process_covariance = r.matrix<12>("covariance");
    r.finish();
  }
  {
    SectionReader r(sections, "timing");
    cfg.timing.imu_period = r.number("imu_period");
    cfg.timing.gps_period = r.number("gps_period");
    cfg.warmup = r.number("warmup");
    cfg.horizon = r.number("horizon");
    r.finish();
  }
  {
    SectionReader r(sections, "gps");
    cfg.gps.covariance = r.matrix<3>("covariance");
    r.finish();
  }
  {
    SectionReader r(sections, "imu");
    cfg.imu.bias = r.vector<6>("bias");
    cfg.imu.covariance = r.matrix<6>("covariance");
    r.finish();
  }
  {
    SectionReader r(sections, "estimator");
    cfg.estimator_process_covariance = r.matrix<12>("process_covariance");
    cfg.estimator_initial_covariance = r.number("initial_covariance");
    cfg.estimator_initial_spread = r.number("initial_spread");
    r.finish();
  }
  {
    SectionReader r(sections, "controller");
    ControllerGains& g = cfg.gains;
    g.position_kp = r.vector<3>("position_kp");
    g.position_ki = r.vector<3>("position_ki");
    g.position_kd = r.vector<3>("position_kd");
    g.attitude_kp = r.vector<3>("attitude_kp");
    g.attitude_ki = r.vector<3>("attitude_ki");
    g.attitude_kd = r.vector<3>("attitude_kd");
    g.integrator_limit = r.number("integrator_limit");
    g.max_tilt = r.number("max_tilt");
    g.max_position_error = r.number("max_position_error");
    g.max_rotor_speed_sq = r.number("max_rotor_speed_sq");
    r.finish();
  }
  {
    SectionReader r(sections, "mission");
    const double radius = r.number("capture_radius");
    const RawValue& raw = r.raw("waypoints");
    const std::vector<double> flat = parse_array(raw);
    if (flat.empty() || flat.size() % 3 != 0) {
      throw ParseError(raw.line, "'waypoints' needs a non-empty multiple of 3 values");
    }
    cfg.mission.clear();
    for (std::size_t i = 0; i < flat.size(); i += 3) {
      cfg.mission.push_back({Vec3(flat[i], flat[i + 1], flat[i + 2]), radius});
    }
    r.finish();
  }
  {
    SectionReader r(sections, "attack");
    cfg.attack.enabled = r.boolean("enabled");
    const RawValue& type = r.raw("type");
    const Vec3 v = r.vector<3>("vector");
    if (type.text == "ramp") {
      cfg.attack.signal = RampAttack{v};
    } else if (type.text == "bias") {
      cfg.attack.signal = BiasAttack{v};
    } else {
      throw ParseError(type.line, "attack type must be 'ramp' or 'bias'");
    }
    const double start = r.number("start");
    cfg.attack.start_step = static_cast<std::int64_t>(std::llround(start / cfg.timing.imu_period));
    r.finish();
  }
  {
    SectionReader r(sections, "detector");
    DetectorSettings& d = cfg.detector;
    const RawValue& mode = r.raw("mode");
    if (mode.text == "fixed") {
      d.mode = DetectorMode::kFixed;
    } else if (mode.text == "calibrate") {
      d.mode = DetectorMode::kCalibrate;
    } else {
      throw ParseError(mode.line, "detector mode must be 'fixed' or 'calibrate'");
    }
    d.thresholds.chi2_threshold_imu = r.number("chi2_threshold_imu");
    d.thresholds.chi2_threshold_gps = r.number("chi2_threshold_gps");
    d.thresholds.cusum_threshold = r.number("cusum_threshold");
    const RawValue& drift = r.raw("cusum_drift");
    if (drift.text == "dof") {
      d.thresholds.cusum_drift.reset();
    } else {
      d.thresholds.cusum_drift = parse_number(drift, drift.text);
    }
    d.thresholds.reset_on_alarm = r.boolean("reset_on_alarm");
    d.target_pfa = r.number("target_pfa");
    const double runs = r.number("calibration_runs");
    if (runs != std::floor(runs) || runs < 1.0) {
      throw ValidationError("detector.calibration_runs", "must be a positive integer");
    }
    d.calibration_runs = static_cast<int>(runs);
    d.calibration_horizon = r.number("calibration_horizon");
    r.finish();
  }
  {
    SectionReader r(sections, "run");
    const RawValue& v = r.raw("seed");
    std::uint64_t seed = 0;
    const auto res = std::from_chars(v.text.data(), v.text.data() + v.text.size(), seed);
    if (res.ec != std::errc() || res.ptr != v.text.data() + v.text.size()) {
      throw ParseError(v.line, "seed must be a non-negative integer");
    }
    cfg.seed = seed;
    r.finish();
  }
  cfg.validate();
  return cfg;
}

namespace {

std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

template <typename Derived>
std::string fmt_list(const Eigen::DenseBase<Derived>& m) {
  std::string out = "[";
  // Row-major traversal.
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (i || j) out += ", ";
      out += fmt(m(i, j));
    }
  }
  return out + "]";
}

template <typename Derived>
std::string fmt_cov(const Eigen::MatrixBase<Derived>& m) {
  const Eigen::MatrixXd off = m - Eigen::MatrixXd(m.diagonal().asDiagonal());
  const bool diagonal = off.cwiseAbs().maxCoeff() == 0.0;
  return diagonal ? fmt_list(m.diagonal()) : fmt_list(m);
}

std::string fmt_bool(bool b) { return b ? "true" : "false"; }

}  // namespace

std::string emit_config(const ScenarioConfig& cfg) {
  std::ostringstream o;
  o << "[vehicle]\n"
    << "mass = " << fmt(cfg.vehicle.mass) << "\n"
    << "gravity = " << fmt(cfg.vehicle.gravity) << "\n"
    << "inertia = " << fmt_list(cfg.vehicle.inertia.transpose()) << "\n"
    << "arm_length = " << fmt(cfg.vehicle.arm_length) << "\n"
    << "thrust_coeff = " << fmt(cfg.vehicle.thrust_coeff) << "\n"
    << "drag_coeff = " << fmt(cfg.vehicle.drag_coeff) << "\n"
    << "initial_position = " << fmt_list(cfg.initial_position.transpose()) << "\n\n";

  o << "[disturbance]\n"
    << "enabled = " << fmt_bool(cfg.drag.enabled) << "\n"
    << "linear_drag = " << fmt(cfg.drag.linear) << "\n"
    << "angular_drag = " << fmt(cfg.drag.angular) << "\n\n";

  o << "[process_noise]\n"
    << "covariance = " << fmt_cov(cfg.process_covariance) << "\n\n";

  o << "[timing]\n"
    << "imu_period = " << fmt(cfg.timing.imu_period) << "\n"
    << "gps_period = " << fmt(cfg.timing.gps_period) << "\n"
    << "warmup = " << fmt(cfg.warmup) << "\n"
    << "horizon = " << fmt(cfg.horizon) << "\n\n";

  o << "[gps]\n"
    << "covariance = " << fmt_cov(cfg.gps.covariance) << "\n\n";

  o << "[imu]\n"
    << "bias = " << fmt_list(cfg.imu.bias.transpose()) << "\n"
    << "covariance = " << fmt_cov(cfg.imu.covariance) << "\n\n";

  o << "[estimator]\n"
    << "process_covariance = " << fmt_cov(cfg.estimator_process_covariance) << "\n"
    << "initial_covariance = " << fmt(cfg.estimator_initial_covariance) << "\n"
    << "initial_spread = " << fmt(cfg.estimator_initial_spread) << "\n\n";

  const ControllerGains& g = cfg.gains;
  o << "[controller]\n"
    << "position_kp = " << fmt_list(g.position_kp.transpose()) << "\n"
    << "position_ki = " << fmt_list(g.position_ki.transpose()) << "\n"
    << "position_kd = " << fmt_list(g.position_kd.transpose()) << "\n"
    << "attitude_kp = " << fmt_list(g.attitude_kp.transpose()) << "\n"
    << "attitude_ki = " << fmt_list(g.attitude_ki.transpose()) << "\n"
    << "attitude_kd = " << fmt_list(g.attitude_kd.transpose()) << "\n"
    << "integrator_limit = " << fmt(g.integrator_limit) << "\n"
    << "max_tilt = " << fmt(g.max_tilt) << "\n"
    << "max_position_error = " << fmt(g.max_position_error) << "\n"
    << "max_rotor_speed_sq = " << fmt(g.max_rotor_speed_sq) << "\n\n";

  o << "[mission]\n"
    << "capture_radius = " << fmt(cfg.mission.empty() ? 2.0 : cfg.mission.front().capture_radius)
    << "\n"
    << "waypoints = [";
  for (std::size_t i = 0; i < cfg.mission.size(); ++i) {
    const Vec3& p = cfg.mission[i].position;
    o << (i ? ",\n             " : "") << fmt(p.x()) << ", " << fmt(p.y()) << ", " << fmt(p.z());
  }
  o << "]\n\n";

  const bool ramp = std::holds_alternative<RampAttack>(cfg.attack.signal);
  const Vec3 vec = ramp ? std::get<RampAttack>(cfg.attack.signal).slope
                        : std::get<BiasAttack>(cfg.attack.signal).offset;
  o << "[attack]\n"
    << "enabled = " << fmt_bool(cfg.attack.enabled) << "\n"
    << "type = " << (ramp ? "ramp" : "bias") << "\n"
    << "vector = " << fmt_list(vec.transpose()) << "\n"
    << "start = " << fmt(static_cast<double>(cfg.attack.start_step) * cfg.timing.imu_period)
    << "\n\n";

  const DetectorSettings& d = cfg.detector;
  o << "[detector]\n"
    << "mode = " << (d.mode == DetectorMode::kFixed ? "fixed" : "calibrate") << "\n"
    << "chi2_threshold_imu = " << fmt(d.thresholds.chi2_threshold_imu) << "\n"
    << "chi2_threshold_gps = " << fmt(d.thresholds.chi2_threshold_gps) << "\n"
    << "cusum_threshold = " << fmt(d.thresholds.cusum_threshold) << "\n"
    << "cusum_drift = " << (d.thresholds.cusum_drift ? fmt(*d.thresholds.cusum_drift) : "dof")
    << "\n"
    << "reset_on_alarm = " << fmt_bool(d.thresholds.reset_on_alarm) << "\n"
    << "target_pfa = " << fmt(d.target_pfa) << "\n"
    << "calibration_runs = " << d.calibration_runs << "\n"
    << "calibration_horizon = " << fmt(d.calibration_horizon) << "\n\n";

  o << "[run]\n"
    << "seed = " << cfg.seed << "\n";
  return o.str();
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string(), "cannot open config");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

void save_config(const ScenarioConfig& cfg, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError(path.string(), "cannot write config");
  out << emit_config(cfg);
  if (!out) throw IoError(path.string(), "write failed");
}

std::uint64_t config_fingerprint(const ScenarioConfig& cfg) {
  const std::string text = emit_config(cfg);
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace quadfdi
