#include "quadfdi/export.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <type_traits>

namespace quadfdi {

static_assert(std::endian::native == std::endian::little,
              "binary records are written in host order and assume little-endian");

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream f(path, mode | std::ios::trunc);
  if (!f) throw IoError(path.string(), "cannot open for writing");
  return f;
}

void finish(std::ofstream& f, const fs::path& path) {
  f.flush();
  if (!f) throw IoError(path.string(), "write failed");
}

const char* const kStateNames[12] = {"phi", "theta", "psi", "phi_dot", "theta_dot", "psi_dot",
                                     "x",   "y",     "z",   "vx",      "vy",        "vz"};

}  // namespace

// --- CSV ---------------------------------------------------------------------

void write_run_csv(std::ostream& out, const RunRecord& run) {
  out << "k,t";
  for (const char* n : kStateNames) out << ',' << n;
  for (const char* n : kStateNames) out << ",hat_" << n;
  out << ",gps_x,gps_y,gps_z,a_x,a_y,a_z,chi2,chi2_alarm,cusum,cusum_alarm\n";
  std::string line;
  for (const StepRecord& r : run.steps) {
    line.clear();
    line += std::to_string(r.step);
    line += ',' + num(static_cast<double>(r.step) * run.dt);
    for (int i = 0; i < 12; ++i) line += ',' + num(r.state[i]);
    for (int i = 0; i < 12; ++i) line += ',' + num(r.estimate[i]);
    for (int i = 0; i < 3; ++i) line += ',' + (r.has_gps ? num(r.gps[i]) : std::string());
    for (int i = 0; i < 3; ++i) line += ',' + num(r.attack[i]);
    line += ',' + num(r.verdict.chi2);
    line += r.verdict.chi2_alarm ? ",1" : ",0";
    line += ',' + num(r.verdict.cusum);
    line += r.verdict.cusum_alarm ? ",1\n" : ",0\n";
    out << line;
  }
}

void write_run_csv(const fs::path& path, const RunRecord& run) {
  auto f = open_out(path);
  write_run_csv(f, run);
  finish(f, path);
}

void write_deviation_csv(const fs::path& path, const DeviationSeries& series, double dt) {
  auto f = open_out(path);
  f << "k,t,deviation\n";
  for (std::size_t k = 0; k < series.deviation.size(); ++k) {
    f << k << ',' << num(static_cast<double>(k) * dt) << ',' << num(series.deviation[k]) << '\n';
  }
  finish(f, path);
}

void write_deviation_csv(const fs::path& path, const DeviationAccumulator& acc, double dt) {
  auto f = open_out(path);
  f << "k,t,mean,min,max\n";
  if (acc.runs() > 0) {
    for (std::size_t k = 0; k < acc.steps(); ++k) {
      f << k << ',' << num(static_cast<double>(k) * dt) << ',' << num(acc.mean(k)) << ','
        << num(acc.min(k)) << ',' << num(acc.max(k)) << '\n';
    }
  }
  finish(f, path);
}

void write_alarm_csv(const fs::path& path, const AlarmStats& s) {
  auto f = open_out(path);
  f << "k,t,chi2_td,chi2_fa,cusum_td,cusum_fa\n";
  if (s.runs > 0) {
    const std::size_t n = s.chi2.false_alarm.rate.size();
    for (std::size_t k = 0; k < n; ++k) {
      f << k << ',' << num(static_cast<double>(k) * s.dt) << ','
        << num(s.chi2.true_detection.rate[k]) << ',' << num(s.chi2.false_alarm.rate[k]) << ','
        << num(s.cusum.true_detection.rate[k]) << ',' << num(s.cusum.false_alarm.rate[k]) << '\n';
    }
  }
  finish(f, path);
}

std::size_t CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw IoError(source, "no column named " + name);
  return static_cast<std::size_t>(it - header.begin());
}

std::vector<double> CsvTable::values(const std::string& name) const {
  const std::size_t c = column(name);
  std::vector<double> v;
  v.reserve(rows.size());
  for (const auto& r : rows) v.push_back(r[c]);
  return v;
}

CsvTable read_csv(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError(path.string(), "cannot open for reading");
  CsvTable t;
  t.source = path.string();
  std::string line;
  if (!std::getline(f, line)) throw IoError(path.string(), "empty file");
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) t.header.push_back(cell);
  }
  std::size_t lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> row;
    row.reserve(t.header.size());
    std::size_t start = 0;
    while (true) {
      const std::size_t end = line.find(',', start);
      const std::string cell = line.substr(start, end == std::string::npos ? end : end - start);
      if (cell.empty()) {
        row.push_back(std::numeric_limits<double>::quiet_NaN());
      } else {
        char* stop = nullptr;
        row.push_back(std::strtod(cell.c_str(), &stop));
        if (*stop != '\0') {
          throw IoError(path.string(), "line " + std::to_string(lineno) + ": not a number: " + cell);
        }
      }
      if (end == std::string::npos) break;
      start = end + 1;
    }
    if (row.size() != t.header.size()) {
      throw IoError(path.string(), "line " + std::to_string(lineno) + ": expected " +
                                       std::to_string(t.header.size()) + " cells");
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

// --- binary ------------------------------------------------------------------

namespace {

class BinaryWriter {
 public:
  explicit BinaryWriter(std::ostream& out) : out_(out) {}

  template <typename T>
    requires std::is_trivially_copyable_v<T>
  void put(const T& v) {
    out_.write(reinterpret_cast<const char*>(&v), sizeof v);
  }
  template <typename Derived>
  void put_matrix(const Eigen::MatrixBase<Derived>& m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i) put<double>(m(i, j));
  }

 private:
  std::ostream& out_;
};

class BinaryReader {
 public:
  BinaryReader(std::istream& in, std::string path) : in_(in), path_(std::move(path)) {}

  template <typename T>
    requires std::is_trivially_copyable_v<T>
  T get() {
    T v;
    in_.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in_) throw IoError(path_, "truncated run record");
    return v;
  }
  template <typename Derived>
  void get_matrix(Eigen::MatrixBase<Derived>& m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = get<double>();
  }
  bool get_bool() { return get<std::uint8_t>() != 0; }

 private:
  std::istream& in_;
  std::string path_;
};

void put_closed_loop(BinaryWriter& w, const ClosedLoopState& s) {
  w.put_matrix(s.plant.vector());
  w.put_matrix(s.estimator.mean);
  w.put_matrix(s.estimator.covariance);
  w.put<std::int64_t>(s.estimator.step);
  w.put_matrix(s.controller.position_integral);
  w.put_matrix(s.controller.attitude_integral);
  w.put<std::uint64_t>(s.controller.waypoint_index);
  w.put_matrix(s.command.speed_sq);
}

ClosedLoopState get_closed_loop(BinaryReader& r) {
  ClosedLoopState s;
  r.get_matrix(s.plant.vector());
  r.get_matrix(s.estimator.mean);
  r.get_matrix(s.estimator.covariance);
  s.estimator.step = r.get<std::int64_t>();
  r.get_matrix(s.controller.position_integral);
  r.get_matrix(s.controller.attitude_integral);
  s.controller.waypoint_index = static_cast<std::size_t>(r.get<std::uint64_t>());
  r.get_matrix(s.command.speed_sq);
  return s;
}

void put_detector(BinaryWriter& w, const DetectorState& d) {
  w.put<double>(d.config.chi2_threshold_imu);
  w.put<double>(d.config.chi2_threshold_gps);
  w.put<double>(d.config.cusum_threshold);
  w.put<std::uint8_t>(d.config.cusum_drift.has_value());
  w.put<double>(d.config.cusum_drift.value_or(0.0));
  w.put<std::uint8_t>(d.config.reset_on_alarm);
  w.put<double>(d.cusum.statistic);
}

DetectorState get_detector(BinaryReader& r) {
  DetectorState d;
  d.config.chi2_threshold_imu = r.get<double>();
  d.config.chi2_threshold_gps = r.get<double>();
  d.config.cusum_threshold = r.get<double>();
  const bool has_drift = r.get_bool();
  const double drift = r.get<double>();
  if (has_drift) d.config.cusum_drift = drift;
  d.config.reset_on_alarm = r.get_bool();
  d.cusum.statistic = r.get<double>();
  return d;
}

void put_step(BinaryWriter& w, const StepRecord& s) {
  w.put<std::int64_t>(s.step);
  w.put_matrix(s.state);
  w.put_matrix(s.estimate);
  w.put_matrix(s.position_integral);
  w.put_matrix(s.attitude_integral);
  w.put<std::uint32_t>(s.waypoint_index);
  w.put_matrix(s.command);
  w.put_matrix(s.imu);
  w.put_matrix(s.gps);
  w.put<std::uint8_t>(s.has_gps);
  w.put_matrix(s.attack);
  w.put_matrix(s.innovation);
  w.put_matrix(s.noise.process);
  w.put_matrix(s.noise.gps);
  w.put_matrix(s.noise.imu);
  w.put<std::int64_t>(s.verdict.step);
  w.put<std::int32_t>(s.verdict.dof);
  w.put<double>(s.verdict.chi2);
  w.put<std::uint8_t>(s.verdict.chi2_alarm);
  w.put<double>(s.verdict.cusum);
  w.put<std::uint8_t>(s.verdict.cusum_alarm);
}

StepRecord get_step(BinaryReader& r) {
  StepRecord s;
  s.step = r.get<std::int64_t>();
  r.get_matrix(s.state);
  r.get_matrix(s.estimate);
  r.get_matrix(s.position_integral);
  r.get_matrix(s.attitude_integral);
  s.waypoint_index = r.get<std::uint32_t>();
  r.get_matrix(s.command);
  r.get_matrix(s.imu);
  r.get_matrix(s.gps);
  s.has_gps = r.get_bool();
  r.get_matrix(s.attack);
  r.get_matrix(s.innovation);
  r.get_matrix(s.noise.process);
  r.get_matrix(s.noise.gps);
  r.get_matrix(s.noise.imu);
  s.verdict.step = r.get<std::int64_t>();
  s.verdict.dof = r.get<std::int32_t>();
  s.verdict.chi2 = r.get<double>();
  s.verdict.chi2_alarm = r.get_bool();
  s.verdict.cusum = r.get<double>();
  s.verdict.cusum_alarm = r.get_bool();
  return s;
}

}  // namespace

void write_run_binary(const fs::path& path, const RunRecord& run) {
  auto f = open_out(path, std::ios::out | std::ios::binary);
  BinaryWriter w(f);
  f.write(kRunMagic, sizeof kRunMagic);
  w.put<std::uint32_t>(kRunFormatVersion);
  w.put<std::uint64_t>(run.seed);
  w.put<std::uint64_t>(run.config_fingerprint);
  w.put<std::uint8_t>(run.attack_enabled);
  w.put<double>(run.dt);
  w.put<std::int32_t>(run.gps_divisor);
  put_closed_loop(w, run.initial);
  put_detector(w, run.initial_detector);
  w.put<std::uint64_t>(run.steps.size());
  for (const StepRecord& s : run.steps) put_step(w, s);
  finish(f, path);
}

RunRecord read_run_binary(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError(path.string(), "cannot open for reading");
  BinaryReader r(f, path.string());
  char magic[4] = {};
  f.read(magic, sizeof magic);
  if (!f || std::memcmp(magic, kRunMagic, sizeof magic) != 0) {
    throw IoError(path.string(), "not a run record (bad magic)");
  }
  const auto version = r.get<std::uint32_t>();
  if (version != kRunFormatVersion) {
    throw IoError(path.string(), "unsupported run record version " + std::to_string(version));
  }
  RunRecord run;
  run.seed = r.get<std::uint64_t>();
  run.config_fingerprint = r.get<std::uint64_t>();
  run.attack_enabled = r.get_bool();
  run.dt = r.get<double>();
  run.gps_divisor = r.get<std::int32_t>();
  run.initial = get_closed_loop(r);
  run.initial_detector = get_detector(r);
  const auto n = r.get<std::uint64_t>();
  if (n > 10'000'000) throw IoError(path.string(), "implausible step count " + std::to_string(n));
  run.steps.reserve(static_cast<std::size_t>(n));
  for (std::uint64_t i = 0; i < n; ++i) run.steps.push_back(get_step(r));
  if (f.peek() != std::char_traits<char>::eof()) {
    throw IoError(path.string(), "trailing bytes after run record");
  }
  return run;
}

// --- SVG ---------------------------------------------------------------------

namespace {

constexpr std::size_t kMaxPlotPoints = 2000;

std::string xml_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// 1-2-5 tick spacing giving roughly `target` intervals.
double nice_step(double span, int target) {
  const double raw = span / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double r = raw / mag;
  return (r < 1.5 ? 1.0 : r < 3.5 ? 2.0 : r < 7.5 ? 5.0 : 10.0) * mag;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void pad() {
    if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
    if (hi - lo < 1e-12) {
      const double d = std::max(1.0, std::abs(lo)) * 0.5;
      lo -= d;
      hi += d;
    }
  }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v, double step) {
  char buf[32];
  const int decimals = std::max(0, static_cast<int>(-std::floor(std::log10(step) + 1e-9)));
  std::snprintf(buf, sizeof buf, "%.*f", decimals, std::abs(v) < step * 1e-9 ? 0.0 : v);
  return buf;
}

}  // namespace

std::string render_svg(const LinePlot& plot) {
  const double left = 80, right = 30, top = 50, bottom = 60;
  const double pw = plot.width - left - right;
  const double ph = plot.height - top - bottom;

  Range xr, yr;
  for (const auto& s : plot.series) {
    for (double v : s.x) xr.add(v);
    for (double v : s.y) yr.add(v);
  }
  xr.pad();
  yr.pad();
  if (plot.equal_aspect) {
    const double sx = (xr.hi - xr.lo) / pw;
    const double sy = (yr.hi - yr.lo) / ph;
    const double s = std::max(sx, sy);
    const double cx = 0.5 * (xr.lo + xr.hi), cy = 0.5 * (yr.lo + yr.hi);
    xr.lo = cx - 0.5 * s * pw, xr.hi = cx + 0.5 * s * pw;
    yr.lo = cy - 0.5 * s * ph, yr.hi = cy + 0.5 * s * ph;
  }
  const double xstep = nice_step(xr.hi - xr.lo, 8);
  const double ystep = nice_step(yr.hi - yr.lo, 6);
  if (!plot.equal_aspect) {
    xr.lo = std::floor(xr.lo / xstep) * xstep, xr.hi = std::ceil(xr.hi / xstep) * xstep;
    yr.lo = std::floor(yr.lo / ystep) * ystep, yr.hi = std::ceil(yr.hi / ystep) * ystep;
  }
  auto px = [&](double x) { return left + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
  auto py = [&](double y) { return top + (yr.hi - y) / (yr.hi - yr.lo) * ph; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << plot.width << "\" height=\""
    << plot.height << "\" viewBox=\"0 0 " << plot.width << ' ' << plot.height
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text class=\"title\" x=\"" << fmt(plot.width / 2.0) << "\" y=\"28\" text-anchor=\"middle\" "
    << "font-size=\"16\">" << xml_escape(plot.title) << "</text>\n";

  o << "<g class=\"grid\" stroke=\"#dddddd\" stroke-width=\"1\">\n";
  for (double x = std::ceil(xr.lo / xstep) * xstep; x <= xr.hi + 1e-9 * xstep; x += xstep) {
    o << "<line x1=\"" << fmt(px(x)) << "\" y1=\"" << fmt(top) << "\" x2=\"" << fmt(px(x))
      << "\" y2=\"" << fmt(top + ph) << "\"/>\n";
  }
  for (double y = std::ceil(yr.lo / ystep) * ystep; y <= yr.hi + 1e-9 * ystep; y += ystep) {
    o << "<line x1=\"" << fmt(left) << "\" y1=\"" << fmt(py(y)) << "\" x2=\"" << fmt(left + pw)
      << "\" y2=\"" << fmt(py(y)) << "\"/>\n";
  }
  o << "</g>\n";

  o << "<g class=\"axes\">\n";
  o << "<rect x=\"" << fmt(left) << "\" y=\"" << fmt(top) << "\" width=\"" << fmt(pw)
    << "\" height=\"" << fmt(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double x = std::ceil(xr.lo / xstep) * xstep; x <= xr.hi + 1e-9 * xstep; x += xstep) {
    o << "<text x=\"" << fmt(px(x)) << "\" y=\"" << fmt(top + ph + 18)
      << "\" text-anchor=\"middle\">" << tick_label(x, xstep) << "</text>\n";
  }
  for (double y = std::ceil(yr.lo / ystep) * ystep; y <= yr.hi + 1e-9 * ystep; y += ystep) {
    o << "<text x=\"" << fmt(left - 8) << "\" y=\"" << fmt(py(y) + 4)
      << "\" text-anchor=\"end\">" << tick_label(y, ystep) << "</text>\n";
  }
  o << "<text class=\"x-label\" x=\"" << fmt(left + pw / 2) << "\" y=\"" << fmt(plot.height - 15.0)
    << "\" text-anchor=\"middle\">" << xml_escape(plot.x_label) << "</text>\n";
  o << "<text class=\"y-label\" transform=\"translate(20," << fmt(top + ph / 2)
    << ") rotate(-90)\" text-anchor=\"middle\">" << xml_escape(plot.y_label) << "</text>\n";
  o << "</g>\n";

  o << "<clipPath id=\"plot-area\"><rect x=\"" << fmt(left) << "\" y=\"" << fmt(top)
    << "\" width=\"" << fmt(pw) << "\" height=\"" << fmt(ph) << "\"/></clipPath>\n";
  for (const auto& s : plot.series) {
    const std::size_t n = std::min(s.x.size(), s.y.size());
    const std::size_t stride = std::max<std::size_t>(1, (n + kMaxPlotPoints - 1) / kMaxPlotPoints);
    o << "<polyline class=\"series\" data-label=\"" << xml_escape(s.label) << "\" fill=\"none\" "
      << "stroke=\"" << s.color << "\" stroke-width=\"1.5\"" << (s.dashed ? " stroke-dasharray=\"6 4\"" : "")
      << " clip-path=\"url(#plot-area)\" points=\"";
    bool first = true;
    for (std::size_t i = 0; i < n; i += stride) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      if (!first) o << ' ';
      o << fmt(px(s.x[i])) << ',' << fmt(py(s.y[i]));
      first = false;
    }
    if (n > 0 && (n - 1) % stride != 0 && std::isfinite(s.x[n - 1]) && std::isfinite(s.y[n - 1])) {
      o << ' ' << fmt(px(s.x[n - 1])) << ',' << fmt(py(s.y[n - 1]));
    }
    o << "\"/>\n";
  }

  o << "<g class=\"legend\">\n";
  double ly = top + 18;
  const double lx = left + pw - 190;
  o << "<rect x=\"" << fmt(lx - 10) << "\" y=\"" << fmt(top + 6) << "\" width=\"190\" height=\""
    << fmt(18.0 * static_cast<double>(plot.series.size()) + 8) << "\" fill=\"white\" "
    << "fill-opacity=\"0.85\" stroke=\"#999999\"/>\n";
  for (const auto& s : plot.series) {
    o << "<line x1=\"" << fmt(lx) << "\" y1=\"" << fmt(ly) << "\" x2=\"" << fmt(lx + 24)
      << "\" y2=\"" << fmt(ly) << "\" stroke=\"" << s.color << "\" stroke-width=\"2\""
      << (s.dashed ? " stroke-dasharray=\"6 4\"" : "") << "/>\n";
    o << "<text class=\"legend-label\" x=\"" << fmt(lx + 32) << "\" y=\"" << fmt(ly + 4) << "\">"
      << xml_escape(s.label) << "</text>\n";
    ly += 18;
  }
  o << "</g>\n</svg>\n";
  return o.str();
}

void write_svg(const fs::path& path, const LinePlot& plot) {
  auto f = open_out(path);
  f << render_svg(plot);
  finish(f, path);
}

LinePlot trajectory_plot(const RunRecord& nominal, const RunRecord& attacked) {
  auto xy = [](const RunRecord& r, bool estimate) {
    PlotSeries s;
    s.x.reserve(r.steps.size());
    s.y.reserve(r.steps.size());
    for (const StepRecord& st : r.steps) {
      const Vec12& v = estimate ? st.estimate : st.state;
      s.x.push_back(v[StateVector::kPosition]);
      s.y.push_back(v[StateVector::kPosition + 1]);
    }
    return s;
  };
  LinePlot p;
  p.title = "Trajectory (top view)";
  p.x_label = "x [m]";
  p.y_label = "y [m]";
  p.equal_aspect = true;
  PlotSeries n = xy(nominal, false);
  n.label = "nominal";
  n.color = "#1f77b4";
  PlotSeries a = xy(attacked, false);
  a.label = "attacked";
  a.color = "#d62728";
  PlotSeries e = xy(attacked, true);
  e.label = "estimate (attacked)";
  e.color = "#2ca02c";
  e.dashed = true;
  p.series = {std::move(n), std::move(a), std::move(e)};
  return p;
}

namespace {

// Per-step rates are binomial noise at this resolution; bin means read better.
PlotSeries binned(const std::vector<double>& t, const std::vector<double>& v, std::size_t bins) {
  PlotSeries s;
  const std::size_t n = std::min(t.size(), v.size());
  if (n == 0) return s;
  const std::size_t width = std::max<std::size_t>(1, n / bins);
  for (std::size_t i = 0; i < n; i += width) {
    const std::size_t end = std::min(n, i + width);
    double sum = 0.0;
    for (std::size_t j = i; j < end; ++j) sum += v[j];
    s.x.push_back(t[(i + end - 1) / 2]);
    s.y.push_back(sum / static_cast<double>(end - i));
  }
  return s;
}

}  // namespace

LinePlot alarm_rate_plot(const CsvTable& alarms, const std::string& detector) {
  if (detector != "chi2" && detector != "cusum") {
    throw ValidationError("detector", "expected chi2 or cusum, got " + detector);
  }
  const auto t = alarms.values("t");
  LinePlot p;
  p.title = (detector == "chi2" ? std::string("Chi-square") : std::string("CUSUM")) +
            " detector alarm rate";
  p.x_label = "t [s]";
  p.y_label = "alarm rate per step";
  PlotSeries td = binned(t, alarms.values(detector + "_td"), 500);
  td.label = "true detection (attacked)";
  td.color = "#d62728";
  PlotSeries fa = binned(t, alarms.values(detector + "_fa"), 500);
  fa.label = "false alarm (nominal)";
  fa.color = "#1f77b4";
  fa.dashed = true;
  p.series = {std::move(td), std::move(fa)};
  return p;
}

LinePlot deviation_plot(const CsvTable& deviation) {
  const auto t = deviation.values("t");
  LinePlot p;
  p.title = "Position deviation, attacked vs nominal";
  p.x_label = "t [s]";
  p.y_label = "deviation [m]";
  auto series = [&](const std::string& col, const std::string& label, const std::string& color,
                    bool dashed) {
    PlotSeries s;
    s.x = t;
    s.y = deviation.values(col);
    s.label = label;
    s.color = color;
    s.dashed = dashed;
    return s;
  };
  const auto& h = deviation.header;
  if (std::find(h.begin(), h.end(), "mean") != h.end()) {
    p.series.push_back(series("mean", "mean", "#d62728", false));
    p.series.push_back(series("min", "min", "#7f7f7f", true));
    p.series.push_back(series("max", "max", "#7f7f7f", true));
  } else {
    p.series.push_back(series("deviation", "deviation", "#d62728", false));
  }
  return p;
}

}  // namespace quadfdi
