#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "quadfdi/analysis.hpp"
#include "quadfdi/montecarlo.hpp"
#include "quadfdi/simulation.hpp"

namespace quadfdi {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// CSV

/// One row per step: k,t, true state, estimate, delivered GPS (blank off GPS
/// ticks), injected offset, then detector scores and alarms.
void write_run_csv(std::ostream& out, const RunRecord& run);
void write_run_csv(const fs::path& path, const RunRecord& run);

/// k,t,deviation for a single pair.
void write_deviation_csv(const fs::path& path, const DeviationSeries& series, double dt);
/// k,t,mean,min,max across runs. Header only when no run was added.
void write_deviation_csv(const fs::path& path, const DeviationAccumulator& acc, double dt);
/// k,t,chi2_td,chi2_fa,cusum_td,cusum_fa. Header only for an empty aggregate.
void write_alarm_csv(const fs::path& path, const AlarmStats& stats);

/// Numeric CSV with a header row. Blank cells read as NaN.
struct CsvTable {
  std::string source;  // path it was read from
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  /// Throws IoError naming the column if it is absent.
  std::size_t column(const std::string& name) const;
  std::vector<double> values(const std::string& name) const;
};
CsvTable read_csv(const fs::path& path);

// ---------------------------------------------------------------------------
// Binary record

inline constexpr char kRunMagic[4] = {'Q', 'F', 'D', 'R'};
inline constexpr std::uint32_t kRunFormatVersion = 1;

/// Full RunRecord, including raw noise draws, so a run can be replayed.
void write_run_binary(const fs::path& path, const RunRecord& run);
/// Throws IoError on a missing or truncated file, a bad magic or an
/// unsupported version.
RunRecord read_run_binary(const fs::path& path);

// ---------------------------------------------------------------------------
// SVG

struct PlotSeries {
  std::string label;
  std::string color;
  std::vector<double> x;
  std::vector<double> y;
  bool dashed = false;
};

struct LinePlot {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<PlotSeries> series;
  bool equal_aspect = false;
  int width = 760;
  int height = 520;
};

std::string render_svg(const LinePlot& plot);
void write_svg(const fs::path& path, const LinePlot& plot);

/// XY overlay of the nominal path, the attacked path and the attacked run's
/// position estimate.
LinePlot trajectory_plot(const RunRecord& nominal, const RunRecord& attacked);
/// True-detection and false-alarm curves for one detector ("chi2" or
/// "cusum") from an alarm-rate table.
LinePlot alarm_rate_plot(const CsvTable& alarms, const std::string& detector);
/// Deviation against time from either deviation table layout.
LinePlot deviation_plot(const CsvTable& deviation);

}  // namespace quadfdi
