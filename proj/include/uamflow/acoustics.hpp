#pragma once

// Single-event noise from NPD regressions with lateral adjustments, and
// aggregation of events into cumulative metrics (Leq, DNL, CNEL).

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "uamflow/errors.hpp"

namespace uamflow::acoustics {

enum class Mode { LevelFlyover, Departure, Approach };
enum class Position { Centerline, Side45 };

inline constexpr double kMinDistanceFt = 200.0;
inline constexpr double kMaxDistanceFt = 20000.0;
/// Saturated value shared by the ground-attenuation and refraction terms.
inline constexpr double kSaturatedAttenuation = 10.86;

struct NpdCurve {
  Mode mode = Mode::LevelFlyover;
  Position position = Position::Centerline;
  double a0 = 0.0;
  double a1 = 0.0;
  double a2 = 0.0;
};

/// Centerline and 45-degree sideline curves of one operational mode.
struct CurvePair {
  NpdCurve centerline;
  NpdCurve side;
};

struct ReceiverGeometry {
  double slant_ft = 0.0;
  double lateral_ft = 0.0;
  double elevation_deg = 90.0;

  /// Geometry of a receiver at lateral offset `lateral_ft` below a source
  /// flying `height_ft` above the receiver plane.
  static ReceiverGeometry from_offsets(double lateral_ft, double height_ft) {
    ReceiverGeometry g;
    g.lateral_ft = lateral_ft;
    g.slant_ft = std::hypot(lateral_ft, height_ft);
    g.elevation_deg = std::atan2(height_ft, lateral_ft) * 180.0 / M_PI;
    return g;
  }
};

struct DirectivityOptions {
  /// Clamp the interpolation weight (90-|beta|)/45 to [0,1]. Off by default,
  /// so receivers below 45 degrees elevation extrapolate linearly.
  bool clamp_weight = false;
};

inline std::string to_string(Mode m) {
  switch (m) {
    case Mode::LevelFlyover: return "L";
    case Mode::Departure: return "D";
    case Mode::Approach: return "A";
  }
  return "?";
}

inline std::string to_string(Position p) {
  return p == Position::Centerline ? "centerline" : "side";
}

inline Mode parse_mode(const std::string& s) {
  if (s == "L" || s == "level" || s == "LevelFlyover") return Mode::LevelFlyover;
  if (s == "D" || s == "departure" || s == "Departure") return Mode::Departure;
  if (s == "A" || s == "approach" || s == "Approach") return Mode::Approach;
  throw UsageError("unknown NPD mode '" + s + "'");
}

inline Position parse_position(const std::string& s) {
  if (s == "centerline" || s == "Centerline" || s == "C") return Position::Centerline;
  if (s == "side" || s == "Side" || s == "side45" || s == "Side45" || s == "S")
    return Position::Side45;
  throw UsageError("unknown NPD position '" + s + "'");
}

/// The six regression rows for the RVLT quadrotor reference vehicle.
inline std::vector<NpdCurve> default_npd_table() {
  return {
      {Mode::LevelFlyover, Position::Centerline, 88.09, 3.21, -2.62},
      {Mode::LevelFlyover, Position::Side45, 78.01, 7.26, -3.39},
      {Mode::Departure, Position::Centerline, 84.05, 8.76, -4.18},
      {Mode::Departure, Position::Side45, 77.34, 11.34, -4.72},
      {Mode::Approach, Position::Centerline, 93.35, 5.17, -2.86},
      {Mode::Approach, Position::Side45, 85.55, 6.83, -3.14},
  };
}

inline const NpdCurve& find_curve(const std::vector<NpdCurve>& table, Mode mode,
                                  Position position) {
  for (const auto& c : table)
    if (c.mode == mode && c.position == position) return c;
  throw UsageError("NPD table has no " + to_string(mode) + "/" + to_string(position) +
                   " curve");
}

inline CurvePair curve_pair(const std::vector<NpdCurve>& table, Mode mode) {
  return {find_curve(table, mode, Position::Centerline),
          find_curve(table, mode, Position::Side45)};
}

/// Parses `mode, position, a0, a1, a2` rows (comma or whitespace separated,
/// `#` comments, optional header line starting with "mode").
inline std::vector<NpdCurve> parse_npd_table(std::istream& in) {
  std::vector<NpdCurve> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    std::string mode, pos;
    if (!(ls >> mode)) continue;
    if (mode == "mode") continue;
    NpdCurve c;
    if (!(ls >> pos >> c.a0 >> c.a1 >> c.a2))
      throw UsageError("NPD table line " + std::to_string(lineno) +
                       ": expected mode, position, a0, a1, a2");
    c.mode = parse_mode(mode);
    c.position = parse_position(pos);
    out.push_back(c);
  }
  if (out.empty()) throw UsageError("NPD table is empty");
  return out;
}

inline std::vector<NpdCurve> load_npd_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open NPD table '" + path + "'");
  return parse_npd_table(in);
}

/// A-weighted SEL at slant distance `d_ft`. Distances outside the certified
/// [200, 20000] ft range are clamped to its endpoints.
inline double npd_level(const NpdCurve& curve, double d_ft) {
  if (!(d_ft > 0.0) || !std::isfinite(d_ft))
    throw DomainError("NPD distance must be positive and finite");
  const double x = std::log10(std::clamp(d_ft, kMinDistanceFt, kMaxDistanceFt));
  return curve.a0 + curve.a1 * x + curve.a2 * x * x;
}

/// Ground attenuation E_g(l). The exponential branch is used up to and
/// including 3000 ft, the constant branch strictly beyond.
inline double ground_attenuation(double lateral_ft) {
  if (!(lateral_ft >= 0.0)) throw DomainError("lateral distance must be nonnegative");
  if (lateral_ft <= 3000.0) return 11.83 * (1.0 - std::exp(-0.0009 * lateral_ft));
  return kSaturatedAttenuation;
}

/// Refraction term Lambda(beta), beta in degrees.
inline double refraction(double elevation_deg) {
  if (!(elevation_deg >= -90.0 && elevation_deg <= 90.0))
    throw DomainError("elevation angle must lie in [-90, 90] degrees");
  if (elevation_deg <= 0.0) return kSaturatedAttenuation;
  if (elevation_deg <= 50.0)
    return 1.137 - 0.0229 * elevation_deg + 9.72 * std::exp(-0.142 * elevation_deg);
  return 0.0;
}

inline double lateral_attenuation_adj(double lateral_ft, double elevation_deg) {
  return ground_attenuation(lateral_ft) * refraction(elevation_deg) / kSaturatedAttenuation;
}

inline double lateral_directivity_adj(const NpdCurve& centerline, const NpdCurve& side,
                                      double d_ft, double elevation_deg,
                                      DirectivityOptions opts = {}) {
  if (centerline.mode != side.mode)
    throw UsageError("directivity adjustment needs curves of the same mode");
  if (!(elevation_deg >= -90.0 && elevation_deg <= 90.0))
    throw DomainError("elevation angle must lie in [-90, 90] degrees");
  double weight = (90.0 - std::abs(elevation_deg)) / 45.0;
  if (opts.clamp_weight) weight = std::clamp(weight, 0.0, 1.0);
  return (npd_level(centerline, d_ft) - npd_level(side, d_ft)) * weight;
}

inline double receiver_sel(const CurvePair& curves, const ReceiverGeometry& g,
                           DirectivityOptions opts = {}) {
  if (g.lateral_ft < 0.0 || g.slant_ft + 1e-9 < g.lateral_ft)
    throw DomainError("receiver geometry requires slant >= lateral >= 0");
  return npd_level(curves.centerline, g.slant_ft) -
         lateral_directivity_adj(curves.centerline, curves.side, g.slant_ft,
                                 g.elevation_deg, opts) -
         lateral_attenuation_adj(g.lateral_ft, g.elevation_deg);
}

// ---------------------------------------------------------------------------
// Cumulative metrics

enum class Period { Day, Evening, Night };

/// Day 07-19, evening 19-22, night 22-07.
inline Period period_of_hour(double hour) {
  if (!(hour >= 0.0 && hour < 24.0)) throw DomainError("hour must lie in [0, 24)");
  if (hour >= 7.0 && hour < 19.0) return Period::Day;
  if (hour >= 19.0 && hour < 22.0) return Period::Evening;
  return Period::Night;
}

struct NoiseEvent {
  double sel = 0.0;
  Period period = Period::Day;
};

enum class MetricKind { Leq, Leq1h, Leq24h, DNL, CNEL };

struct Metric {
  MetricKind kind = MetricKind::Leq1h;
  double duration_s = 3600.0;  // only read for MetricKind::Leq

  static Metric leq(double seconds) { return {MetricKind::Leq, seconds}; }
  static Metric leq1h() { return {MetricKind::Leq1h, 3600.0}; }
  static Metric leq24h() { return {MetricKind::Leq24h, 86400.0}; }
  static Metric dnl() { return {MetricKind::DNL, 86400.0}; }
  static Metric cnel() { return {MetricKind::CNEL, 86400.0}; }
};

/// 10 log10(T / 1 s). One hour and one day use the standard rounded
/// constants so the metric family stays mutually consistent.
inline double duration_offset_db(double seconds) {
  if (!(seconds > 0.0)) throw DomainError("averaging period must be positive");
  if (seconds == 3600.0) return 35.56;
  if (seconds == 86400.0) return 49.37;
  return 10.0 * std::log10(seconds);
}

/// Cumulative level, or std::nullopt ("silence") when there is no acoustic
/// energy at all.
using Level = std::optional<double>;

inline double period_penalty(MetricKind kind, Period p) {
  if (kind == MetricKind::DNL) return p == Period::Night ? 10.0 : 0.0;
  if (kind == MetricKind::CNEL) {
    if (p == Period::Evening) return 4.77;
    if (p == Period::Night) return 10.0;
  }
  return 0.0;
}

inline double metric_duration_s(Metric metric) {
  switch (metric.kind) {
    case MetricKind::Leq: return metric.duration_s;
    case MetricKind::Leq1h: return 3600.0;
    default: return 86400.0;
  }
}

inline Level aggregate(std::span<const NoiseEvent> events, Metric metric) {
  const double offset = duration_offset_db(metric_duration_s(metric));
  if (events.empty()) return std::nullopt;
  // Factor out the loudest event so the energy sum cannot overflow.
  double peak = -std::numeric_limits<double>::infinity();
  for (const auto& e : events) {
    if (!std::isfinite(e.sel)) throw DomainError("event SEL must be finite");
    peak = std::max(peak, e.sel + period_penalty(metric.kind, e.period));
  }
  double sum = 0.0;
  for (const auto& e : events)
    sum += std::pow(10.0, (e.sel + period_penalty(metric.kind, e.period) - peak) / 10.0);
  return peak + 10.0 * std::log10(sum) - offset;
}

}  // namespace uamflow::acoustics
