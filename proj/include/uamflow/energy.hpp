#pragma once

// eVTOL mission energy over a hover / climb / cruise / descent / hover profile,
// and the per-route extra energy of cruising above the lowest layer.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "uamflow/errors.hpp"

namespace uamflow::energy {

inline constexpr double kGravity = 9.81;           // m/s^2
inline constexpr double kSeaLevelDensity = 1.225;  // kg/m^3
inline constexpr double kFtToM = 0.3048;
/// Vertical take-off and landing hover segments end/start at this height.
inline constexpr double kHoverTopFt = 250.0;

struct VehicleParams {
  double mass_kg = 1800.0;
  double disk_loading = 580.0;  // N/m^2
  double hover_efficiency = 0.75;
  double climb_efficiency = 0.75;
  double cruise_efficiency = 0.8;
  double zero_lift_drag = 0.03;
  double reference_area_m2 = 30.0;
  double max_lift_to_drag = 20.0;
  double flight_path_angle_deg = 10.0;
  double rate_of_climb_ft_min = 1000.0;
  double cruise_speed_ft_s = 135.0;
  double hover_time_per_end_s = 30.0;
  double descent_power_fraction = 0.4;

  void validate() const {
    std::vector<std::string> p;
    auto positive = [&](double v, const char* name) {
      if (!(v > 0.0)) p.push_back(std::string(name) + " must be positive");
    };
    auto efficiency = [&](double v, const char* name) {
      if (!(v > 0.0 && v <= 1.0)) p.push_back(std::string(name) + " must lie in (0, 1]");
    };
    positive(mass_kg, "mass_kg");
    positive(disk_loading, "disk_loading");
    efficiency(hover_efficiency, "hover_efficiency");
    efficiency(climb_efficiency, "climb_efficiency");
    efficiency(cruise_efficiency, "cruise_efficiency");
    positive(zero_lift_drag, "zero_lift_drag");
    positive(reference_area_m2, "reference_area_m2");
    positive(max_lift_to_drag, "max_lift_to_drag");
    if (!(flight_path_angle_deg > 0.0 && flight_path_angle_deg < 90.0))
      p.push_back("flight_path_angle_deg must lie in (0, 90)");
    positive(rate_of_climb_ft_min, "rate_of_climb_ft_min");
    positive(cruise_speed_ft_s, "cruise_speed_ft_s");
    positive(hover_time_per_end_s, "hover_time_per_end_s");
    positive(descent_power_fraction, "descent_power_fraction");
    if (!p.empty()) throw ValidationError(std::move(p));
  }

  double weight_n() const { return mass_kg * kGravity; }
  double path_angle_rad() const { return flight_path_angle_deg * M_PI / 180.0; }
  /// Airspeed along the climb path, ft/s.
  double climb_speed_ft_s() const {
    return rate_of_climb_ft_min / (std::sin(path_angle_rad()) * 60.0);
  }
  /// Horizontal ground speed during climb and descent, ft/s.
  double climb_ground_speed_ft_s() const {
    return rate_of_climb_ft_min / std::tan(path_angle_rad()) / 60.0;
  }
};

struct MissionProfile {
  double cruise_altitude_agl_ft = 1000.0;
  double total_distance_ft = 0.0;
  double msl_offset_ft = 500.0;
};

struct SegmentPowers {
  double climb_kw = 0.0;
  double cruise_kw = 0.0;
  double descent_kw = 0.0;
};

struct MissionEnergy {
  double hover_mj = 0.0;
  double climb_mj = 0.0;
  double cruise_mj = 0.0;
  double descent_mj = 0.0;
  double total_mj = 0.0;
};

/// Low-altitude standard-atmosphere density, kg/m^3, at `msl_ft`.
inline double air_density(double msl_ft) {
  return kSeaLevelDensity * std::pow(1.0 - 2.256e-5 * msl_ft * kFtToM, 4.2561);
}

/// Momentum-theory hover power, kW.
inline double hover_power(const VehicleParams& v, double density = kSeaLevelDensity) {
  if (!(density > 0.0)) throw DomainError("air density must be positive");
  return v.weight_n() / v.hover_efficiency * std::sqrt(v.disk_loading / (2.0 * density)) / 1e3;
}

/// Parasitic plus induced drag in level flight, N (speed in m/s).
inline double drag_n(const VehicleParams& v, double density, double speed_m_s) {
  const double qs = 0.5 * density * speed_m_s * speed_m_s * v.reference_area_m2;
  const double k = 1.0 / (4.0 * v.zero_lift_drag * v.max_lift_to_drag * v.max_lift_to_drag);
  return qs * v.zero_lift_drag + k * v.weight_n() * v.weight_n() / qs;
}

/// Climb density is taken at the midpoint between the hover top and the
/// cruise altitude; cruise density at the cruise altitude.
inline SegmentPowers segment_powers(const VehicleParams& v, double cruise_agl_ft,
                                    double msl_offset_ft = 500.0) {
  if (!(cruise_agl_ft > kHoverTopFt))
    throw DomainError("cruise altitude must exceed the hover segment height");
  const double mid_msl = msl_offset_ft + (cruise_agl_ft - kHoverTopFt) / 2.0 + kHoverTopFt;
  const double rho_climb = air_density(mid_msl);
  const double rho_cruise = air_density(msl_offset_ft + cruise_agl_ft);
  const double v_climb = v.climb_speed_ft_s() * kFtToM;
  const double v_cruise = v.cruise_speed_ft_s * kFtToM;
  SegmentPowers p;
  p.climb_kw = v_climb / v.climb_efficiency *
               (v.weight_n() * std::sin(v.path_angle_rad()) + drag_n(v, rho_climb, v_climb)) / 1e3;
  p.cruise_kw = v_cruise / v.cruise_efficiency * drag_n(v, rho_cruise, v_cruise) / 1e3;
  p.descent_kw = v.descent_power_fraction * p.cruise_kw;
  return p;
}

/// Horizontal distance flown while climbing and descending, ft.
inline double climb_descent_distance_ft(const VehicleParams& v, double cruise_agl_ft) {
  const double t_climb_s = (cruise_agl_ft - kHoverTopFt) / v.rate_of_climb_ft_min * 60.0;
  return 2.0 * v.climb_ground_speed_ft_s() * t_climb_s;
}

inline MissionEnergy mission_energy(const VehicleParams& v, const MissionProfile& profile) {
  const double h = profile.cruise_altitude_agl_ft;
  const double overhead_ft = climb_descent_distance_ft(v, h);
  const double cruise_ft = profile.total_distance_ft - overhead_ft;
  if (cruise_ft < -1e-9 * std::max(1.0, overhead_ft))
    throw DomainError("mission distance is shorter than the climb and descent legs");
  const SegmentPowers p = segment_powers(v, h, profile.msl_offset_ft);
  const double t_climb_s = (h - kHoverTopFt) / v.rate_of_climb_ft_min * 60.0;
  MissionEnergy e;
  e.hover_mj = hover_power(v) * 2.0 * v.hover_time_per_end_s / 1e3;
  e.climb_mj = p.climb_kw * t_climb_s / 1e3;
  e.cruise_mj = p.cruise_kw * std::max(cruise_ft, 0.0) / v.cruise_speed_ft_s / 1e3;
  e.descent_mj = p.descent_kw * t_climb_s / 1e3;
  e.total_mj = e.hover_mj + e.climb_mj + e.cruise_mj + e.descent_mj;
  return e;
}

/// E_total(h) / E_total(baseline) - 1 over the same ground distance.
inline double extra_energy_fraction(const VehicleParams& v, double distance_ft,
                                    double cruise_agl_ft, double baseline_agl_ft = 1000.0,
                                    double msl_offset_ft = 500.0) {
  if (cruise_agl_ft == baseline_agl_ft) return 0.0;
  const double e = mission_energy(v, {cruise_agl_ft, distance_ft, msl_offset_ft}).total_mj;
  const double e0 = mission_energy(v, {baseline_agl_ft, distance_ft, msl_offset_ft}).total_mj;
  return e / e0 - 1.0;
}

struct RouteLeg {
  double length_ft = 0.0;
  double cruise_altitude_agl_ft = 1000.0;
};

/// p_i for every route, relative to flying the same distance on the lowest layer.
/// A route too short for its profile is charged as if it cruised zero distance.
inline Eigen::VectorXd route_extra_energy(std::span<const RouteLeg> routes,
                                          const VehicleParams& v, double baseline_agl_ft,
                                          double msl_offset_ft = 500.0) {
  Eigen::VectorXd p(static_cast<Eigen::Index>(routes.size()));
  for (std::size_t i = 0; i < routes.size(); ++i) {
    const auto& r = routes[i];
    if (r.cruise_altitude_agl_ft == baseline_agl_ft) {
      p[static_cast<Eigen::Index>(i)] = 0.0;
      continue;
    }
    const double need = std::max(climb_descent_distance_ft(v, r.cruise_altitude_agl_ft),
                                 climb_descent_distance_ft(v, baseline_agl_ft));
    p[static_cast<Eigen::Index>(i)] = extra_energy_fraction(
        v, std::max(r.length_ft, need), r.cruise_altitude_agl_ft, baseline_agl_ft, msl_offset_ft);
  }
  return p;
}

/// p_a = p^T z / 1^T z, or 0 when there is no flow.
inline double average_extra_energy(const Eigen::VectorXd& p, const Eigen::VectorXd& z) {
  if (p.size() != z.size()) throw UsageError("p and z differ in length");
  const double total = z.sum();
  if (!(total > 0.0)) return 0.0;
  return p.dot(z) / total;
}

}  // namespace uamflow::energy
