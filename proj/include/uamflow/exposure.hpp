#pragma once

// Link-to-community noise impact matrix (N, with ambient masking) and its
// energy-domain counterpart M, plus cumulative community noise from link flows.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "uamflow/acoustics.hpp"
#include "uamflow/errors.hpp"
#include "uamflow/geometry.hpp"

namespace uamflow::exposure {

using geometry::Point2;
using geometry::distance;

enum class CommunityClass { QuietSuburban, NormalSuburban, Urban, NoisyUrban, VeryNoisyUrban };

inline constexpr std::array<CommunityClass, 5> kAllClasses = {
    CommunityClass::QuietSuburban, CommunityClass::NormalSuburban, CommunityClass::Urban,
    CommunityClass::NoisyUrban, CommunityClass::VeryNoisyUrban};

/// Representative ambient level: upper bound of the class's typical daytime range.
inline double class_ambient_dba(CommunityClass c) {
  switch (c) {
    case CommunityClass::QuietSuburban: return 45.0;
    case CommunityClass::NormalSuburban: return 50.0;
    case CommunityClass::Urban: return 55.0;
    case CommunityClass::NoisyUrban: return 60.0;
    case CommunityClass::VeryNoisyUrban: return 65.0;
  }
  return 55.0;
}

inline std::string to_string(CommunityClass c) {
  switch (c) {
    case CommunityClass::QuietSuburban: return "quiet_suburban";
    case CommunityClass::NormalSuburban: return "normal_suburban";
    case CommunityClass::Urban: return "urban";
    case CommunityClass::NoisyUrban: return "noisy_urban";
    case CommunityClass::VeryNoisyUrban: return "very_noisy_urban";
  }
  return "urban";
}

inline CommunityClass parse_community_class(const std::string& s) {
  for (auto c : kAllClasses)
    if (to_string(c) == s) return c;
  throw UsageError("unknown community class '" + s + "'");
}

struct Community {
  std::string id;
  Point2 receiver;  // ft
  double ambient_dba = 55.0;
  double population = 0.0;
  std::optional<CommunityClass> cls;
};

inline Community make_community(std::string id, Point2 p, CommunityClass cls,
                                double population = 0.0) {
  return {std::move(id), p, class_ambient_dba(cls), population, cls};
}

struct LinkGeometry {
  std::string link_id;
  Point2 a;
  Point2 b;
  double altitude_agl_ft = 1000.0;
};

/// Nearest point of the ground segment to the receiver; slant distance and
/// elevation follow from the corridor altitude.
inline acoustics::ReceiverGeometry link_community_geometry(const LinkGeometry& link,
                                                           const Community& c) {
  const double dx = link.b.x - link.a.x, dy = link.b.y - link.a.y;
  const double len2 = dx * dx + dy * dy;
  double t = 0.0;
  if (len2 > 0.0)
    t = std::clamp(((c.receiver.x - link.a.x) * dx + (c.receiver.y - link.a.y) * dy) / len2,
                   0.0, 1.0);
  const Point2 nearest{link.a.x + t * dx, link.a.y + t * dy};
  return acoustics::ReceiverGeometry::from_offsets(distance(nearest, c.receiver),
                                                   link.altitude_agl_ft);
}

struct NoiseImpactMatrix {
  Eigen::MatrixXd sel;     // N, dBA; masked entries hold 0
  Eigen::MatrixXd energy;  // M = 10^(N/10) for unmasked entries, 0 for masked
  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> masked;

  Eigen::Index links() const { return sel.rows(); }
  Eigen::Index communities() const { return sel.cols(); }
};

struct ImpactOptions {
  acoustics::DirectivityOptions directivity;
};

inline NoiseImpactMatrix build_impact_matrix(std::span<const LinkGeometry> links,
                                             std::span<const Community> communities,
                                             const acoustics::CurvePair& level_curves,
                                             ImpactOptions opts = {}) {
  if (links.empty() || communities.empty())
    throw UsageError("impact matrix needs at least one link and one community");
  const auto nl = static_cast<Eigen::Index>(links.size());
  const auto nc = static_cast<Eigen::Index>(communities.size());
  NoiseImpactMatrix out;
  out.sel = Eigen::MatrixXd::Zero(nl, nc);
  out.energy = Eigen::MatrixXd::Zero(nl, nc);
  out.masked.setZero(nl, nc);
  for (Eigen::Index i = 0; i < nl; ++i) {
    if (!(links[i].altitude_agl_ft > 0.0))
      throw DomainError("link '" + links[i].link_id + "' altitude must be positive");
    for (Eigen::Index j = 0; j < nc; ++j) {
      const auto g = link_community_geometry(links[i], communities[j]);
      const double level = acoustics::receiver_sel(level_curves, g, opts.directivity);
      if (level <= communities[j].ambient_dba) {
        out.masked(i, j) = 1;
      } else {
        out.sel(i, j) = level;
        out.energy(i, j) = std::pow(10.0, level / 10.0);
      }
    }
  }
  return out;
}

/// Energy-domain exposure of each community, M^T y.
inline Eigen::VectorXd community_energy(const Eigen::MatrixXd& M, const Eigen::VectorXd& y) {
  if (M.rows() != y.size()) throw UsageError("flow vector length must match M rows");
  return M.transpose() * y;
}

/// n = 10 log10(M^T y) - 10 log10(T/T0); std::nullopt where M^T y = 0.
inline std::vector<acoustics::Level> cumulative_noise(const Eigen::MatrixXd& M,
                                                      const Eigen::VectorXd& y,
                                                      double period_s = 3600.0) {
  const double offset = acoustics::duration_offset_db(period_s);
  for (Eigen::Index i = 0; i < y.size(); ++i)
    if (!(y[i] >= 0.0)) throw DomainError("link flows must be nonnegative");
  const Eigen::VectorXd e = community_energy(M, y);
  std::vector<acoustics::Level> n(static_cast<std::size_t>(e.size()));
  for (Eigen::Index j = 0; j < e.size(); ++j)
    if (e[j] > 0.0) n[static_cast<std::size_t>(j)] = 10.0 * std::log10(e[j]) - offset;
  return n;
}

/// n' = max(n - a, 0); silence counts as no increase.
inline Eigen::VectorXd noise_increase(std::span<const acoustics::Level> n,
                                      const Eigen::VectorXd& ambient) {
  if (static_cast<Eigen::Index>(n.size()) != ambient.size())
    throw UsageError("noise and ambient vectors differ in length");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(ambient.size());
  for (Eigen::Index j = 0; j < ambient.size(); ++j)
    if (const auto& level = n[static_cast<std::size_t>(j)])
      out[j] = std::max(*level - ambient[j], 0.0);
  return out;
}

inline void write_impact_csv(std::ostream& os, const NoiseImpactMatrix& m,
                             std::span<const std::string> link_ids,
                             std::span<const std::string> community_ids) {
  os << "link,community,sel_dba,energy,masked\n";
  os.precision(10);
  for (Eigen::Index i = 0; i < m.links(); ++i)
    for (Eigen::Index j = 0; j < m.communities(); ++j)
      os << link_ids[static_cast<std::size_t>(i)] << ','
         << community_ids[static_cast<std::size_t>(j)] << ',' << m.sel(i, j) << ','
         << m.energy(i, j) << ',' << int(m.masked(i, j)) << '\n';
}

}  // namespace uamflow::exposure
