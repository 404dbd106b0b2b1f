#pragma once

// Social welfare functions, the Gini coefficient and the community reaction
// score used to evaluate designs.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "uamflow/errors.hpp"

namespace uamflow::welfare {

namespace detail {
inline void require_nonempty(std::span<const double> u, const char* what) {
  if (u.empty()) throw UsageError(std::string(what) + ": utility vector is empty");
  for (double x : u)
    if (!std::isfinite(x)) throw DomainError(std::string(what) + ": utilities must be finite");
}
}  // namespace detail

inline double mean(std::span<const double> u) {
  detail::require_nonempty(u, "mean");
  return std::accumulate(u.begin(), u.end(), 0.0) / static_cast<double>(u.size());
}

/// Fairness-threshold SWF: Delta + (1/n) sum_i min(u_i - Delta, u_min).
/// Utilitarian (the mean) while the spread stays within Delta; parties further
/// above the minimum only count as u_min + Delta.
inline double fairness_threshold_swf(std::span<const double> u, double delta) {
  detail::require_nonempty(u, "fairness_threshold_swf");
  if (!(delta >= 0.0)) throw DomainError("fairness threshold must be nonnegative");
  const double u_min = *std::min_element(u.begin(), u.end());
  double sum = 0.0;
  for (double x : u) sum += std::min(x - delta, u_min);
  return delta + sum / static_cast<double>(u.size());
}

/// Two-party form: min + Delta once the gap reaches Delta, the mean otherwise.
inline double fairness_threshold_swf_2party(double u1, double u2, double delta) {
  if (!(delta >= 0.0)) throw DomainError("fairness threshold must be nonnegative");
  if (std::abs(u1 - u2) >= delta) return std::min(u1, u2) + delta;
  return 0.5 * (u1 + u2);
}

inline double alpha_fairness_swf(std::span<const double> u, double alpha) {
  detail::require_nonempty(u, "alpha_fairness_swf");
  if (!(alpha >= 0.0)) throw DomainError("alpha must be nonnegative");
  double sum = 0.0;
  for (double x : u) {
    if (alpha >= 1.0 ? !(x > 0.0) : !(x >= 0.0))
      throw DomainError("alpha-fairness utilities must be positive for alpha >= 1");
    sum += alpha == 1.0 ? std::log(x) : std::pow(x, 1.0 - alpha) / (1.0 - alpha);
  }
  return sum;
}

/// (1 / 2 n^2 mean) sum_i sum_j |u_i - u_j|, computed in O(n log n) from the
/// sorted vector. The all-zero vector has Gini 0.
inline double gini(std::span<const double> u) {
  detail::require_nonempty(u, "gini");
  std::vector<double> s(u.begin(), u.end());
  for (double x : s)
    if (x < 0.0) throw DomainError("gini: utilities must be nonnegative");
  std::sort(s.begin(), s.end());
  const double n = static_cast<double>(s.size());
  const double total = std::accumulate(s.begin(), s.end(), 0.0);
  if (total <= 0.0) return 0.0;
  // sum_{i<j} (s_j - s_i) = sum_j s_j (2j - n + 1) for 0-based sorted j
  double pair_sum = 0.0;
  for (std::size_t j = 0; j < s.size(); ++j)
    pair_sum += s[j] * (2.0 * static_cast<double>(j) - n + 1.0);
  return 2.0 * pair_sum / (2.0 * n * total);
}

/// Community reaction to a noise increase (dB above ambient), as a concave,
/// nondecreasing piecewise-linear curve through anchor points. Clamps to the
/// last anchor's score beyond its abscissa.
class ReactionScore {
 public:
  using Anchor = std::pair<double, double>;  // (dB increase, score)

  static std::vector<Anchor> default_anchors() {
    return {{0.0, 0.0}, {6.0, 0.30}, {11.0, 0.50}, {21.0, 0.85}, {28.0, 1.0}};
  }

  ReactionScore() : ReactionScore(default_anchors()) {}

  explicit ReactionScore(std::vector<Anchor> anchors) : anchors_(std::move(anchors)) {
    std::vector<std::string> problems;
    if (anchors_.size() < 2) problems.push_back("reaction score needs at least two anchors");
    for (std::size_t i = 0; i + 1 < anchors_.size(); ++i) {
      if (!(anchors_[i + 1].first > anchors_[i].first))
        problems.push_back("anchor abscissae must be strictly increasing at index " +
                           std::to_string(i + 1));
      else if (anchors_[i + 1].second < anchors_[i].second)
        problems.push_back("anchor scores must be nondecreasing at index " + std::to_string(i + 1));
    }
    if (problems.empty()) {
      for (std::size_t i = 1; i + 1 < anchors_.size(); ++i)
        if (slope(i) > slope(i - 1) + 1e-12)
          problems.push_back("anchors are not concave at index " + std::to_string(i));
      if (!anchors_.empty() && anchors_.front().first > 0.0)
        problems.push_back("first anchor must be at or below 0 dB");
    }
    if (!problems.empty()) throw ValidationError(std::move(problems));
  }

  const std::vector<Anchor>& anchors() const noexcept { return anchors_; }

  double operator()(double increase_db) const {
    if (!(increase_db >= 0.0)) throw DomainError("noise increase must be nonnegative");
    if (increase_db >= anchors_.back().first) return anchors_.back().second;
    auto it = std::upper_bound(anchors_.begin(), anchors_.end(), increase_db,
                               [](double x, const Anchor& a) { return x < a.first; });
    if (it == anchors_.begin()) return anchors_.front().second;
    const auto& hi = *it;
    const auto& lo = *(it - 1);
    return lo.second + (increase_db - lo.first) * (hi.second - lo.second) / (hi.first - lo.first);
  }

 private:
  double slope(std::size_t i) const {
    return (anchors_[i + 1].second - anchors_[i].second) /
           (anchors_[i + 1].first - anchors_[i].first);
  }

  std::vector<Anchor> anchors_;
};

}  // namespace uamflow::welfare
