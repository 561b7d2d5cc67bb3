#pragma once

// Independent reference implementations used only by tests. None of these
// share code with the library beyond plain data types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <set>
#include <vector>

#include "ir/hull.hpp"
#include "ir/metrics.hpp"

namespace oracle {

/// Two-sided permutation test of independence on a 2x2 table. Outcome labels
/// are shuffled over the rows (margins fixed) with std::mt19937_64; the p-value
/// is the share of shuffles whose Pearson statistic is at least the observed
/// one. Uses its own RNG and its own statistic code.
inline double permutation_pvalue(std::uint64_t a, std::uint64_t b, std::uint64_t c, std::uint64_t d,
                                 std::size_t draws, std::uint64_t seed) {
  const std::size_t n = a + b + c + d;
  const std::size_t present = a + c, good = a + b;
  auto stat = [&](double x) {  // x = count of present & good
    const double e = double(present) * double(good) / double(n);
    const double ab = double(present), gb = double(good);
    const double row2 = double(n) - ab, col2 = double(n) - gb;
    const double dev = (x - e) * (x - e);
    return dev * double(n) * double(n) / (ab * gb * row2 * col2) * double(n);
  };
  const double observed = stat(double(a));
  std::vector<std::uint8_t> outcome(n, 0);
  std::fill(outcome.begin(), outcome.begin() + static_cast<std::ptrdiff_t>(good), 1);
  std::mt19937_64 gen(seed);
  std::size_t extreme = 0;
  for (std::size_t k = 0; k < draws; ++k) {
    std::shuffle(outcome.begin(), outcome.end(), gen);
    std::size_t x = 0;
    for (std::size_t i = 0; i < present; ++i) x += outcome[i];
    if (stat(double(x)) >= observed * (1 - 1e-12)) ++extreme;
  }
  return double(extreme) / double(draws);
}

/// Exact permutation p-value: sums hypergeometric probabilities over every
/// table with the same margins whose statistic is at least the observed one.
inline double exact_permutation_pvalue(std::uint64_t a, std::uint64_t b, std::uint64_t c,
                                       std::uint64_t d) {
  const std::int64_t n = a + b + c + d, r = a + c, g = a + b;
  auto log_choose = [](double n_, double k_) {
    return std::lgamma(n_ + 1) - std::lgamma(k_ + 1) - std::lgamma(n_ - k_ + 1);
  };
  auto dev = [&](double x) {
    const double e = double(r) * double(g) / double(n);
    return std::abs(x - e);
  };
  const double obs = dev(double(a));
  double p = 0;
  for (std::int64_t x = std::max<std::int64_t>(0, r + g - n); x <= std::min(r, g); ++x) {
    if (dev(double(x)) < obs - 1e-9) continue;
    p += std::exp(log_choose(double(g), double(x)) + log_choose(double(n - g), double(r - x)) -
                  log_choose(double(n), double(r)));
  }
  return std::min(1.0, p);
}

/// Hull vertices by brute force: a point is a vertex when some line through
/// it has every other distinct point strictly on one side, or it is an
/// endpoint of a degenerate (collinear) set. Returned as a set for comparison.
inline std::set<std::pair<double, double>> brute_hull_vertices(const std::vector<ir::Point2>& in) {
  std::set<std::pair<double, double>> uniq;
  for (const auto& p : in) uniq.insert({p.x, p.y});
  std::vector<ir::Point2> pts;
  for (const auto& [x, y] : uniq) pts.push_back({x, y});
  std::set<std::pair<double, double>> out;
  if (pts.size() <= 2) return uniq;

  auto orient = [](const ir::Point2& o, const ir::Point2& a, const ir::Point2& b) {
    const double v = (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
    return (v > 0) - (v < 0);
  };
  bool all_collinear = true;
  for (std::size_t k = 2; k < pts.size() && all_collinear; ++k)
    all_collinear = orient(pts[0], pts[1], pts[k]) == 0;
  if (all_collinear) {  // lexicographic extremes
    out.insert({pts.front().x, pts.front().y});
    out.insert({pts.back().x, pts.back().y});
    return out;
  }
  // an edge (i,j) is a hull edge when all points lie on one closed side and
  // every point on the line lies between i and j
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = 0; j < pts.size(); ++j) {
      if (i == j) continue;
      bool ok = true;
      for (std::size_t k = 0; k < pts.size() && ok; ++k) {
        if (k == i || k == j) continue;
        const int o = orient(pts[i], pts[j], pts[k]);
        if (o < 0) ok = false;
        if (o == 0) {
          const double t = (pts[k].x - pts[i].x) * (pts[j].x - pts[i].x) +
                           (pts[k].y - pts[i].y) * (pts[j].y - pts[i].y);
          const double len2 = (pts[j].x - pts[i].x) * (pts[j].x - pts[i].x) +
                              (pts[j].y - pts[i].y) * (pts[j].y - pts[i].y);
          if (t < 0 || t > len2) ok = false;
        }
      }
      if (ok) {
        out.insert({pts[i].x, pts[i].y});
        out.insert({pts[j].x, pts[j].y});
      }
    }
  return out;
}

/// Brute-force containment: p is inside the convex polygon when it is not
/// strictly right of any counterclockwise edge.
inline bool brute_contains(const std::vector<ir::Point2>& hull, const ir::Point2& p, double tol) {
  if (hull.size() < 3) return ir::hull_contains(hull, p, tol);
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const auto& a = hull[i];
    const auto& b = hull[(i + 1) % hull.size()];
    if ((b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x) < -tol) return false;
  }
  return true;
}

/// Textbook two-pass OLS in long double.
inline std::pair<long double, long double> ols(const std::vector<std::pair<double, double>>& pts) {
  long double mx = 0, my = 0;
  for (auto [x, y] : pts) mx += x, my += y;
  mx /= pts.size();
  my /= pts.size();
  long double sxy = 0, sxx = 0;
  for (auto [x, y] : pts) sxy += (x - mx) * (y - my), sxx += (x - mx) * (x - mx);
  const long double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

}  // namespace oracle
