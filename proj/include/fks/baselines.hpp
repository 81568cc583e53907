#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include "fks/design.hpp"
#include "fks/knots.hpp"
#include "fks/signal.hpp"
#include "fks/varpro.hpp"

namespace fks {

// Equispaced interior knots: n spans, n-1 interior knots.
inline KnotVector uniformInit(double a, double b, int n, int degree) {
  if (n < 2) throw std::invalid_argument("uniformInit: n >= 2 required");
  std::vector<double> interior;
  interior.reserve(static_cast<std::size_t>(n - 1));
  for (int i = 1; i < n; ++i)
    interior.push_back(a + (b - a) * static_cast<double>(i) / static_cast<double>(n));
  return KnotVector(degree, a, b, std::move(interior));
}

// Sorted uniform-random interior knots, resampled until all gaps
// (including to the endpoints) are at least delta.
inline KnotVector randomInit(double a, double b, int n, int degree, double delta,
                             std::uint64_t seed, int maxAttempts = 1000) {
  if (n < 2) throw std::invalid_argument("randomInit: n >= 2 required");
  if (delta * n > (b - a))
    throw std::invalid_argument("randomInit: delta infeasible for requested knot count");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(a, b);
  for (int attempt = 0; attempt < maxAttempts; ++attempt) {
    std::vector<double> interior(static_cast<std::size_t>(n - 1));
    for (double& v : interior) v = dist(rng);
    std::sort(interior.begin(), interior.end());
    double prev = a;
    bool ok = true;
    for (double v : interior) {
      if (v - prev < delta) { ok = false; break; }
      prev = v;
    }
    if (ok && b - prev >= delta) return KnotVector(degree, a, b, std::move(interior));
  }
  throw std::runtime_error("randomInit: could not sample admissible knots");
}

struct KnotReductionOptions {
  std::size_t initialCap = 512;  // max interior knots at initialization
  double rankTol = DesignMatrixBundle::kDefaultRankTol;
};

namespace detail {

inline double refitRss(const Signal& sig, const KnotVector& knots, double rankTol) {
  DesignMatrixBundle bundle(knots, sig, rankTol);
  Eigen::VectorXd f = Eigen::Map<const Eigen::VectorXd>(sig.f.data(),
                                                        static_cast<Eigen::Index>(sig.f.size()));
  return linearSolve(bundle, f).objective;
}

// Removal cost scored by a local refit over the knot's support window
// (+-(l+1) spans); the actual removal is followed by a global refit.
inline double localRemovalCost(const Signal& sig, const std::vector<double>& interior,
                               std::size_t removeIdx, int degree, double rankTol) {
  const int l = degree;
  const int m = static_cast<int>(interior.size());
  const int j = static_cast<int>(removeIdx);
  double lo = (j - (l + 1) >= 0) ? interior[static_cast<std::size_t>(j - (l + 1))] : sig.a();
  double hi = (j + (l + 1) < m) ? interior[static_cast<std::size_t>(j + (l + 1))] : sig.b();

  auto first = std::lower_bound(sig.x.begin(), sig.x.end(), lo);
  auto last = std::upper_bound(sig.x.begin(), sig.x.end(), hi);
  std::size_t i0 = static_cast<std::size_t>(first - sig.x.begin());
  std::size_t i1 = static_cast<std::size_t>(last - sig.x.begin());
  if (i1 - i0 < 2) return std::numeric_limits<double>::infinity();
  Signal local = sig.slice(i0, i1);

  auto localKnots = [&](bool withKnot) {
    std::vector<double> in;
    for (int k = std::max(0, j - l); k <= std::min(m - 1, j + l); ++k) {
      if (!withKnot && k == j) continue;
      double t = interior[static_cast<std::size_t>(k)];
      if (t > local.a() && t < local.b()) in.push_back(t);
    }
    return KnotVector(degree, local.a(), local.b(), std::move(in));
  };

  try {
    double with = refitRss(local, localKnots(true), rankTol);
    double without = refitRss(local, localKnots(false), rankTol);
    return without - with;
  } catch (const std::invalid_argument&) {
    return std::numeric_limits<double>::infinity();
  }
}

}  // namespace detail

struct KnotReductionResult {
  KnotVector knots;
  std::vector<double> rssTrajectory;  // global-refit RSS after each removal
};

// Greedy knot reduction: start from densely placed interior knots and
// repeatedly drop the knot whose absence increases the squared error the
// least, until `targetKnots` total knots remain.  Targets above the
// initial knot count are satisfied without any removal.
inline KnotReductionResult knotReduction(const Signal& sig, int degree, std::size_t targetKnots,
                                         KnotReductionOptions opts = {}) {
  if (targetKnots < 2) throw std::invalid_argument("knotReduction: target below 2 knots");
  const std::size_t N = sig.size();

  // initialize on the sample grid; degree >= 1 needs a sample strictly
  // inside every boundary-basis support, hence stride 2
  std::size_t stride = degree == 0 ? 1 : 2;
  std::vector<double> interior;
  for (std::size_t i = stride; i + 1 < N; i += stride) interior.push_back(sig.x[i]);
  if (interior.size() > opts.initialCap) {
    std::vector<double> sub;
    sub.reserve(opts.initialCap);
    for (std::size_t k = 0; k < opts.initialCap; ++k) {
      std::size_t idx = (k * interior.size()) / opts.initialCap;
      sub.push_back(interior[idx]);
    }
    sub.erase(std::unique(sub.begin(), sub.end()), sub.end());
    interior = std::move(sub);
  }

  std::vector<double> trajectory;
  while (interior.size() + 2 > targetKnots && !interior.empty()) {
    std::size_t bestIdx = interior.size();
    double bestCost = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < interior.size(); ++j) {
      double c = detail::localRemovalCost(sig, interior, j, degree, opts.rankTol);
      if (c < bestCost) {
        bestCost = c;
        bestIdx = j;
      }
    }
    if (bestIdx == interior.size())
      throw std::runtime_error("knotReduction: no admissible removal found");
    interior.erase(interior.begin() + static_cast<std::ptrdiff_t>(bestIdx));
    trajectory.push_back(
        detail::refitRss(sig, KnotVector(degree, sig.a(), sig.b(), interior), opts.rankTol));
  }
  return {KnotVector(degree, sig.a(), sig.b(), std::move(interior)), std::move(trajectory)};
}

}  // namespace fks
