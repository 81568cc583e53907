#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <stdexcept>
#include <vector>

#include "fks/knots.hpp"
#include "fks/signal.hpp"

namespace fks {

enum class Norm { L1, L2, LInf };

inline const char* normName(Norm p) {
  switch (p) {
    case Norm::L1: return "l1";
    case Norm::L2: return "l2";
    default: return "linf";
  }
}

// Prefix sums and range-query structures over the sample vector.  All
// first-order objectives reduce to O(1) or O(log L) queries on these.
class PrefixTables {
public:
  explicit PrefixTables(const Signal& sig) : f_(sig.f), h_(sig.spacing()) {
    const std::size_t N = f_.size();
    cumsum_.assign(N + 1, 0.0);
    cumsum2_.assign(N + 1, 0.0);
    for (std::size_t i = 0; i < N; ++i) {
      cumsum_[i + 1] = cumsum_[i] + f_[i];
      cumsum2_[i + 1] = cumsum2_[i] + f_[i] * f_[i];
    }
    buildSparseTables();
  }

  double h() const { return h_; }
  std::size_t size() const { return f_.size(); }
  const std::vector<double>& samples() const { return f_; }

  // sum of f over sample indices [i, j)
  double sum(std::size_t i, std::size_t j) const { return cumsum_[j] - cumsum_[i]; }
  double sumSq(std::size_t i, std::size_t j) const { return cumsum2_[j] - cumsum2_[i]; }

  double rangeMin(std::size_t i, std::size_t j) const { return rangeQuery(minTab_, i, j, true); }
  double rangeMax(std::size_t i, std::size_t j) const { return rangeQuery(maxTab_, i, j, false); }

  // Minimum sum of absolute deviations over [i, j) (attained at the median).
  double rangeSad(std::size_t i, std::size_t j) const {
    std::vector<double> v(f_.begin() + static_cast<std::ptrdiff_t>(i),
                          f_.begin() + static_cast<std::ptrdiff_t>(j));
    std::sort(v.begin(), v.end());
    double med = v[(v.size() - 1) / 2];  // lower median on even counts
    double sad = 0.0;
    for (double s : v) sad += std::abs(s - med);
    return sad;
  }

  // Lower median of samples [i, j).
  double rangeMedian(std::size_t i, std::size_t j) const {
    std::vector<double> v(f_.begin() + static_cast<std::ptrdiff_t>(i),
                          f_.begin() + static_cast<std::ptrdiff_t>(j));
    auto mid = v.begin() + static_cast<std::ptrdiff_t>((v.size() - 1) / 2);
    std::nth_element(v.begin(), mid, v.end());
    return *mid;
  }

private:
  void buildSparseTables() {
    const std::size_t N = f_.size();
    std::size_t levels = 1;
    while ((std::size_t{1} << levels) <= N) ++levels;
    minTab_.assign(levels, f_);
    maxTab_.assign(levels, f_);
    for (std::size_t k = 1; k < levels; ++k) {
      std::size_t half = std::size_t{1} << (k - 1);
      for (std::size_t i = 0; i + (std::size_t{1} << k) <= N; ++i) {
        minTab_[k][i] = std::min(minTab_[k - 1][i], minTab_[k - 1][i + half]);
        maxTab_[k][i] = std::max(maxTab_[k - 1][i], maxTab_[k - 1][i + half]);
      }
    }
  }

  double rangeQuery(const std::vector<std::vector<double>>& tab, std::size_t i,
                    std::size_t j, bool takeMin) const {
    if (i >= j) throw std::invalid_argument("PrefixTables: empty range query");
    std::size_t len = j - i;
    std::size_t k = 0;
    while ((std::size_t{2} << k) <= len) ++k;
    double a = tab[k][i];
    double b = tab[k][j - (std::size_t{1} << k)];
    return takeMin ? std::min(a, b) : std::max(a, b);
  }

  std::vector<double> f_;
  double h_;
  std::vector<double> cumsum_, cumsum2_;
  std::vector<std::vector<double>> minTab_, maxTab_;
};

namespace detail {

// Streaming median with the sum of absolute deviations, two-heap form.
class RunningMedianCost {
public:
  void push(double v) {
    if (lower_.empty() || v <= lower_.top()) {
      lower_.push(v);
      sumLower_ += v;
    } else {
      upper_.push(v);
      sumUpper_ += v;
    }
    rebalance();
  }

  // SAD about the lower median of everything pushed so far.
  double cost() const {
    if (lower_.empty()) return 0.0;
    double med = lower_.top();
    double nl = static_cast<double>(lower_.size());
    double nu = static_cast<double>(upper_.size());
    return (sumUpper_ - med * nu) + (med * nl - sumLower_);
  }

private:
  void rebalance() {
    while (lower_.size() > upper_.size() + 1) {
      double v = lower_.top();
      lower_.pop();
      sumLower_ -= v;
      upper_.push(v);
      sumUpper_ += v;
    }
    while (upper_.size() > lower_.size()) {
      double v = upper_.top();
      upper_.pop();
      sumUpper_ -= v;
      lower_.push(v);
      sumLower_ += v;
    }
  }

  std::priority_queue<double> lower_;  // max-heap
  std::priority_queue<double, std::vector<double>, std::greater<double>> upper_;
  double sumLower_ = 0.0, sumUpper_ = 0.0;
};

}  // namespace detail

// Per-span residual cost of the best single constant in the given norm.
// L2 cost is the sum of squared deviations, L1 the sum of absolute
// deviations, LInf half the range.  Sample counts act as lengths so the
// discrete quadrature weight h factors out of every argmin.
inline double spanConstCost(const PrefixTables& t, std::size_t i, std::size_t j, Norm p) {
  if (i >= j) throw std::invalid_argument("spanConstCost: empty span");
  switch (p) {
    case Norm::L2: {
      double s = t.sum(i, j);
      double cnt = static_cast<double>(j - i);
      return t.sumSq(i, j) - s * s / cnt;
    }
    case Norm::L1:
      return t.rangeSad(i, j);
    default:
      return 0.5 * (t.rangeMax(i, j) - t.rangeMin(i, j));
  }
}

// Best constant for a segment: mean (p=2), lower median (p=1), midrange (p=inf).
inline double firstOrderCoeff(const PrefixTables& t, std::size_t i, std::size_t j, Norm p) {
  if (i >= j) throw std::invalid_argument("firstOrderCoeff: empty segment");
  switch (p) {
    case Norm::L2: return t.sum(i, j) / static_cast<double>(j - i);
    case Norm::L1: return t.rangeMedian(i, j);
    default: return 0.5 * (t.rangeMin(i, j) + t.rangeMax(i, j));
  }
}

// Combined residual cost of the two sub-spans created by a split.
inline double combineCost(double left, double right, Norm p) {
  return p == Norm::LInf ? std::max(left, right) : left + right;
}

// e2 objective of Proposition-1 form for splitting the sample range
// [i, j) at s: more negative is better.  Expressed through the discrete
// antiderivative F realized as h * prefix-sum differences.
inline double e2Objective(const PrefixTables& t, std::size_t i, std::size_t j, std::size_t s) {
  if (!(i < s && s < j)) throw std::invalid_argument("e2Objective: split outside span");
  double fl = t.h() * t.sum(i, s);
  double fr = t.h() * t.sum(s, j);
  double dl = t.h() * static_cast<double>(s - i);
  double dr = t.h() * static_cast<double>(j - s);
  return -fl * fl / dl - fr * fr / dr;
}

// lp objective for p = 1, inf: residual of the best two-piece constant.
inline double epObjective(const PrefixTables& t, std::size_t i, std::size_t j,
                          std::size_t s, Norm p) {
  if (!(i < s && s < j)) throw std::invalid_argument("epObjective: split outside span");
  if (p == Norm::L2) throw std::invalid_argument("epObjective: use e2Objective for p=2");
  double cl = spanConstCost(t, i, s, p);
  double cr = spanConstCost(t, s, j, p);
  if (p == Norm::L1) return t.h() * (cl + cr);
  return std::max(cl, cr);
}

struct SplitCandidate {
  std::size_t split = 0;     // sample index of the candidate knot
  double postCost = 0.0;     // combined sub-span cost after the split
  double improvement = 0.0;  // preCost - postCost (>= 0 up to roundoff)
  bool feasible = false;
};

// Exhaustive leftmost-minimum search for the best single split of the
// sample range [i, j), considering knots in [sLo, sHi] (both inclusive).
inline SplitCandidate bestSplit(const PrefixTables& t, std::size_t i, std::size_t j,
                                std::size_t sLo, std::size_t sHi, Norm p) {
  SplitCandidate best;
  if (j <= i) return best;
  sLo = std::max(sLo, i + 1);
  sHi = std::min(sHi, j - 1);
  if (sLo > sHi) return best;

  const double preCost = spanConstCost(t, i, j, p);

  if (p == Norm::L2) {
    for (std::size_t s = sLo; s <= sHi; ++s) {
      double sl = t.sum(i, s), sr = t.sum(s, j);
      double post = t.sumSq(i, j) - sl * sl / static_cast<double>(s - i) -
                    sr * sr / static_cast<double>(j - s);
      if (!best.feasible || post < best.postCost) best = {s, post, preCost - post, true};
    }
    return best;
  }

  if (p == Norm::LInf) {
    // prefix/suffix running extrema, O(L)
    std::size_t L = j - i;
    std::vector<double> pmin(L + 1), pmax(L + 1), smin(L + 1), smax(L + 1);
    pmin[0] = std::numeric_limits<double>::infinity();
    pmax[0] = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < L; ++k) {
      pmin[k + 1] = std::min(pmin[k], t.samples()[i + k]);
      pmax[k + 1] = std::max(pmax[k], t.samples()[i + k]);
    }
    smin[L] = std::numeric_limits<double>::infinity();
    smax[L] = -std::numeric_limits<double>::infinity();
    for (std::size_t k = L; k-- > 0;) {
      smin[k] = std::min(smin[k + 1], t.samples()[i + k]);
      smax[k] = std::max(smax[k + 1], t.samples()[i + k]);
    }
    for (std::size_t s = sLo; s <= sHi; ++s) {
      std::size_t k = s - i;
      double post = std::max(0.5 * (pmax[k] - pmin[k]), 0.5 * (smax[k] - smin[k]));
      if (!best.feasible || post < best.postCost) best = {s, post, preCost - post, true};
    }
    return best;
  }

  // p = 1: streaming SAD from the left and from the right
  std::size_t L = j - i;
  std::vector<double> leftCost(L + 1, 0.0), rightCost(L + 1, 0.0);
  {
    detail::RunningMedianCost rm;
    for (std::size_t k = 0; k < L; ++k) {
      rm.push(t.samples()[i + k]);
      leftCost[k + 1] = rm.cost();
    }
  }
  {
    detail::RunningMedianCost rm;
    for (std::size_t k = L; k-- > 0;) {
      rm.push(t.samples()[i + k]);
      rightCost[k] = rm.cost();
    }
  }
  for (std::size_t s = sLo; s <= sHi; ++s) {
    std::size_t k = s - i;
    double post = leftCost[k] + rightCost[k];
    if (!best.feasible || post < best.postCost) best = {s, post, preCost - post, true};
  }
  return best;
}

// Result of the greedy knot predictor: interior knots as sample indices.
struct KnotPrediction {
  std::vector<std::size_t> interiorSamples;         // sorted, strictly inside (0, N-1)
  std::vector<std::size_t> insertionOrder;          // same knots, in greedy order
  std::vector<double> errorCurve;                   // eps_p after each insertion
  double epsFinal = 0.0;

  KnotVector toKnotVector(const Signal& sig, int degree) const {
    std::vector<double> interior;
    interior.reserve(interiorSamples.size());
    for (std::size_t s : interiorSamples) interior.push_back(sig.x[s]);
    return KnotVector(degree, sig.a(), sig.b(), std::move(interior));
  }
};

namespace detail {

struct SpanState {
  std::size_t loKnot, hiKnot;  // knot sample indices bounding the span
  double cost = 0.0;           // current residual cost of the span
  SplitCandidate cand;
};

// Sample range covered by a span; the final span is closed so the last
// sample belongs to it.
inline std::pair<std::size_t, std::size_t> spanRange(std::size_t lo, std::size_t hi,
                                                     std::size_t lastIdx) {
  return {lo, hi == lastIdx ? hi + 1 : hi};
}

inline double totalFobaError(const PrefixTables& t,
                             const std::vector<SpanState>& spans, Norm p,
                             std::size_t lastIdx) {
  double acc = 0.0;
  for (const auto& sp : spans) {
    auto [i, j] = spanRange(sp.loKnot, sp.hiKnot, lastIdx);
    double c = spanConstCost(t, i, j, p);
    acc = (p == Norm::LInf) ? std::max(acc, c) : acc + c;
  }
  if (p == Norm::L2) return std::sqrt(acc);
  return acc;
}

}  // namespace detail

// Greedy knot prediction on first-order B-spline approximations.  Inserts
// interior knots one at a time; after each insertion only the two newly
// created spans are re-optimized.  Ties are broken toward the leftmost
// candidate.  numKnots counts all knots (n+1 including both endpoints),
// so numKnots - 2 interior knots are produced.
inline KnotPrediction knotPred(const Signal& sig, std::size_t numKnots,
                               std::size_t delta, Norm p) {
  if (numKnots < 2) throw std::invalid_argument("knotPred: need at least the two boundary knots");
  if (delta < 1) throw std::invalid_argument("knotPred: delta >= 1 sample required");
  const std::size_t N = sig.size();
  const std::size_t lastIdx = N - 1;
  PrefixTables tables(sig);

  // normalization for the eps_p error curve
  const double denom = [&] {
    double mean = tables.sum(0, N) / static_cast<double>(N);
    double d = 0.0;
    for (double v : sig.f) {
      double r = std::abs(v - mean);
      if (p == Norm::L1) d += r;
      else if (p == Norm::L2) d += r * r;
      else d = std::max(d, r);
    }
    return p == Norm::L2 ? std::sqrt(d) : d;
  }();

  std::vector<detail::SpanState> spans;
  auto makeSpan = [&](std::size_t lo, std::size_t hi) {
    detail::SpanState sp{lo, hi, 0.0, {}};
    auto [i, j] = detail::spanRange(lo, hi, lastIdx);
    sp.cost = spanConstCost(tables, i, j, p);
    if (hi - lo > delta && lo + delta <= hi - delta)
      sp.cand = bestSplit(tables, i, j, lo + delta, hi - delta, p);
    return sp;
  };
  spans.push_back(makeSpan(0, lastIdx));

  KnotPrediction out;
  while (out.interiorSamples.size() + 2 < numKnots) {
    // Each candidate's stored error is the global error that would result
    // from inserting it (kept in sync whenever a span changes).  For the
    // additive norms this ordering equals the span-local improvement; for
    // the max norm only splitting the worst span can lower the error.
    double m1 = 0.0, m2 = 0.0;
    std::size_t maxCount = 0;
    if (p == Norm::LInf) {
      for (const auto& sp : spans) {
        if (sp.cost > m1) {
          m2 = m1;
          m1 = sp.cost;
          maxCount = 1;
        } else if (sp.cost == m1) {
          ++maxCount;
        } else {
          m2 = std::max(m2, sp.cost);
        }
      }
    }
    std::size_t bestIdx = spans.size();
    double bestErr = 0.0;
    std::size_t bestSplitAt = 0;
    for (std::size_t q = 0; q < spans.size(); ++q) {
      if (!spans[q].cand.feasible) continue;
      double e;
      if (p == Norm::LInf) {
        double others = (spans[q].cost == m1 && maxCount == 1) ? m2 : m1;
        e = std::max(spans[q].cand.postCost, others);
      } else {
        e = -spans[q].cand.improvement;
      }
      if (bestIdx == spans.size() || e < bestErr ||
          (e == bestErr && spans[q].cand.split < bestSplitAt)) {
        bestIdx = q;
        bestErr = e;
        bestSplitAt = spans[q].cand.split;
      }
    }
    if (bestIdx == spans.size())
      throw std::invalid_argument("knotPred: no admissible knot position left (delta too large or too many knots)");

    auto sp = spans[bestIdx];
    std::size_t s = sp.cand.split;
    out.interiorSamples.insert(
        std::lower_bound(out.interiorSamples.begin(), out.interiorSamples.end(), s), s);
    out.insertionOrder.push_back(s);
    spans[bestIdx] = makeSpan(sp.loKnot, s);
    spans.insert(spans.begin() + static_cast<std::ptrdiff_t>(bestIdx) + 1, makeSpan(s, sp.hiKnot));

    double err = detail::totalFobaError(tables, spans, p, lastIdx);
    out.errorCurve.push_back(denom > 0 ? 100.0 * err / denom : 0.0);
  }
  out.epsFinal = out.errorCurve.empty() ? 0.0 : out.errorCurve.back();
  return out;
}

// eps_p of the first-order approximation after each greedy insertion,
// up to maxKnots total knots.
inline std::vector<double> fobaErrorCurve(const Signal& sig, std::size_t maxKnots,
                                          std::size_t delta, Norm p) {
  return knotPred(sig, maxKnots, delta, p).errorCurve;
}

// Knee rule for picking the knot budget: stop once the relative error
// improvement over the trailing `window` insertions drops below
// tau * current error.  Returns the total knot count (boundary included).
inline std::size_t estimateKnotBudget(const std::vector<double>& errorCurve,
                                      double tau = 0.01, std::size_t window = 3) {
  for (std::size_t k = window; k < errorCurve.size(); ++k) {
    double drop = errorCurve[k - window] - errorCurve[k];
    if (drop < tau * std::max(errorCurve[k], 1e-300))
      return k + 3;  // index k = k+1 insertions = k+3 knots incl. boundaries
  }
  return errorCurve.size() + 2;
}

// Piecewise-constant FOBA reconstruction over the predicted spans.
inline std::vector<double> fobaReconstruction(const Signal& sig,
                                              const std::vector<std::size_t>& interiorSamples,
                                              Norm p) {
  PrefixTables tables(sig);
  const std::size_t N = sig.size();
  std::vector<std::size_t> bounds;
  bounds.push_back(0);
  bounds.insert(bounds.end(), interiorSamples.begin(), interiorSamples.end());
  bounds.push_back(N);
  std::vector<double> rec(N);
  for (std::size_t q = 0; q + 1 < bounds.size(); ++q) {
    std::size_t i = bounds[q], j = bounds[q + 1];
    double c = firstOrderCoeff(tables, i, j, p);
    for (std::size_t k = i; k < j; ++k) rec[k] = c;
  }
  return rec;
}

}  // namespace fks
