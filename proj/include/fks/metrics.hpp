#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>

#include "fks/signal.hpp"

namespace fks {

// Synthetic test functions.  f2 is the titanium heat dataset and has no
// closed form; it is loaded from CSV by the pipeline when available.
inline double testFunction(int id, double x) {
  constexpr double pi = 3.14159265358979323846;
  switch (id) {
    case 1: {
      if (x < 0.0 || x > 1.0) throw std::out_of_range("f1: x in [0,1]");
      double s = std::sin(2.0 * pi * x * x * x);
      return s * s * s;
    }
    case 3: {
      if (x < 0.0 || x > 1.0) throw std::out_of_range("f3: x in [0,1]");
      return 90.0 / (1.0 + std::exp(-100.0 * (x - 0.4)));
    }
    case 4: {
      if (x < 0.0 || x > 1.0) throw std::out_of_range("f4: x in [0,1]");
      double g1 = 1.5 * std::exp(-(x - 0.1) * (x - 0.1) / 0.3);
      double g2 = 0.1 * std::exp(-(x - 0.5) * (x - 0.5) / 2.0);
      double g3 = 2.0 * std::exp(-(x - 0.8) * (x - 0.8) / 0.02);
      return (g1 + g2 + g3) / 2.3935;
    }
    case 5: {
      if (x < 0.0 || x > 10.0) throw std::out_of_range("f5: x in [0,10]");
      double d = x - 5.0;
      return 100.0 / std::exp(std::abs(d)) + d * d * d * d * d / 500.0;
    }
    case 6: {
      if (x < 0.0 || x > 1.0) throw std::out_of_range("f6: x in [0,1]");
      if (x < 0.6) return 1.0 / (0.01 + (x - 0.3) * (x - 0.3));
      return 1.0 / (0.015 + (x - 0.65) * (x - 0.65));
    }
    case 2:
      throw std::invalid_argument("f2 is tabulated data; supply the titanium CSV");
    default:
      throw std::invalid_argument("unknown test function id " + std::to_string(id));
  }
}

inline std::pair<double, double> testFunctionDomain(int id) {
  if (id == 5) return {0.0, 10.0};
  return {0.0, 1.0};
}

// Adds i.i.d. uniform [lo, hi] noise; deterministic per seed.
inline Signal addNoise(const Signal& sig, double lo, double hi, std::uint64_t seed) {
  if (lo > hi) throw std::invalid_argument("addNoise: lo > hi");
  Signal out = sig;
  if (lo == hi) {
    for (double& v : out.f) v += lo;
    return out;
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  for (double& v : out.f) v += dist(rng);
  return out;
}

struct ErrorReport {
  double rss = 0.0;
  double mse = 0.0;
  double bre = 0.0;
  double bic = 0.0;
  bool bicDefined = false;  // RSS = 0 makes ln RSS diverge
  double eps1 = 0.0;
  double eps2 = 0.0;  // PRDN
  double epsInf = 0.0;
  bool epsDefined = false;  // constant signals have a zero denominator
  int numSpans = 0;         // n: interior knot count + 1
  int degree = 0;
  std::size_t numSamples = 0;
};

// All of the paper-style error measures between a signal and its
// reconstruction.  n is the span count (n+1 total knots, n-1 free knots).
inline ErrorReport errorReport(std::span<const double> f, std::span<const double> ftilde,
                               int n, int degree) {
  if (f.size() != ftilde.size() || f.empty())
    throw std::invalid_argument("errorReport: length mismatch");
  ErrorReport rep;
  rep.numSpans = n;
  rep.degree = degree;
  rep.numSamples = f.size();
  const std::size_t N = f.size();

  double mean = 0.0;
  for (double v : f) mean += v;
  mean /= static_cast<double>(N);

  double rss = 0.0, bre = 0.0;
  double num1 = 0.0, den1 = 0.0, numInf = 0.0, denInf = 0.0, den2 = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    double d = f[i] - ftilde[i];
    double c = f[i] - mean;
    rss += d * d;
    den2 += c * c;
    num1 += std::abs(d);
    den1 += std::abs(c);
    numInf = std::max(numInf, std::abs(d));
    denInf = std::max(denInf, std::abs(c));
    double w = (i == 0 || i == N - 1) ? 0.5 : 1.0;
    bre += w * d * d;
  }
  rep.rss = rss;
  rep.mse = rss / static_cast<double>(N);
  rep.bre = std::sqrt(bre / static_cast<double>(N - 1));
  if (rss > 0.0) {
    rep.bic = static_cast<double>(N) * std::log(rss) +
              std::log(static_cast<double>(N) * (2.0 * (n - 1) + degree + 1));
    rep.bicDefined = true;
  }
  if (den2 > 0.0) {
    rep.eps1 = 100.0 * num1 / den1;
    rep.eps2 = 100.0 * std::sqrt(rss / den2);
    rep.epsInf = 100.0 * numInf / denInf;
    rep.epsDefined = true;
  }
  return rep;
}

// CR = N / M with M = 2n + degree + 1: interior plus boundary knots and
// the n + degree coefficients.
inline double compressionRatio(double numSamples, int n, int degree) {
  if (numSamples <= 0 || n <= 0) throw std::invalid_argument("compressionRatio: positive arguments required");
  return numSamples / (2.0 * n + degree + 1);
}

}  // namespace fks
