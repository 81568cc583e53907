#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "fks/knots.hpp"

namespace fks {

namespace detail {

inline double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return r;
}

// Divided difference [v_0, ..., v_m] (x - t)_+^l taken in the knot
// argument t.  Nodes must be ascending; coincident nodes are resolved by
// the confluent limit rule, which needs the jth derivative of the
// truncated power and is defined only for multiplicities up to l+1.
//
// The zero-power factor (x - t)_+^0 is right-continuous (1 for x >= t)
// except when rightLimit is set, where the left-sided value is used so
// evaluation at the domain endpoint b picks up the closure convention.
inline double truncatedPowerDivDiff(std::span<const double> nodes, int l,
                                    double x, bool rightLimit) {
  const int m = static_cast<int>(nodes.size()) - 1;
  if (m < 0) throw std::invalid_argument("divided difference: empty node list");

  auto indicator = [&](double u) -> double {
    return (u > 0.0 || (!rightLimit && u == 0.0)) ? 1.0 : 0.0;
  };
  // d^j/dt^j (x-t)_+^l / j!  =  (-1)^j C(l,j) (x-t)_+^{l-j}
  auto derivOverFact = [&](double t, int j) -> double {
    if (j > l)
      throw std::invalid_argument("divided difference: knot multiplicity exceeds degree+1");
    double u = x - t;
    double p = (l - j == 0) ? indicator(u)
                            : (u > 0.0 ? std::pow(u, l - j) : 0.0);
    double c = binomial(l, j) * p;
    return (j % 2 == 0) ? c : -c;
  };

  std::vector<double> c(static_cast<std::size_t>(m) + 1);
  for (int i = 0; i <= m; ++i) c[static_cast<std::size_t>(i)] = derivOverFact(nodes[static_cast<std::size_t>(i)], 0);
  for (int j = 1; j <= m; ++j) {
    for (int i = m; i >= j; --i) {
      double lo = nodes[static_cast<std::size_t>(i - j)];
      double hi = nodes[static_cast<std::size_t>(i)];
      if (hi != lo)
        c[static_cast<std::size_t>(i)] = (c[static_cast<std::size_t>(i)] - c[static_cast<std::size_t>(i - 1)]) / (hi - lo);
      else
        c[static_cast<std::size_t>(i)] = derivOverFact(hi, j);
    }
  }
  return c[static_cast<std::size_t>(m)];
}

}  // namespace detail

// Characteristic-function basis for degree 0: 1 on [t_k, t_{k+1}), else 0.
// The last span is treated as closed so a sample at x = b is covered.
inline double evalFirstOrder(const KnotVector& knots, int k, double x) {
  if (knots.degree() != 0)
    throw std::invalid_argument("evalFirstOrder: degree must be 0");
  if (k < 0 || k > knots.lastBasisIndex())
    throw std::out_of_range("evalFirstOrder: basis index out of range");
  const double lo = knots.knot(k);
  const double hi = knots.knot(k + 1);
  if (x >= lo && x < hi) return 1.0;
  if (k == knots.lastBasisIndex() && x == knots.b()) return 1.0;
  return 0.0;
}

// Unnormalized B-spline B_{l,k}(tau; x) = [t_k, ..., t_{k+l+1}] (x-t)_+^l.
// The conventional normalized basis is N_{l,k} = C_k B_{l,k} with
// C_k = (-1)^{l+1} (t_{k+l+1} - t_k); see KnotVector::normalizationFactor.
inline double evalBSpline(const KnotVector& knots, int k, double x) {
  if (k < knots.firstBasisIndex() || k > knots.lastBasisIndex())
    throw std::out_of_range("evalBSpline: basis index out of range");
  const int l = knots.degree();
  const double lo = knots.knot(k);
  const double hi = knots.knot(k + l + 1);
  if (x < lo || x > hi) return 0.0;
  std::vector<double> nodes(static_cast<std::size_t>(l) + 2);
  for (int i = 0; i <= l + 1; ++i) nodes[static_cast<std::size_t>(i)] = knots.knot(k + i);
  return detail::truncatedPowerDivDiff(nodes, l, x, x >= knots.b());
}

// Partial derivative of B_{l,j} with respect to the knot t_k: the divided
// difference over (t_j, ..., t_k, t_k, ..., t_{j+l+1}) when j <= k <= j+l+1,
// zero otherwise.
inline double evalKnotDerivative(const KnotVector& knots, int j, int k, double x) {
  const int l = knots.degree();
  if (l < 1) throw std::invalid_argument("evalKnotDerivative: degree >= 1 required");
  if (j < knots.firstBasisIndex() || j > knots.lastBasisIndex())
    throw std::out_of_range("evalKnotDerivative: basis index out of range");
  if (k < j || k > j + l + 1) return 0.0;
  const double lo = knots.knot(j);
  const double hi = knots.knot(j + l + 1);
  if (x < lo || x > hi) return 0.0;
  std::vector<double> nodes;
  nodes.reserve(static_cast<std::size_t>(l) + 3);
  for (int i = j; i <= j + l + 1; ++i) {
    nodes.push_back(knots.knot(i));
    if (i == k) nodes.push_back(knots.knot(i));
  }
  return detail::truncatedPowerDivDiff(nodes, l, x, x >= knots.b());
}

// Degree-l spline as knots plus coefficients in the unnormalized basis.
struct SplineModel {
  KnotVector knots;
  std::vector<double> coeffs;

  SplineModel(KnotVector kv, std::vector<double> c)
      : knots(std::move(kv)), coeffs(std::move(c)) {
    if (static_cast<int>(coeffs.size()) != knots.basisDim())
      throw std::invalid_argument("SplineModel: coefficient count != basis dimension");
  }

  double operator()(double x) const {
    if (x < knots.a() || x > knots.b())
      throw std::out_of_range("SplineModel: evaluation point outside [a, b]");
    const int l = knots.degree();
    if (l == 0) {
      // locate the span containing x; closed at the right endpoint
      const auto& in = knots.interior();
      int s = static_cast<int>(std::upper_bound(in.begin(), in.end(), x) - in.begin());
      if (x == knots.b()) s = knots.lastBasisIndex();
      return coeffs[static_cast<std::size_t>(s)];
    }
    double v = 0.0;
    for (int k = knots.firstBasisIndex(); k <= knots.lastBasisIndex(); ++k) {
      if (x < knots.knot(k) || x > knots.knot(k + l + 1)) continue;
      v += coeffs[static_cast<std::size_t>(k + l)] * evalBSpline(knots, k, x);
    }
    return v;
  }
};

// Pointwise evaluation of the fitted model over a set of abscissae.
inline std::vector<double> evalModel(const SplineModel& model, std::span<const double> xs) {
  std::vector<double> out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) out[i] = model(xs[i]);
  return out;
}

// Exact derivative of a spline model: degree drops by one, coefficients
// follow the classical difference formula for the normalized basis.
inline SplineModel splineDerivative(const SplineModel& model) {
  const KnotVector& kv = model.knots;
  const int l = kv.degree();
  if (l < 1) throw std::invalid_argument("splineDerivative: degree >= 1 required");
  const int n = kv.numSpans();

  // convert to normalized coefficients a_k = c_k / C_k
  std::vector<double> a(static_cast<std::size_t>(kv.basisDim()));
  for (int k = kv.firstBasisIndex(); k <= kv.lastBasisIndex(); ++k)
    a[static_cast<std::size_t>(k + l)] =
        model.coeffs[static_cast<std::size_t>(k + l)] / kv.normalizationFactor(k);

  KnotVector dk(l - 1, kv.a(), kv.b(), kv.interior());
  std::vector<double> dc(static_cast<std::size_t>(dk.basisDim()));
  // s'(x) = sum_{k=-l+1}^{n-1} l (a_k - a_{k-1}) / (t_{k+l} - t_k) N_{l-1,k}
  for (int k = -l + 1; k <= n - 1; ++k) {
    double gap = kv.knot(k + l) - kv.knot(k);
    double ak = a[static_cast<std::size_t>(k + l)];
    double akm = a[static_cast<std::size_t>(k - 1 + l)];
    double da = (gap != 0.0) ? static_cast<double>(l) * (ak - akm) / gap : 0.0;
    dc[static_cast<std::size_t>(k + l - 1)] = da * dk.normalizationFactor(k);
  }
  return SplineModel(std::move(dk), std::move(dc));
}

}  // namespace fks
