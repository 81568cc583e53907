#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <string>
#include <vector>

#include "fks/bspline.hpp"
#include "fks/knots.hpp"
#include "fks/signal.hpp"

namespace fks {

// Result of the Schoenberg-Whitney check: every basis function's support
// must contain at least one sample point, otherwise the design matrix has
// a structurally zero column.
struct SwReport {
  std::vector<int> violatingBases;  // basis indices k with empty sampled support
  bool ok() const { return violatingBases.empty(); }
};

inline SwReport validateSw(const KnotVector& knots, const Signal& sig) {
  SwReport rep;
  const int l = knots.degree();
  for (int k = knots.firstBasisIndex(); k <= knots.lastBasisIndex(); ++k) {
    const double lo = knots.knot(k);
    const double hi = knots.knot(k + l + 1);
    bool hit = false;
    for (double xi : sig.x) {
      bool inside = (l == 0) ? (xi >= lo && xi < hi) || (k == knots.lastBasisIndex() && xi == hi)
                             : (xi > lo && xi < hi);
      if (inside) { hit = true; break; }
    }
    if (!hit) rep.violatingBases.push_back(k);
  }
  return rep;
}

// Sampled basis matrix Phi, its economy SVD, and the per-free-knot
// derivative slabs D_j = dPhi/dalpha_j.  Columns of Phi and of each D_j
// are nonzero only over the support [t_k, t_{k+l+1}], which the assembly
// exploits; slabs additionally vanish unless the moved knot lies inside
// the column's support.
class DesignMatrixBundle {
public:
  static constexpr double kDefaultRankTol = 1e-10;

  DesignMatrixBundle(const KnotVector& knots, const Signal& sig,
                     double rankTol = kDefaultRankTol)
      : knots_(knots), rankTol_(rankTol) {
    auto sw = validateSw(knots, sig);
    if (!sw.ok())
      throw std::invalid_argument("DesignMatrixBundle: Schoenberg-Whitney violated for " +
                                  std::to_string(sw.violatingBases.size()) + " basis function(s)");

    const int N = static_cast<int>(sig.size());
    const int l = knots.degree();
    const int dim = knots.basisDim();
    const int m = static_cast<int>(knots.interior().size());

    phi_ = Eigen::MatrixXd::Zero(N, dim);
    for (int k = knots.firstBasisIndex(); k <= knots.lastBasisIndex(); ++k) {
      const double lo = knots.knot(k), hi = knots.knot(k + l + 1);
      auto [i0, i1] = sampleRange(sig, lo, hi);
      for (int i = i0; i < i1; ++i)
        phi_(i, k + l) = (l == 0) ? evalFirstOrder(knots, k, sig.x[static_cast<std::size_t>(i)])
                                  : evalBSpline(knots, k, sig.x[static_cast<std::size_t>(i)]);
    }

    // knot derivatives exist only for degree >= 1; the first-order stage
    // never differentiates with respect to knots
    derivSlabs_.reserve(l >= 1 ? static_cast<std::size_t>(m) : 0);
    for (int j = 1; l >= 1 && j <= m; ++j) {
      Eigen::MatrixXd D = Eigen::MatrixXd::Zero(N, dim);
      // column k depends on t_j only when k <= j <= k+l+1
      for (int k = std::max(knots.firstBasisIndex(), j - l - 1);
           k <= std::min(knots.lastBasisIndex(), j); ++k) {
        const double lo = knots.knot(k), hi = knots.knot(k + l + 1);
        auto [i0, i1] = sampleRange(sig, lo, hi);
        for (int i = i0; i < i1; ++i)
          D(i, k + l) = evalKnotDerivative(knots, k, j, sig.x[static_cast<std::size_t>(i)]);
      }
      derivSlabs_.push_back(std::move(D));
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(phi_, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double cut = rankTol_ * (sv.size() > 0 ? sv(0) : 0.0);
    int r = 0;
    while (r < sv.size() && sv(r) > cut) ++r;
    rank_ = r;
    U_ = svd.matrixU().leftCols(r);
    V_ = svd.matrixV().leftCols(r);
    sigma_ = sv.head(r);
  }

  const KnotVector& knots() const { return knots_; }
  const Eigen::MatrixXd& phi() const { return phi_; }
  const std::vector<Eigen::MatrixXd>& derivSlabs() const { return derivSlabs_; }
  const Eigen::MatrixXd& U() const { return U_; }
  const Eigen::MatrixXd& V() const { return V_; }
  const Eigen::VectorXd& singularValues() const { return sigma_; }
  int rank() const { return rank_; }
  double rankTol() const { return rankTol_; }

  // Phi^+ v = V Sigma^+ U^T v with truncated singular values.
  Eigen::VectorXd pseudoinverseApply(const Eigen::VectorXd& v) const {
    return V_ * (sigma_.cwiseInverse().asDiagonal() * (U_.transpose() * v));
  }

  // (Phi^+)^T v = U Sigma^+ V^T v.
  Eigen::VectorXd pseudoinverseTransposeApply(const Eigen::VectorXd& v) const {
    return U_ * (sigma_.cwiseInverse().asDiagonal() * (V_.transpose() * v));
  }

  // Orthogonal projection onto the column span, P_Phi v = U U^T v.
  Eigen::VectorXd project(const Eigen::VectorXd& v) const {
    return U_ * (U_.transpose() * v);
  }

private:
  // Half-open index range of samples inside [lo, hi]; support endpoints
  // included since B-splines may be nonzero there.
  static std::pair<int, int> sampleRange(const Signal& sig, double lo, double hi) {
    auto first = std::lower_bound(sig.x.begin(), sig.x.end(), lo);
    auto last = std::upper_bound(sig.x.begin(), sig.x.end(), hi);
    return {static_cast<int>(first - sig.x.begin()), static_cast<int>(last - sig.x.begin())};
  }

  KnotVector knots_;
  double rankTol_;
  int rank_ = 0;
  Eigen::MatrixXd phi_;
  std::vector<Eigen::MatrixXd> derivSlabs_;
  Eigen::MatrixXd U_, V_;
  Eigen::VectorXd sigma_;
};

}  // namespace fks
