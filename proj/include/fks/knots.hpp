#pragma once

#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

namespace fks {

// Knot sequence for splines of degree l on [a, b].  The full vector
// tau = (t_{-l}, ..., t_{n+l}) carries multiplicity l+1 at both ends:
// t_{-l} = ... = t_0 = a and t_n = ... = t_{n+l} = b.  Interior knots
// t_1 < ... < t_{n-1} are the free parameters of the fit.
class KnotVector {
public:
  KnotVector(int degree, double a, double b, std::vector<double> interior)
      : degree_(degree), a_(a), b_(b), interior_(std::move(interior)) {
    if (degree_ < 0) throw std::invalid_argument("KnotVector: negative degree");
    if (!(a_ < b_)) throw std::invalid_argument("KnotVector: requires a < b");
    double prev = a_;
    for (double t : interior_) {
      if (!(prev < t) || !(t < b_))
        throw std::invalid_argument("KnotVector: interior knots must satisfy a < t_1 < ... < t_{n-1} < b");
      prev = t;
    }
    rebuildFull();
  }

  int degree() const { return degree_; }
  double a() const { return a_; }
  double b() const { return b_; }
  const std::vector<double>& interior() const { return interior_; }

  // n: number of spans between distinct end knots (interior count + 1).
  int numSpans() const { return static_cast<int>(interior_.size()) + 1; }

  // Dimension of the spanned spline space, n + l, for simple interior knots.
  int basisDim() const { return numSpans() + degree_; }

  // Full padded sequence, n + 2l + 1 entries.
  const std::vector<double>& full() const { return full_; }

  // t_k for k in [-l, n+l].
  double knot(int k) const {
    int i = k + degree_;
    if (i < 0 || i >= static_cast<int>(full_.size()))
      throw std::out_of_range("KnotVector::knot: index " + std::to_string(k));
    return full_[static_cast<std::size_t>(i)];
  }

  // Valid basis indices are k in [-l, n-1]; column index is k + l.
  int firstBasisIndex() const { return -degree_; }
  int lastBasisIndex() const { return numSpans() - 1; }

  // Scaling factor C_k = (-1)^{l+1} (t_{k+l+1} - t_k) relating the
  // unnormalized divided-difference B-spline to the normalized one:
  // N_{l,k} = C_k * B_{l,k}.
  double normalizationFactor(int k) const {
    double span = knot(k + degree_ + 1) - knot(k);
    return (degree_ % 2 == 0) ? -span : span;
  }

  // Replaces the interior knots (same degree and endpoints).
  KnotVector withInterior(std::vector<double> interior) const {
    return KnotVector(degree_, a_, b_, std::move(interior));
  }

  bool operator==(const KnotVector& o) const {
    return degree_ == o.degree_ && a_ == o.a_ && b_ == o.b_ && interior_ == o.interior_;
  }

private:
  void rebuildFull() {
    full_.clear();
    full_.reserve(static_cast<std::size_t>(numSpans() + 2 * degree_ + 1));
    for (int i = 0; i <= degree_; ++i) full_.push_back(a_);
    full_.insert(full_.end(), interior_.begin(), interior_.end());
    for (int i = 0; i <= degree_; ++i) full_.push_back(b_);
  }

  int degree_;
  double a_, b_;
  std::vector<double> interior_;
  std::vector<double> full_;
};

}  // namespace fks
