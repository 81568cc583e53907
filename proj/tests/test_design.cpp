#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <vector>

#include "fks/design.hpp"
#include "fks/signal.hpp"

using namespace fks;

namespace {

Signal linspaceSignal(std::size_t n, double a = 0.0, double b = 1.0) {
  std::vector<double> xs(n), fs(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    xs[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  xs.back() = b;
  return Signal(std::move(xs), std::move(fs));
}

}  // namespace

TEST_CASE("degree-0 design matrix has one-hot rows and a diagonal Gramian") {
  Signal sig = linspaceSignal(10);
  KnotVector kv(0, 0.0, 1.0, {0.35, 0.75});
  DesignMatrixBundle bundle(kv, sig);
  const auto& phi = bundle.phi();
  REQUIRE(phi.rows() == 10);
  REQUIRE(phi.cols() == 3);
  for (int i = 0; i < phi.rows(); ++i) {
    CHECK(phi.row(i).sum() == 1.0);  // exactly one span per sample
    CHECK(phi.row(i).maxCoeff() == 1.0);
  }
  Eigen::MatrixXd gram = phi.transpose() * phi;
  for (int r = 0; r < gram.rows(); ++r)
    for (int c = 0; c < gram.cols(); ++c)
      if (r != c) CHECK(gram(r, c) == 0.0);
  // diagonal entries are the span sample counts for breaks 0.35/0.75 on
  // the grid i/9: {0..3/9}, {4/9..6/9}, {7/9..1}
  CHECK(gram(0, 0) == 4.0);
  CHECK(gram(1, 1) == 3.0);
  CHECK(gram(2, 2) == 3.0);
}

TEST_CASE("projection is idempotent, symmetric, and reproduces the column span") {
  Signal sig = linspaceSignal(60);
  KnotVector kv(3, 0.0, 1.0, {0.25, 0.5, 0.8});
  DesignMatrixBundle bundle(kv, sig);
  REQUIRE(bundle.rank() == kv.basisDim());

  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Eigen::VectorXd v(60);
  for (int i = 0; i < 60; ++i) v(i) = unif(rng);

  Eigen::VectorXd pv = bundle.project(v);
  CHECK((bundle.project(pv) - pv).norm() < 1e-12 * (1.0 + pv.norm()));

  // anything already in span(Phi) is fixed by the projector
  Eigen::VectorXd c(kv.basisDim());
  for (int i = 0; i < c.size(); ++i) c(i) = unif(rng);
  Eigen::VectorXd inSpan = bundle.phi() * c;
  CHECK((bundle.project(inSpan) - inSpan).norm() < 1e-10 * (1.0 + inSpan.norm()));

  // residual is orthogonal to the span
  Eigen::VectorXd r = v - pv;
  CHECK((bundle.phi().transpose() * r).norm() < 1e-10 * (1.0 + v.norm()));
}

TEST_CASE("pseudoinverse solves the normal equations on full-rank designs") {
  Signal sig = linspaceSignal(40);
  KnotVector kv(2, 0.0, 1.0, {0.3, 0.7});
  DesignMatrixBundle bundle(kv, sig);

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unif(-2.0, 2.0);
  Eigen::VectorXd f(40);
  for (int i = 0; i < 40; ++i) f(i) = unif(rng);

  Eigen::VectorXd c = bundle.pseudoinverseApply(f);
  Eigen::MatrixXd G = bundle.phi().transpose() * bundle.phi();
  Eigen::VectorXd rhs = bundle.phi().transpose() * f;
  CHECK((G * c - rhs).norm() < 1e-9 * (1.0 + rhs.norm()));
  CHECK((bundle.phi() * c - bundle.project(f)).norm() < 1e-10 * (1.0 + f.norm()));
}

TEST_CASE("pseudoinverse transpose is the adjoint of the pseudoinverse") {
  Signal sig = linspaceSignal(30);
  KnotVector kv(3, 0.0, 1.0, {0.4, 0.6});
  DesignMatrixBundle bundle(kv, sig);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Eigen::VectorXd u(30), w(kv.basisDim());
  for (int i = 0; i < u.size(); ++i) u(i) = unif(rng);
  for (int i = 0; i < w.size(); ++i) w(i) = unif(rng);
  double lhs = bundle.pseudoinverseApply(u).dot(w);
  double rhs = u.dot(bundle.pseudoinverseTransposeApply(w));
  CHECK_THAT(lhs, Catch::Matchers::WithinRel(rhs, 1e-10));
}

TEST_CASE("Schoenberg-Whitney validation flags empty basis supports") {
  Signal sig = linspaceSignal(11);  // samples at 0, 0.1, ..., 1
  // first boundary basis of a degree-1 spline has support (0, 0.01): no sample
  KnotVector bad(1, 0.0, 1.0, {0.01, 0.5});
  auto rep = validateSw(bad, sig);
  CHECK_FALSE(rep.ok());
  CHECK(std::find(rep.violatingBases.begin(), rep.violatingBases.end(), -1) !=
        rep.violatingBases.end());
  CHECK_THROWS_AS(DesignMatrixBundle(bad, sig), std::invalid_argument);

  KnotVector good(1, 0.0, 1.0, {0.25, 0.5});
  CHECK(validateSw(good, sig).ok());
  CHECK_NOTHROW(DesignMatrixBundle(good, sig));
}

TEST_CASE("degree-0 SW check covers the closed final span") {
  Signal sig = linspaceSignal(5);  // 0, 0.25, ..., 1
  // last span [0.9, 1] contains only the endpoint sample x = 1
  KnotVector kv(0, 0.0, 1.0, {0.9});
  CHECK(validateSw(kv, sig).ok());
  // span [0.8, 0.9) holds no sample at all
  KnotVector bad(0, 0.0, 1.0, {0.8, 0.9});
  CHECK_FALSE(validateSw(bad, sig).ok());
}

TEST_CASE("derivative slabs vanish outside the dependent column range") {
  Signal sig = linspaceSignal(50);
  KnotVector kv(2, 0.0, 1.0, {0.2, 0.5, 0.8});
  DesignMatrixBundle bundle(kv, sig);
  REQUIRE(bundle.derivSlabs().size() == 3);
  const int l = 2;
  for (int j = 1; j <= 3; ++j) {
    const auto& D = bundle.derivSlabs()[static_cast<std::size_t>(j - 1)];
    for (int k = kv.firstBasisIndex(); k <= kv.lastBasisIndex(); ++k) {
      if (k <= j && j <= k + l + 1) continue;
      CHECK(D.col(k + l).norm() == 0.0);
    }
  }
}
