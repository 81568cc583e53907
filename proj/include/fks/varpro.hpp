#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "fks/design.hpp"
#include "fks/knots.hpp"
#include "fks/signal.hpp"

namespace fks {

enum class JacobianMode { Full, Kaufman };

struct LinearFit {
  Eigen::VectorXd coeffs;    // c = Phi^+ f
  Eigen::VectorXd residual;  // r = f - P_Phi f
  double objective = 0.0;    // ||r||^2
};

// Linear sub-solve of the variable projection functional via the
// truncated economy SVD of the design matrix.
inline LinearFit linearSolve(const DesignMatrixBundle& bundle, const Eigen::VectorXd& f) {
  LinearFit fit;
  fit.coeffs = bundle.pseudoinverseApply(f);
  fit.residual = f - bundle.project(f);
  fit.objective = fit.residual.squaredNorm();
  return fit;
}

// Golub-Pereyra Jacobian of the VP residual with respect to the free
// knots.  Column j is -(Kf + Lf) where Kf = P_perp D_j c and
// Lf = (Phi^+)^T D_j^T r; the Kaufman variant drops the residual term Lf.
inline Eigen::MatrixXd vpJacobian(const DesignMatrixBundle& bundle,
                                  const LinearFit& fit, JacobianMode mode) {
  const auto& slabs = bundle.derivSlabs();
  const Eigen::Index N = fit.residual.size();
  Eigen::MatrixXd J(N, static_cast<Eigen::Index>(slabs.size()));
  for (std::size_t j = 0; j < slabs.size(); ++j) {
    Eigen::VectorXd dc = slabs[j] * fit.coeffs;
    Eigen::VectorXd col = dc - bundle.project(dc);  // Kf
    if (mode == JacobianMode::Full)
      col += bundle.pseudoinverseTransposeApply(slabs[j].transpose() * fit.residual);  // + Lf
    J.col(static_cast<Eigen::Index>(j)) = -col;
  }
  return J;
}

// Gradient of r2 = ||P_perp f||^2: grad_j = 2 J_{:j}^T r (full Jacobian).
inline Eigen::VectorXd vpGradient(const DesignMatrixBundle& bundle, const LinearFit& fit) {
  Eigen::MatrixXd J = vpJacobian(bundle, fit, JacobianMode::Full);
  return 2.0 * (J.transpose() * fit.residual);
}

struct ConvergenceEstimate {
  double mu = 0.0;
  double rho = 0.0;
  std::vector<std::pair<double, double>> pairs;  // (log ||eps_k||, log ||eps_{k+1}||)
  bool valid = false;
};

// OLS regression on (log||eps_k||, log||eps_{k+1}||); slope gives the
// order rho, intercept gives log mu.  Zero-step pairs are dropped.
inline ConvergenceEstimate estimateConvergence(
    const std::vector<Eigen::VectorXd>& alphaTrajectory) {
  ConvergenceEstimate est;
  if (alphaTrajectory.size() < 4) return est;
  std::vector<double> eps;
  for (std::size_t k = 1; k < alphaTrajectory.size(); ++k)
    eps.push_back((alphaTrajectory[k] - alphaTrajectory[k - 1]).norm());
  for (std::size_t k = 0; k + 1 < eps.size(); ++k) {
    if (eps[k] <= 0.0 || eps[k + 1] <= 0.0) continue;
    est.pairs.emplace_back(std::log(eps[k]), std::log(eps[k + 1]));
  }
  if (est.pairs.size() < 3) return est;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(est.pairs.size());
  for (auto [x, y] : est.pairs) {
    sx += x; sy += y; sxx += x * x; sxy += x * y;
  }
  double denom = n * sxx - sx * sx;
  if (denom == 0.0) return est;
  est.rho = (n * sxy - sx * sy) / denom;
  est.mu = std::exp((sy - est.rho * sx) / n);
  est.valid = true;
  return est;
}

struct VpOptions {
  int maxIter = 4;
  JacobianMode mode = JacobianMode::Full;
  double termTol = 0.1;          // on ||(P_{k+1} - P_k) f||_2
  double deltaMin = -1.0;        // minimum knot gap; h/2 when negative
  double initialDamping = 1e-3;
  double dampingFactor = 10.0;
  double dampingFloor = 1e-12;
  int maxRetries = 12;
  double rankTol = DesignMatrixBundle::kDefaultRankTol;
};

enum class VpStop { MaxIterations, Termination, Stalled };

struct VpResult {
  KnotVector knots;
  Eigen::VectorXd coeffs;
  double objective = 0.0;
  std::vector<double> objectiveTrajectory;
  std::vector<Eigen::VectorXd> alphaTrajectory;  // includes the initial point
  int iterations = 0;
  VpStop stop = VpStop::MaxIterations;
  ConvergenceEstimate convergence;
};

namespace detail {

inline bool admissibleAlpha(const Eigen::VectorXd& alpha, double a, double b, double gap) {
  double prev = a;
  for (Eigen::Index i = 0; i < alpha.size(); ++i) {
    if (alpha(i) - prev < gap) return false;
    prev = alpha(i);
  }
  return b - prev >= gap;
}

inline KnotVector knotsFromAlpha(const KnotVector& proto, const Eigen::VectorXd& alpha) {
  std::vector<double> interior(alpha.data(), alpha.data() + alpha.size());
  return proto.withInterior(std::move(interior));
}

}  // namespace detail

// Levenberg-Marquardt refinement of the free interior knots over the VP
// residual.  Steps are accepted only if the objective decreases and the
// knots keep strict ordering with gaps >= deltaMin; otherwise the damping
// grows and the step is retried.
inline VpResult vpOptimize(const Signal& sig, const KnotVector& init, VpOptions opts = {}) {
  const double a = sig.a(), b = sig.b();
  if (init.a() != a || init.b() != b)
    throw std::invalid_argument("vpOptimize: knot domain must match the signal span");
  const double gap = opts.deltaMin > 0 ? opts.deltaMin : 0.5 * sig.spacing();

  Eigen::VectorXd f = Eigen::Map<const Eigen::VectorXd>(sig.f.data(),
                                                        static_cast<Eigen::Index>(sig.f.size()));
  Eigen::VectorXd alpha = Eigen::Map<const Eigen::VectorXd>(
      init.interior().data(), static_cast<Eigen::Index>(init.interior().size()));

  auto buildBundle = [&](const Eigen::VectorXd& al) {
    return DesignMatrixBundle(detail::knotsFromAlpha(init, al), sig, opts.rankTol);
  };

  DesignMatrixBundle bundle = buildBundle(alpha);  // throws on SW violation at init
  LinearFit fit = linearSolve(bundle, f);
  Eigen::VectorXd projected = f - fit.residual;

  VpResult res{bundle.knots(), fit.coeffs, fit.objective, {fit.objective}, {alpha}, 0,
               VpStop::MaxIterations, {}};
  double damping = opts.initialDamping;

  for (int iter = 0; iter < opts.maxIter; ++iter) {
    if (alpha.size() == 0 || init.degree() == 0) break;  // no knot derivatives
    Eigen::MatrixXd J = vpJacobian(bundle, fit, opts.mode);
    Eigen::VectorXd g = J.transpose() * fit.residual;
    Eigen::MatrixXd JtJ = J.transpose() * J;

    bool accepted = false;
    for (int retry = 0; retry <= opts.maxRetries && !accepted; ++retry) {
      // Two damping metrics per trial: the classic identity shift and
      // Marquardt's curvature scaling, which lets knots in flat regions
      // take useful steps; the better decreasing candidate wins.
      double bestObj = fit.objective;
      Eigen::VectorXd bestAlpha;
      std::optional<DesignMatrixBundle> bestBundle;
      std::optional<LinearFit> bestFit;
      for (int metric = 0; metric < 2; ++metric) {
        Eigen::MatrixXd A = JtJ;
        if (metric == 0)
          A.diagonal().array() += damping;
        else
          A.diagonal() += damping * JtJ.diagonal().cwiseMax(1e-12);
        Eigen::VectorXd alphaNew = alpha + A.ldlt().solve(-g).eval();
        if (!detail::admissibleAlpha(alphaNew, a, b, gap)) continue;
        try {
          DesignMatrixBundle cand = buildBundle(alphaNew);
          LinearFit candFit = linearSolve(cand, f);
          if (candFit.objective < bestObj) {
            bestObj = candFit.objective;
            bestAlpha = std::move(alphaNew);
            bestBundle = std::move(cand);
            bestFit = std::move(candFit);
          }
        } catch (const std::invalid_argument&) {
          // SW violation for the trial knots; treat as a rejected step
        }
      }
      if (bestBundle) {
        alpha = std::move(bestAlpha);
        bundle = std::move(*bestBundle);
        fit = std::move(*bestFit);
        accepted = true;
        break;
      }
      damping *= opts.dampingFactor;
    }

    if (!accepted) {
      res.stop = VpStop::Stalled;
      break;
    }
    damping = std::max(damping / opts.dampingFactor, opts.dampingFloor);
    res.iterations = iter + 1;
    res.alphaTrajectory.push_back(alpha);
    res.objectiveTrajectory.push_back(fit.objective);

    Eigen::VectorXd projectedNew = f - fit.residual;
    double termValue = (projectedNew - projected).norm();
    projected = projectedNew;
    if (termValue < opts.termTol) {
      res.stop = VpStop::Termination;
      break;
    }
  }

  res.knots = bundle.knots();
  res.coeffs = fit.coeffs;
  res.objective = fit.objective;
  res.convergence = estimateConvergence(res.alphaTrajectory);
  return res;
}

// Directional derivative of r2 along the unit outward normal
// n_p = (..., -1, +1, ...) / sqrt(2) of the pth main face of the knot
// simplex, by central finite differences.  Index p is 1-based over the
// interior knots; the pair moved is (alpha_{p-1}, alpha_p).
inline double lethargyProbe(const Signal& sig, const KnotVector& knots, int p,
                            double fdStep = -1.0) {
  const auto& interior = knots.interior();
  if (p < 2 || p > static_cast<int>(interior.size()))
    throw std::invalid_argument("lethargyProbe: face index out of range");
  const double step = fdStep > 0 ? fdStep : 1e-7 * (sig.b() - sig.a());
  Eigen::VectorXd f = Eigen::Map<const Eigen::VectorXd>(sig.f.data(),
                                                        static_cast<Eigen::Index>(sig.f.size()));
  auto r2 = [&](double shift) {
    std::vector<double> in = interior;
    const double s = shift / std::sqrt(2.0);
    in[static_cast<std::size_t>(p - 2)] -= s;
    in[static_cast<std::size_t>(p - 1)] += s;
    DesignMatrixBundle bundle(knots.withInterior(std::move(in)), sig);
    return linearSolve(bundle, f).objective;
  };
  return (r2(step) - r2(-step)) / (2.0 * step);
}

}  // namespace fks
