#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace fks {

// Uniformly sampled time series.  Abscissae are strictly increasing with
// constant spacing h; optional annotations are ascending sample indices
// (beat markers for ECG-style data).
struct Signal {
  std::vector<double> x;
  std::vector<double> f;
  std::vector<std::size_t> annotations;

  Signal() = default;
  Signal(std::vector<double> xs, std::vector<double> fs,
         std::vector<std::size_t> ann = {})
      : x(std::move(xs)), f(std::move(fs)), annotations(std::move(ann)) {
    validate();
  }

  std::size_t size() const { return x.size(); }
  double a() const { return x.front(); }
  double b() const { return x.back(); }
  double spacing() const { return x.size() > 1 ? x[1] - x[0] : 0.0; }

  void validate(double uniformTol = 1e-9) const {
    if (x.size() < 2) throw std::invalid_argument("Signal: needs at least 2 samples");
    if (x.size() != f.size()) throw std::invalid_argument("Signal: length mismatch");
    const double h = x[1] - x[0];
    if (!(h > 0)) throw std::invalid_argument("Signal: abscissae must increase");
    for (std::size_t i = 1; i < x.size(); ++i) {
      double d = x[i] - x[i - 1];
      if (std::abs(d - h) > uniformTol * std::max(std::abs(h), 1.0))
        throw std::invalid_argument("Signal: non-uniform sampling grid");
    }
    std::size_t prev = 0;
    bool first = true;
    for (std::size_t a : annotations) {
      if (a >= x.size()) throw std::invalid_argument("Signal: annotation index out of range");
      if (!first && a <= prev) throw std::invalid_argument("Signal: annotations must be ascending");
      prev = a;
      first = false;
    }
  }

  // View of samples [begin, end), keeping absolute abscissae.
  Signal slice(std::size_t begin, std::size_t end) const {
    if (begin >= end || end > x.size()) throw std::out_of_range("Signal::slice");
    return Signal(std::vector<double>(x.begin() + static_cast<std::ptrdiff_t>(begin),
                                      x.begin() + static_cast<std::ptrdiff_t>(end)),
                  std::vector<double>(f.begin() + static_cast<std::ptrdiff_t>(begin),
                                      f.begin() + static_cast<std::ptrdiff_t>(end)));
  }
};

// Samples a callable on a uniform grid of n points over [a, b].
template <typename F>
Signal sampleUniform(F&& fn, double a, double b, std::size_t n) {
  if (n < 2) throw std::invalid_argument("sampleUniform: n >= 2 required");
  std::vector<double> xs(n), fs(n);
  const double h = (b - a) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = a + h * static_cast<double>(i);
    fs[i] = fn(xs[i]);
  }
  xs.back() = b;
  return Signal(std::move(xs), std::move(fs));
}

}  // namespace fks
