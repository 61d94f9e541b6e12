#pragma once

// Small fitting helpers shared by the probe and the Monte Carlo diagnostics.

#include <cmath>
#include <vector>

#include "kbm/errors.hpp"

namespace kbm {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;        // residual-based
  double slope_stderr_noise = 0.0;  // from the stated weights alone
};

inline LineFit linear_fit(const std::vector<double>& x,
                          const std::vector<double>& y) {
  size_t n = x.size();
  if (n != y.size() || n < 3)
    throw DegenerateInput("linear fit needs >= 3 matched samples");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  double det = n * sxx - sx * sx;
  if (det <= 0) throw DegenerateInput("degenerate abscissae in linear fit");
  LineFit f;
  f.slope = (n * sxy - sx * sy) / det;
  f.intercept = (sy - f.slope * sx) / n;
  double ss = 0;
  for (size_t i = 0; i < n; ++i) {
    double r = y[i] - f.slope * x[i] - f.intercept;
    ss += r * r;
  }
  f.slope_stderr = std::sqrt(ss / double(n - 2) * (double(n) / det));
  f.slope_stderr_noise = f.slope_stderr;
  return f;
}

// inverse-variance weighted least squares; weights ~ (signal/noise)^2 tame
// the Jensen bias of fitting logs of noisy data
inline LineFit weighted_linear_fit(const std::vector<double>& x,
                                   const std::vector<double>& y,
                                   const std::vector<double>& w) {
  size_t n = x.size();
  if (n != y.size() || n != w.size() || n < 3)
    throw DegenerateInput("weighted fit needs >= 3 matched samples");
  double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < n; ++i) {
    sw += w[i];
    sx += w[i] * x[i];
    sy += w[i] * y[i];
    sxx += w[i] * x[i] * x[i];
    sxy += w[i] * x[i] * y[i];
  }
  double det = sw * sxx - sx * sx;
  if (det <= 0) throw DegenerateInput("degenerate abscissae in weighted fit");
  LineFit f;
  f.slope = (sw * sxy - sx * sy) / det;
  f.intercept = (sy - f.slope * sx) / sw;
  double ss = 0;
  for (size_t i = 0; i < n; ++i) {
    double r = y[i] - f.slope * x[i] - f.intercept;
    ss += w[i] * r * r;
  }
  f.slope_stderr = std::sqrt(ss / double(n - 2) * (sw / det));
  f.slope_stderr_noise = std::sqrt(sw / det);
  return f;
}

inline LineFit loglog_fit(const std::vector<double>& x,
                          const std::vector<double>& y) {
  std::vector<double> lx(x.size()), ly(y.size());
  for (size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0) || !(y[i] > 0))
      throw DegenerateInput("log-log fit needs positive samples");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  return linear_fit(lx, ly);
}

}  // namespace kbm
