#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "spilloverfree/types.hpp"

namespace spillfree {

struct NelderMeadOptions {
  Index max_evaluations = 1000;
  double spread_tolerance = 1e-10;  // stop when f_worst - f_best falls below this
  double initial_step = 0.1;
  double reflection = 1.0;
  double expansion = 2.0;
  double contraction = 0.5;
  double shrink = 0.5;
};

template <typename Scalar>
struct NelderMeadResult {
  Vector<Scalar> x;
  Scalar value{};
  Index evaluations = 0;
  Index iterations = 0;
  bool converged = false;
  /// Best simplex value after each iteration.
  std::vector<Scalar> trace;
};

/// Derivative-free simplex minimization. The initial simplex is x0 plus
/// `initial_step` along each coordinate axis.
template <typename Scalar, typename Objective>
NelderMeadResult<Scalar> nelder_mead(Objective&& f, const Vector<Scalar>& x0,
                                     const NelderMeadOptions& opt = {}) {
  const Index dim = x0.size();
  std::vector<Vector<Scalar>> pts(static_cast<std::size_t>(dim + 1), x0);
  std::vector<Scalar> vals(static_cast<std::size_t>(dim + 1));
  NelderMeadResult<Scalar> res;

  auto eval = [&](const Vector<Scalar>& x) {
    ++res.evaluations;
    return static_cast<Scalar>(f(x));
  };

  for (Index i = 0; i < dim; ++i) pts[static_cast<std::size_t>(i + 1)](i) += Scalar(opt.initial_step);
  for (std::size_t i = 0; i < pts.size(); ++i) vals[i] = eval(pts[i]);

  std::vector<std::size_t> order(pts.size());
  auto sort_simplex = [&] {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
    std::vector<Vector<Scalar>> p2;
    std::vector<Scalar> v2;
    for (auto i : order) {
      p2.push_back(pts[i]);
      v2.push_back(vals[i]);
    }
    pts.swap(p2);
    vals.swap(v2);
  };

  sort_simplex();
  while (true) {
    const Scalar spread = vals.back() - vals.front();
    if (std::isfinite(static_cast<double>(spread)) && spread < Scalar(opt.spread_tolerance)) {
      res.converged = true;
      break;
    }
    if (res.evaluations >= opt.max_evaluations || dim == 0) break;
    ++res.iterations;

    Vector<Scalar> centroid = Vector<Scalar>::Zero(dim);
    for (Index i = 0; i < dim; ++i) centroid += pts[static_cast<std::size_t>(i)];
    centroid /= Scalar(dim);

    auto& worst = pts.back();
    Scalar& f_worst = vals.back();
    const Scalar f_best = vals.front();
    const Scalar f_second = vals[vals.size() - 2];

    const Vector<Scalar> xr = centroid + Scalar(opt.reflection) * (centroid - worst);
    const Scalar fr = eval(xr);
    if (fr < f_best) {
      const Vector<Scalar> xe = centroid + Scalar(opt.expansion) * (xr - centroid);
      const Scalar fe = eval(xe);
      if (fe < fr) {
        worst = xe;
        f_worst = fe;
      } else {
        worst = xr;
        f_worst = fr;
      }
    } else if (fr < f_second) {
      worst = xr;
      f_worst = fr;
    } else {
      bool shrink = false;
      if (fr < f_worst) {
        const Vector<Scalar> xc = centroid + Scalar(opt.contraction) * (xr - centroid);
        const Scalar fc = eval(xc);
        if (fc <= fr) {
          worst = xc;
          f_worst = fc;
        } else {
          shrink = true;
        }
      } else {
        const Vector<Scalar> xc = centroid + Scalar(opt.contraction) * (worst - centroid);
        const Scalar fc = eval(xc);
        if (fc < f_worst) {
          worst = xc;
          f_worst = fc;
        } else {
          shrink = true;
        }
      }
      if (shrink) {
        for (std::size_t i = 1; i < pts.size(); ++i) {
          pts[i] = pts[0] + Scalar(opt.shrink) * (pts[i] - pts[0]);
          vals[i] = eval(pts[i]);
        }
      }
    }
    sort_simplex();
    res.trace.push_back(vals.front());
  }
  res.x = pts.front();
  res.value = vals.front();
  return res;
}

}  // namespace spillfree
