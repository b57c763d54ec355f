/* Copyright 2026 The pplab Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "pplab/error.hpp"

namespace pplab::lexstats {

namespace detail {

// Continued fraction for the incomplete beta function, modified Lentz method.
inline double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIterations = 10000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  throw Error("incomplete beta continued fraction did not converge");
}

}  // namespace detail

/// Regularized incomplete beta I_x(a, b).
inline double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0 && b > 0.0)) throw InvalidArgument("incomplete beta needs a, b > 0");
  if (!(x >= 0.0 && x <= 1.0)) throw InvalidArgument("incomplete beta needs x in [0, 1]");
  if (x == 0.0 || x == 1.0) return x;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * detail::beta_continued_fraction(b, a, 1.0 - x) / b;
}

/// Two-sided p-value of a t statistic with `df` degrees of freedom.
inline double t_two_sided_p(double t, double df) {
  if (std::isinf(t)) return 0.0;
  if (std::isnan(t)) return 1.0;
  return incomplete_beta(0.5 * df, 0.5, df / (df + t * t));
}

/// Cumulative Student t distribution.
inline double t_cdf(double t, double df) {
  const double tail = 0.5 * t_two_sided_p(t, df);
  return t >= 0 ? 1.0 - tail : tail;
}

struct Coefficient {
  std::string name;
  double estimate = 0.0;
  double std_error = 0.0;
  double t = 0.0;
  double p = 1.0;
};

struct RegressionResult {
  std::vector<Coefficient> coefficients;  // in design-matrix column order
  double r_squared = 0.0;
  std::size_t n = 0;
  double df_residual = 0.0;
  Eigen::VectorXd residuals;

  const Coefficient& at(const std::string& name) const {
    for (auto& c : coefficients)
      if (c.name == name) return c;
    throw InvalidArgument("no coefficient named " + name);
  }
};

class RankDeficient : public Error {
 public:
  RankDeficient(const std::string& what, std::vector<std::string> columns)
      : Error(what), columns_(std::move(columns)) {}
  const std::vector<std::string>& columns() const { return columns_; }

 private:
  std::vector<std::string> columns_;
};

/// Ordinary least squares via column-pivoted Householder QR. `X` must
/// already contain the intercept column if one is wanted. Standard errors
/// use the unbiased residual variance RSS / (n - k) for k columns; p-values
/// are two-sided from the t distribution with n - k degrees of freedom.
inline RegressionResult ols_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                std::vector<std::string> names = {}) {
  const auto n = X.rows(), k = X.cols();
  if (y.size() != n) throw ShapeMismatch("design matrix and response differ in length");
  if (names.empty())
    for (Eigen::Index j = 0; j < k; ++j) names.push_back("x" + std::to_string(j));
  if (static_cast<Eigen::Index>(names.size()) != k) throw ShapeMismatch("one name per design column required");
  if (n <= k) throw InvalidArgument("need more observations (" + std::to_string(n) + ") than columns (" + std::to_string(k) + ")");

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(1e-10);
  if (qr.rank() < k) {
    std::vector<std::string> collinear;
    const auto& perm = qr.colsPermutation().indices();
    for (Eigen::Index j = qr.rank(); j < k; ++j) collinear.push_back(names[static_cast<std::size_t>(perm(j))]);
    std::string list;
    for (auto& c : collinear) list += (list.empty() ? "" : ", ") + c;
    throw RankDeficient("design matrix is rank deficient; collinear column(s): " + list, collinear);
  }

  RegressionResult r;
  r.n = static_cast<std::size_t>(n);
  r.df_residual = static_cast<double>(n - k);
  const Eigen::VectorXd beta = qr.solve(y);
  r.residuals = y - X * beta;
  const double rss = r.residuals.squaredNorm();
  const double sigma2 = rss / r.df_residual;

  // (X'X)^-1 = P R^-1 R^-T P'
  const Eigen::MatrixXd R = qr.matrixR().topLeftCorner(k, k).triangularView<Eigen::Upper>();
  const Eigen::MatrixXd Rinv = R.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(k, k));
  const Eigen::MatrixXd cov_perm = Rinv * Rinv.transpose();
  const auto& perm = qr.colsPermutation().indices();
  Eigen::VectorXd var(k);
  for (Eigen::Index j = 0; j < k; ++j) var(perm(j)) = cov_perm(j, j);

  for (Eigen::Index j = 0; j < k; ++j) {
    Coefficient c;
    c.name = names[static_cast<std::size_t>(j)];
    c.estimate = beta(j);
    c.std_error = std::sqrt(sigma2 * var(j));
    if (c.std_error > 0.0) {
      c.t = c.estimate / c.std_error;
      c.p = t_two_sided_p(c.t, r.df_residual);
    } else {
      c.t = c.estimate == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), c.estimate);
      c.p = c.estimate == 0.0 ? 1.0 : 0.0;
    }
    r.coefficients.push_back(c);
  }
  const double tss = (y.array() - y.mean()).matrix().squaredNorm();
  r.r_squared = tss > 0.0 ? 1.0 - rss / tss : 1.0;
  return r;
}

inline nlohmann::ordered_json to_json(const RegressionResult& r) {
  nlohmann::ordered_json j;
  j["n"] = r.n;
  j["df_residual"] = r.df_residual;
  j["r_squared"] = r.r_squared;
  auto& cs = j["coefficients"] = nlohmann::ordered_json::array();
  for (auto& c : r.coefficients) {
    nlohmann::ordered_json e;
    e["name"] = c.name;
    e["estimate"] = c.estimate;
    e["std_error"] = c.std_error;
    e["t"] = std::isfinite(c.t) ? nlohmann::ordered_json(c.t) : nlohmann::ordered_json(c.t > 0 ? "inf" : "-inf");
    e["p"] = c.p;
    cs.push_back(e);
  }
  return j;
}

}  // namespace pplab::lexstats
