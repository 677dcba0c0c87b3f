#include "tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace recidx {

namespace {
constexpr double kDegenerateNorm = 1e-12;

void require_same_dim(const Vec& a, const Vec& b, const char* where) {
  if (a.size() != b.size()) {
    fail(Err::DimensionMismatch, std::string(where) + ": " + std::to_string(a.size()) +
                                     " vs " + std::to_string(b.size()));
  }
}
}  // namespace

double dot(const Vec& a, const Vec& b) {
  require_same_dim(a, b, "dot");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double norm(const Vec& v) { return std::sqrt(dot(v, v)); }

bool all_finite(const Vec& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

Vec l2_normalize(const Vec& v) {
  const double n = norm(v);
  if (!(n > kDegenerateNorm)) {
    fail(Err::DegenerateVector, "l2_normalize: norm " + std::to_string(n));
  }
  Vec out(v);
  for (double& x : out) x /= n;
  return out;
}

double cosine(const Vec& a, const Vec& b) {
  require_same_dim(a, b, "cosine");
  const double na = norm(a);
  const double nb = norm(b);
  if (!(na > kDegenerateNorm) || !(nb > kDegenerateNorm)) {
    fail(Err::DegenerateVector, "cosine: degenerate operand");
  }
  return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

Vec l2_normalize_vjp(const Vec& x, const Vec& grad_normalized) {
  require_same_dim(x, grad_normalized, "l2_normalize_vjp");
  const double n = norm(x);
  if (!(n > kDegenerateNorm)) {
    fail(Err::DegenerateVector, "l2_normalize_vjp: norm " + std::to_string(n));
  }
  // d(x/||x||)/dx = (I - x_hat x_hat^T) / ||x||
  Vec x_hat(x);
  for (double& v : x_hat) v /= n;
  const double proj = dot(grad_normalized, x_hat);
  Vec out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = (grad_normalized[i] - proj * x_hat[i]) / n;
  return out;
}

Vec matvec(const Matrix& m, const Vec& x) {
  if (static_cast<int>(x.size()) != m.cols) {
    fail(Err::DimensionMismatch, "matvec: cols " + std::to_string(m.cols) + " vs " +
                                     std::to_string(x.size()));
  }
  Vec out(m.rows, 0.0);
  for (int r = 0; r < m.rows; ++r) {
    double acc = 0.0;
    const double* row = m.values.data() + static_cast<std::size_t>(r) * m.cols;
    for (int c = 0; c < m.cols; ++c) acc += row[c] * x[c];
    out[r] = acc;
  }
  return out;
}

Vec matvec_t(const Matrix& m, const Vec& x) {
  if (static_cast<int>(x.size()) != m.rows) {
    fail(Err::DimensionMismatch, "matvec_t: rows " + std::to_string(m.rows) + " vs " +
                                     std::to_string(x.size()));
  }
  Vec out(m.cols, 0.0);
  for (int r = 0; r < m.rows; ++r) {
    const double xr = x[r];
    const double* row = m.values.data() + static_cast<std::size_t>(r) * m.cols;
    for (int c = 0; c < m.cols; ++c) out[c] += row[c] * xr;
  }
  return out;
}

void add_outer(Matrix& m, const Vec& a, const Vec& b, double scale) {
  if (static_cast<int>(a.size()) != m.rows || static_cast<int>(b.size()) != m.cols) {
    fail(Err::DimensionMismatch, "add_outer: shape mismatch");
  }
  for (int r = 0; r < m.rows; ++r) {
    double* row = m.values.data() + static_cast<std::size_t>(r) * m.cols;
    const double ar = scale * a[r];
    for (int c = 0; c < m.cols; ++c) row[c] += ar * b[c];
  }
}

void axpy(Vec& y, double a, const Vec& x) {
  require_same_dim(y, x, "axpy");
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

GradCheckReport finite_diff_check(const std::function<double(const Vec&)>& f,
                                  const Vec& analytic_grad, const Vec& x, double h,
                                  double tol) {
  require_same_dim(analytic_grad, x, "finite_diff_check");
  if (!(h > 0.0)) fail(Err::ConfigError, "finite_diff_check: h must be > 0");

  GradCheckReport report;
  Vec probe(x);
  for (std::size_t k = 0; k < x.size(); ++k) {
    probe[k] = x[k] + h;
    const double fp = f(probe);
    probe[k] = x[k] - h;
    const double fm = f(probe);
    probe[k] = x[k];
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      fail(Err::NonFiniteEvaluation, "finite_diff_check: f non-finite at coordinate " +
                                         std::to_string(k));
    }
    const double fd = (fp - fm) / (2.0 * h);
    const double denom = std::max({std::fabs(fd), std::fabs(analytic_grad[k]), 1e-8});
    const double rel = std::fabs(fd - analytic_grad[k]) / denom;
    if (rel > report.max_rel_error) {
      report.max_rel_error = rel;
      report.worst_index = static_cast<int>(k);
    }
  }
  report.passed = report.max_rel_error < tol;
  return report;
}

}  // namespace recidx
