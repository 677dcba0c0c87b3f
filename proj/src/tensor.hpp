#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "error.hpp"

namespace recidx {

using Vec = std::vector<double>;

struct Matrix {
  int rows = 0;
  int cols = 0;
  Vec values;  // row-major

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), values(static_cast<std::size_t>(r) * c, 0.0) {}

  double& at(int r, int c) { return values[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return values[static_cast<std::size_t>(r) * cols + c]; }
};

double dot(const Vec& a, const Vec& b);
double norm(const Vec& v);
bool all_finite(const Vec& v);

// Unit-norm copy of v; throws DegenerateVector when ||v|| <= 1e-12.
Vec l2_normalize(const Vec& v);

// Cosine similarity, clamped to [-1, 1] after rounding.
double cosine(const Vec& a, const Vec& b);

// Pulls a gradient taken w.r.t. l2_normalize(x) back to x.
Vec l2_normalize_vjp(const Vec& x, const Vec& grad_normalized);

Vec matvec(const Matrix& m, const Vec& x);    // m * x
Vec matvec_t(const Matrix& m, const Vec& x);  // m^T * x
void add_outer(Matrix& m, const Vec& a, const Vec& b, double scale = 1.0);
void axpy(Vec& y, double a, const Vec& x);  // y += a * x

struct GradCheckReport {
  double max_rel_error = 0.0;
  int worst_index = -1;
  bool passed = false;
};

// Central differences (f(x+h e_k) - f(x-h e_k)) / 2h compared per coordinate
// against analytic_grad, relative error with absolute floor 1e-8.
GradCheckReport finite_diff_check(const std::function<double(const Vec&)>& f,
                                  const Vec& analytic_grad, const Vec& x, double h,
                                  double tol);

}  // namespace recidx
