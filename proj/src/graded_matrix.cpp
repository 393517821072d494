#include "defectlab/graded_matrix.hpp"

#include <algorithm>

namespace defectlab {

namespace {
std::vector<int> default_grading(int dim) {
  if (dim == 2) return {0, 0};
  if (dim == 3) return {0, 0, 1};
  throw std::invalid_argument("GradedMatrix: dim must be 2 or 3");
}
}  // namespace

GradedMatrix::GradedMatrix(ContextPtr ctx, int dim)
    : GradedMatrix(std::move(ctx), dim, default_grading(dim)) {}

GradedMatrix::GradedMatrix(ContextPtr ctx, int dim, std::vector<int> grading)
    : ctx_(std::move(ctx)), dim_(dim), grading_(std::move(grading)) {
  if (dim_ != 2 && dim_ != 3)
    throw std::invalid_argument("GradedMatrix: dim must be 2 or 3");
  if (static_cast<int>(grading_.size()) != dim_)
    throw std::invalid_argument("GradedMatrix: grading size mismatch");
  e_.assign(static_cast<std::size_t>(dim_) * dim_,
            GrassmannElement::zero(ctx_));
}

GradedMatrix GradedMatrix::identity(ContextPtr ctx, int dim) {
  GradedMatrix m(ctx, dim);
  for (int i = 0; i < dim; ++i)
    m.at(i, i) = GrassmannElement::scalar(ctx, Complex(1.0, 0.0));
  return m;
}

Parity GradedMatrix::parity() const {
  bool can_even = true, can_odd = true;
  for (int i = 0; i < dim_; ++i) {
    for (int j = 0; j < dim_; ++j) {
      const GrassmannElement& x = at(i, j);
      if (x.is_zero()) continue;
      const Parity p = x.parity();
      if (p == Parity::Mixed) return Parity::Mixed;
      const int entry = (p == Parity::Odd) ? 1 : 0;
      const int block = (grading_[i] + grading_[j]) & 1;
      if (entry != block) can_even = false;
      if (entry != ((block + 1) & 1)) can_odd = false;
    }
  }
  if (can_even) return Parity::Even;  // zero matrix counts as even
  if (can_odd) return Parity::Odd;
  return Parity::Mixed;
}

double GradedMatrix::max_abs() const {
  double m = 0.0;
  for (const auto& x : e_) m = std::max(m, x.max_abs());
  return m;
}

GradedMatrix GradedMatrix::sigma_twisted() const {
  GradedMatrix r = *this;
  for (int i = 0; i < dim_; ++i)
    for (int j = 0; j < dim_; ++j)
      if ((grading_[i] + grading_[j]) & 1) r.at(i, j) = -r.at(i, j);
  return r;
}

GrassmannElement GradedMatrix::supertrace() const {
  GrassmannElement s = GrassmannElement::zero(ctx_);
  for (int i = 0; i < dim_; ++i)
    s += grading_[i] ? -at(i, i) : at(i, i);
  return s;
}

GradedMatrix GradedMatrix::operator-() const {
  GradedMatrix r = *this;
  for (auto& x : r.e_) x = -x;
  return r;
}

void GradedMatrix::check_compatible(const GradedMatrix& o) const {
  if (dim_ != o.dim_ || grading_ != o.grading_)
    throw std::invalid_argument("GradedMatrix: dimension/grading mismatch");
}

GradedMatrix& GradedMatrix::operator+=(const GradedMatrix& o) {
  check_compatible(o);
  for (std::size_t k = 0; k < e_.size(); ++k) e_[k] += o.e_[k];
  return *this;
}

GradedMatrix& GradedMatrix::operator-=(const GradedMatrix& o) {
  check_compatible(o);
  for (std::size_t k = 0; k < e_.size(); ++k) e_[k] -= o.e_[k];
  return *this;
}

GradedMatrix operator*(const GradedMatrix& a, const GradedMatrix& b) {
  a.check_compatible(b);
  GradedMatrix r(a.ctx_ ? a.ctx_ : b.ctx_, a.dim_, a.grading_);
  for (int i = 0; i < a.dim_; ++i) {
    for (int j = 0; j < a.dim_; ++j) {
      GrassmannElement s = GrassmannElement::zero(r.ctx_);
      for (int k = 0; k < a.dim_; ++k) s += a.at(i, k) * b.at(k, j);
      r.at(i, j) = std::move(s);
    }
  }
  return r;
}

GradedMatrix operator*(const GrassmannElement& s, const GradedMatrix& a) {
  GradedMatrix r = a;
  for (auto& x : r.e_) x = s * x;
  return r;
}

GradedMatrix operator*(const GradedMatrix& a, Complex s) {
  GradedMatrix r = a;
  for (auto& x : r.e_) x = x * s;
  return r;
}

nlohmann::json GradedMatrix::to_json() const {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& x : e_) entries.push_back(x.to_json());
  return {{"dim", dim_}, {"grading", grading_}, {"entries", entries}};
}

GradedMatrix commutator(const GradedMatrix& X, const GradedMatrix& Y) {
  return X * Y - Y * X;
}

GradedMatrix anticommutator(const GradedMatrix& X, const GradedMatrix& Y) {
  return X * Y + Y * X;
}

GradedMatrix graded_bracket(const GradedMatrix& X, const GradedMatrix& Y) {
  const Parity px = X.parity(), py = Y.parity();
  if (px == Parity::Mixed || py == Parity::Mixed)
    throw ParityError("graded_bracket: mixed-parity operand");
  if (px == Parity::Odd && py == Parity::Odd) return anticommutator(X, Y);
  return commutator(X, Y);
}

}  // namespace defectlab
