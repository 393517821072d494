#pragma once

#include <vector>

#include "defectlab/grassmann.hpp"

namespace defectlab {

/// Square matrix over the Grassmann algebra with a boson/fermion grading per
/// index. Default grading: (0,0) for dim 2, (0,0,1) for dim 3 (two bosonic
/// indices, then one fermionic).
class GradedMatrix {
 public:
  GradedMatrix() = default;
  GradedMatrix(ContextPtr ctx, int dim);
  GradedMatrix(ContextPtr ctx, int dim, std::vector<int> grading);

  static GradedMatrix identity(ContextPtr ctx, int dim);

  int dim() const { return dim_; }
  const std::vector<int>& grading() const { return grading_; }
  const ContextPtr& context() const { return ctx_; }

  GrassmannElement& at(int i, int j) { return e_[i * dim_ + j]; }
  const GrassmannElement& at(int i, int j) const { return e_[i * dim_ + j]; }

  void set(int i, int j, GrassmannElement v) { e_[i * dim_ + j] = std::move(v); }

  /// Supermatrix parity: an even matrix carries entries of parity
  /// g_i + g_j, an odd matrix entries of parity 1 + g_i + g_j. Zero entries
  /// are compatible with either. Computed, never asserted.
  Parity parity() const;

  double max_abs() const;

  /// Conjugation by diag((-1)^{g_i}); entry (i,j) picks up (-1)^{g_i+g_j}.
  GradedMatrix sigma_twisted() const;

  GrassmannElement supertrace() const;

  GradedMatrix operator-() const;
  GradedMatrix& operator+=(const GradedMatrix& o);
  GradedMatrix& operator-=(const GradedMatrix& o);
  friend GradedMatrix operator+(GradedMatrix a, const GradedMatrix& b) {
    a += b;
    return a;
  }
  friend GradedMatrix operator-(GradedMatrix a, const GradedMatrix& b) {
    a -= b;
    return a;
  }
  friend GradedMatrix operator*(const GradedMatrix& a, const GradedMatrix& b);
  friend GradedMatrix operator*(const GrassmannElement& s,
                                const GradedMatrix& a);
  friend GradedMatrix operator*(const GradedMatrix& a, Complex s);
  friend GradedMatrix operator*(Complex s, const GradedMatrix& a) {
    return a * s;
  }
  friend GradedMatrix operator*(const GradedMatrix& a, double s) {
    return a * Complex(s, 0.0);
  }
  friend GradedMatrix operator*(double s, const GradedMatrix& a) {
    return a * Complex(s, 0.0);
  }

  nlohmann::json to_json() const;

 private:
  void check_compatible(const GradedMatrix& o) const;

  ContextPtr ctx_;
  int dim_ = 0;
  std::vector<int> grading_;
  std::vector<GrassmannElement> e_;
};

/// XY - (-1)^{|X||Y|} YX for homogeneous supermatrices; the anticommutator
/// when both are odd. Mixed-parity input is an error.
GradedMatrix graded_bracket(const GradedMatrix& X, const GradedMatrix& Y);

GradedMatrix anticommutator(const GradedMatrix& X, const GradedMatrix& Y);
GradedMatrix commutator(const GradedMatrix& X, const GradedMatrix& Y);

}  // namespace defectlab
