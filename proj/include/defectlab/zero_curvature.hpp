#pragma once

#include "defectlab/fields.hpp"
#include "defectlab/graded_matrix.hpp"
#include "defectlab/report.hpp"

namespace defectlab {

/// Matrix-valued samples on a light-cone grid.
struct MatrixField {
  GridPtr grid;
  std::vector<GradedMatrix> m;
  int margin_z = 0, margin_zb = 0;

  MatrixField() = default;
  MatrixField(GridPtr g, const GradedMatrix& fill)
      : grid(std::move(g)),
        m(static_cast<std::size_t>(grid->nz()) * grid->nzb(), fill) {}

  GradedMatrix& at(int i, int j) {
    return m[static_cast<std::size_t>(i) * grid->nzb() + j];
  }
  const GradedMatrix& at(int i, int j) const {
    return m[static_cast<std::size_t>(i) * grid->nzb() + j];
  }
};

class AnalyticMatrix {
 public:
  virtual ~AnalyticMatrix() = default;
  virtual GradedMatrix eval(int dz, int dzb, double z, double zb) const = 0;
};

using AnalyticMatPtr = std::shared_ptr<const AnalyticMatrix>;

/// A Lax connection pair (A, Abar) with optional closed-form derivatives.
struct ConnectionPair {
  MatrixField A, Abar;
  AnalyticMatPtr A_an, Abar_an;
};

MatrixField sample_matrix(const GridPtr& grid, const AnalyticMatrix& fn,
                          int dz, int dzb);

/// Centered first derivative of a matrix field in z (dir=0) or zbar (dir=1).
MatrixField fd_matrix_derivative(const MatrixField& f, int dir);

/// Pointwise norm of dbar A - d Abar + [A, Abar].
ResidualReport zero_curvature_residual(const ConnectionPair& c, DerivMode mode);

/// Norms of dK - (A1 K - K A2) and dbar K - (Abar1 K - K Abar2), relative to
/// max |K| so that K -> cK leaves the report invariant. K derivatives are
/// taken by centered differences.
ResidualReport kmatrix_residual(const MatrixField& K, const ConnectionPair& c1,
                                const ConnectionPair& c2);

}  // namespace defectlab
