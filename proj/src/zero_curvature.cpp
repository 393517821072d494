#include "defectlab/zero_curvature.hpp"

namespace defectlab {

MatrixField sample_matrix(const GridPtr& grid, const AnalyticMatrix& fn,
                          int dz, int dzb) {
  MatrixField f;
  f.grid = grid;
  f.m.reserve(static_cast<std::size_t>(grid->nz()) * grid->nzb());
  for (int i = 0; i < grid->nz(); ++i)
    for (int j = 0; j < grid->nzb(); ++j)
      f.m.push_back(fn.eval(dz, dzb, grid->z[i], grid->zbar[j]));
  return f;
}

MatrixField fd_matrix_derivative(const MatrixField& f, int dir) {
  const int nz = f.grid->nz(), nzb = f.grid->nzb();
  if ((dir == 0 && nz < 3) || (dir == 1 && nzb < 3))
    throw std::invalid_argument("fd_matrix_derivative: grid too small");
  MatrixField r = f;
  r.margin_z = f.margin_z + (dir == 0 ? 1 : 0);
  r.margin_zb = f.margin_zb + (dir == 1 ? 1 : 0);
  const double h2 = 2.0 * (dir == 0 ? f.grid->hz() : f.grid->hzbar());
  for (int i = r.margin_z; i < nz - r.margin_z; ++i) {
    for (int j = r.margin_zb; j < nzb - r.margin_zb; ++j) {
      r.at(i, j) = (dir == 0 ? f.at(i + 1, j) - f.at(i - 1, j)
                             : f.at(i, j + 1) - f.at(i, j - 1)) *
                   (1.0 / h2);
    }
  }
  return r;
}

namespace {

std::pair<double, double> matrix_field_norms(const MatrixField& f) {
  double mx = 0.0, sum = 0.0;
  int count = 0;
  for (int i = f.margin_z; i < f.grid->nz() - f.margin_z; ++i) {
    for (int j = f.margin_zb; j < f.grid->nzb() - f.margin_zb; ++j) {
      const double a = f.at(i, j).max_abs();
      mx = std::max(mx, a);
      sum += a;
      ++count;
    }
  }
  return {mx, count ? sum / count : 0.0};
}

}  // namespace

ResidualReport zero_curvature_residual(const ConnectionPair& c,
                                       DerivMode mode) {
  const GridPtr& grid = c.A.grid;
  if (!grid || c.Abar.grid != grid)
    throw std::invalid_argument("zero_curvature_residual: grid mismatch");

  MatrixField dbarA, dAbar;
  if (mode == DerivMode::Analytic) {
    if (!c.A_an || !c.Abar_an)
      throw std::invalid_argument(
          "zero_curvature_residual: analytic mode without samplers");
    dbarA = sample_matrix(grid, *c.A_an, 0, 1);
    dAbar = sample_matrix(grid, *c.Abar_an, 1, 0);
  } else {
    dbarA = fd_matrix_derivative(c.A, 1);
    dAbar = fd_matrix_derivative(c.Abar, 0);
  }

  MatrixField res = c.A;
  res.margin_z = std::max({dbarA.margin_z, dAbar.margin_z, c.A.margin_z,
                           c.Abar.margin_z});
  res.margin_zb = std::max({dbarA.margin_zb, dAbar.margin_zb, c.A.margin_zb,
                            c.Abar.margin_zb});
  for (int i = res.margin_z; i < grid->nz() - res.margin_z; ++i)
    for (int j = res.margin_zb; j < grid->nzb() - res.margin_zb; ++j)
      res.at(i, j) = dbarA.at(i, j) - dAbar.at(i, j) +
                     commutator(c.A.at(i, j), c.Abar.at(i, j));

  auto [mx, mean] = matrix_field_norms(res);
  ResidualReport rep;
  rep.add("zero_curvature", mx, mean);
  rep.grid_sizes = {grid->nz()};
  return rep;
}

ResidualReport kmatrix_residual(const MatrixField& K, const ConnectionPair& c1,
                                const ConnectionPair& c2) {
  const GridPtr& grid = K.grid;
  if (!grid || c1.A.grid != grid || c2.A.grid != grid)
    throw std::invalid_argument("kmatrix_residual: grid mismatch");
  if (c1.A.m.front().dim() != K.m.front().dim())
    throw std::invalid_argument("kmatrix_residual: dimension mismatch");

  const MatrixField dK = fd_matrix_derivative(K, 0);
  const MatrixField dbarK = fd_matrix_derivative(K, 1);

  double kscale = 0.0;
  for (int i = K.margin_z; i < grid->nz() - K.margin_z; ++i)
    for (int j = K.margin_zb; j < grid->nzb() - K.margin_zb; ++j)
      kscale = std::max(kscale, K.at(i, j).max_abs());
  if (kscale == 0.0) kscale = 1.0;

  const int cmz = std::max({c1.A.margin_z, c2.A.margin_z, c1.Abar.margin_z,
                            c2.Abar.margin_z});
  const int cmzb = std::max({c1.A.margin_zb, c2.A.margin_zb, c1.Abar.margin_zb,
                             c2.Abar.margin_zb});

  MatrixField rz = K, rzb = K;
  rz.margin_z = std::max(dK.margin_z, cmz);
  rz.margin_zb = std::max(dK.margin_zb, cmzb);
  rzb.margin_z = std::max(dbarK.margin_z, cmz);
  rzb.margin_zb = std::max(dbarK.margin_zb, cmzb);
  for (int i = rz.margin_z; i < grid->nz() - rz.margin_z; ++i) {
    for (int j = rz.margin_zb; j < grid->nzb() - rz.margin_zb; ++j) {
      rz.at(i, j) = dK.at(i, j) - c1.A.at(i, j) * K.at(i, j) +
                    K.at(i, j) * c2.A.at(i, j);
    }
  }
  for (int i = rzb.margin_z; i < grid->nz() - rzb.margin_z; ++i) {
    for (int j = rzb.margin_zb; j < grid->nzb() - rzb.margin_zb; ++j) {
      rzb.at(i, j) = dbarK.at(i, j) - c1.Abar.at(i, j) * K.at(i, j) +
                     K.at(i, j) * c2.Abar.at(i, j);
    }
  }

  auto [mz, meanz] = matrix_field_norms(rz);
  auto [mzb, meanzb] = matrix_field_norms(rzb);
  ResidualReport rep;
  rep.add("dK_intertwine", mz / kscale, meanz / kscale);
  rep.add("dbarK_intertwine", mzb / kscale, meanzb / kscale);
  rep.grid_sizes = {grid->nz()};
  return rep;
}

}  // namespace defectlab
