#include "defectlab/fields.hpp"

#include <stdexcept>

namespace defectlab {

std::shared_ptr<const LightConeGrid> LightConeGrid::uniform(double z0,
                                                            double z1, int nz,
                                                            double zb0,
                                                            double zb1,
                                                            int nzb) {
  if (nz < 1 || nzb < 1)
    throw std::invalid_argument("LightConeGrid: need at least one sample");
  if (nz > 1 && z1 <= z0)
    throw std::invalid_argument("LightConeGrid: z range not increasing");
  if (nzb > 1 && zb1 <= zb0)
    throw std::invalid_argument("LightConeGrid: zbar range not increasing");
  auto g = std::make_shared<LightConeGrid>();
  g->z.resize(nz);
  g->zbar.resize(nzb);
  for (int i = 0; i < nz; ++i)
    g->z[i] = nz > 1 ? z0 + (z1 - z0) * i / (nz - 1) : z0;
  for (int j = 0; j < nzb; ++j)
    g->zbar[j] = nzb > 1 ? zb0 + (zb1 - zb0) * j / (nzb - 1) : zb0;
  return g;
}

std::shared_ptr<const LightConeGrid> LightConeGrid::refined(
    const LightConeGrid& g) {
  return uniform(g.z.front(), g.z.back(), 2 * g.nz() - 1, g.zbar.front(),
                 g.zbar.back(), 2 * g.nzb() - 1);
}

namespace {

template <class T>
Field2D<T> fd_first_z(const Field2D<T>& f) {
  Field2D<T> r(f.grid);
  r.margin_z = f.margin_z + 1;
  r.margin_zb = f.margin_zb;
  const double h2 = 2.0 * f.grid->hz();
  for (int i = r.margin_z; i < f.grid->nz() - r.margin_z; ++i)
    for (int j = r.margin_zb; j < f.grid->nzb() - r.margin_zb; ++j)
      r.at(i, j) = (f.at(i + 1, j) - f.at(i - 1, j)) / h2;
  return r;
}

template <class T>
Field2D<T> fd_first_zb(const Field2D<T>& f) {
  Field2D<T> r(f.grid);
  r.margin_z = f.margin_z;
  r.margin_zb = f.margin_zb + 1;
  const double h2 = 2.0 * f.grid->hzbar();
  for (int i = r.margin_z; i < f.grid->nz() - r.margin_z; ++i)
    for (int j = r.margin_zb; j < f.grid->nzb() - r.margin_zb; ++j)
      r.at(i, j) = (f.at(i, j + 1) - f.at(i, j - 1)) / h2;
  return r;
}

template <class T>
Field2D<T> fd_second_z(const Field2D<T>& f) {
  Field2D<T> r(f.grid);
  r.margin_z = f.margin_z + 1;
  r.margin_zb = f.margin_zb;
  const double hh = f.grid->hz() * f.grid->hz();
  for (int i = r.margin_z; i < f.grid->nz() - r.margin_z; ++i)
    for (int j = r.margin_zb; j < f.grid->nzb() - r.margin_zb; ++j)
      r.at(i, j) = (f.at(i + 1, j) - 2.0 * f.at(i, j) + f.at(i - 1, j)) / hh;
  return r;
}

template <class T>
Field2D<T> fd_second_zb(const Field2D<T>& f) {
  Field2D<T> r(f.grid);
  r.margin_z = f.margin_z;
  r.margin_zb = f.margin_zb + 1;
  const double hh = f.grid->hzbar() * f.grid->hzbar();
  for (int i = r.margin_z; i < f.grid->nz() - r.margin_z; ++i)
    for (int j = r.margin_zb; j < f.grid->nzb() - r.margin_zb; ++j)
      r.at(i, j) = (f.at(i, j + 1) - 2.0 * f.at(i, j) + f.at(i, j - 1)) / hh;
  return r;
}

}  // namespace

template <class T>
Field2D<T> fd_derivative(const Field2D<T>& f, int dz, int dzb) {
  if (f.grid->nz() < 3 && dz > 0)
    throw std::invalid_argument("fd_derivative: grid too small in z");
  if (f.grid->nzb() < 3 && dzb > 0)
    throw std::invalid_argument("fd_derivative: grid too small in zbar");
  Field2D<T> r = f;
  int remaining_z = dz, remaining_zb = dzb;
  while (remaining_z >= 2) {
    r = fd_second_z(r);
    remaining_z -= 2;
  }
  if (remaining_z == 1) r = fd_first_z(r);
  while (remaining_zb >= 2) {
    r = fd_second_zb(r);
    remaining_zb -= 2;
  }
  if (remaining_zb == 1) r = fd_first_zb(r);
  return r;
}

template Field2D<Complex> fd_derivative(const Field2D<Complex>&, int, int);
template Field2D<GrassmannElement> fd_derivative(
    const Field2D<GrassmannElement>&, int, int);

BosonicField sample_analytic(const GridPtr& grid, AnalyticPtr fn) {
  BosonicField f;
  f.samples = sample_analytic_derivative(grid, *fn, 0, 0);
  f.analytic = std::move(fn);
  return f;
}

ComplexField sample_analytic_derivative(const GridPtr& grid,
                                        const AnalyticScalar& fn, int dz,
                                        int dzb) {
  ComplexField f(grid);
  for (int i = 0; i < grid->nz(); ++i)
    for (int j = 0; j < grid->nzb(); ++j)
      f.at(i, j) = fn.eval(dz, dzb, grid->z[i], grid->zbar[j]);
  return f;
}

GrassmannField sample_analytic_gr(const GridPtr& grid,
                                  const AnalyticGrassmann& fn, int dz,
                                  int dzb) {
  GrassmannField f(grid);
  for (int i = 0; i < grid->nz(); ++i)
    for (int j = 0; j < grid->nzb(); ++j)
      f.at(i, j) = fn.eval(dz, dzb, grid->z[i], grid->zbar[j]);
  return f;
}

Complex PolyHolo::eval(int k, double t) const {
  Complex s(0.0, 0.0);
  // d^k of c_m t^m = c_m m!/(m-k)! t^{m-k}
  for (std::size_t m = k; m < c_.size(); ++m) {
    double fac = 1.0;
    for (std::size_t i = m - k + 1; i <= m; ++i) fac *= static_cast<double>(i);
    s += c_[m] * fac * std::pow(t, static_cast<double>(m - k));
  }
  return s;
}

}  // namespace defectlab
