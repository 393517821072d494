#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <vector>

#include "defectlab/grassmann.hpp"

namespace defectlab {

/// Uniform light-cone grid, z = (x-t)/2, zbar = (x+t)/2.
struct LightConeGrid {
  std::vector<double> z, zbar;

  static std::shared_ptr<const LightConeGrid> uniform(double z0, double z1,
                                                      int nz, double zb0,
                                                      double zb1, int nzb);
  /// Same extents, mesh halved (n -> 2n-1).
  static std::shared_ptr<const LightConeGrid> refined(const LightConeGrid& g);

  int nz() const { return static_cast<int>(z.size()); }
  int nzb() const { return static_cast<int>(zbar.size()); }
  double hz() const { return nz() > 1 ? z[1] - z[0] : 0.0; }
  double hzbar() const { return nzb() > 1 ? zbar[1] - zbar[0] : 0.0; }
};

using GridPtr = std::shared_ptr<const LightConeGrid>;

/// Samples on a light-cone grid; margin_* marks boundary layers invalidated
/// by finite-difference stencils.
template <class T>
struct Field2D {
  GridPtr grid;
  std::vector<T> v;
  int margin_z = 0, margin_zb = 0;

  Field2D() = default;
  explicit Field2D(GridPtr g) : grid(std::move(g)) {
    v.resize(static_cast<std::size_t>(grid->nz()) * grid->nzb());
  }

  T& at(int i, int j) { return v[static_cast<std::size_t>(i) * grid->nzb() + j]; }
  const T& at(int i, int j) const {
    return v[static_cast<std::size_t>(i) * grid->nzb() + j];
  }
};

using ComplexField = Field2D<Complex>;
using GrassmannField = Field2D<GrassmannElement>;

namespace fieldnorm {
inline double abs_of(const Complex& c) { return std::abs(c); }
inline double abs_of(const GrassmannElement& g) { return g.max_abs(); }
}  // namespace fieldnorm

/// Max/mean of |.| over the stencil-valid interior.
template <class T>
std::pair<double, double> field_norms(const Field2D<T>& f) {
  double mx = 0.0, sum = 0.0;
  int count = 0;
  for (int i = f.margin_z; i < f.grid->nz() - f.margin_z; ++i) {
    for (int j = f.margin_zb; j < f.grid->nzb() - f.margin_zb; ++j) {
      const double a = fieldnorm::abs_of(f.at(i, j));
      mx = std::max(mx, a);
      sum += a;
      ++count;
    }
  }
  return {mx, count ? sum / count : 0.0};
}

/// Centered second-order mixed derivative d^dz dbar^dzb of the samples.
template <class T>
Field2D<T> fd_derivative(const Field2D<T>& f, int dz, int dzb);

/// Closed-form scalar field: eval returns the (dz, dzb) mixed light-cone
/// derivative at a point. Throws if the requested order is not implemented.
class AnalyticScalar {
 public:
  virtual ~AnalyticScalar() = default;
  virtual Complex eval(int dz, int dzb, double z, double zb) const = 0;
};

using AnalyticPtr = std::shared_ptr<const AnalyticScalar>;

/// Grassmann-valued analogue for fermionic/defect fields.
class AnalyticGrassmann {
 public:
  virtual ~AnalyticGrassmann() = default;
  virtual GrassmannElement eval(int dz, int dzb, double z, double zb) const = 0;
};

using AnalyticGrPtr = std::shared_ptr<const AnalyticGrassmann>;

/// Complex scalar field plus optional closed-form derivatives.
struct BosonicField {
  ComplexField samples;
  AnalyticPtr analytic;

  bool has_analytic() const { return analytic != nullptr; }
};

BosonicField sample_analytic(const GridPtr& grid, AnalyticPtr fn);
ComplexField sample_analytic_derivative(const GridPtr& grid,
                                        const AnalyticScalar& fn, int dz,
                                        int dzb);

GrassmannField sample_analytic_gr(const GridPtr& grid,
                                  const AnalyticGrassmann& fn, int dz,
                                  int dzb);

/// Wraps a plain callback (values only, no derivatives beyond order 0).
class CallbackScalar final : public AnalyticScalar {
 public:
  explicit CallbackScalar(std::function<Complex(double, double)> f)
      : f_(std::move(f)) {}
  Complex eval(int dz, int dzb, double z, double zb) const override {
    if (dz || dzb)
      throw std::invalid_argument("CallbackScalar: derivatives unavailable");
    return f_(z, zb);
  }

 private:
  std::function<Complex(double, double)> f_;
};

/// Wraps a full jet callback f(dz, dzb, z, zb).
class JetScalar final : public AnalyticScalar {
 public:
  explicit JetScalar(std::function<Complex(int, int, double, double)> f)
      : f_(std::move(f)) {}
  Complex eval(int dz, int dzb, double z, double zb) const override {
    return f_(dz, dzb, z, zb);
  }

 private:
  std::function<Complex(int, int, double, double)> f_;
};

class JetGrassmann final : public AnalyticGrassmann {
 public:
  explicit JetGrassmann(
      std::function<GrassmannElement(int, int, double, double)> f)
      : f_(std::move(f)) {}
  GrassmannElement eval(int dz, int dzb, double z, double zb) const override {
    return f_(dz, dzb, z, zb);
  }

 private:
  std::function<GrassmannElement(int, int, double, double)> f_;
};

/// One-dimensional holomorphic profile with derivatives, for the
/// two-function solution ansatz.
class Holo1D {
 public:
  virtual ~Holo1D() = default;
  virtual Complex eval(int k, double t) const = 0;
};

using HoloPtr = std::shared_ptr<const Holo1D>;

class PolyHolo final : public Holo1D {
 public:
  explicit PolyHolo(std::vector<Complex> coeffs) : c_(std::move(coeffs)) {}
  Complex eval(int k, double t) const override;

 private:
  std::vector<Complex> c_;  // c0 + c1 t + c2 t^2 + ...
};

/// a * exp(b t)
class ExpHolo final : public Holo1D {
 public:
  ExpHolo(Complex a, Complex b) : a_(a), b_(b) {}
  Complex eval(int k, double t) const override {
    return a_ * std::pow(b_, k) * std::exp(b_ * t);
  }

 private:
  Complex a_, b_;
};

enum class DerivMode { Analytic, FiniteDifference };

}  // namespace defectlab
