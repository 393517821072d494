#include "defectlab/liouville.hpp"

#include <cmath>

namespace defectlab {

namespace {

const Complex kI(0.0, 1.0);

ComplexField get_deriv(const BosonicField& f, int dz, int dzb,
                       DerivMode mode) {
  if (dz == 0 && dzb == 0) return f.samples;
  if (mode == DerivMode::Analytic) {
    if (!f.analytic)
      throw std::invalid_argument("analytic mode on a sampled-only field");
    return sample_analytic_derivative(f.samples.grid, *f.analytic, dz, dzb);
  }
  return fd_derivative(f.samples, dz, dzb);
}

ComplexField get_deriv_l0(const ComplexField& samples,
                          const AnalyticPtr& analytic, int dz, int dzb,
                          DerivMode mode) {
  if (dz == 0 && dzb == 0) return samples;
  if (mode == DerivMode::Analytic) {
    if (!analytic)
      throw std::invalid_argument("analytic mode on a sampled-only field");
    return sample_analytic_derivative(samples.grid, *analytic, dz, dzb);
  }
  return fd_derivative(samples, dz, dzb);
}

struct NormAcc {
  double mx = 0.0, sum = 0.0;
  int n = 0;
  void add(double a) {
    mx = std::max(mx, a);
    sum += a;
    ++n;
  }
  double mean() const { return n ? sum / n : 0.0; }
};

int max_margin_z(std::initializer_list<const ComplexField*> fs) {
  int m = 0;
  for (auto* f : fs) m = std::max(m, f->margin_z);
  return m;
}
int max_margin_zb(std::initializer_list<const ComplexField*> fs) {
  int m = 0;
  for (auto* f : fs) m = std::max(m, f->margin_zb);
  return m;
}

void add_field_norms(ResidualReport& rep, const std::string& id,
                     const ComplexField& f) {
  NormAcc acc;
  for (int i = f.margin_z; i < f.grid->nz() - f.margin_z; ++i)
    for (int j = f.margin_zb; j < f.grid->nzb() - f.margin_zb; ++j)
      acc.add(std::abs(f.at(i, j)));
  rep.add(id, acc.mx, acc.mean());
}

}  // namespace

void DefectParams::validate() const {
  if (beta == Complex(0.0, 0.0))
    throw std::invalid_argument("DefectParams: beta must be nonzero");
  if (mu == Complex(0.0, 0.0))
    throw std::invalid_argument("DefectParams: mu must be nonzero");
}

// ---------------------------------------------------------------------------
// exact solutions

namespace {

class StaticWall final : public AnalyticScalar {
 public:
  explicit StaticWall(Complex mu) : mu_(mu) {}
  Complex eval(int dz, int dzb, double z, double zb) const override {
    const int n = dz + dzb;
    const Complex s(z + zb, 0.0);
    if (n == 0) return -std::log(mu_ * s);
    // d^n/ds^n of -log(mu s) = (-1)^n (n-1)! / s^n
    double fac = 1.0;
    for (int k = 1; k < n; ++k) fac *= k;
    const Complex v = fac / std::pow(s, static_cast<double>(n));
    return (n % 2 == 0) ? v : -v;
  }

 private:
  Complex mu_;
};

class TwoFunction final : public AnalyticScalar {
 public:
  TwoFunction(Complex mu, HoloPtr F, HoloPtr G)
      : mu_(mu), F_(std::move(F)), G_(std::move(G)) {}

  Complex eval(int dz, int dzb, double z, double zb) const override {
    const Complex F = F_->eval(0, z), F1 = F_->eval(1, z);
    const Complex G = G_->eval(0, zb), G1 = G_->eval(1, zb);
    const Complex D = F + G;
    if (dz == 0 && dzb == 0)
      return 0.5 * (std::log(F1) + std::log(G1) - std::log(mu_ * mu_)) -
             std::log(D);
    const Complex F2 = F_->eval(2, z), G2 = G_->eval(2, zb);
    if (dz == 1 && dzb == 0) return 0.5 * F2 / F1 - F1 / D;
    if (dz == 0 && dzb == 1) return 0.5 * G2 / G1 - G1 / D;
    if (dz == 1 && dzb == 1) return F1 * G1 / (D * D);
    if (dz == 2 && dzb == 0) {
      const Complex F3 = F_->eval(3, z);
      return 0.5 * (F3 / F1 - (F2 / F1) * (F2 / F1)) - F2 / D +
             (F1 / D) * (F1 / D);
    }
    if (dz == 0 && dzb == 2) {
      const Complex G3 = G_->eval(3, zb);
      return 0.5 * (G3 / G1 - (G2 / G1) * (G2 / G1)) - G2 / D +
             (G1 / D) * (G1 / D);
    }
    if (dz == 2 && dzb == 1)
      return G1 * (F2 / (D * D) - 2.0 * F1 * F1 / (D * D * D));
    if (dz == 1 && dzb == 2)
      return F1 * (G2 / (D * D) - 2.0 * G1 * G1 / (D * D * D));
    throw std::invalid_argument("TwoFunction: derivative order not available");
  }

 private:
  Complex mu_;
  HoloPtr F_, G_;
};

}  // namespace

BosonicField make_static_wall(const GridPtr& grid, Complex mu) {
  if (mu == Complex(0.0, 0.0))
    throw std::invalid_argument("make_static_wall: mu must be nonzero");
  const double lo = grid->z.front() + grid->zbar.front();
  const double hi = grid->z.back() + grid->zbar.back();
  if (lo <= 0.0 && hi >= 0.0)
    throw std::domain_error("make_static_wall: domain crosses z + zbar = 0");
  return sample_analytic(grid, std::make_shared<StaticWall>(mu));
}

TwoFunctionResult make_two_function(const GridPtr& grid, Complex mu,
                                    const HoloPtr& F, const HoloPtr& G,
                                    DerivMode validation_mode, double tol) {
  if (mu == Complex(0.0, 0.0))
    throw std::invalid_argument("make_two_function: mu must be nonzero");
  for (double z : grid->z) {
    if (std::abs(F->eval(1, z)) < 1e-14)
      throw std::domain_error("make_two_function: F' vanishes on the grid");
    for (double zb : grid->zbar)
      if (std::abs(F->eval(0, z) + G->eval(0, zb)) < 1e-12)
        throw std::domain_error(
            "make_two_function: F + G vanishes on the grid");
  }
  for (double zb : grid->zbar)
    if (std::abs(G->eval(1, zb)) < 1e-14)
      throw std::domain_error("make_two_function: G' vanishes on the grid");

  TwoFunctionResult r;
  r.field = sample_analytic(grid, std::make_shared<TwoFunction>(mu, F, G));
  r.validation = liouville_bulk_residual(r.field, mu, validation_mode);
  if (r.validation.max_norm() > tol)
    throw std::domain_error(
        "make_two_function: constructed field fails the bulk-residual oracle");
  return r;
}

ResidualReport liouville_bulk_residual(const BosonicField& phi, Complex mu,
                                       DerivMode mode) {
  const ComplexField ddb = get_deriv(phi, 1, 1, mode);
  NormAcc acc;
  const auto& g = *phi.samples.grid;
  const int mz = std::max(ddb.margin_z, phi.samples.margin_z);
  const int mzb = std::max(ddb.margin_zb, phi.samples.margin_zb);
  for (int i = mz; i < g.nz() - mz; ++i)
    for (int j = mzb; j < g.nzb() - mzb; ++j)
      acc.add(std::abs(ddb.at(i, j) -
                       mu * mu * std::exp(2.0 * phi.samples.at(i, j))));
  ResidualReport rep;
  rep.add("liouville_bulk", acc.mx, acc.mean());
  rep.grid_sizes = {g.nz()};
  return rep;
}

// ---------------------------------------------------------------------------
// type-II / type-I relations

namespace {

struct TypeIIResidualFields {
  ComplexField r1, r2, r3, r4;
};

TypeIIResidualFields type2_residual_fields(const TypeIIState& s,
                                           const DefectParams& p,
                                           DerivMode mode) {
  p.validate();
  const GridPtr& grid = s.phi1.samples.grid;
  if (s.phi2.samples.grid != grid || s.lambda0.grid != grid)
    throw std::invalid_argument("type2_backlund_residual: grid mismatch");

  const ComplexField d1 = get_deriv(s.phi1, 1, 0, mode);
  const ComplexField d2 = get_deriv(s.phi2, 1, 0, mode);
  const ComplexField db1 = get_deriv(s.phi1, 0, 1, mode);
  const ComplexField db2 = get_deriv(s.phi2, 0, 1, mode);
  const ComplexField dl =
      get_deriv_l0(s.lambda0, s.lambda0_analytic, 1, 0, mode);
  const ComplexField dbl =
      get_deriv_l0(s.lambda0, s.lambda0_analytic, 0, 1, mode);

  const Complex b2 = p.beta * p.beta;
  const Complex cmb = kI * p.mu / b2;        // i mu / beta^2
  const Complex cmb2 = 2.0 * kI * p.mu * b2;  // 2 i mu beta^2

  TypeIIResidualFields out{ComplexField(grid), ComplexField(grid),
                           ComplexField(grid), ComplexField(grid)};
  const int mz = max_margin_z({&d1, &d2, &db1, &db2, &dl, &dbl});
  const int mzb = max_margin_zb({&d1, &d2, &db1, &db2, &dl, &dbl});
  for (auto* f : {&out.r1, &out.r2, &out.r3, &out.r4}) {
    f->margin_z = mz;
    f->margin_zb = mzb;
  }

  for (int i = mz; i < grid->nz() - mz; ++i) {
    for (int j = mzb; j < grid->nzb() - mzb; ++j) {
      const Complex pp = s.phi1.samples.at(i, j) + s.phi2.samples.at(i, j);
      const Complex pm = s.phi1.samples.at(i, j) - s.phi2.samples.at(i, j);
      const Complex l0 = s.lambda0.at(i, j);
      const Complex el = std::exp(l0);
      const Complex epl = std::exp(pp - l0);
      out.r1.at(i, j) = d1.at(i, j) + d2.at(i, j) - dl.at(i, j) +
                        cmb * el * std::sinh(pm);
      out.r2.at(i, j) = dbl.at(i, j);
      out.r3.at(i, j) = db1.at(i, j) - db2.at(i, j) - cmb2 * epl;
      out.r4.at(i, j) =
          d1.at(i, j) - d2.at(i, j) + cmb * el * (std::cosh(pm) + p.kappa);
    }
  }
  return out;
}

}  // namespace

ResidualReport type2_backlund_residual(const TypeIIState& s,
                                       const DefectParams& p, DerivMode mode) {
  const TypeIIResidualFields f = type2_residual_fields(s, p, mode);
  ResidualReport rep;
  add_field_norms(rep, "tII_dphi_plus", f.r1);
  add_field_norms(rep, "tII_dbar_lambda0", f.r2);
  add_field_norms(rep, "tII_dbar_phi_minus", f.r3);
  add_field_norms(rep, "tII_dphi_minus", f.r4);
  rep.grid_sizes = {s.phi1.samples.grid->nz()};
  return rep;
}

ResidualReport antiholomorphic_functional_check(const TypeIIState& s,
                                                const DefectParams& p,
                                                DerivMode mode) {
  p.validate();
  const GridPtr& grid = s.phi1.samples.grid;
  ResidualReport rep;

  if (mode == DerivMode::Analytic) {
    // dQ = e^{-(phi+ - L0)} [ -(d phi+ - d L0)(cosh phi- + kappa)
    //                         + sinh(phi-) d phi- ]
    const ComplexField d1 = get_deriv(s.phi1, 1, 0, mode);
    const ComplexField d2 = get_deriv(s.phi2, 1, 0, mode);
    const ComplexField dl =
        get_deriv_l0(s.lambda0, s.lambda0_analytic, 1, 0, mode);
    NormAcc acc;
    for (int i = 0; i < grid->nz(); ++i) {
      for (int j = 0; j < grid->nzb(); ++j) {
        const Complex pp = s.phi1.samples.at(i, j) + s.phi2.samples.at(i, j);
        const Complex pm = s.phi1.samples.at(i, j) - s.phi2.samples.at(i, j);
        const Complex e = std::exp(-(pp - s.lambda0.at(i, j)));
        const Complex dpp = d1.at(i, j) + d2.at(i, j) - dl.at(i, j);
        const Complex dpm = d1.at(i, j) - d2.at(i, j);
        acc.add(std::abs(
            e * (-dpp * (std::cosh(pm) + p.kappa) + std::sinh(pm) * dpm)));
      }
    }
    rep.add("antiholomorphic_functional", acc.mx, acc.mean());
  } else {
    ComplexField Q(grid);
    Q.margin_z = s.phi1.samples.margin_z;
    Q.margin_zb = s.phi1.samples.margin_zb;
    for (int i = 0; i < grid->nz(); ++i) {
      for (int j = 0; j < grid->nzb(); ++j) {
        const Complex pp = s.phi1.samples.at(i, j) + s.phi2.samples.at(i, j);
        const Complex pm = s.phi1.samples.at(i, j) - s.phi2.samples.at(i, j);
        Q.at(i, j) =
            std::exp(-(pp - s.lambda0.at(i, j))) * (std::cosh(pm) + p.kappa);
      }
    }
    add_field_norms(rep, "antiholomorphic_functional",
                    fd_derivative(Q, 1, 0));
  }
  rep.grid_sizes = {grid->nz()};
  return rep;
}

ResidualReport type1_conditions_residual(const BosonicField& phi1,
                                         const BosonicField& phi2,
                                         const DefectParams& p,
                                         DerivMode mode) {
  p.validate();
  const GridPtr& grid = phi1.samples.grid;
  const ComplexField d1 = get_deriv(phi1, 1, 0, mode);
  const ComplexField d2 = get_deriv(phi2, 1, 0, mode);
  const ComplexField db1 = get_deriv(phi1, 0, 1, mode);
  const ComplexField db2 = get_deriv(phi2, 0, 1, mode);

  const Complex cmb = kI * p.mu / (p.beta * p.beta);
  const Complex cmb2 = 2.0 * kI * p.mu * p.beta * p.beta;

  ComplexField r1(grid), r2(grid);
  const int mz = max_margin_z({&d1, &d2, &db1, &db2});
  const int mzb = max_margin_zb({&d1, &d2, &db1, &db2});
  r1.margin_z = r2.margin_z = mz;
  r1.margin_zb = r2.margin_zb = mzb;
  for (int i = mz; i < grid->nz() - mz; ++i) {
    for (int j = mzb; j < grid->nzb() - mzb; ++j) {
      const Complex pp = phi1.samples.at(i, j) + phi2.samples.at(i, j);
      const Complex pm = phi1.samples.at(i, j) - phi2.samples.at(i, j);
      r1.at(i, j) = d1.at(i, j) + d2.at(i, j) + cmb * std::sinh(pm);
      r2.at(i, j) = db1.at(i, j) - db2.at(i, j) - cmb2 * std::exp(pp);
    }
  }

  ResidualReport rep;
  add_field_norms(rep, "tId_dphi_plus", r1);
  add_field_norms(rep, "tId_dbar_phi_minus", r2);

  // The type-II residuals evaluated at Lambda0 = 0 must reproduce the two
  // shared equations pointwise, exactly.
  TypeIIState zstate{phi1, phi2, ComplexField(grid), nullptr};
  if (mode == DerivMode::Analytic)
    zstate.lambda0_analytic = std::make_shared<JetScalar>(
        [](int, int, double, double) { return Complex(0.0, 0.0); });
  const TypeIIResidualFields t2 = type2_residual_fields(zstate, p, mode);
  double diff1 = 0.0, diff3 = 0.0;
  for (int i = t2.r1.margin_z; i < grid->nz() - t2.r1.margin_z; ++i) {
    for (int j = t2.r1.margin_zb; j < grid->nzb() - t2.r1.margin_zb; ++j) {
      diff1 = std::max(diff1, std::abs(t2.r1.at(i, j) - r1.at(i, j)));
      diff3 = std::max(diff3, std::abs(t2.r3.at(i, j) - r2.at(i, j)));
    }
  }
  rep.add("type2_reduction_match_eq1", diff1, diff1);
  rep.add("type2_reduction_match_eq3", diff3, diff3);
  rep.grid_sizes = {grid->nz()};
  return rep;
}

// ---------------------------------------------------------------------------
// characteristic marching

namespace {

struct PairODE {
  Complex phi2, lam;
};

template <class RHS>
PairODE midpoint_step(const RHS& rhs, double s0, double h, double other,
                      bool z_dir, const PairODE& y) {
  auto eval = [&](double s, const PairODE& yy) {
    return z_dir ? rhs(s, other, yy) : rhs(other, s, yy);
  };
  const PairODE k1 = eval(s0, y);
  const PairODE ymid{y.phi2 + 0.5 * h * k1.phi2, y.lam + 0.5 * h * k1.lam};
  const PairODE k2 = eval(s0 + 0.5 * h, ymid);
  return {y.phi2 + h * k2.phi2, y.lam + h * k2.lam};
}

}  // namespace

BacklundResult backlund_integrate(const BosonicField& phi1,
                                  const BacklundSeed& seed,
                                  const DefectParams& p) {
  p.validate();
  if (!phi1.analytic)
    throw std::invalid_argument(
        "backlund_integrate: phi1 must carry closed-form derivatives");
  const GridPtr& grid = phi1.samples.grid;
  const int nz = grid->nz(), nzb = grid->nzb();
  const Complex b2 = p.beta * p.beta;
  const Complex cmb = kI * p.mu / b2;

  auto rhs_z = [&](double z, double zb, const PairODE& y) {
    const Complex dphi1 = phi1.analytic->eval(1, 0, z, zb);
    const Complex pm = phi1.analytic->eval(0, 0, z, zb) - y.phi2;
    const Complex el = std::exp(y.lam);
    if (std::abs(el) > p.blowup_guard) throw BlowupError(z, zb, std::abs(el));
    const Complex dpm = -(cmb * el * (std::cosh(pm) + p.kappa));
    PairODE d;
    d.phi2 = dphi1 - dpm;
    d.lam = (2.0 * dphi1 - dpm) + cmb * el * std::sinh(pm);
    return d;
  };
  auto rhs_zb = [&](double z, double zb, const PairODE& y) {
    const Complex dbphi1 = phi1.analytic->eval(0, 1, z, zb);
    const Complex epl =
        std::exp(phi1.analytic->eval(0, 0, z, zb) + y.phi2 - y.lam);
    if (std::abs(epl) > p.blowup_guard) throw BlowupError(z, zb, std::abs(epl));
    return PairODE{dbphi1 - 2.0 * kI * p.mu * b2 * epl, Complex(0.0, 0.0)};
  };

  std::vector<PairODE> vals(static_cast<std::size_t>(nz) * nzb);
  auto at = [&](int i, int j) -> PairODE& {
    return vals[static_cast<std::size_t>(i) * nzb + j];
  };

  at(0, 0) = {seed.phi2_corner, seed.lambda0_corner};
  for (int i = 1; i < nz; ++i)
    at(i, 0) = midpoint_step(rhs_z, grid->z[i - 1], grid->hz(), grid->zbar[0],
                             true, at(i - 1, 0));
  for (int j = 1; j < nzb; ++j)
    at(0, j) = midpoint_step(rhs_zb, grid->zbar[j - 1], grid->hzbar(),
                             grid->z[0], false, at(0, j - 1));

  double defect = 0.0;
  for (int j = 1; j < nzb; ++j) {
    for (int i = 1; i < nz; ++i) {
      const PairODE a = midpoint_step(rhs_z, grid->z[i - 1], grid->hz(),
                                      grid->zbar[j], true, at(i - 1, j));
      const PairODE b = midpoint_step(rhs_zb, grid->zbar[j - 1],
                                      grid->hzbar(), grid->z[i], false,
                                      at(i, j - 1));
      defect = std::max(defect, std::abs(a.phi2 - b.phi2));
      defect = std::max(defect, std::abs(a.lam - b.lam));
      // keep the z-route value; averaging the routes leaves a grid-rough
      // error that degrades higher-derivative diagnostics
      at(i, j) = a;
    }
  }

  BacklundResult out;
  out.cross_defect_max = defect;
  out.state.phi1 = phi1;
  out.state.phi2.samples = ComplexField(grid);
  out.state.lambda0 = ComplexField(grid);
  for (int i = 0; i < nz; ++i) {
    for (int j = 0; j < nzb; ++j) {
      out.state.phi2.samples.at(i, j) = at(i, j).phi2;
      out.state.lambda0.at(i, j) = at(i, j).lam;
    }
  }
  return out;
}

BosonicField type1_integrate(const BosonicField& phi1, Complex phi2_corner,
                             const DefectParams& p) {
  p.validate();
  if (!phi1.analytic)
    throw std::invalid_argument(
        "type1_integrate: phi1 must carry closed-form derivatives");
  const GridPtr& grid = phi1.samples.grid;
  const int nz = grid->nz(), nzb = grid->nzb();
  const Complex cmb = kI * p.mu / (p.beta * p.beta);

  auto rhs_z = [&](double z, double zb, const PairODE& y) {
    const Complex dphi1 = phi1.analytic->eval(1, 0, z, zb);
    const Complex pm = phi1.analytic->eval(0, 0, z, zb) - y.phi2;
    return PairODE{-dphi1 - cmb * std::sinh(pm), Complex(0.0, 0.0)};
  };
  auto rhs_zb = [&](double z, double zb, const PairODE& y) {
    const Complex dbphi1 = phi1.analytic->eval(0, 1, z, zb);
    const Complex ep = std::exp(phi1.analytic->eval(0, 0, z, zb) + y.phi2);
    if (std::abs(ep) > p.blowup_guard) throw BlowupError(z, zb, std::abs(ep));
    return PairODE{dbphi1 - 2.0 * kI * p.mu * p.beta * p.beta * ep,
                   Complex(0.0, 0.0)};
  };

  std::vector<Complex> vals(static_cast<std::size_t>(nz) * nzb);
  auto at = [&](int i, int j) -> Complex& {
    return vals[static_cast<std::size_t>(i) * nzb + j];
  };
  at(0, 0) = phi2_corner;
  for (int i = 1; i < nz; ++i)
    at(i, 0) = midpoint_step(rhs_z, grid->z[i - 1], grid->hz(), grid->zbar[0],
                             true, PairODE{at(i - 1, 0), {}})
                   .phi2;
  for (int j = 1; j < nzb; ++j)
    at(0, j) = midpoint_step(rhs_zb, grid->zbar[j - 1], grid->hzbar(),
                             grid->z[0], false, PairODE{at(0, j - 1), {}})
                   .phi2;
  for (int j = 1; j < nzb; ++j) {
    for (int i = 1; i < nz; ++i) {
      at(i, j) = midpoint_step(rhs_z, grid->z[i - 1], grid->hz(),
                               grid->zbar[j], true, PairODE{at(i - 1, j), {}})
                     .phi2;
    }
  }

  BosonicField out;
  out.samples = ComplexField(grid);
  for (int i = 0; i < nz; ++i)
    for (int j = 0; j < nzb; ++j) out.samples.at(i, j) = at(i, j);
  return out;
}

// ---------------------------------------------------------------------------
// stress tensor and conformal gluing

StressResult stress_tensor(const BosonicField& phi, DerivMode mode) {
  const GridPtr& grid = phi.samples.grid;
  StressResult out;
  out.T = ComplexField(grid);
  out.Tbar = ComplexField(grid);

  const ComplexField d = get_deriv(phi, 1, 0, mode);
  const ComplexField db = get_deriv(phi, 0, 1, mode);
  const ComplexField dd = get_deriv(phi, 2, 0, mode);
  const ComplexField dbdb = get_deriv(phi, 0, 2, mode);
  const int mz = max_margin_z({&d, &db, &dd, &dbdb});
  const int mzb = max_margin_zb({&d, &db, &dd, &dbdb});
  out.T.margin_z = out.Tbar.margin_z = mz;
  out.T.margin_zb = out.Tbar.margin_zb = mzb;
  for (int i = mz; i < grid->nz() - mz; ++i) {
    for (int j = mzb; j < grid->nzb() - mzb; ++j) {
      out.T.at(i, j) = d.at(i, j) * d.at(i, j) - dd.at(i, j);
      out.Tbar.at(i, j) = db.at(i, j) * db.at(i, j) - dbdb.at(i, j);
    }
  }

  if (mode == DerivMode::Analytic) {
    const ComplexField ddb = get_deriv(phi, 1, 1, mode);
    const ComplexField dddb = get_deriv(phi, 2, 1, mode);
    const ComplexField ddbdb = get_deriv(phi, 1, 2, mode);
    NormAcc nt, ntb;
    for (int i = 0; i < grid->nz(); ++i) {
      for (int j = 0; j < grid->nzb(); ++j) {
        nt.add(std::abs(2.0 * d.at(i, j) * ddb.at(i, j) - dddb.at(i, j)));
        ntb.add(std::abs(2.0 * db.at(i, j) * ddb.at(i, j) - ddbdb.at(i, j)));
      }
    }
    out.conservation.add("dbar_T", nt.mx, nt.mean());
    out.conservation.add("d_Tbar", ntb.mx, ntb.mean());
  } else {
    add_field_norms(out.conservation, "dbar_T", fd_derivative(out.T, 0, 1));
    add_field_norms(out.conservation, "d_Tbar", fd_derivative(out.Tbar, 1, 0));
  }
  return out;
}

ResidualReport conformal_defect_check(const TypeIIState& s,
                                      const DefectParams& p, DefectKind kind,
                                      DerivMode mode) {
  p.validate();
  const GridPtr& grid = s.phi1.samples.grid;
  const StressResult s1 = stress_tensor(s.phi1, mode);
  const StressResult s2 = stress_tensor(s.phi2, mode);

  ResidualReport rep;
  const int mz = std::max(s1.T.margin_z, s2.T.margin_z);
  const int mzb = std::max(s1.T.margin_zb, s2.T.margin_zb);
  {
    NormAcc dt, dtb;
    for (int i = mz; i < grid->nz() - mz; ++i) {
      for (int j = mzb; j < grid->nzb() - mzb; ++j) {
        dt.add(std::abs(s1.T.at(i, j) - s2.T.at(i, j)));
        dtb.add(std::abs(s1.Tbar.at(i, j) - s2.Tbar.at(i, j)));
      }
    }
    rep.add("cd1_T_gluing", dt.mx, dt.mean());
    rep.add("cd2_Tbar_gluing", dtb.mx, dtb.mean());
  }

  if (kind == DefectKind::TypeI) {
    // T1 - T2 = dt[2 d phi- + (2 i mu/beta^2)(cosh phi- + kappa)]
    //         = dbar d phi- - d^2 phi-
    //           + (i mu/beta^2) sinh(phi-) (dbar phi- - d phi-)
    const ComplexField d1 = get_deriv(s.phi1, 1, 0, mode);
    const ComplexField d2 = get_deriv(s.phi2, 1, 0, mode);
    const ComplexField db1 = get_deriv(s.phi1, 0, 1, mode);
    const ComplexField db2 = get_deriv(s.phi2, 0, 1, mode);
    const ComplexField ddb1 = get_deriv(s.phi1, 1, 1, mode);
    const ComplexField ddb2 = get_deriv(s.phi2, 1, 1, mode);
    const ComplexField dd1 = get_deriv(s.phi1, 2, 0, mode);
    const ComplexField dd2 = get_deriv(s.phi2, 2, 0, mode);
    const Complex cmb = kI * p.mu / (p.beta * p.beta);
    const int amz = std::max({mz, max_margin_z({&ddb1, &ddb2, &dd1, &dd2})});
    const int amzb =
        std::max({mzb, max_margin_zb({&ddb1, &ddb2, &dd1, &dd2})});
    NormAcc ident, mag;
    for (int i = amz; i < grid->nz() - amz; ++i) {
      for (int j = amzb; j < grid->nzb() - amzb; ++j) {
        const Complex pm = s.phi1.samples.at(i, j) - s.phi2.samples.at(i, j);
        const Complex dpm = d1.at(i, j) - d2.at(i, j);
        const Complex dbpm = db1.at(i, j) - db2.at(i, j);
        const Complex anomaly = ddb1.at(i, j) - ddb2.at(i, j) -
                                (dd1.at(i, j) - dd2.at(i, j)) +
                                cmb * std::sinh(pm) * (dbpm - dpm);
        const Complex dT = s1.T.at(i, j) - s2.T.at(i, j);
        ident.add(std::abs(dT - anomaly));
        mag.add(std::abs(anomaly));
      }
    }
    rep.add("cd1_anomaly_identity", ident.mx, ident.mean());
    rep.add("cd1_anomaly_magnitude", mag.mx, mag.mean());
  }
  rep.grid_sizes = {grid->nz()};
  return rep;
}

// ---------------------------------------------------------------------------
// Lax connections and defect matrices

ContextPtr scalar_context() {
  static ContextPtr ctx = GrassmannContext::make(0);
  return ctx;
}

namespace {

class BosonicLaxSampler final : public AnalyticMatrix {
 public:
  BosonicLaxSampler(AnalyticPtr phi, Complex lambda, Complex mu,
                    ContextPtr ctx, bool bar)
      : phi_(std::move(phi)),
        lambda_(lambda),
        mu_(mu),
        ctx_(std::move(ctx)),
        bar_(bar) {}

  GradedMatrix eval(int dz, int dzb, double z, double zb) const override {
    GradedMatrix m(ctx_, 2);
    auto S = [&](Complex v) { return GrassmannElement::scalar(ctx_, v); };
    if (!bar_) {
      if (dz == 0 && dzb == 0) {
        const Complex dphi = phi_->eval(1, 0, z, zb);
        const Complex e = std::exp(phi_->eval(0, 0, z, zb));
        m.set(0, 0, S(-0.5 * dphi));
        m.set(0, 1, S(-lambda_ * mu_ * e));
        m.set(1, 1, S(0.5 * dphi));
        return m;
      }
      if (dz == 0 && dzb == 1) {
        const Complex ddb = phi_->eval(1, 1, z, zb);
        const Complex db = phi_->eval(0, 1, z, zb);
        const Complex e = std::exp(phi_->eval(0, 0, z, zb));
        m.set(0, 0, S(-0.5 * ddb));
        m.set(0, 1, S(-lambda_ * mu_ * e * db));
        m.set(1, 1, S(0.5 * ddb));
        return m;
      }
    } else {
      if (dz == 0 && dzb == 0) {
        const Complex dbphi = phi_->eval(0, 1, z, zb);
        const Complex e = std::exp(phi_->eval(0, 0, z, zb));
        m.set(0, 0, S(0.5 * dbphi));
        m.set(1, 0, S(-(mu_ / lambda_) * e));
        m.set(1, 1, S(-0.5 * dbphi));
        return m;
      }
      if (dz == 1 && dzb == 0) {
        const Complex ddb = phi_->eval(1, 1, z, zb);
        const Complex d = phi_->eval(1, 0, z, zb);
        const Complex e = std::exp(phi_->eval(0, 0, z, zb));
        m.set(0, 0, S(0.5 * ddb));
        m.set(1, 0, S(-(mu_ / lambda_) * e * d));
        m.set(1, 1, S(-0.5 * ddb));
        return m;
      }
    }
    throw std::invalid_argument("BosonicLaxSampler: order not available");
  }

 private:
  AnalyticPtr phi_;
  Complex lambda_, mu_;
  ContextPtr ctx_;
  bool bar_;
};

}  // namespace

ConnectionPair lax_connection(const BosonicField& phi, Complex lambda,
                              Complex mu, const ContextPtr& ctx) {
  if (lambda == Complex(0.0, 0.0))
    throw std::invalid_argument("lax_connection: lambda must be nonzero");
  const GridPtr& grid = phi.samples.grid;
  ConnectionPair c;

  if (phi.has_analytic()) {
    c.A_an = std::make_shared<BosonicLaxSampler>(phi.analytic, lambda, mu,
                                                 ctx, false);
    c.Abar_an = std::make_shared<BosonicLaxSampler>(phi.analytic, lambda, mu,
                                                    ctx, true);
    c.A = sample_matrix(grid, *c.A_an, 0, 0);
    c.Abar = sample_matrix(grid, *c.Abar_an, 0, 0);
    return c;
  }

  const ComplexField d = fd_derivative(phi.samples, 1, 0);
  const ComplexField db = fd_derivative(phi.samples, 0, 1);
  c.A = MatrixField(grid, GradedMatrix(ctx, 2));
  c.Abar = MatrixField(grid, GradedMatrix(ctx, 2));
  c.A.margin_z = c.Abar.margin_z = 1;
  c.A.margin_zb = c.Abar.margin_zb = 1;
  auto S = [&](Complex v) { return GrassmannElement::scalar(ctx, v); };
  for (int i = 1; i < grid->nz() - 1; ++i) {
    for (int j = 1; j < grid->nzb() - 1; ++j) {
      const Complex e = std::exp(phi.samples.at(i, j));
      GradedMatrix& A = c.A.at(i, j);
      A.set(0, 0, S(-0.5 * d.at(i, j)));
      A.set(0, 1, S(-lambda * mu * e));
      A.set(1, 1, S(0.5 * d.at(i, j)));
      GradedMatrix& Ab = c.Abar.at(i, j);
      Ab.set(0, 0, S(0.5 * db.at(i, j)));
      Ab.set(1, 0, S(-(mu / lambda) * e));
      Ab.set(1, 1, S(-0.5 * db.at(i, j)));
    }
  }
  return c;
}

MatrixField defect_matrix_K(const TypeIIState& s, Complex lambda,
                            const DefectParams& p, KVariant variant,
                            const ContextPtr& ctx) {
  p.validate();
  if (lambda == Complex(0.0, 0.0))
    throw std::invalid_argument("defect_matrix_K: lambda must be nonzero");
  const GridPtr& grid = s.phi1.samples.grid;
  MatrixField K(grid, GradedMatrix(ctx, 2));
  auto S = [&](Complex v) { return GrassmannElement::scalar(ctx, v); };
  const Complex b2 = p.beta * p.beta;
  for (int i = 0; i < grid->nz(); ++i) {
    for (int j = 0; j < grid->nzb(); ++j) {
      const Complex ph =
          0.5 * (s.phi1.samples.at(i, j) + s.phi2.samples.at(i, j));
      const Complex pm = s.phi1.samples.at(i, j) - s.phi2.samples.at(i, j);
      const Complex l0 = s.lambda0.at(i, j);
      GradedMatrix& m = K.at(i, j);
      if (variant == KVariant::First) {
        m.set(0, 0, S(p.a11 * std::exp(0.5 * pm) +
                      p.c11 / (lambda * lambda) * std::exp(-0.5 * pm)));
        m.set(0, 1, S(-2.0 * kI * b2 * p.c11 / lambda * std::exp(ph - l0)));
        m.set(1, 0, S(kI * p.a11 / (lambda * b2) * std::exp(-(ph - l0)) *
                      (std::cosh(pm) + p.kappa)));
        m.set(1, 1, S(p.a11 * std::exp(-0.5 * pm) +
                      p.c11 / (lambda * lambda) * std::exp(0.5 * pm)));
      } else {
        m.set(0, 0, S(p.b11 / lambda * std::cosh(0.5 * pm)));
        m.set(0, 1, S(-kI * b2 * p.b11 * std::exp(ph - l0)));
        m.set(1, 0, S(kI * p.b11 / (2.0 * b2 * lambda * lambda) *
                      std::exp(-(ph - l0)) * (std::cosh(pm) + p.kappa)));
        m.set(1, 1, S(p.b11 / lambda * std::cosh(0.5 * pm)));
      }
    }
  }
  K.margin_z = s.phi1.samples.margin_z;
  K.margin_zb = s.phi1.samples.margin_zb;
  return K;
}

// ---------------------------------------------------------------------------
// exact type-II family (kappa = -1)

namespace {

class ConstScalar final : public AnalyticScalar {
 public:
  explicit ConstScalar(Complex v) : v_(v) {}
  Complex eval(int dz, int dzb, double, double) const override {
    return (dz == 0 && dzb == 0) ? v_ : Complex(0.0, 0.0);
  }

 private:
  Complex v_;
};

// coth(u/2) = w with w = g0 + A z + g1 zbar, A = (i mu/beta^2) e^L.
class ExactTypeIIKernel {
 public:
  ExactTypeIIKernel(const DefectParams& p, const ExactTypeIISpec& spec)
      : L_(spec.L), g0_(spec.g0), g1_(spec.g1) {
    A_ = kI * p.mu / (p.beta * p.beta) * std::exp(L_);
    phase_ = std::log(kI * g1_ / (p.mu * p.beta * p.beta));
  }

  Complex w(double z, double zb) const { return g0_ + A_ * z + g1_ * zb; }

  Complex u(int a, int b, double z, double zb) const {
    const Complex ww = w(z, zb);
    const int n = a + b;
    if (n == 0) return std::log(ww + 1.0) - std::log(ww - 1.0);
    const Complex pref = coef(a, b) * fact(n - 1) * sign(n - 1);
    return pref * (std::pow(ww + 1.0, static_cast<double>(-n)) -
                   std::pow(ww - 1.0, static_cast<double>(-n)));
  }

  Complex phiplus(int a, int b, double z, double zb) const {
    const Complex ww = w(z, zb);
    const int n = a + b;
    if (n == 0) return L_ + phase_ - std::log(ww + 1.0) - std::log(ww - 1.0);
    const Complex pref = coef(a, b) * fact(n - 1) * sign(n - 1);
    return -pref * (std::pow(ww + 1.0, static_cast<double>(-n)) +
                    std::pow(ww - 1.0, static_cast<double>(-n)));
  }

  Complex L() const { return L_; }

 private:
  static double fact(int n) {
    double f = 1.0;
    for (int k = 2; k <= n; ++k) f *= k;
    return f;
  }
  static double sign(int n) { return (n % 2 == 0) ? 1.0 : -1.0; }
  Complex coef(int a, int b) const {
    Complex c(1.0, 0.0);
    for (int k = 0; k < a; ++k) c *= A_;
    for (int k = 0; k < b; ++k) c *= g1_;
    return c;
  }

  Complex L_, g0_, g1_, A_, phase_;
};

class ExactPhi final : public AnalyticScalar {
 public:
  ExactPhi(std::shared_ptr<const ExactTypeIIKernel> base, double usign)
      : base_(std::move(base)), usign_(usign) {}
  Complex eval(int dz, int dzb, double z, double zb) const override {
    return 0.5 * (base_->phiplus(dz, dzb, z, zb) +
                  usign_ * base_->u(dz, dzb, z, zb));
  }

 private:
  std::shared_ptr<const ExactTypeIIKernel> base_;
  double usign_;
};

}  // namespace

ExactTypeIIJets make_exact_type2_jets(const DefectParams& p,
                                      const ExactTypeIISpec& spec) {
  p.validate();
  auto base = std::make_shared<ExactTypeIIKernel>(p, spec);
  ExactTypeIIJets jets;
  jets.L = base->L();
  jets.u = std::make_shared<JetScalar>(
      [base](int a, int b, double z, double zb) {
        return base->u(a, b, z, zb);
      });
  jets.phiplus = std::make_shared<JetScalar>(
      [base](int a, int b, double z, double zb) {
        return base->phiplus(a, b, z, zb);
      });
  return jets;
}

TypeIIState make_exact_type2(const GridPtr& grid, const DefectParams& p,
                             const ExactTypeIISpec& spec) {
  p.validate();
  if (spec.g1 == Complex(0.0, 0.0))
    throw std::invalid_argument("make_exact_type2: g1 must be nonzero");
  auto base = std::make_shared<ExactTypeIIKernel>(p, spec);
  for (int i = 0; i < grid->nz(); ++i)
    for (int j = 0; j < grid->nzb(); ++j) {
      const Complex ww = base->w(grid->z[i], grid->zbar[j]);
      if (std::abs(ww - 1.0) < 1e-6 || std::abs(ww + 1.0) < 1e-6)
        throw std::domain_error("make_exact_type2: w^2 = 1 on the domain");
    }

  TypeIIState s;
  s.phi1 = sample_analytic(grid, std::make_shared<ExactPhi>(base, +1.0));
  s.phi2 = sample_analytic(grid, std::make_shared<ExactPhi>(base, -1.0));
  s.lambda0_analytic = std::make_shared<ConstScalar>(base->L());
  s.lambda0 = sample_analytic_derivative(grid, *s.lambda0_analytic, 0, 0);
  return s;
}

}  // namespace defectlab
