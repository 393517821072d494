#include "defectlab/super_liouville.hpp"

#include <cmath>

namespace defectlab {

namespace {

const Complex kI(0.0, 1.0);

using GE = GrassmannElement;

GE S(const ContextPtr& ctx, Complex v) { return GE::scalar(ctx, v); }

GrassmannField get_deriv_gr(const GrassmannField& samples,
                            const AnalyticGrPtr& analytic, int dz, int dzb,
                            DerivMode mode) {
  if (dz == 0 && dzb == 0) return samples;
  if (mode == DerivMode::Analytic) {
    if (!analytic)
      throw std::invalid_argument("analytic mode on a sampled-only field");
    return sample_analytic_gr(samples.grid, *analytic, dz, dzb);
  }
  return fd_derivative(samples, dz, dzb);
}

GrassmannField get_deriv_gr(const SuperComponent& c, int dz, int dzb,
                            DerivMode mode) {
  return get_deriv_gr(c.samples, c.analytic, dz, dzb, mode);
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

void add_gr_norms(ResidualReport& rep, const std::string& id,
                  const GrassmannField& f) {
  NormAcc acc;
  for (int i = f.margin_z; i < f.grid->nz() - f.margin_z; ++i)
    for (int j = f.margin_zb; j < f.grid->nzb() - f.margin_zb; ++j)
      acc.add(f.at(i, j).max_abs());
  rep.add(id, acc.mx, acc.mean());
}

bool parity_ok(const GE& x, Parity want) {
  if (x.is_zero()) return true;
  return x.parity() == want;
}

}  // namespace

SuperLayout SuperLayout::standard(int extra_seeds, double prune) {
  if (extra_seeds < 1) throw std::invalid_argument("SuperLayout: need a seed");
  SuperLayout l;
  std::vector<std::string> labels;
  for (int k = 1; k <= extra_seeds; ++k)
    labels.push_back("seed" + std::to_string(k));
  labels.insert(labels.end(), {"eps", "epsbar", "theta", "thetabar"});
  l.ctx = GrassmannContext::make(extra_seeds + 4, labels, prune);
  l.seed1 = 1;
  l.seed2 = extra_seeds >= 2 ? 2 : 1;
  l.eps = extra_seeds + 1;
  l.epsbar = extra_seeds + 2;
  l.theta = extra_seeds + 3;
  l.thetabar = extra_seeds + 4;
  return l;
}

void validate_parities(const SuperState& s) {
  auto check = [&](const SuperComponent& c, Parity want, const char* name) {
    for (const auto& x : c.samples.v)
      if (!parity_ok(x, want))
        throw ParityError(std::string("parity violation in field ") + name);
  };
  for (const SuperField* f : {&s.one, &s.two}) {
    check(f->phi, Parity::Even, "phi");
    check(f->F, Parity::Even, "F");
    check(f->psi, Parity::Odd, "psi");
    check(f->psibar, Parity::Odd, "psibar");
  }
  check(s.defect.lambda0, Parity::Even, "lambda0");
  check(s.defect.b1, Parity::Even, "b1");
  check(s.defect.b2, Parity::Even, "b2");
  check(s.defect.lambda1, Parity::Odd, "lambda1");
  check(s.defect.f1, Parity::Odd, "f1");
  check(s.defect.f2, Parity::Odd, "f2");
}

// ---------------------------------------------------------------------------
// bulk residuals

ResidualReport super_bulk_residual(const SuperField& f, Complex mu,
                                   DerivMode mode) {
  const GridPtr& grid = f.phi.samples.grid;
  for (const auto& x : f.psi.samples.v)
    if (!parity_ok(x, Parity::Odd))
      throw ParityError("super_bulk_residual: psi must be odd");
  for (const auto& x : f.psibar.samples.v)
    if (!parity_ok(x, Parity::Odd))
      throw ParityError("super_bulk_residual: psibar must be odd");

  const GrassmannField ddb = get_deriv_gr(f.phi, 1, 1, mode);
  const GrassmannField dbpsi = get_deriv_gr(f.psi, 0, 1, mode);
  const GrassmannField dpsibar = get_deriv_gr(f.psibar, 1, 0, mode);

  GrassmannField r_phi(grid), r_psi(grid), r_psibar(grid);
  const int mz = std::max({ddb.margin_z, dbpsi.margin_z, dpsibar.margin_z});
  const int mzb =
      std::max({ddb.margin_zb, dbpsi.margin_zb, dpsibar.margin_zb});
  for (auto* g : {&r_phi, &r_psi, &r_psibar}) {
    g->margin_z = mz;
    g->margin_zb = mzb;
  }
  for (int i = mz; i < grid->nz() - mz; ++i) {
    for (int j = mzb; j < grid->nzb() - mzb; ++j) {
      const GE& phi = f.phi.samples.at(i, j);
      const GE& psi = f.psi.samples.at(i, j);
      const GE& psibar = f.psibar.samples.at(i, j);
      const GE ephi = gr_exp(phi);
      r_phi.at(i, j) = ddb.at(i, j) - mu * mu * gr_exp(phi * 2.0) -
                       kI * mu * ephi * psibar * psi;
      r_psi.at(i, j) = dbpsi.at(i, j) - kI * mu * ephi * psibar;
      r_psibar.at(i, j) = dpsibar.at(i, j) + kI * mu * ephi * psi;
    }
  }

  ResidualReport rep;
  add_gr_norms(rep, "super_bulk_phi", r_phi);
  add_gr_norms(rep, "super_bulk_psi", r_psi);
  add_gr_norms(rep, "super_bulk_psibar", r_psibar);
  rep.grid_sizes = {grid->nz()};
  return rep;
}

// ---------------------------------------------------------------------------
// on-shell wall fermions and transport

namespace {

// psi = G (c1 s + c2/s)/2, psibar = G (c1 s - c2/s)/(2i) over the wall
// background phi = -log(mu s), s = z + zbar.
class WallFermion final : public AnalyticGrassmann {
 public:
  WallFermion(ContextPtr ctx, int gen, Complex c1, Complex c2, bool bar)
      : ctx_(std::move(ctx)), gen_(gen), c1_(c1), c2_(c2), bar_(bar) {}

  GE eval(int dz, int dzb, double z, double zb) const override {
    const int n = dz + dzb;
    const Complex s(z + zb, 0.0);
    Complex lin, inv;
    if (n == 0) {
      lin = c1_ * s;
      inv = c2_ / s;
    } else if (n == 1) {
      lin = c1_;
      inv = -c2_ / (s * s);
    } else {
      lin = Complex(0.0, 0.0);
      double fac = 1.0;
      for (int k = 1; k <= n; ++k) fac *= k;
      inv = c2_ * fac / std::pow(s, static_cast<double>(n + 1));
      if (n % 2 == 1) inv = -inv;
    }
    const Complex val = bar_ ? (lin - inv) / (2.0 * kI) : (lin + inv) * 0.5;
    return S(ctx_, val) * GE::generator(ctx_, gen_);
  }

 private:
  ContextPtr ctx_;
  int gen_;
  Complex c1_, c2_;
  bool bar_;
};

class WrapScalarGr final : public AnalyticGrassmann {
 public:
  WrapScalarGr(ContextPtr ctx, AnalyticPtr f)
      : ctx_(std::move(ctx)), f_(std::move(f)) {}
  GE eval(int dz, int dzb, double z, double zb) const override {
    return S(ctx_, f_->eval(dz, dzb, z, zb));
  }

 private:
  ContextPtr ctx_;
  AnalyticPtr f_;
};

SuperComponent sample_component(const GridPtr& grid, AnalyticGrPtr an) {
  SuperComponent c;
  c.samples = sample_analytic_gr(grid, *an, 0, 0);
  c.analytic = std::move(an);
  return c;
}

}  // namespace

SuperField make_wall_super_member(const GridPtr& grid, Complex mu,
                                  const SuperLayout& layout,
                                  const WallFermionSpec& spec) {
  SuperField f;
  auto wall = make_static_wall(grid, mu).analytic;
  f.phi = sample_component(grid,
                           std::make_shared<WrapScalarGr>(layout.ctx, wall));
  f.psi = sample_component(
      grid, std::make_shared<WallFermion>(layout.ctx, spec.generator, spec.c1,
                                          spec.c2, false));
  f.psibar = sample_component(
      grid, std::make_shared<WallFermion>(layout.ctx, spec.generator, spec.c1,
                                          spec.c2, true));
  // F = -mu e^phi, chain rule on the wall jets
  auto F_an = std::make_shared<JetGrassmann>(
      [ctx = layout.ctx, wall, mu](int dz, int dzb, double z,
                                   double zb) -> GE {
        const Complex e = std::exp(wall->eval(0, 0, z, zb));
        if (dz == 0 && dzb == 0) return S(ctx, -mu * e);
        const Complex pa = wall->eval(1, 0, z, zb);
        const Complex pb = wall->eval(0, 1, z, zb);
        if (dz == 1 && dzb == 0) return S(ctx, -mu * e * pa);
        if (dz == 0 && dzb == 1) return S(ctx, -mu * e * pb);
        if (dz == 1 && dzb == 1)
          return S(ctx, -mu * e * (wall->eval(1, 1, z, zb) + pa * pb));
        if (dz == 2 && dzb == 0)
          return S(ctx, -mu * e * (wall->eval(2, 0, z, zb) + pa * pa));
        if (dz == 0 && dzb == 2)
          return S(ctx, -mu * e * (wall->eval(0, 2, z, zb) + pb * pb));
        throw std::invalid_argument("F jet order not available");
      });
  f.F = sample_component(grid, F_an);
  return f;
}

std::pair<GrassmannField, GrassmannField> fermion_transport(
    const BosonicField& phi, Complex mu, const SuperLayout& layout,
    const std::function<GE(double z)>& psi_bottom,
    const std::function<GE(double zb)>& psibar_left) {
  (void)layout;
  const GridPtr& grid = phi.samples.grid;
  const int nz = grid->nz(), nzb = grid->nzb();
  const double h = grid->hz(), hb = grid->hzbar();

  GrassmannField psi(grid), psibar(grid);
  auto ephi = [&](int i, int j) { return std::exp(phi.samples.at(i, j)); };

  for (int i = 0; i < nz; ++i) psi.at(i, 0) = psi_bottom(grid->z[i]);
  for (int j = 0; j < nzb; ++j) psibar.at(0, j) = psibar_left(grid->zbar[j]);

  // bottom row: march psibar in z against the known psi (trapezoid)
  for (int i = 1; i < nz; ++i) {
    const GE rhs0 = (-kI * mu * ephi(i - 1, 0)) * psi.at(i - 1, 0);
    const GE rhs1 = (-kI * mu * ephi(i, 0)) * psi.at(i, 0);
    psibar.at(i, 0) = psibar.at(i - 1, 0) + 0.5 * h * (rhs0 + rhs1);
  }
  // left column: march psi in zbar against the known psibar
  for (int j = 1; j < nzb; ++j) {
    const GE rhs0 = (kI * mu * ephi(0, j - 1)) * psibar.at(0, j - 1);
    const GE rhs1 = (kI * mu * ephi(0, j)) * psibar.at(0, j);
    psi.at(0, j) = psi.at(0, j - 1) + 0.5 * hb * (rhs0 + rhs1);
  }
  // interior: both trapezoid updates are linear in the unknowns; solve the
  // 2x2 system exactly per node
  for (int j = 1; j < nzb; ++j) {
    for (int i = 1; i < nz; ++i) {
      const GE a = psi.at(i, j - 1) +
                   (0.5 * hb * kI * mu * ephi(i, j - 1)) * psibar.at(i, j - 1);
      const GE b = psibar.at(i - 1, j) -
                   (0.5 * h * kI * mu * ephi(i - 1, j)) * psi.at(i - 1, j);
      const Complex fac = kI * mu * ephi(i, j);
      const Complex cpsi = 0.5 * hb * fac;  // psi = a + cpsi psibar
      const Complex dd = 0.5 * h * fac;     // psibar = b - dd psi
      const Complex denom = 1.0 + cpsi * dd;
      psi.at(i, j) = (a + cpsi * b) / denom;
      psibar.at(i, j) = b - dd * psi.at(i, j);
    }
  }
  return {std::move(psi), std::move(psibar)};
}

// ---------------------------------------------------------------------------
// super-Backlund residuals

ResidualReport super_backlund_residual(const SuperState& s,
                                       const DefectParams& p,
                                       BacklundForm form, DerivMode mode) {
  p.validate();
  validate_parities(s);
  const GridPtr& grid = s.one.phi.samples.grid;
  const Complex smu = std::sqrt(p.mu);
  const Complex b2 = p.beta * p.beta;
  const Complex cmb = kI * p.mu / b2;

  const GrassmannField d1 = get_deriv_gr(s.one.phi, 1, 0, mode);
  const GrassmannField d2 = get_deriv_gr(s.two.phi, 1, 0, mode);
  const GrassmannField db1 = get_deriv_gr(s.one.phi, 0, 1, mode);
  const GrassmannField db2 = get_deriv_gr(s.two.phi, 0, 1, mode);
  const GrassmannField dl = get_deriv_gr(s.defect.lambda0, 1, 0, mode);
  const GrassmannField dbl = get_deriv_gr(s.defect.lambda0, 0, 1, mode);
  const GrassmannField dbl1 = get_deriv_gr(s.defect.lambda1, 0, 1, mode);
  const GrassmannField df1 = get_deriv_gr(s.defect.f1, 1, 0, mode);
  const GrassmannField dbf1 = get_deriv_gr(s.defect.f1, 0, 1, mode);

  int mz = 0, mzb = 0;
  for (const GrassmannField* f :
       {&d1, &d2, &db1, &db2, &dl, &dbl, &dbl1, &df1, &dbf1}) {
    mz = std::max(mz, f->margin_z);
    mzb = std::max(mzb, f->margin_zb);
  }

  ResidualReport rep;
  rep.grid_sizes = {grid->nz()};

  struct Vals {
    GE pp, pm, l0, l1, f1, psi_p, psi_m, psibar_p, psibar_m;
    GE el, elh, epl, eplh, shm, chm, sh2, ch2;
  };
  auto eval_fields = [&](int i, int j) {
    Vals v;
    const GE& phi1 = s.one.phi.samples.at(i, j);
    const GE& phi2 = s.two.phi.samples.at(i, j);
    v.pp = phi1 + phi2;
    v.pm = phi1 - phi2;
    v.l0 = s.defect.lambda0.samples.at(i, j);
    v.l1 = s.defect.lambda1.samples.at(i, j);
    v.f1 = s.defect.f1.samples.at(i, j);
    v.psi_p = s.one.psi.samples.at(i, j) + s.two.psi.samples.at(i, j);
    v.psi_m = s.one.psi.samples.at(i, j) - s.two.psi.samples.at(i, j);
    v.psibar_p = s.one.psibar.samples.at(i, j) + s.two.psibar.samples.at(i, j);
    v.psibar_m = s.one.psibar.samples.at(i, j) - s.two.psibar.samples.at(i, j);
    v.el = gr_exp(v.l0);
    v.elh = gr_exp(v.l0 * 0.5);
    v.epl = gr_exp(v.pp - v.l0);
    v.eplh = gr_exp((v.pp - v.l0) * 0.5);
    v.shm = gr_sinh(v.pm);
    v.chm = gr_cosh(v.pm);
    v.sh2 = gr_sinh(v.pm * 0.5);
    v.ch2 = gr_cosh(v.pm * 0.5);
    return v;
  };

  if (form == BacklundForm::Reduced) {
    std::vector<GrassmannField> r;
    for (int k = 0; k < 9; ++k) {
      r.emplace_back(grid);
      r.back().margin_z = mz;
      r.back().margin_zb = mzb;
    }
    for (int i = mz; i < grid->nz() - mz; ++i) {
      for (int j = mzb; j < grid->nzb() - mzb; ++j) {
        const Vals v = eval_fields(i, j);
        r[0].at(i, j) = d1.at(i, j) + d2.at(i, j) - dl.at(i, j) +
                        cmb * v.el * v.shm +
                        (smu / (2.0 * p.beta)) * v.elh * v.ch2 * v.psi_p * v.f1;
        r[1].at(i, j) = d1.at(i, j) - d2.at(i, j) +
                        cmb * v.el * (v.chm - 1.0) +
                        (smu / (2.0 * p.beta)) * v.elh * v.sh2 * v.psi_p * v.f1;
        r[2].at(i, j) = db1.at(i, j) - db2.at(i, j) -
                        2.0 * kI * p.mu * b2 * v.epl +
                        (p.beta * smu / 2.0) * v.eplh * v.psibar_p * v.f1;
        r[3].at(i, j) = v.psi_m - (smu / p.beta) * v.elh * v.sh2 * v.f1;
        r[4].at(i, j) = v.psibar_m - smu * p.beta * v.eplh * v.f1;
        r[5].at(i, j) =
            df1.at(i, j) + (kI * smu / p.beta) * v.elh * v.sh2 * v.psi_p;
        r[6].at(i, j) =
            dbf1.at(i, j) - kI * smu * p.beta * v.eplh * v.psibar_p;
        r[7].at(i, j) = dbl.at(i, j);
        r[8].at(i, j) = dbl1.at(i, j);
      }
    }
    const char* ids[9] = {"rb_dphi_plus",   "rb_dphi_minus",
                          "rb_dbar_phi_minus", "rb_psi_minus",
                          "rb_psibar_minus",   "rb_df1",
                          "rb_dbar_f1",        "rb_dbar_lambda0",
                          "rb_dbar_lambda1"};
    for (int k = 0; k < 9; ++k) add_gr_norms(rep, ids[k], r[k]);
    return rep;
  }

  // full component list
  const GrassmannField dpsibar1 = get_deriv_gr(s.one.psibar, 1, 0, mode);
  const GrassmannField dpsibar2 = get_deriv_gr(s.two.psibar, 1, 0, mode);
  const GrassmannField dbpsi1 = get_deriv_gr(s.one.psi, 0, 1, mode);
  const GrassmannField dbpsi2 = get_deriv_gr(s.two.psi, 0, 1, mode);
  const GrassmannField db_b1 = get_deriv_gr(s.defect.b1, 0, 1, mode);
  const GrassmannField d_b2 = get_deriv_gr(s.defect.b2, 1, 0, mode);
  for (const GrassmannField* f :
       {&dpsibar1, &dpsibar2, &dbpsi1, &dbpsi2, &db_b1, &d_b2}) {
    mz = std::max(mz, f->margin_z);
    mzb = std::max(mzb, f->margin_zb);
  }

  constexpr int n_eq = 21;
  std::vector<GrassmannField> r;
  r.reserve(n_eq);
  for (int k = 0; k < n_eq; ++k) {
    r.emplace_back(grid);
    r.back().margin_z = mz;
    r.back().margin_zb = mzb;
  }

  for (int i = mz; i < grid->nz() - mz; ++i) {
    for (int j = mzb; j < grid->nzb() - mzb; ++j) {
      const Vals v = eval_fields(i, j);
      const GE& F1v = s.one.F.samples.at(i, j);
      const GE& F2v = s.two.F.samples.at(i, j);
      const GE Fp = F1v + F2v;
      const GE Fm = F1v - F2v;
      const GE& b1v = s.defect.b1.samples.at(i, j);
      const GE& b2v = s.defect.b2.samples.at(i, j);
      const GE& f2v = s.defect.f2.samples.at(i, j);
      const GE psi_l1 = v.psi_p - v.l1;
      int k = 0;

      r[k++].at(i, j) =
          d1.at(i, j) + d2.at(i, j) - dl.at(i, j) + cmb * v.el * v.shm +
          (smu / (2.0 * p.beta)) * v.elh *
              (v.sh2 * v.psi_m + v.ch2 * v.l1) * v.f1;
      r[k++].at(i, j) = psi_l1 - (smu / p.beta) * v.elh * v.ch2 * v.f1;
      r[k++].at(i, j) =
          Fp + (smu / p.beta) * v.elh *
                   (b2v * v.ch2 + (kI * 0.5) * v.sh2 * v.psibar_m * v.f1);
      r[k++].at(i, j) =
          dpsibar1.at(i, j) + dpsibar2.at(i, j) -
          (smu / (2.0 * p.beta)) * v.elh *
              (kI * v.sh2 *
                   (b1v * v.psibar_m +
                    (kI * 0.5) * (v.l1 * v.f1) * v.psibar_m -
                    b2v * v.psi_m - Fm * v.f1) -
               v.ch2 * (2.0 * f2v + kI * v.l1 * b2v +
                        0.5 * v.psibar_m * v.psi_m * v.f1));
      r[k++].at(i, j) = v.psibar_m - smu * p.beta * v.eplh * v.f1;
      r[k++].at(i, j) =
          Fm - smu * p.beta * v.eplh * (b1v + (kI * 0.5) * psi_l1 * v.f1);
      r[k++].at(i, j) =
          Fm + (kI * smu / p.beta) * v.elh *
                   (b2v * v.sh2 + (kI * 0.5) * v.ch2 * v.psibar_m * v.f1);
      r[k++].at(i, j) =
          db1.at(i, j) - db2.at(i, j) -
          kI * smu * p.beta * v.eplh *
              (b2v + (kI * 0.5) * v.psibar_p * v.f1);
      r[k++].at(i, j) =
          dbpsi1.at(i, j) - dbpsi2.at(i, j) -
          (smu * p.beta / 2.0) * v.eplh *
              (2.0 * f2v - kI * b1v * v.psibar_p + kI * b2v * psi_l1 +
               (kI * Fp + 0.5 * v.psibar_p * psi_l1) * v.f1);
      r[k++].at(i, j) = b1v + (2.0 * smu / p.beta) * v.elh * v.sh2;
      r[k++].at(i, j) =
          f2v - (kI * smu / p.beta) * v.elh * v.ch2 * v.psibar_m;
      r[k++].at(i, j) = f2v - kI * smu * p.beta * v.eplh * psi_l1;
      r[k++].at(i, j) =
          df1.at(i, j) +
          (kI * smu / p.beta) * v.elh * (v.ch2 * v.psi_m + v.sh2 * v.l1);
      r[k++].at(i, j) =
          d_b2.at(i, j) -
          (smu / p.beta) * v.elh *
              (kI * v.ch2 * Fm + 0.5 * v.sh2 * v.psibar_m * v.psi_m +
               0.5 * v.ch2 * v.psibar_m * v.l1);
      r[k++].at(i, j) = b2v - 2.0 * smu * p.beta * v.eplh;
      r[k++].at(i, j) =
          dbf1.at(i, j) - kI * smu * p.beta * v.eplh * v.psibar_p;
      r[k++].at(i, j) =
          db_b1.at(i, j) -
          smu * p.beta * v.eplh * (kI * Fp + 0.5 * v.psibar_p * psi_l1);
      r[k++].at(i, j) = v.psi_m - (smu / p.beta) * v.elh * v.sh2 * v.f1;
      r[k++].at(i, j) =
          d1.at(i, j) - d2.at(i, j) -
          (kI * smu / p.beta) * v.elh *
              (b1v * v.sh2 + (kI * 0.5) * v.sh2 * v.l1 * v.f1 +
               (kI * 0.5) * v.ch2 * v.psi_m * v.f1);
      const GE bracket18 =
          v.ch2 * (v.l1 * v.f1) * v.psibar_m +
          v.sh2 * (v.psibar_m * v.psi_m) * v.f1 +
          2.0 * kI * v.ch2 * Fm * v.f1 - 2.0 * kI * v.ch2 * b1v * v.psibar_m +
          2.0 * kI * v.ch2 * b2v * v.psi_m + 2.0 * kI * v.sh2 * b2v * v.l1 +
          4.0 * f2v * v.sh2;
      // consistent normalization carries an extra factor i over the print
      r[k].at(i, j) = dpsibar1.at(i, j) - dpsibar2.at(i, j) -
                      (kI * kI * smu / (4.0 * p.beta)) * v.elh * bracket18;
      ++k;
      r[k].at(i, j) = dpsibar1.at(i, j) - dpsibar2.at(i, j) -
                      (kI * smu / (4.0 * p.beta)) * v.elh * bracket18;
    }
  }

  const char* ids[n_eq] = {"fc_dphi_plus",
                           "fc_psi_plus_lambda1",
                           "fc_F_plus",
                           "fc_dpsibar_plus",
                           "fc_psibar_minus",
                           "fc_F_minus",
                           "fc_F_minus_second_printed",
                           "fc_dbar_phi_minus",
                           "fc_dbar_psi_minus",
                           "fc_b1",
                           "fc_f2_first",
                           "fc_f2_second",
                           "fc_df1",
                           "fc_db2",
                           "fc_b2",
                           "fc_dbar_f1",
                           "fc_dbar_b1",
                           "fc_psi_minus",
                           "fc_dphi_minus",
                           "fc_dpsibar_minus",
                           "fc_dpsibar_minus_printed"};
  for (int k = 0; k < n_eq; ++k) add_gr_norms(rep, ids[k], r[k]);
  return rep;
}

// ---------------------------------------------------------------------------
// reduced-system integrator (kappa = -1)

SuperState super_backlund_integrate(const SuperField& one,
                                    const SuperLayout& layout,
                                    const SuperSeed& seed,
                                    const DefectParams& p) {
  p.validate();
  if (!one.phi.analytic || !one.psi.analytic || !one.psibar.analytic)
    throw std::invalid_argument(
        "super_backlund_integrate: member one must carry closed-form jets");
  const GridPtr& grid = one.phi.samples.grid;
  const int nz = grid->nz(), nzb = grid->nzb();
  const ContextPtr& ctx = layout.ctx;
  const Complex smu = std::sqrt(p.mu);
  const Complex b2 = p.beta * p.beta;
  const Complex cmb = kI * p.mu / b2;

  struct Y {
    GE phi2, lam, f1;
  };

  auto guard = [&](const GE& e, double z, double zb) -> const GE& {
    if (std::abs(e.body()) > p.blowup_guard)
      throw BlowupError(z, zb, std::abs(e.body()));
    return e;
  };

  auto rhs_z = [&](double z, double zb, const Y& y) {
    const GE phi1 = one.phi.analytic->eval(0, 0, z, zb);
    const GE dphi1 = one.phi.analytic->eval(1, 0, z, zb);
    const GE psi1 = one.psi.analytic->eval(0, 0, z, zb);
    const GE pm = phi1 - y.phi2;
    const GE el = gr_exp(y.lam);
    guard(el, z, zb);
    const GE elh = gr_exp(y.lam * 0.5);
    const GE sh2 = gr_sinh(pm * 0.5);
    const GE ch2 = gr_cosh(pm * 0.5);
    const GE psi_p = 2.0 * psi1 - (smu / p.beta) * elh * sh2 * y.f1;
    const GE dpm = -cmb * el * (gr_cosh(pm) - 1.0) -
                   (smu / (2.0 * p.beta)) * elh * sh2 * psi_p * y.f1;
    Y d;
    d.phi2 = dphi1 - dpm;
    d.lam = (2.0 * dphi1 - dpm) + cmb * el * gr_sinh(pm) +
            (smu / (2.0 * p.beta)) * elh * ch2 * psi_p * y.f1;
    d.f1 = -(kI * smu / p.beta) * elh * sh2 * psi_p;
    return d;
  };
  auto rhs_zb = [&](double z, double zb, const Y& y) {
    const GE phi1 = one.phi.analytic->eval(0, 0, z, zb);
    const GE dbphi1 = one.phi.analytic->eval(0, 1, z, zb);
    const GE psibar1 = one.psibar.analytic->eval(0, 0, z, zb);
    const GE arg = phi1 + y.phi2 - y.lam;
    const GE epl = gr_exp(arg);
    guard(epl, z, zb);
    const GE eplh = gr_exp(arg * 0.5);
    const GE psibar_p = 2.0 * psibar1 - smu * p.beta * eplh * y.f1;
    const GE dbpm = 2.0 * kI * p.mu * b2 * epl -
                    (p.beta * smu / 2.0) * eplh * psibar_p * y.f1;
    Y d;
    d.phi2 = dbphi1 - dbpm;
    d.lam = GE::zero(ctx);
    d.f1 = kI * smu * p.beta * eplh * psibar_p;
    return d;
  };

  auto midpoint = [&](auto rhs, double s0, double h, double other, bool zdir,
                      const Y& y) {
    auto eval = [&](double s, const Y& yy) {
      return zdir ? rhs(s, other, yy) : rhs(other, s, yy);
    };
    const Y k1 = eval(s0, y);
    const Y ym{y.phi2 + 0.5 * h * k1.phi2, y.lam + 0.5 * h * k1.lam,
               y.f1 + 0.5 * h * k1.f1};
    const Y k2 = eval(s0 + 0.5 * h, ym);
    return Y{y.phi2 + h * k2.phi2, y.lam + h * k2.lam, y.f1 + h * k2.f1};
  };

  std::vector<Y> vals(static_cast<std::size_t>(nz) * nzb,
                      Y{GE::zero(ctx), GE::zero(ctx), GE::zero(ctx)});
  auto at = [&](int i, int j) -> Y& {
    return vals[static_cast<std::size_t>(i) * nzb + j];
  };
  at(0, 0) = {seed.phi2_corner, seed.lambda0_corner, seed.f1_corner};
  for (int i = 1; i < nz; ++i)
    at(i, 0) = midpoint(rhs_z, grid->z[i - 1], grid->hz(), grid->zbar[0],
                        true, at(i - 1, 0));
  for (int j = 1; j < nzb; ++j)
    at(0, j) = midpoint(rhs_zb, grid->zbar[j - 1], grid->hzbar(), grid->z[0],
                        false, at(0, j - 1));
  for (int j = 1; j < nzb; ++j) {
    for (int i = 1; i < nz; ++i) {
      // z-route value kept, cross-route agreement is a convergence check
      at(i, j) = midpoint(rhs_z, grid->z[i - 1], grid->hz(), grid->zbar[j],
                          true, at(i - 1, j));
    }
  }

  SuperState out;
  out.ctx = ctx;
  out.one = one;
  out.two.phi.samples = GrassmannField(grid);
  out.two.psi.samples = GrassmannField(grid);
  out.two.psibar.samples = GrassmannField(grid);
  out.two.F.samples = GrassmannField(grid);
  out.one.F.samples = GrassmannField(grid);
  out.defect.lambda0.samples = GrassmannField(grid);
  out.defect.lambda1.samples = GrassmannField(grid);
  out.defect.f1.samples = GrassmannField(grid);
  out.defect.b1.samples = GrassmannField(grid);
  out.defect.b2.samples = GrassmannField(grid);
  out.defect.f2.samples = GrassmannField(grid);

  for (int i = 0; i < nz; ++i) {
    for (int j = 0; j < nzb; ++j) {
      const double z = grid->z[i], zb = grid->zbar[j];
      const Y& y = at(i, j);
      const GE phi1 = one.phi.analytic->eval(0, 0, z, zb);
      const GE psi1 = one.psi.analytic->eval(0, 0, z, zb);
      const GE psibar1 = one.psibar.analytic->eval(0, 0, z, zb);
      const GE pm = phi1 - y.phi2;
      const GE pp = phi1 + y.phi2;
      const GE elh = gr_exp(y.lam * 0.5);
      const GE eplh = gr_exp((pp - y.lam) * 0.5);
      const GE sh2 = gr_sinh(pm * 0.5);
      const GE ch2 = gr_cosh(pm * 0.5);

      out.two.phi.samples.at(i, j) = y.phi2;
      out.defect.lambda0.samples.at(i, j) = y.lam;
      out.defect.f1.samples.at(i, j) = y.f1;

      const GE psi2 = psi1 - (smu / p.beta) * elh * sh2 * y.f1;
      const GE psibar2 = psibar1 - smu * p.beta * eplh * y.f1;
      out.two.psi.samples.at(i, j) = psi2;
      out.two.psibar.samples.at(i, j) = psibar2;

      const GE psi_p = psi1 + psi2;
      const GE psibar_m = psibar1 - psibar2;
      const GE lambda1 = psi_p - (smu / p.beta) * elh * ch2 * y.f1;
      out.defect.lambda1.samples.at(i, j) = lambda1;

      const GE b1v = -(2.0 * smu / p.beta) * elh * sh2;
      const GE b2v = 2.0 * smu * p.beta * eplh;
      out.defect.b1.samples.at(i, j) = b1v;
      out.defect.b2.samples.at(i, j) = b2v;
      out.defect.f2.samples.at(i, j) =
          (kI * smu / p.beta) * elh * ch2 * psibar_m;

      const GE Fp = -(smu / p.beta) * elh *
                    (b2v * ch2 + (kI * 0.5) * sh2 * psibar_m * y.f1);
      const GE Fm = smu * p.beta * eplh *
                    (b1v + (kI * 0.5) * (psi_p - lambda1) * y.f1);
      out.one.F.samples.at(i, j) = 0.5 * (Fp + Fm);
      out.two.F.samples.at(i, j) = 0.5 * (Fp - Fm);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// exact solution family

namespace {

// complex jets to total order 2
struct Jet2 {
  Complex v{}, dz{}, dzb{}, dzz{}, dzzb{}, dzbzb{};

  static Jet2 constant(Complex c) { return {c, {}, {}, {}, {}, {}}; }

  Jet2 operator+(const Jet2& o) const {
    return {v + o.v,     dz + o.dz,     dzb + o.dzb,
            dzz + o.dzz, dzzb + o.dzzb, dzbzb + o.dzbzb};
  }
  Jet2 operator-(const Jet2& o) const {
    return {v - o.v,     dz - o.dz,     dzb - o.dzb,
            dzz - o.dzz, dzzb - o.dzzb, dzbzb - o.dzbzb};
  }
  Jet2 operator*(Complex s) const {
    return {v * s, dz * s, dzb * s, dzz * s, dzzb * s, dzbzb * s};
  }
  Jet2 operator*(const Jet2& o) const {
    return {v * o.v,
            dz * o.v + v * o.dz,
            dzb * o.v + v * o.dzb,
            dzz * o.v + 2.0 * dz * o.dz + v * o.dzz,
            dzzb * o.v + dz * o.dzb + dzb * o.dz + v * o.dzzb,
            dzbzb * o.v + 2.0 * dzb * o.dzb + v * o.dzbzb};
  }
};

Jet2 jexp(const Jet2& f) {
  const Complex e = std::exp(f.v);
  return {e,
          e * f.dz,
          e * f.dzb,
          e * (f.dzz + f.dz * f.dz),
          e * (f.dzzb + f.dz * f.dzb),
          e * (f.dzbzb + f.dzb * f.dzb)};
}

Jet2 jsinh(const Jet2& f) {
  const Complex s = std::sinh(f.v), c = std::cosh(f.v);
  return {s,
          c * f.dz,
          c * f.dzb,
          c * f.dzz + s * f.dz * f.dz,
          c * f.dzzb + s * f.dz * f.dzb,
          c * f.dzbzb + s * f.dzb * f.dzb};
}

Jet2 jcosh(const Jet2& f) {
  const Complex c = std::cosh(f.v), s = std::sinh(f.v);
  return {c,
          s * f.dz,
          s * f.dzb,
          s * f.dzz + c * f.dz * f.dz,
          s * f.dzzb + c * f.dz * f.dzb,
          s * f.dzbzb + c * f.dzb * f.dzb};
}

Jet2 jet_from_analytic(const AnalyticScalar& f, double z, double zb) {
  return {f.eval(0, 0, z, zb), f.eval(1, 0, z, zb), f.eval(0, 1, z, zb),
          f.eval(2, 0, z, zb), f.eval(1, 1, z, zb), f.eval(0, 2, z, zb)};
}

Complex jet_pick(const Jet2& J, int a, int b) {
  if (a == 0 && b == 0) return J.v;
  if (a == 1 && b == 0) return J.dz;
  if (a == 0 && b == 1) return J.dzb;
  if (a == 2 && b == 0) return J.dzz;
  if (a == 1 && b == 1) return J.dzzb;
  if (a == 0 && b == 2) return J.dzbzb;
  throw std::invalid_argument("exact-state jet order not available");
}

// scalar 2-jet times an optional generator
class ExactGrField final : public AnalyticGrassmann {
 public:
  ExactGrField(ContextPtr ctx, int gen,
               std::function<Jet2(double, double)> jet)
      : ctx_(std::move(ctx)), gen_(gen), jet_(std::move(jet)) {}
  GE eval(int dz, int dzb, double z, double zb) const override {
    const Complex c = jet_pick(jet_(z, zb), dz, dzb);
    GE e = S(ctx_, c);
    if (gen_) e = e * GE::generator(ctx_, gen_);
    return e;
  }

 private:
  ContextPtr ctx_;
  int gen_;
  std::function<Jet2(double, double)> jet_;
};

}  // namespace

SuperJetBundle make_exact_super_jets(const SuperLayout& layout,
                                     const DefectParams& p,
                                     const ExactSuperSpec& spec) {
  p.validate();
  const ContextPtr& ctx = layout.ctx;
  const ExactTypeIIJets base = make_exact_type2_jets(p, spec.bosonic);
  const Complex smu = std::sqrt(p.mu);
  const Complex L = base.L;
  const Complex cf = spec.cf;
  const int gen = spec.f1_generator;
  const AnalyticPtr u_an = base.u;
  const AnalyticPtr pp_an = base.phiplus;

  auto u_jet = [u_an](double z, double zb) {
    return jet_from_analytic(*u_an, z, zb);
  };
  auto pp_jet = [pp_an](double z, double zb) {
    return jet_from_analytic(*pp_an, z, zb);
  };

  SuperJetBundle out;
  out.ctx = ctx;

  auto mk = [&](int g, std::function<Jet2(double, double)> j) {
    return std::make_shared<ExactGrField>(ctx, g, std::move(j));
  };

  out.phi1 = mk(0, [=](double z, double zb) {
    return (pp_jet(z, zb) + u_jet(z, zb)) * 0.5;
  });
  out.phi2 = mk(0, [=](double z, double zb) {
    return (pp_jet(z, zb) - u_jet(z, zb)) * 0.5;
  });
  out.psi1 = mk(0, [ctx](double, double) { return Jet2::constant({}); });
  out.psibar1 = mk(0, [ctx](double, double) { return Jet2::constant({}); });
  out.lambda0 = mk(0, [L](double, double) { return Jet2::constant(L); });

  // f1 = cf e^{-u/2} G
  out.f1 = mk(gen, [=](double z, double zb) {
    return jexp(u_jet(z, zb) * Complex(-0.5, 0.0)) * cf;
  });
  // psi2 = -(smu cf / 2 beta) e^{L/2} (1 - e^{-u}) G
  out.psi2 = mk(gen, [=, beta = p.beta](double z, double zb) {
    const Jet2 emu = jexp(u_jet(z, zb) * Complex(-1.0, 0.0));
    const Jet2 one_minus = Jet2::constant(Complex(1.0, 0.0)) - emu;
    return one_minus * (-(smu * cf / (2.0 * beta)) * std::exp(0.5 * L));
  });
  // psibar2 = -smu beta cf e^{(phi+ - L - u)/2} G
  out.psibar2 = mk(gen, [=, beta = p.beta](double z, double zb) {
    const Jet2 arg =
        (pp_jet(z, zb) - Jet2::constant(L) - u_jet(z, zb)) * Complex(0.5, 0.0);
    return jexp(arg) * (-smu * beta * cf);
  });
  // Lambda1 = -(smu/beta) e^{L/2} cf G  (constant, chiral)
  out.lambda1 = mk(gen, [=, beta = p.beta](double, double) {
    return Jet2::constant(-(smu / beta) * std::exp(0.5 * L) * cf);
  });
  // F_p = -mu e^{phi_p}
  out.F1 = mk(0, [=, mu = p.mu](double z, double zb) {
    return jexp((pp_jet(z, zb) + u_jet(z, zb)) * 0.5) * (-mu);
  });
  out.F2 = mk(0, [=, mu = p.mu](double z, double zb) {
    return jexp((pp_jet(z, zb) - u_jet(z, zb)) * 0.5) * (-mu);
  });
  // b1 = -(2 smu/beta) e^{L/2} sinh(u/2)
  out.b1 = mk(0, [=, beta = p.beta](double z, double zb) {
    return jsinh(u_jet(z, zb) * Complex(0.5, 0.0)) *
           (-(2.0 * smu / beta) * std::exp(0.5 * L));
  });
  // b2 = 2 smu beta e^{(phi+ - L)/2}
  out.b2 = mk(0, [=, beta = p.beta](double z, double zb) {
    return jexp((pp_jet(z, zb) - Jet2::constant(L)) * Complex(0.5, 0.0)) *
           (2.0 * smu * beta);
  });
  // f2 = i mu cf cosh(u/2) e^{phi2} G
  out.f2 = mk(gen, [=, mu = p.mu](double z, double zb) {
    const Jet2 phi2 = (pp_jet(z, zb) - u_jet(z, zb)) * 0.5;
    return jcosh(u_jet(z, zb) * Complex(0.5, 0.0)) * jexp(phi2) * (kI * mu * cf);
  });
  return out;
}

SuperState sample_super_state(const SuperJetBundle& jets, const GridPtr& grid) {
  SuperState s;
  s.ctx = jets.ctx;
  auto fill = [&](const AnalyticGrPtr& an) {
    SuperComponent c;
    c.samples = sample_analytic_gr(grid, *an, 0, 0);
    c.analytic = an;
    return c;
  };
  s.one.phi = fill(jets.phi1);
  s.one.psi = fill(jets.psi1);
  s.one.psibar = fill(jets.psibar1);
  s.one.F = fill(jets.F1);
  s.two.phi = fill(jets.phi2);
  s.two.psi = fill(jets.psi2);
  s.two.psibar = fill(jets.psibar2);
  s.two.F = fill(jets.F2);
  s.defect.lambda0 = fill(jets.lambda0);
  s.defect.lambda1 = fill(jets.lambda1);
  s.defect.f1 = fill(jets.f1);
  s.defect.b1 = fill(jets.b1);
  s.defect.b2 = fill(jets.b2);
  s.defect.f2 = fill(jets.f2);
  return s;
}

// ---------------------------------------------------------------------------
// defect conditions at x = 0

std::vector<std::pair<std::string, GE>> defect_conditions_at(
    const DefectPointData& d, const DefectParams& p, Complex kappa,
    ConditionForm form) {
  p.validate();
  const Complex smu = std::sqrt(p.mu);
  const Complex b2 = p.beta * p.beta;

  const GE pp = d.phi1.v + d.phi2.v;
  const GE pm = d.phi1.v - d.phi2.v;
  const GE l0 = d.lambda0.v;
  const GE epl = gr_exp(pp - l0);
  const GE eplh = gr_exp((pp - l0) * 0.5);
  const GE el = gr_exp(l0);
  const GE elh = gr_exp(l0 * 0.5);
  const GE shm = gr_sinh(pm);
  const GE chm = gr_cosh(pm);
  const GE sh2 = gr_sinh(pm * 0.5);
  const GE ch2 = gr_cosh(pm * 0.5);
  const GE psi_p = d.psi1.v + d.psi2.v;
  const GE psi_m = d.psi1.v - d.psi2.v;
  const GE psibar_p = d.psibar1.v + d.psibar2.v;
  const GE psibar_m = d.psibar1.v - d.psibar2.v;
  const GE& f1 = d.f1.v;
  const GE& l1 = d.lambda1.v;

  std::vector<std::pair<std::string, GE>> out;

  if (form == ConditionForm::WithLambda1) {
    const GE br = sh2 * psi_m + ch2 * l1;         // as printed in d1/d2
    const GE br_swapped = ch2 * psi_m + sh2 * l1;  // consistent d3 bracket
    out.emplace_back(
        "d1",
        d.phi1.dx - (d.phi2.dt - d.lambda0.dt) -
            (kI * p.mu * b2 * epl - (kI * p.mu / (2.0 * b2)) * el * shm -
             (p.beta * smu / 4.0) * eplh * psibar_p * f1 -
             (smu / (4.0 * p.beta)) * elh * br * f1));
    out.emplace_back(
        "d2",
        d.phi2.dx - (d.phi1.dt - d.lambda0.dt) -
            (-kI * p.mu * b2 * epl - (kI * p.mu / (2.0 * b2)) * el * shm +
             (p.beta * smu / 4.0) * eplh * psibar_p * f1 -
             (smu / (4.0 * p.beta)) * elh * br * f1));
    out.emplace_back(
        "d3",
        (d.phi1.dt - d.phi2.dt) -
            (kI * p.mu * b2 * epl +
             (kI * p.mu / (2.0 * b2)) * el * (chm + kappa) -
             (p.beta * smu / 4.0) * eplh * psibar_p * f1 +
             (smu / (4.0 * p.beta)) * elh * br_swapped * f1));
    out.emplace_back(
        "d3_printed",
        (d.phi1.dt - d.phi2.dt) -
            (kI * p.mu * b2 * epl +
             (kI * p.mu / (2.0 * b2)) * el * (chm + kappa) -
             (p.beta * smu / 4.0) * eplh * psibar_p * f1 +
             (smu / (4.0 * p.beta)) * elh * br * f1));
    out.emplace_back("d4", psi_p - l1 - (smu / p.beta) * elh * ch2 * f1);
    out.emplace_back("d5", psi_m - (smu / p.beta) * elh * sh2 * f1);
    out.emplace_back("d6", psibar_m - smu * p.beta * eplh * f1);
    out.emplace_back(
        "d7", d.f1.dt -
                  (kI * smu / (2.0 * p.beta)) * elh * (ch2 * psi_m + sh2 * l1) -
                  (kI * smu * p.beta / 2.0) * eplh * psibar_p);
    return out;
  }

  // reduced set (kappa eliminated at -1)
  out.emplace_back(
      "s1",
      d.phi1.dx - (d.phi2.dt - d.lambda0.dt) -
          (kI * p.mu * b2 * epl - (kI * p.mu / (2.0 * b2)) * el * shm -
           (p.beta * smu / 4.0) * eplh * psibar_p * f1 -
           (smu / (4.0 * p.beta)) * elh * ch2 * psi_p * f1));
  out.emplace_back(
      "s2",
      d.phi2.dx - (d.phi1.dt - d.lambda0.dt) -
          (-kI * p.mu * b2 * epl - (kI * p.mu / (2.0 * b2)) * el * shm +
           (p.beta * smu / 4.0) * eplh * psibar_p * f1 -
           (smu / (4.0 * p.beta)) * elh * ch2 * psi_p * f1));
  out.emplace_back(
      "s3", (d.phi1.dt - d.phi2.dt) -
                (kI * p.mu * b2 * epl + (kI * p.mu / b2) * el * sh2 * sh2 -
                 (p.beta * smu / 4.0) * eplh * psibar_p * f1 +
                 (smu / (4.0 * p.beta)) * elh * sh2 * psi_p * f1));
  out.emplace_back("s4", psi_m - (smu / p.beta) * elh * sh2 * f1);
  out.emplace_back("s5", psibar_m - smu * p.beta * eplh * f1);
  out.emplace_back(
      "s6", d.f1.dt - (kI * smu * p.beta / 2.0) * eplh * psibar_p -
                (kI * smu / (2.0 * p.beta)) * elh * sh2 * psi_p);
  return out;
}

ResidualReport defect_condition_residual(const BoundaryTrace& trace,
                                         const DefectParams& p, Complex kappa,
                                         ConditionForm form) {
  if (trace.t.size() < 3)
    throw std::invalid_argument("defect_condition_residual: trace too short");
  const std::size_t n = trace.t.size();
  const double dt = trace.t[1] - trace.t[0];

  std::vector<std::map<std::string, NormAcc>> dummy;  // keep clang quiet
  (void)dummy;

  std::map<std::string, NormAcc> acc;
  const std::size_t lo = trace.has_dt ? 0 : 1;
  const std::size_t hi = trace.has_dt ? n : n - 1;
  for (std::size_t k = lo; k < hi; ++k) {
    DefectPointData d = trace.samples[k];
    if (!trace.has_dt) {
      auto series_dt = [&](auto proj) {
        return (proj(trace.samples[k + 1]) - proj(trace.samples[k - 1])) /
               (2.0 * dt);
      };
      d.phi1.dt = series_dt([](const DefectPointData& s) { return s.phi1.v; });
      d.phi2.dt = series_dt([](const DefectPointData& s) { return s.phi2.v; });
      d.lambda0.dt =
          series_dt([](const DefectPointData& s) { return s.lambda0.v; });
      d.f1.dt = series_dt([](const DefectPointData& s) { return s.f1.v; });
    }
    for (auto& [id, res] : defect_conditions_at(d, p, kappa, form))
      acc[id].add(res.max_abs());
  }

  ResidualReport rep;
  for (auto& [id, a] : acc) rep.add(id, a.mx, a.mean());
  return rep;
}

// ---------------------------------------------------------------------------
// analytic point jets, traces, supersymmetry

namespace {

DefectPointData2::Jet2 jet2_of(const AnalyticGrassmann& f, double z,
                               double zb) {
  return {f.eval(0, 0, z, zb), f.eval(1, 0, z, zb), f.eval(0, 1, z, zb),
          f.eval(2, 0, z, zb), f.eval(1, 1, z, zb), f.eval(0, 2, z, zb)};
}

FieldJet to_xt(const DefectPointData2::Jet2& j) {
  // dx = (d + dbar)/2, dt = (dbar - d)/2
  return {j.v, 0.5 * (j.dz + j.dzb), 0.5 * (j.dzb - j.dz)};
}

}  // namespace

DefectPointData2 point_jets_from_bundle(const SuperJetBundle& jets, double z,
                                        double zb) {
  DefectPointData2 d;
  d.phi1 = jet2_of(*jets.phi1, z, zb);
  d.phi2 = jet2_of(*jets.phi2, z, zb);
  d.psi1 = jet2_of(*jets.psi1, z, zb);
  d.psi2 = jet2_of(*jets.psi2, z, zb);
  d.psibar1 = jet2_of(*jets.psibar1, z, zb);
  d.psibar2 = jet2_of(*jets.psibar2, z, zb);
  d.lambda0 = jet2_of(*jets.lambda0, z, zb);
  d.lambda1 = jet2_of(*jets.lambda1, z, zb);
  d.f1 = jet2_of(*jets.f1, z, zb);
  return d;
}

DefectPointData to_xt_jets(const DefectPointData2& d) {
  DefectPointData o;
  o.phi1 = to_xt(d.phi1);
  o.phi2 = to_xt(d.phi2);
  o.psi1 = to_xt(d.psi1);
  o.psi2 = to_xt(d.psi2);
  o.psibar1 = to_xt(d.psibar1);
  o.psibar2 = to_xt(d.psibar2);
  o.lambda0 = to_xt(d.lambda0);
  o.lambda1 = to_xt(d.lambda1);
  o.f1 = to_xt(d.f1);
  return o;
}

BoundaryTrace trace_from_jets(const SuperJetBundle& jets,
                              const std::vector<double>& ts) {
  BoundaryTrace tr;
  tr.t = ts;
  tr.has_dt = true;
  for (double t : ts) {
    const double z = -0.5 * t, zb = 0.5 * t;
    tr.samples.push_back(to_xt_jets(point_jets_from_bundle(jets, z, zb)));
  }
  return tr;
}

DefectPointData susy_transform_point(const DefectPointData2& d,
                                     const SusyParams& su,
                                     const DefectParams& p) {
  using J2 = DefectPointData2::Jet2;
  const GE& eps = su.eps;
  const GE& epsb = su.epsbar;
  const Complex smu = std::sqrt(p.mu);

  struct LC {
    GE v, dz, dzb;
  };
  auto add = [](const J2& a, const LC& b) {
    return LC{a.v + b.v, a.dz + b.dz, a.dzb + b.dzb};
  };

  // variations of the member fields; first-order jets of each variation
  auto var_phi = [&](const J2& psi, const J2& psibar) {
    return LC{eps * psi.v + epsb * psibar.v, eps * psi.dz + epsb * psibar.dz,
              eps * psi.dzb + epsb * psibar.dzb};
  };
  auto var_psi = [&](const J2& phi) {
    const GE e = gr_exp(phi.v);
    return LC{-(eps * phi.dz) - kI * p.mu * epsb * e,
              -(eps * phi.dzz) - kI * p.mu * epsb * e * phi.dz,
              -(eps * phi.dzzb) - kI * p.mu * epsb * e * phi.dzb};
  };
  auto var_psibar = [&](const J2& phi) {
    const GE e = gr_exp(phi.v);
    return LC{-(epsb * phi.dzb) + kI * p.mu * eps * e,
              -(epsb * phi.dzzb) + kI * p.mu * eps * e * phi.dz,
              -(epsb * phi.dzbzb) + kI * p.mu * eps * e * phi.dzb};
  };

  const LC phi1 = add(d.phi1, var_phi(d.psi1, d.psibar1));
  const LC phi2 = add(d.phi2, var_phi(d.psi2, d.psibar2));
  const LC psi1 = add(d.psi1, var_psi(d.phi1));
  const LC psi2 = add(d.psi2, var_psi(d.phi2));
  const LC psibar1 = add(d.psibar1, var_psibar(d.phi1));
  const LC psibar2 = add(d.psibar2, var_psibar(d.phi2));

  const LC lambda0 = add(d.lambda0, LC{eps * d.lambda1.v, eps * d.lambda1.dz,
                                       eps * d.lambda1.dzb});
  const LC lambda1 = add(d.lambda1, LC{-(eps * d.lambda0.dz),
                                       -(eps * d.lambda0.dzz),
                                       -(eps * d.lambda0.dzzb)});

  // delta f1 = (2 i smu/beta) eps e^{L0/2} sinh(phi-/2)
  //            - 2 i smu beta epsbar e^{(phi+ - L0)/2}
  const J2 pmj{d.phi1.v - d.phi2.v,     d.phi1.dz - d.phi2.dz,
               d.phi1.dzb - d.phi2.dzb, d.phi1.dzz - d.phi2.dzz,
               d.phi1.dzzb - d.phi2.dzzb, d.phi1.dzbzb - d.phi2.dzbzb};
  const J2 ppj{d.phi1.v + d.phi2.v,     d.phi1.dz + d.phi2.dz,
               d.phi1.dzb + d.phi2.dzb, d.phi1.dzz + d.phi2.dzz,
               d.phi1.dzzb + d.phi2.dzzb, d.phi1.dzbzb + d.phi2.dzbzb};
  const GE elh = gr_exp(d.lambda0.v * 0.5);
  const GE sh2 = gr_sinh(pmj.v * 0.5);
  const GE ch2 = gr_cosh(pmj.v * 0.5);
  const GE eplh = gr_exp((ppj.v - d.lambda0.v) * 0.5);
  const Complex cA = 2.0 * kI * smu / p.beta;
  const Complex cB = 2.0 * kI * smu * p.beta;

  // T1 = e^{L0/2} sinh(pm/2); T2 = e^{(pp - L0)/2}
  const GE T1 = elh * sh2;
  const GE T1_dz = elh * (0.5 * d.lambda0.dz * sh2 + 0.5 * ch2 * pmj.dz);
  const GE T1_dzb = elh * (0.5 * d.lambda0.dzb * sh2 + 0.5 * ch2 * pmj.dzb);
  const GE T2 = eplh;
  const GE T2_dz = 0.5 * (ppj.dz - d.lambda0.dz) * eplh;
  const GE T2_dzb = 0.5 * (ppj.dzb - d.lambda0.dzb) * eplh;

  const LC f1 = add(d.f1, LC{cA * (eps * T1) - cB * (epsb * T2),
                             cA * (eps * T1_dz) - cB * (epsb * T2_dz),
                             cA * (eps * T1_dzb) - cB * (epsb * T2_dzb)});

  auto xt = [](const LC& j) {
    return FieldJet{j.v, 0.5 * (j.dz + j.dzb), 0.5 * (j.dzb - j.dz)};
  };
  DefectPointData o;
  o.phi1 = xt(phi1);
  o.phi2 = xt(phi2);
  o.psi1 = xt(psi1);
  o.psi2 = xt(psi2);
  o.psibar1 = xt(psibar1);
  o.psibar2 = xt(psibar2);
  o.lambda0 = xt(lambda0);
  o.lambda1 = xt(lambda1);
  o.f1 = xt(f1);
  return o;
}

namespace {

void check_fresh(const GE& field, const GE& eps, const GE& epsb) {
  std::uint32_t bits = 0;
  for (const auto& [m, c] : eps.terms()) bits |= m;
  for (const auto& [m, c] : epsb.terms()) bits |= m;
  for (const auto& [m, c] : field.terms())
    if (m & bits)
      throw std::invalid_argument(
          "susy_transform: supersymmetry generators already present in state");
}

}  // namespace

SuperState susy_transform(const SuperState& s, const SusyParams& su,
                          const DefectParams& p) {
  const GridPtr& grid = s.one.phi.samples.grid;
  for (const auto* comp :
       {&s.one.phi, &s.one.psi, &s.one.psibar, &s.two.phi, &s.two.psi,
        &s.two.psibar, &s.defect.lambda0, &s.defect.lambda1, &s.defect.f1})
    for (const auto& x : comp->samples.v) check_fresh(x, su.eps, su.epsbar);

  const Complex smu = std::sqrt(p.mu);
  auto fd10 = [&](const SuperComponent& c) {
    return fd_derivative(c.samples, 1, 0);
  };
  auto fd01 = [&](const SuperComponent& c) {
    return fd_derivative(c.samples, 0, 1);
  };
  const GrassmannField d_phi1 = fd10(s.one.phi), db_phi1 = fd01(s.one.phi);
  const GrassmannField d_phi2 = fd10(s.two.phi), db_phi2 = fd01(s.two.phi);
  const GrassmannField d_l0 = fd10(s.defect.lambda0);

  SuperState o = s;
  const int mz = 1, mzb = 1;
  auto bump = [&](SuperComponent& c) {
    c.analytic = nullptr;
    c.samples.margin_z = std::max(c.samples.margin_z, mz);
    c.samples.margin_zb = std::max(c.samples.margin_zb, mzb);
  };
  for (auto* c : {&o.one.phi, &o.one.psi, &o.one.psibar, &o.two.phi,
                  &o.two.psi, &o.two.psibar, &o.defect.lambda0,
                  &o.defect.lambda1, &o.defect.f1})
    bump(*c);

  for (int i = mz; i < grid->nz() - mz; ++i) {
    for (int j = mzb; j < grid->nzb() - mzb; ++j) {
      const GE e1 = gr_exp(s.one.phi.samples.at(i, j));
      const GE e2 = gr_exp(s.two.phi.samples.at(i, j));
      o.one.phi.samples.at(i, j) +=
          su.eps * s.one.psi.samples.at(i, j) +
          su.epsbar * s.one.psibar.samples.at(i, j);
      o.two.phi.samples.at(i, j) +=
          su.eps * s.two.psi.samples.at(i, j) +
          su.epsbar * s.two.psibar.samples.at(i, j);
      o.one.psi.samples.at(i, j) +=
          -(su.eps * d_phi1.at(i, j)) - kI * p.mu * su.epsbar * e1;
      o.two.psi.samples.at(i, j) +=
          -(su.eps * d_phi2.at(i, j)) - kI * p.mu * su.epsbar * e2;
      o.one.psibar.samples.at(i, j) +=
          -(su.epsbar * db_phi1.at(i, j)) + kI * p.mu * su.eps * e1;
      o.two.psibar.samples.at(i, j) +=
          -(su.epsbar * db_phi2.at(i, j)) + kI * p.mu * su.eps * e2;
      o.defect.lambda0.samples.at(i, j) +=
          su.eps * s.defect.lambda1.samples.at(i, j);
      o.defect.lambda1.samples.at(i, j) += -(su.eps * d_l0.at(i, j));
      const GE pm =
          s.one.phi.samples.at(i, j) - s.two.phi.samples.at(i, j);
      const GE pp =
          s.one.phi.samples.at(i, j) + s.two.phi.samples.at(i, j);
      const GE l0 = s.defect.lambda0.samples.at(i, j);
      o.defect.f1.samples.at(i, j) +=
          (2.0 * kI * smu / p.beta) * su.eps * gr_exp(l0 * 0.5) *
              gr_sinh(pm * 0.5) -
          2.0 * kI * smu * p.beta * su.epsbar * gr_exp((pp - l0) * 0.5);
    }
  }
  return o;
}

ResidualReport susy_invariance_check(const SuperJetBundle& jets,
                                     const DefectParams& p, Complex kappa,
                                     const std::vector<double>& ts,
                                     const SuperLayout& layout) {
  SusyParams su{layout.gen(layout.eps), layout.gen(layout.epsbar)};
  const std::uint32_t eps_bit = std::uint32_t{1} << (layout.eps - 1);
  const std::uint32_t epsb_bit = std::uint32_t{1} << (layout.epsbar - 1);

  std::map<std::string, NormAcc> eps_acc;
  NormAcc base_acc;
  for (double t : ts) {
    const double z = -0.5 * t, zb = 0.5 * t;
    const DefectPointData2 d2 = point_jets_from_bundle(jets, z, zb);
    for (auto& [id, res] : defect_conditions_at(to_xt_jets(d2), p, kappa,
                                                ConditionForm::WithLambda1))
      if (id != "d3_printed") base_acc.add(res.max_abs());

    const DefectPointData tr = susy_transform_point(d2, su, p);
    for (auto& [id, res] :
         defect_conditions_at(tr, p, kappa, ConditionForm::WithLambda1)) {
      // first-order sector: exactly one of eps, epsbar present
      double m = 0.0;
      for (const auto& [mask, c] : res.terms()) {
        const bool he = mask & eps_bit, hb = mask & epsb_bit;
        if (he != hb) m = std::max(m, std::abs(c));
      }
      eps_acc[id + "_eps_sector"].add(m);
    }
  }

  ResidualReport rep;
  rep.add("base_conditions", base_acc.mx, base_acc.mean());
  for (auto& [id, a] : eps_acc) rep.add(id, a.mx, a.mean());
  return rep;
}

nlohmann::json susy_algebra_probe(const SuperJetBundle& jets,
                                  const DefectParams& p,
                                  const SuperLayout& layout, double z,
                                  double zb) {
  // two independent parameter pairs; requires two free odd generators
  // besides (eps, epsbar)
  const GE e1 = layout.gen(layout.eps);
  const GE eb1 = layout.gen(layout.epsbar);
  const GE e2 = layout.gen(layout.theta);      // reuse reserved slots as the
  const GE eb2 = layout.gen(layout.thetabar);  // second parameter pair

  const DefectPointData2 d = point_jets_from_bundle(jets, z, zb);

  // [d1, d2] phi = e2 d1 psi + eb2 d1 psibar - (1 <-> 2)
  const GE ephi = gr_exp(d.phi1.v);
  auto dpsi = [&](const GE& eps, const GE& epsb) {
    return -(eps * d.phi1.dz) - kI * p.mu * epsb * ephi;
  };
  auto dpsibar = [&](const GE& eps, const GE& epsb) {
    return -(epsb * d.phi1.dzb) + kI * p.mu * eps * ephi;
  };
  const GE comm = e2 * dpsi(e1, eb1) + eb2 * dpsibar(e1, eb1) -
                  e1 * dpsi(e2, eb2) - eb1 * dpsibar(e2, eb2);

  // expected translation parts
  const GE t_z = 2.0 * (e1 * e2) * d.phi1.dz;
  const GE t_zb = 2.0 * (eb1 * eb2) * d.phi1.dzb;

  nlohmann::json out;
  out["commutator"] = comm.to_json();
  out["translation_z_part"] = t_z.to_json();
  out["translation_zbar_part"] = t_zb.to_json();
  out["difference_norm"] = (comm - t_z - t_zb).max_abs();
  return out;
}

// ---------------------------------------------------------------------------
// currents, conformal gluing, charges

SuperCurrents supercurrents(const SuperField& f, Complex mu, DerivMode mode) {
  (void)mu;
  const GridPtr& grid = f.phi.samples.grid;
  const GrassmannField d = get_deriv_gr(f.phi, 1, 0, mode);
  const GrassmannField db = get_deriv_gr(f.phi, 0, 1, mode);
  const GrassmannField dd = get_deriv_gr(f.phi, 2, 0, mode);
  const GrassmannField dbdb = get_deriv_gr(f.phi, 0, 2, mode);
  const GrassmannField dpsi = get_deriv_gr(f.psi, 1, 0, mode);
  const GrassmannField dbpsibar = get_deriv_gr(f.psibar, 0, 1, mode);

  SuperCurrents out;
  out.T = GrassmannField(grid);
  out.Tbar = GrassmannField(grid);
  out.J = GrassmannField(grid);
  out.Jbar = GrassmannField(grid);
  int mz = 0, mzb = 0;
  for (const GrassmannField* g : {&d, &db, &dd, &dbdb, &dpsi, &dbpsibar}) {
    mz = std::max(mz, g->margin_z);
    mzb = std::max(mzb, g->margin_zb);
  }
  for (auto* g : {&out.T, &out.Tbar, &out.J, &out.Jbar}) {
    g->margin_z = mz;
    g->margin_zb = mzb;
  }
  for (int i = mz; i < grid->nz() - mz; ++i) {
    for (int j = mzb; j < grid->nzb() - mzb; ++j) {
      const GE& psi = f.psi.samples.at(i, j);
      const GE& psibar = f.psibar.samples.at(i, j);
      out.T.at(i, j) =
          d.at(i, j) * d.at(i, j) - dd.at(i, j) + psi * dpsi.at(i, j);
      out.Tbar.at(i, j) = db.at(i, j) * db.at(i, j) - dbdb.at(i, j) +
                          psibar * dbpsibar.at(i, j);
      out.J.at(i, j) = psi * d.at(i, j) - dpsi.at(i, j);
      out.Jbar.at(i, j) = psibar * db.at(i, j) - dbpsibar.at(i, j);
    }
  }
  add_gr_norms(out.conservation, "dbar_T", fd_derivative(out.T, 0, 1));
  add_gr_norms(out.conservation, "d_Tbar", fd_derivative(out.Tbar, 1, 0));
  add_gr_norms(out.conservation, "dbar_J", fd_derivative(out.J, 0, 1));
  add_gr_norms(out.conservation, "d_Jbar", fd_derivative(out.Jbar, 1, 0));
  return out;
}

ResidualReport superconformal_check(const SuperState& s, Complex mu,
                                    DerivMode mode) {
  const SuperCurrents c1 = supercurrents(s.one, mu, mode);
  const SuperCurrents c2 = supercurrents(s.two, mu, mode);
  const GridPtr& grid = s.one.phi.samples.grid;
  const int mz = std::max(c1.T.margin_z, c2.T.margin_z);
  const int mzb = std::max(c1.T.margin_zb, c2.T.margin_zb);
  NormAcc t, tb, j, jb;
  for (int i = mz; i < grid->nz() - mz; ++i) {
    for (int k = mzb; k < grid->nzb() - mzb; ++k) {
      t.add((c1.T.at(i, k) - c2.T.at(i, k)).max_abs());
      tb.add((c1.Tbar.at(i, k) - c2.Tbar.at(i, k)).max_abs());
      j.add((c1.J.at(i, k) - c2.J.at(i, k)).max_abs());
      jb.add((c1.Jbar.at(i, k) - c2.Jbar.at(i, k)).max_abs());
    }
  }
  ResidualReport rep;
  rep.add("scd1_T_gluing", t.mx, t.mean());
  rep.add("scd1_J_gluing", j.mx, j.mean());
  rep.add("scd2_Tbar_gluing", tb.mx, tb.mean());
  rep.add("scd2_Jbar_gluing", jb.mx, jb.mean());
  rep.grid_sizes = {grid->nz()};
  return rep;
}

ChargeSample compute_charges(const LatticeSide& left,
                             const LatticeSide& right,
                             const DefectBlockValues& defect,
                             const DefectParams& p, bool include_defect_terms,
                             const ContextPtr& ctx) {
  const Complex smu = std::sqrt(p.mu);
  const Complex b2 = p.beta * p.beta;

  auto dx_of = [](const std::vector<GE>& f, double h, std::size_t k) {
    const std::size_t n = f.size();
    if (k == 0) return (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
    if (k == n - 1)
      return (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
    return (f[k + 1] - f[k - 1]) / (2.0 * h);
  };

  ChargeSample out;
  GE E = GE::zero(ctx), P = GE::zero(ctx), Q = GE::zero(ctx),
     Qb = GE::zero(ctx);
  double edge_kinetic = 0.0;

  for (const LatticeSide* side : {&left, &right}) {
    const std::size_t n = side->phi.size();
    if (n < 3) throw std::invalid_argument("compute_charges: side too short");
    GE Es = GE::zero(ctx), Ps = GE::zero(ctx), Qs = GE::zero(ctx),
       Qbs = GE::zero(ctx);
    for (std::size_t k = 0; k < n; ++k) {
      const GE dxphi = dx_of(side->phi, side->dx, k);
      const GE dxpsi = dx_of(side->psi, side->dx, k);
      const GE dxpsibar = dx_of(side->psibar, side->dx, k);
      const GE& dtphi = side->dtphi[k];
      const GE& psi = side->psi[k];
      const GE& psibar = side->psibar[k];
      const GE ephi = gr_exp(side->phi[k]);
      const GE e2phi = gr_exp(side->phi[k] * 2.0);

      const GE eden = dxphi * dxphi + dtphi * dtphi + psibar * dxpsibar +
                      psi * dxpsi + p.mu * p.mu * e2phi +
                      2.0 * kI * p.mu * ephi * psibar * psi;
      const GE pden =
          2.0 * dtphi * dxphi + psibar * dxpsibar - psi * dxpsi;
      const GE qden = -(psi * (dxphi - dtphi) + kI * p.mu * ephi * psibar);
      const GE qbden = psibar * (dxphi + dtphi) - kI * p.mu * ephi * psi;

      const double w = (k == 0 || k == n - 1) ? 0.5 : 1.0;
      Es += w * side->dx * eden;
      Ps += w * side->dx * pden;
      Qs += w * side->dx * qden;
      Qbs += w * side->dx * qbden;
      if (k == 0 || k == n - 1)
        edge_kinetic = std::max(edge_kinetic, dtphi.max_abs());
    }
    E += Es;
    P += Ps;
    Q += Qs;
    Qb += Qbs;
  }

  out.E = E;
  out.P = P;
  out.Q = Q;
  out.Qbar = Qb;
  // outer-edge activity suggests flux through the cutoff
  out.boundary_warning = edge_kinetic > 1e-6;

  if (!include_defect_terms) {
    out.E_mod = E;
    out.P_mod = P;
    out.Q_mod = Q;
    out.Qbar_mod = Qb;
    return out;
  }

  const GE pp = defect.phi1 + defect.phi2;
  const GE pm = defect.phi1 - defect.phi2;
  const GE el = gr_exp(defect.lambda0);
  const GE elh = gr_exp(defect.lambda0 * 0.5);
  const GE epl = gr_exp(pp - defect.lambda0);
  const GE eplh = gr_exp((pp - defect.lambda0) * 0.5);
  const GE sh2 = gr_sinh(pm * 0.5);
  const GE psi_p = defect.psi1 + defect.psi2;
  const GE psibar_p = defect.psibar1 + defect.psibar2;

  const GE B0p = -2.0 * kI * p.mu * b2 * epl;
  const GE B0m = (kI * p.mu / b2) * el * (gr_cosh(pm) + p.kappa);
  const GE fermi_pair_sym =
      defect.psibar1 * defect.psibar2 + defect.psi1 * defect.psi2;
  const GE fermi_pair_asym =
      defect.psibar1 * defect.psibar2 - defect.psi1 * defect.psi2;
  const GE fE = ((smu / p.beta) * elh * sh2 * psi_p +
                 smu * p.beta * eplh * psibar_p) *
                defect.f1;
  const GE fP = ((smu / p.beta) * elh * sh2 * psi_p -
                 smu * p.beta * eplh * psibar_p) *
                defect.f1;

  out.E_mod = E + fermi_pair_sym + B0p + B0m + fE;
  out.P_mod = P + fermi_pair_asym + B0p - B0m + fP;
  out.Q_mod = Q - (2.0 * smu / p.beta) * elh * sh2 * defect.f1;
  out.Qbar_mod = Qb - 2.0 * smu * p.beta * eplh * defect.f1;
  return out;
}

// ---------------------------------------------------------------------------
// super-Lax connections and the graded defect matrix

namespace {

class SuperLaxSampler final : public AnalyticMatrix {
 public:
  SuperLaxSampler(AnalyticGrPtr phi, AnalyticGrPtr fermion, Complex lambda,
                  Complex mu, ContextPtr ctx, bool bar)
      : phi_(std::move(phi)),
        fermion_(std::move(fermion)),
        ctx_(std::move(ctx)),
        bar_(bar) {
    slam_ = std::sqrt(lambda);
    smu_ = std::sqrt(mu);
    lambda_ = lambda;
    mu_ = mu;
  }

  GradedMatrix eval(int dz, int dzb, double z, double zb) const override {
    GradedMatrix m(ctx_, 3);
    const GE phi = phi_->eval(0, 0, z, zb);
    const GE eh = gr_exp(phi * 0.5);
    const GE ephi = gr_exp(phi);
    if (!bar_) {
      const GE psi = fermion_->eval(0, 0, z, zb);
      const GE cF = kI * slam_ * smu_ * psi * eh;
      if (dz == 0 && dzb == 0) {
        const GE dphi = phi_->eval(1, 0, z, zb);
        m.set(0, 0, -0.5 * dphi);
        m.set(1, 1, 0.5 * dphi);
        m.set(0, 1, (-lambda_ * mu_) * ephi);
        m.set(0, 2, cF);
        m.set(2, 1, cF);
        return m;
      }
      if (dz == 0 && dzb == 1) {
        const GE ddb = phi_->eval(1, 1, z, zb);
        const GE dbphi = phi_->eval(0, 1, z, zb);
        const GE dbpsi = fermion_->eval(0, 1, z, zb);
        const GE dcF =
            kI * slam_ * smu_ * (dbpsi * eh + psi * (0.5 * dbphi) * eh);
        m.set(0, 0, -0.5 * ddb);
        m.set(1, 1, 0.5 * ddb);
        m.set(0, 1, (-lambda_ * mu_) * ephi * dbphi);
        m.set(0, 2, dcF);
        m.set(2, 1, dcF);
        return m;
      }
    } else {
      const GE psibar = fermion_->eval(0, 0, z, zb);
      const GE cF = (smu_ / slam_) * psibar * eh;
      if (dz == 0 && dzb == 0) {
        const GE dbphi = phi_->eval(0, 1, z, zb);
        m.set(0, 0, 0.5 * dbphi);
        m.set(1, 1, -0.5 * dbphi);
        m.set(1, 0, (-mu_ / lambda_) * ephi);
        m.set(2, 0, cF);
        m.set(1, 2, -cF);
        return m;
      }
      if (dz == 1 && dzb == 0) {
        const GE ddb = phi_->eval(1, 1, z, zb);
        const GE dphi = phi_->eval(1, 0, z, zb);
        const GE dpsibar = fermion_->eval(1, 0, z, zb);
        const GE dcF =
            (smu_ / slam_) * (dpsibar * eh + psibar * (0.5 * dphi) * eh);
        m.set(0, 0, 0.5 * ddb);
        m.set(1, 1, -0.5 * ddb);
        m.set(1, 0, (-mu_ / lambda_) * ephi * dphi);
        m.set(2, 0, dcF);
        m.set(1, 2, -dcF);
        return m;
      }
    }
    throw std::invalid_argument("SuperLaxSampler: order not available");
  }

 private:
  AnalyticGrPtr phi_, fermion_;
  ContextPtr ctx_;
  bool bar_;
  Complex slam_, smu_, lambda_, mu_;
};

}  // namespace

ConnectionPair super_lax(const SuperField& f, Complex lambda, Complex mu,
                         const ContextPtr& ctx) {
  if (lambda == Complex(0.0, 0.0))
    throw std::invalid_argument("super_lax: lambda must be nonzero");
  const GridPtr& grid = f.phi.samples.grid;
  ConnectionPair c;

  if (f.phi.analytic && f.psi.analytic && f.psibar.analytic) {
    c.A_an = std::make_shared<SuperLaxSampler>(f.phi.analytic, f.psi.analytic,
                                               lambda, mu, ctx, false);
    c.Abar_an = std::make_shared<SuperLaxSampler>(
        f.phi.analytic, f.psibar.analytic, lambda, mu, ctx, true);
    c.A = sample_matrix(grid, *c.A_an, 0, 0);
    c.Abar = sample_matrix(grid, *c.Abar_an, 0, 0);
    return c;
  }

  const Complex slam = std::sqrt(lambda), smu = std::sqrt(mu);
  const GrassmannField d = fd_derivative(f.phi.samples, 1, 0);
  const GrassmannField db = fd_derivative(f.phi.samples, 0, 1);
  c.A = MatrixField(grid, GradedMatrix(ctx, 3));
  c.Abar = MatrixField(grid, GradedMatrix(ctx, 3));
  c.A.margin_z = c.Abar.margin_z = 1;
  c.A.margin_zb = c.Abar.margin_zb = 1;
  for (int i = 1; i < grid->nz() - 1; ++i) {
    for (int j = 1; j < grid->nzb() - 1; ++j) {
      const GE& phi = f.phi.samples.at(i, j);
      const GE eh = gr_exp(phi * 0.5);
      const GE ephi = gr_exp(phi);
      const GE cFp = kI * slam * smu * f.psi.samples.at(i, j) * eh;
      const GE cFm = (smu / slam) * f.psibar.samples.at(i, j) * eh;
      GradedMatrix& A = c.A.at(i, j);
      A.set(0, 0, -0.5 * d.at(i, j));
      A.set(1, 1, 0.5 * d.at(i, j));
      A.set(0, 1, (-lambda * mu) * ephi);
      A.set(0, 2, cFp);
      A.set(2, 1, cFp);
      GradedMatrix& Ab = c.Abar.at(i, j);
      Ab.set(0, 0, 0.5 * db.at(i, j));
      Ab.set(1, 1, -0.5 * db.at(i, j));
      Ab.set(1, 0, (-mu / lambda) * ephi);
      Ab.set(2, 0, cFm);
      Ab.set(1, 2, -cFm);
    }
  }
  return c;
}

MatrixField super_defect_matrix(const SuperState& s, Complex lambda,
                                const DefectParams& p, bool printed_k32) {
  p.validate();
  if (lambda == Complex(0.0, 0.0))
    throw std::invalid_argument("super_defect_matrix: lambda must be nonzero");
  const GridPtr& grid = s.one.phi.samples.grid;
  const ContextPtr& ctx = s.ctx;
  const Complex slam = std::sqrt(lambda);
  const Complex b2 = p.beta * p.beta;

  MatrixField K(grid, GradedMatrix(ctx, 3));
  for (int i = 0; i < grid->nz(); ++i) {
    for (int j = 0; j < grid->nzb(); ++j) {
      const GE& phi1 = s.one.phi.samples.at(i, j);
      const GE& phi2 = s.two.phi.samples.at(i, j);
      const GE& l0 = s.defect.lambda0.samples.at(i, j);
      const GE& f1 = s.defect.f1.samples.at(i, j);
      const GE pm = phi1 - phi2;
      const GE pph = (phi1 + phi2) * 0.5;
      const GE emh = gr_exp(pm * (-0.5));
      const GE eph = gr_exp(pm * 0.5);
      const GE sh2 = gr_sinh(pm * 0.5);

      GradedMatrix& m = K.at(i, j);
      m.set(0, 0, (p.b11 / slam) * emh + (p.d11 * slam) * eph);
      m.set(0, 1, (-2.0 * kI * b2 * p.b11 * slam) * gr_exp(pph - l0));
      m.set(0, 2, (-p.beta * p.b11) * gr_exp((phi2 - l0) * 0.5) * f1);
      m.set(1, 0, (2.0 * kI * p.d11 / (slam * b2)) * gr_exp(l0 - pph) *
                      sh2 * sh2);
      m.set(1, 1, (p.b11 / slam) * eph + (p.d11 * slam) * emh);
      m.set(1, 2,
            (kI * p.d11 / p.beta) * gr_exp((l0 - phi1) * 0.5) * sh2 * f1);
      m.set(2, 0,
            (-kI * p.d11 / p.beta) * gr_exp((l0 - phi2) * 0.5) * sh2 * f1);
      // sign fixed by the intertwining equations
      const Complex s32 = printed_k32 ? p.beta * p.b11 : -p.beta * p.b11;
      m.set(2, 1, s32 * gr_exp((phi1 - l0) * 0.5) * f1);
      m.set(2, 2, S(ctx, p.b11 / slam + p.d11 * slam));
    }
  }
  K.margin_z = s.one.phi.samples.margin_z;
  K.margin_zb = s.one.phi.samples.margin_zb;
  return K;
}

}  // namespace defectlab
