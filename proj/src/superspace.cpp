#include "defectlab/superspace.hpp"

#include <cmath>

namespace defectlab {

namespace {
const Complex kI(0.0, 1.0);
using GE = GrassmannElement;
}  // namespace

SuperspaceCalc::SuperspaceCalc(const SuperLayout& layout)
    : ctx_(layout.ctx), theta_(layout.theta), thetabar_(layout.thetabar) {}

GE SuperspaceCalc::superfield(const SuperfieldJet& j) const {
  const GE th = GE::generator(ctx_, theta_);
  const GE thb = GE::generator(ctx_, thetabar_);
  return j.phi.v + kI * thb * j.psibar.v + kI * th * j.psi.v +
         kI * thb * th * j.F.v;
}

GE SuperspaceCalc::superfield_dz(const SuperfieldJet& j) const {
  const GE th = GE::generator(ctx_, theta_);
  const GE thb = GE::generator(ctx_, thetabar_);
  return j.phi.dz + kI * thb * j.psibar.dz + kI * th * j.psi.dz +
         kI * thb * th * j.F.dz;
}

GE SuperspaceCalc::superfield_dzb(const SuperfieldJet& j) const {
  const GE th = GE::generator(ctx_, theta_);
  const GE thb = GE::generator(ctx_, thetabar_);
  return j.phi.dzb + kI * thb * j.psibar.dzb + kI * th * j.psi.dzb +
         kI * thb * th * j.F.dzb;
}

GE SuperspaceCalc::superfield_dzdzb(const SuperfieldJet& j) const {
  const GE th = GE::generator(ctx_, theta_);
  const GE thb = GE::generator(ctx_, thetabar_);
  return j.phi.dzdzb + kI * thb * j.psibar.dzdzb + kI * th * j.psi.dzdzb +
         kI * thb * th * j.F.dzdzb;
}

GE SuperspaceCalc::D(const GE& X, const GE& X_dz) const {
  return X.derivative(theta_) + GE::generator(ctx_, theta_) * X_dz;
}

GE SuperspaceCalc::Dbar(const GE& X, const GE& X_dzb) const {
  return X.derivative(thetabar_) + GE::generator(ctx_, thetabar_) * X_dzb;
}

SuperspaceCalc::ThetaComponents SuperspaceCalc::project(const GE& R) const {
  const std::uint32_t tbit = std::uint32_t{1} << (theta_ - 1);
  const std::uint32_t tbbit = std::uint32_t{1} << (thetabar_ - 1);
  std::vector<std::pair<std::uint32_t, Complex>> c1, cth, ctb, ctbt;
  for (const auto& [m, c] : R.terms()) {
    const bool ht = m & tbit, hb = m & tbbit;
    if (!ht && !hb) c1.emplace_back(m, c);
    if (ht && !hb) cth.emplace_back(m, c);
    if (!ht && hb) ctb.emplace_back(m, c);
    if (ht && hb) ctbt.emplace_back(m, c);
  }
  const auto& ctx = R.context() ? R.context() : ctx_;
  ThetaComponents out;
  out.one = GE::from_terms(ctx, std::move(c1));
  // theta C: C = d/dtheta of the theta-only terms
  out.theta = GE::from_terms(ctx, std::move(cth)).derivative(theta_);
  out.thetabar = GE::from_terms(ctx, std::move(ctb)).derivative(thetabar_);
  // thetabar theta C: apply d/dtheta then d/dthetabar, sign -1
  out.thetabar_theta = -(GE::from_terms(ctx, std::move(ctbt))
                             .derivative(theta_)
                             .derivative(thetabar_));
  return out;
}

SuperspaceResidual superspace_residual(const SuperLayout& layout,
                                       const SuperfieldJet& jet, Complex mu) {
  SuperspaceCalc calc(layout);
  const GE Phi = calc.superfield(jet);
  const GE Phi_dz = calc.superfield_dz(jet);
  const GE Phi_dzb = calc.superfield_dzb(jet);
  const GE Phi_dzdzb = calc.superfield_dzdzb(jet);

  // Dbar Phi and its z-derivative, then D of that
  const GE DbPhi = calc.Dbar(Phi, Phi_dzb);
  const GE DbPhi_dz = calc.Dbar(Phi_dz, Phi_dzdzb);
  const GE DDbPhi = calc.D(DbPhi, DbPhi_dz);

  const GE R = DDbPhi + kI * mu * gr_exp(Phi);

  SuperspaceResidual out;
  out.components = calc.project(R);

  const GE ephi = gr_exp(jet.phi.v);
  out.r_F = jet.F.v + mu * ephi;
  out.r_psibar = jet.psibar.dz + kI * mu * ephi * jet.psi.v;
  out.r_psi = jet.psi.dzb - kI * mu * ephi * jet.psibar.v;
  out.r_phi = jet.phi.dzdzb - mu * mu * gr_exp(jet.phi.v * 2.0) -
              kI * mu * ephi * jet.psibar.v * jet.psi.v;

  double gap = 0.0;
  gap = std::max(gap, (out.components.one - kI * out.r_F).max_abs());
  gap = std::max(gap, (out.components.theta - kI * out.r_psibar).max_abs());
  gap = std::max(gap,
                 (out.components.thetabar + kI * out.r_psi).max_abs());
  gap = std::max(gap, (out.components.thetabar_theta + out.r_phi +
                       mu * ephi * out.r_F)
                          .max_abs());
  out.cross_check_max = gap;
  return out;
}

double superderivative_square_check(const SuperLayout& layout,
                                    const SuperfieldJet& jet) {
  SuperspaceCalc calc(layout);
  const GE Phi = calc.superfield(jet);
  const GE Phi_dz = calc.superfield_dz(jet);
  const GE Phi_dzb = calc.superfield_dzb(jet);

  // z-derivative jets of DPhi and DbarPhi need the pure second derivatives
  const GE th = GE::generator(layout.ctx, layout.theta);
  const GE thb = GE::generator(layout.ctx, layout.thetabar);
  const GE Phi_dzdz = jet.phi.dzdz + kI * thb * jet.psibar.dzdz +
                      kI * th * jet.psi.dzdz + kI * thb * th * jet.F.dzdz;
  const GE Phi_dzbdzb = jet.phi.dzbdzb + kI * thb * jet.psibar.dzbdzb +
                        kI * th * jet.psi.dzbdzb +
                        kI * thb * th * jet.F.dzbdzb;

  const GE DPhi = calc.D(Phi, Phi_dz);
  const GE DPhi_dz = calc.D(Phi_dz, Phi_dzdz);
  const GE DDPhi = calc.D(DPhi, DPhi_dz);

  const GE DbPhi = calc.Dbar(Phi, Phi_dzb);
  const GE DbPhi_dzb = calc.Dbar(Phi_dzb, Phi_dzbdzb);
  const GE DbDbPhi = calc.Dbar(DbPhi, DbPhi_dzb);

  double gap = (DDPhi - Phi_dz).max_abs();
  gap = std::max(gap, (DbDbPhi - Phi_dzb).max_abs());

  // anticommutation: D Dbar Phi = -Dbar D Phi
  const GE Phi_dzdzb = calc.superfield_dzdzb(jet);
  const GE DbPhi_dz = calc.Dbar(Phi_dz, Phi_dzdzb);
  const GE DDbPhi = calc.D(DbPhi, DbPhi_dz);
  const GE DPhi_dzb = calc.D(Phi_dzb, Phi_dzdzb);
  const GE DbDPhi = calc.Dbar(DPhi, DPhi_dzb);
  gap = std::max(gap, (DDbPhi + DbDPhi).max_abs());
  return gap;
}

SuperspaceLaxResidual superspace_lax_residual(const SuperLayout& layout,
                                              const SuperfieldJet& jet,
                                              Complex lambda, Complex mu) {
  if (lambda == Complex(0.0, 0.0))
    throw std::invalid_argument(
        "superspace_lax_residual: lambda must be nonzero");
  SuperspaceCalc calc(layout);
  const ContextPtr& ctx = layout.ctx;
  const Complex slam = std::sqrt(lambda), smu = std::sqrt(mu);

  const GE Phi = calc.superfield(jet);
  const GE Phi_dz = calc.superfield_dz(jet);
  const GE Phi_dzb = calc.superfield_dzb(jet);
  const GE Phi_dzdzb = calc.superfield_dzdzb(jet);

  const GE DPhi = calc.D(Phi, Phi_dz);
  const GE DbPhi = calc.Dbar(Phi, Phi_dzb);
  const GE eh = gr_exp(Phi * 0.5);
  // zbar-derivative of D Phi and z-derivative of Dbar Phi
  const GE DPhi_dzb = calc.D(Phi_dzb, Phi_dzdzb);
  const GE DbPhi_dz = calc.Dbar(Phi_dz, Phi_dzdzb);
  const GE eh_dz = 0.5 * Phi_dz * eh;
  const GE eh_dzb = 0.5 * Phi_dzb * eh;

  auto osp = osp_generators(ctx);

  const GE q = (slam * smu) * eh;
  const GE q_dzb = (slam * smu) * eh_dzb;
  // the printed coefficient is -i sqrt(mu/lambda); compatibility with the
  // field equation fixes +i (see notes)
  const GE qb = (kI * smu / slam) * eh;
  const GE qb_dz = (kI * smu / slam) * eh_dz;

  auto connection = [&](const GE& hcoef, const GE& fcoef,
                        const GradedMatrix& F) {
    return hcoef * osp.H + fcoef * F;
  };
  const GradedMatrix Acal = connection(-0.5 * DPhi, q, osp.Fp);
  const GradedMatrix Acal_dzb = connection(-0.5 * DPhi_dzb, q_dzb, osp.Fp);
  const GradedMatrix Abcal = connection(0.5 * DbPhi, qb, osp.Fm);
  const GradedMatrix Abcal_dz = connection(0.5 * DbPhi_dz, qb_dz, osp.Fm);

  auto apply_D = [&](const GradedMatrix& M, const GradedMatrix& M_dz) {
    GradedMatrix r(ctx, 3);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        r.set(i, j, calc.D(M.at(i, j), M_dz.at(i, j)));
    return r;
  };
  auto apply_Dbar = [&](const GradedMatrix& M, const GradedMatrix& M_dzb) {
    GradedMatrix r(ctx, 3);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        r.set(i, j, calc.Dbar(M.at(i, j), M_dzb.at(i, j)));
    return r;
  };

  const GradedMatrix twistedA = Acal.sigma_twisted();
  const GradedMatrix twistedAb = Abcal.sigma_twisted();
  SuperspaceLaxResidual out;
  out.omega = apply_Dbar(Acal, Acal_dzb) + apply_D(Abcal, Abcal_dz) -
              twistedA * Abcal - twistedAb * Acal;

  out.h_coefficient = out.omega.at(0, 0);
  double off = 0.0;
  // H = diag(1,-1,0): entries (0,0) and (1,1) carry the residual, all other
  // entries must vanish identically
  off = std::max(off, (out.omega.at(0, 0) + out.omega.at(1, 1)).max_abs());
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (i != j) off = std::max(off, out.omega.at(i, j).max_abs());
  off = std::max(off, out.omega.at(2, 2).max_abs());
  out.off_h_max = off;

  // the H coefficient must equal the superspace field-equation residual
  const GE DbPhi_dz2 = calc.Dbar(Phi_dz, Phi_dzdzb);
  const GE DDbPhi = calc.D(DbPhi, DbPhi_dz2);
  const GE sle = DDbPhi + kI * mu * gr_exp(Phi);
  out.vs_field_equation = (out.h_coefficient - sle).max_abs();
  return out;
}

}  // namespace defectlab
