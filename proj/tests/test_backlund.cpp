#include <doctest.h>

#include <cmath>

#include "defectlab/liouville.hpp"

using namespace defectlab;

namespace {

GridPtr bgrid(int n) { return LightConeGrid::uniform(0.5, 1.3, n, 0.5, 1.3, n); }

DefectParams bparams() {
  DefectParams p;
  p.mu = Complex(1.0, 0.0);
  p.beta = Complex(1.0, 0.0);
  p.kappa = Complex(0.0, 0.0);
  return p;
}

}  // namespace

TEST_CASE("backlund_integrate produces a second solution at slope ~2") {
  const DefectParams p = bparams();
  BacklundSeed seed{Complex(0.2, 0.1), Complex(0.1, 0.0)};

  ConvergenceTable table;
  std::vector<double> bulk2, cross;
  for (int n : {65, 129, 257}) {
    auto phi1 = make_static_wall(bgrid(n), p.mu);
    auto res = backlund_integrate(phi1, seed, p);
    table.grid_sizes.push_back(n);
    table.add_level(
        type2_backlund_residual(res.state, p, DerivMode::FiniteDifference));
    bulk2.push_back(
        liouville_bulk_residual(res.state.phi2, p.mu,
                                DerivMode::FiniteDifference)
            .max_norm());
    cross.push_back(res.cross_defect_max);
  }
  table.finalize();

  // all four relation residuals converge at second order
  for (const auto& row : table.rows) {
    INFO(row.equation_id);
    CHECK(row.slope > 1.8);
  }
  // phi2 satisfies the Liouville equation (the transformation theorem)
  CHECK(convergence_slope(bulk2) > 1.8);
  // the two marching routes agree at scheme order
  CHECK(convergence_slope(cross) > 1.8);
}

TEST_CASE("anti-holomorphic functional vanishes on integrated states") {
  const DefectParams p = bparams();
  BacklundSeed seed{Complex(0.2, 0.1), Complex(0.1, 0.0)};
  std::vector<double> norms;
  for (int n : {17, 33, 65}) {
    auto phi1 = make_static_wall(bgrid(n), p.mu);
    auto res = backlund_integrate(phi1, seed, p);
    norms.push_back(antiholomorphic_functional_check(res.state, p,
                                                     DerivMode::FiniteDifference)
                        .max_norm());
  }
  CHECK(convergence_slope(norms) > 1.8);

  // negative control: unrelated fields give an O(1) residual
  auto grid = bgrid(17);
  auto w = make_static_wall(grid, Complex(1, 0));
  auto w2 = make_static_wall(grid, Complex(2, 0));
  TypeIIState junk{w, w2, ComplexField(grid), nullptr};
  for (int i = 0; i < grid->nz(); ++i)
    for (int j = 0; j < grid->nzb(); ++j)
      junk.lambda0.at(i, j) = Complex(0.3 * grid->z[i], 0.1);
  CHECK(antiholomorphic_functional_check(junk, p, DerivMode::FiniteDifference)
            .max_norm() > 0.05);

  // phi- = 0 and kappa = -1: the functional is identically zero
  DefectParams pk = p;
  pk.kappa = Complex(-1, 0);
  TypeIIState eq{w, w, ComplexField(grid), nullptr};
  CHECK(antiholomorphic_functional_check(eq, pk, DerivMode::FiniteDifference)
            .max_norm() == 0.0);
}

TEST_CASE("single-cell grid returns the seed unchanged") {
  const DefectParams p = bparams();
  auto grid = LightConeGrid::uniform(0.7, 0.7, 1, 0.7, 0.7, 1);
  auto phi1 = make_static_wall(grid, p.mu);
  BacklundSeed seed{Complex(0.3, 0.0), Complex(-0.2, 0.1)};
  auto res = backlund_integrate(phi1, seed, p);
  CHECK(res.state.phi2.samples.at(0, 0) == seed.phi2_corner);
  CHECK(res.state.lambda0.at(0, 0) == seed.lambda0_corner);
  CHECK(res.cross_defect_max == 0.0);
}

TEST_CASE("blow-up guard aborts with location") {
  DefectParams p = bparams();
  p.blowup_guard = 1.5;  // absurdly tight so the first step trips it
  auto phi1 = make_static_wall(bgrid(9), p.mu);
  BacklundSeed seed{Complex(0.0, 0.0), Complex(1.0, 0.0)};
  CHECK_THROWS_AS(backlund_integrate(phi1, seed, p), BlowupError);
}

TEST_CASE("mu = 0 fixed point: phi2 = phi1 with free fields") {
  // In the free-field sector every type-II relation has vanishing right-hand
  // side, so equal members with constant Lambda0 march to equal members.
  DefectParams p = bparams();
  p.mu = Complex(1e-300, 0.0);  // validate() wants mu != 0; effectively free
  auto grid = bgrid(17);
  BosonicField phi1;
  phi1.samples = ComplexField(grid);
  phi1.analytic = std::make_shared<JetScalar>(
      [](int dz, int dzb, double z, double) -> Complex {
        if (dz == 0 && dzb == 0) return Complex(0.3 * z, 0.0);
        if (dz == 1 && dzb == 0) return Complex(0.3, 0.0);
        return Complex(0.0, 0.0);
      });
  for (int i = 0; i < grid->nz(); ++i)
    for (int j = 0; j < grid->nzb(); ++j)
      phi1.samples.at(i, j) = Complex(0.3 * grid->z[i], 0.0);

  BacklundSeed seed{phi1.samples.at(0, 0), Complex(0.0, 0.0)};
  auto res = backlund_integrate(phi1, seed, p);
  double diff = 0.0;
  for (int i = 0; i < grid->nz(); ++i)
    for (int j = 0; j < grid->nzb(); ++j)
      diff = std::max(diff, std::abs(res.state.phi2.samples.at(i, j) -
                                     phi1.samples.at(i, j)));
  CHECK(diff < 1e-12);
}

TEST_CASE("type-I pair from characteristic integration") {
  const DefectParams p = bparams();

  ConvergenceTable table;
  std::vector<double> bulk2;
  for (int n : {17, 33, 65}) {
    auto phi1 = make_static_wall(bgrid(n), p.mu);
    auto phi2 = type1_integrate(phi1, Complex(0.15, 0.05), p);
    table.grid_sizes.push_back(n);
    auto rep =
        type1_conditions_residual(phi1, phi2, p, DerivMode::FiniteDifference);
    // drop the exact-match rows from the slope fit
    ResidualReport only;
    only.add("tId_dphi_plus", rep.find("tId_dphi_plus")->max_norm, 0);
    only.add("tId_dbar_phi_minus", rep.find("tId_dbar_phi_minus")->max_norm,
             0);
    table.add_level(only);
    // the reduction comparison must hold exactly at every level
    CHECK(rep.find("type2_reduction_match_eq1")->max_norm == 0.0);
    CHECK(rep.find("type2_reduction_match_eq3")->max_norm == 0.0);
    bulk2.push_back(
        liouville_bulk_residual(phi2, p.mu, DerivMode::FiniteDifference)
            .max_norm());
  }
  table.finalize();
  for (const auto& row : table.rows) {
    INFO(row.equation_id);
    CHECK(row.slope > 1.8);
  }
  CHECK(convergence_slope(bulk2) > 1.8);
}

TEST_CASE("type-I trivia") {
  DefectParams p = bparams();
  auto grid = bgrid(17);
  auto wall = make_static_wall(grid, p.mu);

  // phi1 = phi2: first residual |d phi+| = |2 d phi1|, second is the known
  // nonzero violation 2 i mu beta^2 e^{phi+}
  auto rep =
      type1_conditions_residual(wall, wall, p, DerivMode::FiniteDifference);
  CHECK(rep.find("tId_dbar_phi_minus")->max_norm > 0.1);

  // mu -> 0 with constant fields: both residuals vanish
  DefectParams p0 = p;
  p0.mu = Complex(1e-300, 0);
  BosonicField cst;
  cst.samples = ComplexField(grid);
  for (auto& v : cst.samples.v) v = Complex(0.4, 0.0);
  auto rep0 =
      type1_conditions_residual(cst, cst, p0, DerivMode::FiniteDifference);
  CHECK(rep0.max_norm() < 1e-200);
}

TEST_CASE("type-I conformal anomaly matches the total time derivative") {
  const DefectParams p = bparams();

  std::vector<double> cd2_norms, ident_rel;
  double last_ident = 0, last_mag = 0;
  for (int n : {17, 33, 65}) {
    auto phi1 = make_static_wall(bgrid(n), p.mu);
    auto phi2 = type1_integrate(phi1, Complex(0.15, 0.05), p);
    TypeIIState s{phi1, phi2, ComplexField(phi1.samples.grid), nullptr};
    auto rep =
        conformal_defect_check(s, p, DefectKind::TypeI,
                               DerivMode::FiniteDifference);
    cd2_norms.push_back(rep.find("cd2_Tbar_gluing")->max_norm);
    last_ident = rep.find("cd1_anomaly_identity")->max_norm;
    last_mag = rep.find("cd1_anomaly_magnitude")->max_norm;
    ident_rel.push_back(last_ident);
  }
  // cd2 converges to zero while cd1 deviates by the anomaly
  CHECK(convergence_slope(cd2_norms) > 1.8);
  CHECK(last_mag > 0.01);                    // genuinely nonconformal
  CHECK(last_ident < 0.05 * last_mag);       // identity within 5%
  CHECK(convergence_slope(ident_rel) > 1.8);
}

TEST_CASE("type-II states glue T and Tbar at scheme order") {
  const DefectParams p = bparams();
  BacklundSeed seed{Complex(0.2, 0.1), Complex(0.1, 0.0)};
  std::vector<double> t_norms, tb_norms;
  for (int n : {33, 65, 129}) {
    auto phi1 = make_static_wall(bgrid(n), p.mu);
    auto res = backlund_integrate(phi1, seed, p);
    auto rep = conformal_defect_check(res.state, p, DefectKind::TypeII,
                                      DerivMode::FiniteDifference);
    t_norms.push_back(rep.find("cd1_T_gluing")->max_norm);
    tb_norms.push_back(rep.find("cd2_Tbar_gluing")->max_norm);
  }
  CHECK(convergence_slope(t_norms) > 1.8);
  CHECK(convergence_slope(tb_norms) > 1.8);
}

TEST_CASE("K matrices intertwine on integrated backlund states") {
  const DefectParams p = bparams();
  BacklundSeed seed{Complex(0.2, 0.1), Complex(0.1, 0.0)};
  const Complex lambda(0.9, 0.2);
  auto ctx = scalar_context();

  for (KVariant variant : {KVariant::First, KVariant::Prime}) {
    std::vector<double> norms;
    for (int n : {17, 33, 65}) {
      auto phi1 = make_static_wall(bgrid(n), p.mu);
      auto res = backlund_integrate(phi1, seed, p);
      auto K = defect_matrix_K(res.state, lambda, p, variant, ctx);
      auto c1 = lax_connection(res.state.phi1, lambda, p.mu, ctx);
      auto c2 = lax_connection(res.state.phi2, lambda, p.mu, ctx);
      norms.push_back(kmatrix_residual(K, c1, c2).max_norm());
    }
    INFO((variant == KVariant::First ? "first" : "prime"));
    CHECK(convergence_slope(norms) > 1.8);
  }
}

TEST_CASE("measured dbar Lambda0 vanishes at scheme order") {
  const DefectParams p = bparams();
  BacklundSeed seed{Complex(0.2, 0.1), Complex(0.1, 0.0)};
  std::vector<double> norms;
  for (int n : {17, 33, 65}) {
    auto phi1 = make_static_wall(bgrid(n), p.mu);
    auto res = backlund_integrate(phi1, seed, p);
    auto rep = type2_backlund_residual(res.state, p,
                                       DerivMode::FiniteDifference);
    norms.push_back(rep.find("tII_dbar_lambda0")->max_norm);
  }
  CHECK(norms.back() < norms.front());
  CHECK(convergence_slope(norms) > 1.8);
}
