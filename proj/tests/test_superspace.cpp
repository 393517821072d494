#include <doctest.h>

#include <random>

#include "defectlab/superspace.hpp"

using namespace defectlab;

namespace {

DefectParams sparams() {
  DefectParams p;
  p.mu = Complex(1.0, 0.0);
  p.beta = Complex(1.0, 0.0);
  p.kappa = Complex(-1.0, 0.0);
  return p;
}

// random elements over the non-reserved generators, with fixed parity
GrassmannElement rand_even(const SuperLayout& l, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  auto g = [&](int k) { return l.gen(k); };
  return GrassmannElement::scalar(l.ctx, Complex(d(rng), d(rng))) +
         Complex(d(rng), d(rng)) * (g(1) * g(2)) +
         Complex(d(rng), d(rng)) * (g(1) * g(3));
}
GrassmannElement rand_odd(const SuperLayout& l, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  auto g = [&](int k) { return l.gen(k); };
  return Complex(d(rng), d(rng)) * g(1) + Complex(d(rng), d(rng)) * g(2) +
         Complex(d(rng), d(rng)) * (g(1) * g(2) * g(3));
}

ComponentJet rand_jet(const SuperLayout& l, std::mt19937_64& rng, bool odd) {
  auto r = [&] { return odd ? rand_odd(l, rng) : rand_even(l, rng); };
  return ComponentJet{r(), r(), r(), r(), r(), r()};
}

SuperfieldJet rand_superjet(const SuperLayout& l, std::mt19937_64& rng) {
  SuperfieldJet j;
  j.phi = rand_jet(l, rng, false);
  j.F = rand_jet(l, rng, false);
  j.psi = rand_jet(l, rng, true);
  j.psibar = rand_jet(l, rng, true);
  return j;
}

}  // namespace

TEST_CASE("theta expansion reproduces the component residuals off-shell") {
  // operator-level identity: checked on 100 random off-shell states
  auto layout = SuperLayout::standard(4);  // extra room for random content
  std::mt19937_64 rng(2024);
  const Complex mu(0.8, 0.3);
  for (int it = 0; it < 100; ++it) {
    auto jet = rand_superjet(layout, rng);
    auto r = superspace_residual(layout, jet, mu);
    CHECK(r.cross_check_max < 1e-10);
  }
}

TEST_CASE("superspace residual trivia") {
  auto layout = SuperLayout::standard();
  auto z = GrassmannElement::zero(layout.ctx);
  SuperfieldJet jet{{z, z, z, z, z, z},
                    {z, z, z, z, z, z},
                    {z, z, z, z, z, z},
                    {z, z, z, z, z, z}};
  auto r = superspace_residual(layout, jet, Complex(0, 0));
  CHECK(r.components.one.is_zero());
  CHECK(r.components.theta.is_zero());
  CHECK(r.components.thetabar.is_zero());
  CHECK(r.components.thetabar_theta.is_zero());
}

TEST_CASE("D^2 = d and Dbar^2 = dbar, exactly") {
  auto layout = SuperLayout::standard(4);
  std::mt19937_64 rng(7);
  for (int it = 0; it < 50; ++it) {
    auto jet = rand_superjet(layout, rng);
    CHECK(superderivative_square_check(layout, jet) < 1e-14);
  }
}

TEST_CASE("superspace residual vanishes on the exact solution") {
  const DefectParams p = sparams();
  auto layout = SuperLayout::standard();
  auto jets = make_exact_super_jets(layout, p, {});

  auto jet_at = [&](const AnalyticGrPtr& phi, const AnalyticGrPtr& psi,
                    const AnalyticGrPtr& psibar, const AnalyticGrPtr& F,
                    double z, double zb) {
    auto J = [&](const AnalyticGrPtr& f) {
      return ComponentJet{f->eval(0, 0, z, zb),  f->eval(1, 0, z, zb),
                          f->eval(0, 1, z, zb),  f->eval(1, 1, z, zb),
                          f->eval(2, 0, z, zb),  f->eval(0, 2, z, zb)};
    };
    return SuperfieldJet{J(phi), J(psi), J(psibar), J(F)};
  };

  for (double z : {0.3, 0.7, 1.1}) {
    for (double zb : {0.4, 0.9}) {
      auto j1 = jet_at(jets.phi1, jets.psi1, jets.psibar1, jets.F1, z, zb);
      auto r1 = superspace_residual(layout, j1, p.mu);
      CHECK(r1.components.one.max_abs() < 1e-12);
      CHECK(r1.components.theta.max_abs() < 1e-12);
      CHECK(r1.components.thetabar.max_abs() < 1e-12);
      CHECK(r1.components.thetabar_theta.max_abs() < 1e-12);

      auto j2 = jet_at(jets.phi2, jets.psi2, jets.psibar2, jets.F2, z, zb);
      auto r2 = superspace_residual(layout, j2, p.mu);
      CHECK(r2.components.one.max_abs() < 1e-12);
      CHECK(r2.components.thetabar_theta.max_abs() < 1e-12);
    }
  }
}

TEST_CASE("superspace Lax compatibility is the field equation times H") {
  auto layout = SuperLayout::standard(4);
  std::mt19937_64 rng(99);
  const Complex mu(0.9, 0.2), lambda(1.3, -0.4);
  for (int it = 0; it < 60; ++it) {
    auto jet = rand_superjet(layout, rng);
    auto r = superspace_lax_residual(layout, jet, lambda, mu);
    // off-H sectors vanish identically, even off-shell
    CHECK(r.off_h_max < 1e-11);
    // the H coefficient is exactly the field-equation residual
    CHECK(r.vs_field_equation < 1e-11);
  }
}

TEST_CASE("superspace Lax residual vanishes on-shell") {
  const DefectParams p = sparams();
  auto layout = SuperLayout::standard();
  auto jets = make_exact_super_jets(layout, p, {});
  const Complex lambda(0.9, 0.5);

  auto J = [&](const AnalyticGrPtr& f, double z, double zb) {
    return ComponentJet{f->eval(0, 0, z, zb), f->eval(1, 0, z, zb),
                        f->eval(0, 1, z, zb), f->eval(1, 1, z, zb),
                        f->eval(2, 0, z, zb), f->eval(0, 2, z, zb)};
  };
  for (double z : {0.35, 0.85}) {
    for (double zb : {0.5, 1.0}) {
      SuperfieldJet jet{J(jets.phi1, z, zb), J(jets.psi1, z, zb),
                        J(jets.psibar1, z, zb), J(jets.F1, z, zb)};
      auto r = superspace_lax_residual(layout, jet, lambda, p.mu);
      CHECK(r.h_coefficient.max_abs() < 1e-11);
      CHECK(r.off_h_max < 1e-11);
    }
  }

  // mu = 0 with D Dbar Phi = 0: free superfield, residual zero
  auto z0 = GrassmannElement::zero(layout.ctx);
  SuperfieldJet freejet{{GrassmannElement::scalar(layout.ctx, {0.4, 0.1}),
                         GrassmannElement::scalar(layout.ctx, {0.2, 0.0}),
                         GrassmannElement::scalar(layout.ctx, {-0.1, 0.3}),
                         z0, z0, z0},
                        {z0, z0, z0, z0, z0, z0},
                        {z0, z0, z0, z0, z0, z0},
                        {z0, z0, z0, z0, z0, z0}};
  auto rf = superspace_lax_residual(layout, freejet, lambda, Complex(0, 0));
  CHECK(rf.h_coefficient.max_abs() < 1e-14);
  CHECK(rf.off_h_max < 1e-14);

  CHECK_THROWS_AS(
      superspace_lax_residual(layout, freejet, Complex(0, 0), p.mu),
      std::invalid_argument);
}
