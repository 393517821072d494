#include <doctest.h>

#include <random>

#include "defectlab/graded_matrix.hpp"
#include "defectlab/osp12.hpp"

using namespace defectlab;

namespace {
GrassmannElement rand_even(const ContextPtr& ctx, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(-1.5, 1.5);
  auto g = [&](int k) { return GrassmannElement::generator(ctx, k); };
  return GrassmannElement::scalar(ctx, Complex(d(rng), d(rng))) +
         (g(1) * g(2)) * Complex(d(rng), d(rng)) +
         (g(2) * g(3)) * Complex(d(rng), d(rng));
}
GrassmannElement rand_odd(const ContextPtr& ctx, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(-1.5, 1.5);
  auto g = [&](int k) { return GrassmannElement::generator(ctx, k); };
  return g(1) * Complex(d(rng), d(rng)) + g(2) * Complex(d(rng), d(rng)) +
         (g(1) * g(2) * g(3)) * Complex(d(rng), d(rng));
}

// Homogeneous even/odd supermatrix with grading (0,0,1).
GradedMatrix rand_homog(const ContextPtr& ctx, std::mt19937_64& rng,
                        bool odd) {
  GradedMatrix m(ctx, 3);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const int block = (m.grading()[i] + m.grading()[j]) & 1;
      const bool entry_odd = (block ^ (odd ? 1 : 0)) != 0;
      m.at(i, j) = entry_odd ? rand_odd(ctx, rng) : rand_even(ctx, rng);
    }
  }
  return m;
}
}  // namespace

TEST_CASE("osp generators match the 3x3 representation") {
  auto ctx = GrassmannContext::make(0);
  auto g = osp_generators(ctx);

  CHECK(g.H.at(0, 0).body() == Complex(1, 0));
  CHECK(g.H.at(1, 1).body() == Complex(-1, 0));
  CHECK(g.H.at(2, 2).body() == Complex(0, 0));

  CHECK(g.Fp.at(0, 2).body() == Complex(1, 0));
  CHECK(g.Fp.at(2, 1).body() == Complex(1, 0));
  int nonzero = 0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (!g.Fp.at(i, j).is_zero()) ++nonzero;
  CHECK(nonzero == 2);

  // E- is the transpose of E+
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      CHECK(g.Em.at(i, j).body() == g.Ep.at(j, i).body());

  CHECK(g.H.parity() == Parity::Even);
  CHECK(g.Ep.parity() == Parity::Even);
  CHECK(g.Fp.parity() == Parity::Odd);
  CHECK(g.Fm.parity() == Parity::Odd);
}

TEST_CASE("osp relations hold exactly") {
  auto ctx = GrassmannContext::make(0);
  auto rep = check_osp_relations(ctx);
  CHECK(rep.entries.size() == 10);
  CHECK(rep.max_norm() == 0.0);
}

TEST_CASE("checker detects an injected fault") {
  auto ctx = GrassmannContext::make(0);
  OspPerturbation p{"F-", 1, 2, Complex(0.1, 0.0)};
  auto rep = check_osp_relations(ctx, p);
  CHECK(rep.max_norm() > 0.05);
}

TEST_CASE("sl(2) subset relations") {
  auto ctx = GrassmannContext::make(0);
  auto rep = check_sl2_relations(ctx);
  CHECK(rep.entries.size() == 3);
  CHECK(rep.max_norm() == 0.0);
}

TEST_CASE("[H,H] = 0") {
  auto ctx = GrassmannContext::make(0);
  auto g = osp_generators(ctx);
  CHECK(graded_bracket(g.H, g.H).max_abs() == 0.0);
}

TEST_CASE("graded bracket antisymmetry and Jacobi on osp span") {
  auto ctx = GrassmannContext::make(4);
  std::mt19937_64 rng(3);

  for (int it = 0; it < 60; ++it) {
    const bool ox = it % 2, oy = (it / 2) % 2;
    auto X = rand_homog(ctx, rng, ox);
    auto Y = rand_homog(ctx, rng, oy);
    const double sxy = (ox && oy) ? -1.0 : 1.0;
    auto lhs = graded_bracket(X, Y);
    auto rhs = graded_bracket(Y, X) * (-sxy);
    CHECK((lhs - rhs).max_abs() < 1e-12 * std::max(1.0, lhs.max_abs()));
  }

  // graded Jacobi: (-1)^{|X||Z|}[X,[Y,Z]] + cyclic = 0
  for (int it = 0; it < 60; ++it) {
    const bool ox = it % 2, oy = (it / 2) % 2, oz = (it / 4) % 2;
    auto X = rand_homog(ctx, rng, ox);
    auto Y = rand_homog(ctx, rng, oy);
    auto Z = rand_homog(ctx, rng, oz);
    auto j1 = graded_bracket(X, graded_bracket(Y, Z)) *
              ((ox && oz) ? -1.0 : 1.0);
    auto j2 = graded_bracket(Y, graded_bracket(Z, X)) *
              ((oy && ox) ? -1.0 : 1.0);
    auto j3 = graded_bracket(Z, graded_bracket(X, Y)) *
              ((oz && oy) ? -1.0 : 1.0);
    auto s = j1 + j2 + j3;
    const double scale =
        std::max({1.0, X.max_abs() * Y.max_abs() * Z.max_abs()});
    CHECK(s.max_abs() < 1e-12 * scale);
  }
}

TEST_CASE("matrix product associativity, randomized") {
  auto ctx = GrassmannContext::make(4);
  std::mt19937_64 rng(11);
  for (int it = 0; it < 40; ++it) {
    auto A = rand_homog(ctx, rng, it % 2);
    auto B = rand_homog(ctx, rng, (it / 2) % 2);
    auto C = rand_homog(ctx, rng, it % 3 == 0);
    auto lhs = (A * B) * C;
    auto rhs = A * (B * C);
    CHECK((lhs - rhs).max_abs() < 1e-12 * std::max(1.0, lhs.max_abs()));
  }
}

TEST_CASE("mixed parity bracket rejected") {
  auto ctx = GrassmannContext::make(2);
  auto g = osp_generators(ctx);
  GradedMatrix M = g.H + g.Fp;  // mixed
  CHECK(M.parity() == Parity::Mixed);
  CHECK_THROWS_AS(graded_bracket(M, g.H), ParityError);
}

TEST_CASE("supertrace and sigma twist") {
  auto ctx = GrassmannContext::make(0);
  auto g = osp_generators(ctx);
  CHECK(g.H.supertrace().body() == Complex(0, 0));
  auto id = GradedMatrix::identity(ctx, 3);
  CHECK(id.supertrace().body() == Complex(1, 0));  // 1 + 1 - 1

  auto tw = g.Fp.sigma_twisted();
  CHECK(tw.at(0, 2).body() == Complex(-1, 0));
  CHECK(tw.at(2, 1).body() == Complex(-1, 0));
  auto tw2 = g.H.sigma_twisted();
  CHECK((tw2 - g.H).max_abs() == 0.0);
}
