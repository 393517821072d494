#include "defectlab/osp12.hpp"

namespace defectlab {

namespace {
GrassmannElement one(const ContextPtr& ctx, double v = 1.0) {
  return GrassmannElement::scalar(ctx, Complex(v, 0.0));
}
}  // namespace

OspGenerators osp_generators(ContextPtr ctx) {
  OspGenerators g{GradedMatrix(ctx, 3), GradedMatrix(ctx, 3),
                  GradedMatrix(ctx, 3), GradedMatrix(ctx, 3),
                  GradedMatrix(ctx, 3)};
  g.H.at(0, 0) = one(ctx);
  g.H.at(1, 1) = one(ctx, -1.0);
  g.Ep.at(0, 1) = one(ctx);
  g.Em.at(1, 0) = one(ctx);
  g.Fp.at(0, 2) = one(ctx);
  g.Fp.at(2, 1) = one(ctx);
  g.Fm.at(1, 2) = one(ctx, -1.0);
  g.Fm.at(2, 0) = one(ctx);
  return g;
}

namespace {

void add_relation(ResidualReport& rep, const std::string& id,
                  const GradedMatrix& lhs, const GradedMatrix& rhs) {
  const GradedMatrix d = lhs - rhs;
  double mx = d.max_abs();
  double mean = 0.0;
  for (int i = 0; i < d.dim(); ++i)
    for (int j = 0; j < d.dim(); ++j) mean += d.at(i, j).max_abs();
  mean /= static_cast<double>(d.dim() * d.dim());
  rep.add(id, mx, mean);
}

}  // namespace

ResidualReport check_osp_relations(
    ContextPtr ctx, const std::optional<OspPerturbation>& perturb) {
  OspGenerators g = osp_generators(ctx);
  if (perturb) {
    GradedMatrix* m = nullptr;
    if (perturb->generator == "H") m = &g.H;
    else if (perturb->generator == "E+") m = &g.Ep;
    else if (perturb->generator == "E-") m = &g.Em;
    else if (perturb->generator == "F+") m = &g.Fp;
    else if (perturb->generator == "F-") m = &g.Fm;
    else throw std::invalid_argument("check_osp_relations: unknown generator");
    m->at(perturb->i, perturb->j) += GrassmannElement::scalar(ctx, perturb->delta);
  }

  ResidualReport rep;
  add_relation(rep, "[H,E+]=2E+", graded_bracket(g.H, g.Ep), g.Ep * 2.0);
  add_relation(rep, "[H,E-]=-2E-", graded_bracket(g.H, g.Em), g.Em * -2.0);
  add_relation(rep, "[H,F+]=F+", graded_bracket(g.H, g.Fp), g.Fp);
  add_relation(rep, "[H,F-]=-F-", graded_bracket(g.H, g.Fm), g.Fm * -1.0);
  add_relation(rep, "[E+,E-]=H", graded_bracket(g.Ep, g.Em), g.H);
  add_relation(rep, "{F+,F-}=H", graded_bracket(g.Fp, g.Fm), g.H);
  add_relation(rep, "[E+,F-]=-F+", graded_bracket(g.Ep, g.Fm), g.Fp * -1.0);
  add_relation(rep, "[E-,F+]=-F-", graded_bracket(g.Em, g.Fp), g.Fm * -1.0);
  add_relation(rep, "{F+,F+}=2E+", graded_bracket(g.Fp, g.Fp), g.Ep * 2.0);
  add_relation(rep, "{F-,F-}=-2E-", graded_bracket(g.Fm, g.Fm), g.Em * -2.0);
  return rep;
}

ResidualReport check_sl2_relations(ContextPtr ctx) {
  GradedMatrix H(ctx, 2), Ep(ctx, 2), Em(ctx, 2);
  H.at(0, 0) = one(ctx);
  H.at(1, 1) = one(ctx, -1.0);
  Ep.at(0, 1) = one(ctx);
  Em.at(1, 0) = one(ctx);

  ResidualReport rep;
  add_relation(rep, "[H,E+]=2E+", graded_bracket(H, Ep), Ep * 2.0);
  add_relation(rep, "[H,E-]=-2E-", graded_bracket(H, Em), Em * -2.0);
  add_relation(rep, "[E+,E-]=H", graded_bracket(Ep, Em), H);
  return rep;
}

}  // namespace defectlab
