#pragma once

#include <optional>
#include <string>

#include "defectlab/graded_matrix.hpp"
#include "defectlab/report.hpp"

namespace defectlab {

/// The 3x3 representation of osp(1,2): bosonic H, E+, E- spanning sl(2) and
/// fermionic F+, F-.
struct OspGenerators {
  GradedMatrix H, Ep, Em, Fp, Fm;
};

OspGenerators osp_generators(ContextPtr ctx);

struct OspPerturbation {
  std::string generator;  // "H", "E+", "E-", "F+", "F-"
  int i = 0, j = 0;
  Complex delta;
};

/// Evaluates every printed (anti)commutation relation; residuals are exact
/// zeros in unperturbed integer arithmetic.
ResidualReport check_osp_relations(
    ContextPtr ctx, const std::optional<OspPerturbation>& perturb = {});

/// The sl(2) subset {H, E+-} on the 2x2 bosonic block.
ResidualReport check_sl2_relations(ContextPtr ctx);

}  // namespace defectlab
