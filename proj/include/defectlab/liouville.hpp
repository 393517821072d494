#pragma once

#include "defectlab/fields.hpp"
#include "defectlab/report.hpp"
#include "defectlab/zero_curvature.hpp"

namespace defectlab {

/// Model constants: scale mu ("cosmological constant"), coupling beta, the
/// free defect parameter kappa, and the free K-matrix constants.
struct DefectParams {
  Complex mu{1.0, 0.0};
  Complex beta{1.0, 0.0};
  Complex kappa{0.0, 0.0};
  Complex a11{1.0, 0.0}, c11{1.0, 0.0};  // first K solution
  Complex b11{1.0, 0.0}, d11{1.0, 0.0};  // K' and the super defect matrix
  double blowup_guard = 1e12;

  void validate() const;
};

struct BlowupError : std::runtime_error {
  BlowupError(double z_, double zb_, double mag)
      : std::runtime_error("field blow-up at z=" + std::to_string(z_) +
                           ", zbar=" + std::to_string(zb_) +
                           " (|exp| ~ " + std::to_string(mag) + ")"),
        z(z_),
        zb(zb_) {}
  double z, zb;
};

/// phi(z, zbar) = -log(mu (z + zbar)); singular on the light-cone diagonal.
BosonicField make_static_wall(const GridPtr& grid, Complex mu);

/// General-solution ansatz from a holomorphic/antiholomorphic pair. The
/// construction is only accepted through the bulk-residual oracle; the
/// report of that self-check is returned alongside the field.
struct TwoFunctionResult {
  BosonicField field;
  ResidualReport validation;
};
TwoFunctionResult make_two_function(const GridPtr& grid, Complex mu,
                                    const HoloPtr& F, const HoloPtr& G,
                                    DerivMode validation_mode,
                                    double tol = 1e-6);

/// |d dbar phi - mu^2 e^{2 phi}|.
ResidualReport liouville_bulk_residual(const BosonicField& phi, Complex mu,
                                       DerivMode mode);

/// Two bulk fields coupled through a holomorphic defect field Lambda0.
/// Lambda0 is stored as a full 2-D field; its dbar-residual is measured,
/// never assumed.
struct TypeIIState {
  BosonicField phi1, phi2;
  ComplexField lambda0;
  AnalyticPtr lambda0_analytic;
};

/// Residuals of the four type-II relations:
///   d(phi+ - L0) + (i mu/b^2) e^{L0} sinh(phi-)
///   dbar L0
///   dbar phi- - 2 i mu b^2 e^{phi+ - L0}
///   d phi-  + (i mu/b^2) e^{L0} (cosh(phi-) + kappa)
ResidualReport type2_backlund_residual(const TypeIIState& s,
                                       const DefectParams& p, DerivMode mode);

/// d[ e^{-(phi+ - L0)} (cosh(phi-) + kappa) ]; vanishes on type-II states.
ResidualReport antiholomorphic_functional_check(const TypeIIState& s,
                                                const DefectParams& p,
                                                DerivMode mode);

/// Residuals of d(phi+) + (i mu/b^2) sinh(phi-) and
/// dbar(phi-) - 2 i mu b^2 e^{phi+}, plus the exact pointwise match against
/// the type-II operation evaluated at Lambda0 = 0.
ResidualReport type1_conditions_residual(const BosonicField& phi1,
                                         const BosonicField& phi2,
                                         const DefectParams& p, DerivMode mode);

struct BacklundSeed {
  Complex phi2_corner{0.0, 0.0};
  Complex lambda0_corner{0.0, 0.0};
};

struct BacklundResult {
  TypeIIState state;
  double cross_defect_max = 0.0;  // z-then-zbar vs zbar-then-z disagreement
};

/// Marches the type-II relations across the grid by second-order midpoint
/// steps along both characteristic directions, averaging the two routes and
/// recording their disagreement. phi1 must carry closed-form derivatives.
BacklundResult backlund_integrate(const BosonicField& phi1,
                                  const BacklundSeed& seed,
                                  const DefectParams& p);

/// Type-I marching (Lambda0 = 0) from the same corner seed.
BosonicField type1_integrate(const BosonicField& phi1, Complex phi2_corner,
                             const DefectParams& p);

struct StressResult {
  ComplexField T, Tbar;
  ResidualReport conservation;  // dbar T and d Tbar norms
};
StressResult stress_tensor(const BosonicField& phi, DerivMode mode);

enum class DefectKind { TypeII, TypeI };

/// Gluing residuals |T1 - T2| and |Tbar1 - Tbar2|; for type-I also the
/// total-time-derivative anomaly identity for the T mismatch.
ResidualReport conformal_defect_check(const TypeIIState& s,
                                      const DefectParams& p, DefectKind kind,
                                      DerivMode mode);

/// Shared dim-0 context for purely bosonic matrix work.
ContextPtr scalar_context();

/// 2x2 Lax connections: A = [[-dphi/2, -lambda mu e^phi],[0, dphi/2]],
/// Abar = [[dbar phi/2, 0],[-(mu/lambda) e^phi, -dbar phi/2]].
ConnectionPair lax_connection(const BosonicField& phi, Complex lambda,
                              Complex mu, const ContextPtr& ctx);

enum class KVariant { First, Prime };

/// The two printed defect-matrix solutions on a type-II state.
MatrixField defect_matrix_K(const TypeIIState& s, Complex lambda,
                            const DefectParams& p, KVariant variant,
                            const ContextPtr& ctx);

/// Exact type-II pair for kappa = -1: coth(u/2) = A z + g(zbar) with
/// A = (i mu / beta^2) e^{L}, g affine, u = phi-, Lambda0 = L. All fields
/// carry closed-form derivatives of every order.
struct ExactTypeIISpec {
  Complex L{0.0, 0.0};     // constant Lambda0
  Complex g0{2.0, 0.0};    // g(zbar) = g0 + g1 zbar
  Complex g1{0.5, 0.0};
};
TypeIIState make_exact_type2(const GridPtr& grid, const DefectParams& p,
                             const ExactTypeIISpec& spec);

/// Building blocks of the exact family: closed-form jets (any order) of
/// u = phi- and of phi+, with Lambda0 = L constant.
struct ExactTypeIIJets {
  AnalyticPtr u, phiplus;
  Complex L;
};
ExactTypeIIJets make_exact_type2_jets(const DefectParams& p,
                                      const ExactTypeIISpec& spec);

}  // namespace defectlab
