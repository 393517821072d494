#pragma once

#include "defectlab/osp12.hpp"
#include "defectlab/super_liouville.hpp"
#include "defectlab/zero_curvature.hpp"

namespace defectlab {

/// Point data of one superfield component: value and the spacetime
/// derivatives the superspace operators consume.
struct ComponentJet {
  GrassmannElement v, dz, dzb, dzdzb;
  GrassmannElement dzdz, dzbdzb;  // only the D^2 = d identities need these
};

struct SuperfieldJet {
  ComponentJet phi, psi, psibar, F;
};

/// theta-expansion bookkeeping bound to the reserved generators of a layout.
class SuperspaceCalc {
 public:
  explicit SuperspaceCalc(const SuperLayout& layout);

  /// Phi = phi + i thetabar psibar + i theta psi + i thetabar theta F.
  GrassmannElement superfield(const SuperfieldJet& j) const;
  /// Spacetime derivatives of the assembled superfield.
  GrassmannElement superfield_dz(const SuperfieldJet& j) const;
  GrassmannElement superfield_dzb(const SuperfieldJet& j) const;
  GrassmannElement superfield_dzdzb(const SuperfieldJet& j) const;

  /// D X = dX/dtheta + theta dX, Dbar X = dX/dthetabar + thetabar dbar X,
  /// given X and the needed spacetime derivative of X.
  GrassmannElement D(const GrassmannElement& X,
                     const GrassmannElement& X_dz) const;
  GrassmannElement Dbar(const GrassmannElement& X,
                        const GrassmannElement& X_dzb) const;

  /// Coefficients of R on the basis {1, theta, thetabar, thetabar theta}.
  struct ThetaComponents {
    GrassmannElement one, theta, thetabar, thetabar_theta;
  };
  ThetaComponents project(const GrassmannElement& R) const;

  int theta_index() const { return theta_; }
  int thetabar_index() const { return thetabar_; }

 private:
  ContextPtr ctx_;
  int theta_, thetabar_;
};

/// Residual of the superspace field equation D Dbar Phi + i mu e^Phi,
/// projected on the theta basis, together with the component residuals it
/// must reproduce:
///   one:           i (F + mu e^phi)
///   theta:         i (d psibar + i mu e^phi psi)
///   thetabar:     -i (dbar psi - i mu e^phi psibar)
///   thetabar theta: -(r_phi) - mu e^phi (F + mu e^phi)
/// where r_phi = d dbar phi - mu^2 e^{2 phi} - i mu e^phi psibar psi.
struct SuperspaceResidual {
  SuperspaceCalc::ThetaComponents components;
  GrassmannElement r_F, r_psi, r_psibar, r_phi;  // component residuals
  double cross_check_max = 0.0;  // coefficient-wise operator-identity gap
};

SuperspaceResidual superspace_residual(const SuperLayout& layout,
                                       const SuperfieldJet& jet, Complex mu);

/// D^2 = d and Dbar^2 = dbar as operator identities on a jet; returns the
/// maximal coefficient deviation.
double superderivative_square_check(const SuperLayout& layout,
                                    const SuperfieldJet& jet);

/// Graded zero curvature of the superspace connections
///   A = -(1/2)(D Phi) H + sqrt(lambda mu) e^{Phi/2} F+
///   Abar = (1/2)(Dbar Phi) H + i sqrt(mu/lambda) e^{Phi/2} F-
/// evaluated as Dbar A + D Abar - (S A S) Abar - (S Abar S) A with
/// S = diag(1,1,-1). The result is [(D Dbar Phi + i mu e^Phi)] H exactly;
/// off-H sectors vanish identically.
struct SuperspaceLaxResidual {
  GradedMatrix omega;                   // full residual matrix
  GrassmannElement h_coefficient;      // residual along H
  double off_h_max = 0.0;               // identically-zero sectors, measured
  double vs_field_equation = 0.0;       // |h_coefficient - sLe residual|
};

SuperspaceLaxResidual superspace_lax_residual(const SuperLayout& layout,
                                              const SuperfieldJet& jet,
                                              Complex lambda, Complex mu);

}  // namespace defectlab
