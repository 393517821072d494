#include "defectlab/defect_sim.hpp"

#include <cmath>

namespace defectlab {

namespace {

const Complex kI(0.0, 1.0);
using GE = GrassmannElement;

template <class S>
struct Alg;

template <>
struct Alg<Complex> {
  static Complex zero(const ContextPtr&) { return {}; }
  static Complex exp(const Complex& x) { return std::exp(x); }
  static Complex sinh(const Complex& x) { return std::sinh(x); }
  static Complex cosh(const Complex& x) { return std::cosh(x); }
  static double body_abs(const Complex& x) { return std::abs(x); }
  static GE lift(const Complex& x, const ContextPtr& ctx) {
    return GE::scalar(ctx, x);
  }
};

template <>
struct Alg<GE> {
  static GE zero(const ContextPtr& ctx) { return GE::zero(ctx); }
  static GE exp(const GE& x) { return gr_exp(x); }
  static GE sinh(const GE& x) { return gr_sinh(x); }
  static GE cosh(const GE& x) { return gr_cosh(x); }
  static double body_abs(const GE& x) { return std::abs(x.body()); }
  static GE lift(const GE& x, const ContextPtr&) { return x; }
};

struct PacketSpec {
  double a = 0.3, x0 = -3.0, s = 0.7;
  double fa = 0.0, fx0 = -3.0, fs = 0.7;  // fermion packet (super)
  Complex f10{0.0, 0.0};
  Complex lam0{0.0, 0.0};
  double g0 = 4.0;      // exact-background parameter
  double cf = 0.4;      // exact-background f1 amplitude (super)
  bool zero = false;
  bool exact_background = false;
};

PacketSpec parse_seed_spec(const std::string& spec) {
  PacketSpec p;
  if (spec.empty() || spec == "zero") {
    p.zero = true;
    p.a = 0.0;
    return p;
  }
  auto colon = spec.find(':');
  std::string kind = spec.substr(0, colon);
  if (kind == "exactbg") {
    p.exact_background = true;
    p.a = 0.0;
  } else if (kind != "packet" && kind != "superpacket") {
    throw std::invalid_argument("unknown seed_spec: " + spec);
  }
  if (colon == std::string::npos) return p;
  std::string rest = spec.substr(colon + 1);
  std::size_t pos = 0;
  while (pos < rest.size()) {
    auto comma = rest.find(',', pos);
    std::string kv = rest.substr(pos, comma - pos);
    pos = (comma == std::string::npos) ? rest.size() : comma + 1;
    auto eq = kv.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = kv.substr(0, eq);
    const double val = std::stod(kv.substr(eq + 1));
    if (key == "a") p.a = val;
    else if (key == "x0") p.x0 = val;
    else if (key == "s") p.s = val;
    else if (key == "fa") p.fa = val;
    else if (key == "fx0") p.fx0 = val;
    else if (key == "fs") p.fs = val;
    else if (key == "f10") p.f10 = Complex(val, 0.0);
    else if (key == "lam0") p.lam0 = Complex(val, 0.0);
    else if (key == "g0") p.g0 = val;
    else if (key == "cf") p.cf = val;
    else throw std::invalid_argument("unknown seed_spec key: " + key);
  }
  return p;
}

// one-sided second-order first derivatives
template <class S>
S dx_forward(const std::vector<S>& f, std::size_t i, double h) {
  return (-3.0 * f[i] + 4.0 * f[i + 1] - f[i + 2]) / (2.0 * h);
}
template <class S>
S dx_backward(const std::vector<S>& f, std::size_t i, double h) {
  return (3.0 * f[i] - 4.0 * f[i - 1] + f[i - 2]) / (2.0 * h);
}
template <class S>
S dx_centered(const std::vector<S>& f, std::size_t i, double h) {
  return (f[i + 1] - f[i - 1]) / (2.0 * h);
}

template <class S>
struct SimState {
  std::vector<S> phiL, piL, phiR, piR;
  std::vector<S> psiL, psibarL, psiR, psibarR;  // super only
  S lam0, f1;

  template <class F>
  void for_each(SimState& o, const F& fn) {
    auto walk = [&](std::vector<S>& a, std::vector<S>& b) {
      for (std::size_t k = 0; k < a.size(); ++k) fn(a[k], b[k]);
    };
    walk(phiL, o.phiL);
    walk(piL, o.piL);
    walk(phiR, o.phiR);
    walk(piR, o.piR);
    walk(psiL, o.psiL);
    walk(psibarL, o.psibarL);
    walk(psiR, o.psiR);
    walk(psibarR, o.psibarR);
    fn(lam0, o.lam0);
    fn(f1, o.f1);
  }
};

template <class S>
struct BoundaryClosure {
  S dphi1, dphi2, dlam0, df1;  // time derivatives at x = 0
  S psi2b, psibar1b;           // algebraic fermion values at x = 0
};

template <class S>
class SimCore {
 public:
  SimCore(const SimConfig& cfg, ContextPtr ctx)
      : cfg_(cfg), ctx_(std::move(ctx)) {
    n_ = cfg.n;
    dx_ = cfg.L / (n_ - 1);
    super_ = cfg.model == SimModel::SuperType2;
    mu_ = cfg.params.mu;
    beta_ = cfg.params.beta;
    b2_ = beta_ * beta_;
    smu_ = std::sqrt(mu_);
    kappa_ = cfg.params.kappa;
    clamp_edges_ = parse_seed_spec(cfg.seed_spec).exact_background;
  }

  double dx() const { return dx_; }

  SimState<S> initial_state() const {
    const PacketSpec p = parse_seed_spec(cfg_.seed_spec);
    SimState<S> st;
    auto zero = Alg<S>::zero(ctx_);
    for (auto* v : {&st.phiL, &st.piL, &st.phiR, &st.piR, &st.psiL,
                    &st.psibarL, &st.psiR, &st.psibarR})
      v->assign(n_, zero);
    st.lam0 = zero;
    st.f1 = zero;
    init_profiles(st, p);
    return st;
  }

  // classic RK4 over the whole state
  void step(SimState<S>& st, double dt) const {
    SimState<S> k1 = rhs(st);
    SimState<S> y = st;
    axpy(y, k1, 0.5 * dt, st);
    SimState<S> k2 = rhs(y);
    axpy(y, k2, 0.5 * dt, st);
    SimState<S> k3 = rhs(y);
    axpy(y, k3, dt, st);
    SimState<S> k4 = rhs(y);

    SimState<S>& out = st;
    const double w = dt / 6.0;
    out.for_each(k1, [&](S& a, S& b) { a += w * b; });
    out.for_each(k2, [&](S& a, S& b) { a += (2.0 * w) * b; });
    out.for_each(k3, [&](S& a, S& b) { a += (2.0 * w) * b; });
    out.for_each(k4, [&](S& a, S& b) { a += w * b; });

    if (super_) {
      // keep the algebraically determined defect values in the state
      const BoundaryClosure<S> bc = closure(out);
      out.psiR[0] = bc.psi2b;
      out.psibarL[n_ - 1] = bc.psibar1b;
    }
  }

  BoundaryClosure<S> closure(const SimState<S>& st) const {
    BoundaryClosure<S> bc;
    const auto zero = Alg<S>::zero(ctx_);
    bc.df1 = zero;
    bc.psi2b = zero;
    bc.psibar1b = zero;

    if (cfg_.model == SimModel::None) {
      // transparent interface handled in rhs(); closure unused
      bc.dphi1 = zero;
      bc.dphi2 = zero;
      bc.dlam0 = zero;
      return bc;
    }

    // incoming characteristic data, linearly extrapolated to the boundary
    auto wplus = [&](std::size_t i) {
      return st.piL[i] + dx_centered(st.phiL, i, dx_);
    };
    auto wminus = [&](std::size_t i) {
      return st.piR[i] - dx_centered(st.phiR, i, dx_);
    };
    const S C1 = 2.0 * wplus(n_ - 2) - wplus(n_ - 3);
    const S C2 = -(2.0 * wminus(1) - wminus(2));

    const S& phi1 = st.phiL[n_ - 1];
    const S& phi2 = st.phiR[0];
    const S pp = phi1 + phi2;
    const S pm = phi1 - phi2;
    const Complex cmb = kI * mu_ / b2_;
    const Complex flip = cfg_.perturb_closure ? -1.0 : 1.0;

    if (cfg_.model == SimModel::BosonicType1) {
      const S rhs_a = -(cmb * Alg<S>::sinh(pm));
      const S rhs_b = flip * 2.0 * kI * mu_ * b2_ * Alg<S>::exp(pp);
      guard(rhs_b);
      const S dphi1_lc = rhs_a - C2;           // d phi1 (light-cone)
      bc.dphi1 = 0.5 * (C1 - dphi1_lc);
      bc.dphi2 = 0.5 * ((C1 - rhs_b) - C2);
      bc.dlam0 = zero;
      return bc;
    }

    const S el = Alg<S>::exp(st.lam0);
    const S elh = Alg<S>::exp(0.5 * st.lam0);
    const S epl = Alg<S>::exp(pp - st.lam0);
    const S eplh = Alg<S>::exp(0.5 * (pp - st.lam0));
    guard(el);
    guard(epl);
    const S sh2 = Alg<S>::sinh(0.5 * pm);
    const S ch2 = Alg<S>::cosh(0.5 * pm);

    if (cfg_.model == SimModel::BosonicType2) {
      const S rhs1 = -(cmb * el * Alg<S>::sinh(pm));
      const S rhs2 = flip * 2.0 * kI * mu_ * b2_ * epl;
      const S rhs3 = -(cmb * el * (Alg<S>::cosh(pm) + kappa_));
      const S dphi1_lc = C2 + rhs3;
      bc.dphi1 = 0.5 * (C1 - dphi1_lc);
      bc.dphi2 = 0.5 * ((C1 - rhs2) - C2);
      bc.dlam0 = 0.5 * (rhs1 - (dphi1_lc + C2));
      return bc;
    }

    // super type-II closure; kappa = -1 structure
    bc.psi2b = st.psiL[n_ - 1] - (smu_ / beta_) * elh * sh2 * st.f1;
    bc.psibar1b = st.psibarR[0] + smu_ * beta_ * eplh * st.f1;
    const S psi_p = st.psiL[n_ - 1] + bc.psi2b;
    const S psibar_p = bc.psibar1b + st.psibarR[0];

    const S G1 = -(cmb * el * Alg<S>::sinh(pm)) -
                 (smu_ / (2.0 * beta_)) * elh * ch2 * psi_p * st.f1;
    const S G2 = flip * 2.0 * kI * mu_ * b2_ * epl -
                 (beta_ * smu_ / 2.0) * eplh * psibar_p * st.f1;
    const S G3 = kI * mu_ * b2_ * epl + cmb * el * sh2 * sh2 -
                 (beta_ * smu_ / 4.0) * eplh * psibar_p * st.f1 +
                 (smu_ / (4.0 * beta_)) * elh * sh2 * psi_p * st.f1;
    const S dphi1_lc = C2 + (G2 - 2.0 * G3);
    bc.dphi1 = 0.5 * (C1 - dphi1_lc);
    bc.dphi2 = bc.dphi1 - G3;
    bc.dlam0 = 0.5 * (G1 - (dphi1_lc + C2));
    bc.df1 = (kI * smu_ * beta_ / 2.0) * eplh * psibar_p +
             (kI * smu_ / (2.0 * beta_)) * elh * sh2 * psi_p;
    return bc;
  }

  SimState<S> rhs(const SimState<S>& st) const {
    SimState<S> d = st;  // same shape
    const auto zero = Alg<S>::zero(ctx_);
    d.for_each(const_cast<SimState<S>&>(st),
               [&](S& a, S&) { a = zero; });

    const BoundaryClosure<S> bc = closure(st);

    auto side = [&](const std::vector<S>& phi, const std::vector<S>& pi,
                    const std::vector<S>& psi, const std::vector<S>& psibar,
                    std::vector<S>& dphi, std::vector<S>& dpi,
                    std::vector<S>& dpsi, std::vector<S>& dpsibar,
                    bool left) {
      auto psi_at = [&](std::size_t i) -> const S& {
        if (!left && i == 0) return bc.psi2b;
        return psi[i];
      };
      auto psibar_at = [&](std::size_t i) -> const S& {
        if (left && i == n_ - 1) return bc.psibar1b;
        return psibar[i];
      };
      for (std::size_t i = 1; i + 1 < static_cast<std::size_t>(n_); ++i) {
        dphi[i] = pi[i];
        S phixx = (phi[i + 1] - 2.0 * phi[i] + phi[i - 1]) / (dx_ * dx_);
        S e2 = Alg<S>::exp(2.0 * phi[i]);
        guard(e2);
        dpi[i] = phixx - mu_ * mu_ * e2;
        if (super_) {
          const S ephi = Alg<S>::exp(phi[i]);
          dpi[i] -= kI * mu_ * ephi * psibar_at(i) * psi_at(i);
        }
      }
      if (super_) {
        for (std::size_t i = 0; i < static_cast<std::size_t>(n_); ++i) {
          const S ephi = Alg<S>::exp(phi[i]);
          // psi moves right: backward-biased stencil
          if (i != 0) {
            S dxpsi = (i >= 2) ? (3.0 * psi_at(i) - 4.0 * psi_at(i - 1) +
                                  psi_at(i - 2)) /
                                     (2.0 * dx_)
                               : (psi_at(i) - psi_at(i - 1)) / dx_;
            dpsi[i] = -dxpsi + kI * mu_ * ephi * psibar_at(i);
          }
          // psibar moves left: forward-biased stencil
          if (i != static_cast<std::size_t>(n_) - 1) {
            S dxpsibar =
                (i + 2 < static_cast<std::size_t>(n_))
                    ? (-3.0 * psibar_at(i) + 4.0 * psibar_at(i + 1) -
                       psibar_at(i + 2)) /
                          (2.0 * dx_)
                    : (psibar_at(i + 1) - psibar_at(i)) / dx_;
            dpsibar[i] = dxpsibar + kI * mu_ * ephi * psi_at(i);
          }
        }
      }
    };

    if (cfg_.model == SimModel::None) {
      // transparent interface: treat the shared node as interior using
      // the mirrored neighbor from the other side
      side(st.phiL, st.piL, st.psiL, st.psibarL, d.phiL, d.piL, d.psiL,
           d.psibarL, true);
      side(st.phiR, st.piR, st.psiR, st.psibarR, d.phiR, d.piR, d.psiR,
           d.psibarR, false);
      const std::size_t b = n_ - 1;
      d.phiL[b] = st.piL[b];
      S phixx = (st.phiR[1] - 2.0 * st.phiL[b] + st.phiL[b - 1]) / (dx_ * dx_);
      d.piL[b] = phixx - mu_ * mu_ * Alg<S>::exp(2.0 * st.phiL[b]);
      d.phiR[0] = d.phiL[b];
      d.piR[0] = d.piL[b];
    } else {
      side(st.phiL, st.piL, st.psiL, st.psibarL, d.phiL, d.piL, d.psiL,
           d.psibarL, true);
      side(st.phiR, st.piR, st.psiR, st.psibarR, d.phiR, d.piR, d.psiR,
           d.psibarR, false);
      d.phiL[n_ - 1] = bc.dphi1;
      d.phiR[0] = bc.dphi2;
      d.lam0 = bc.dlam0;
      d.f1 = bc.df1;
    }

    if (clamp_edges_) {
      // static background held at the cutoff
      d.phiL[0] = zero;
      d.phiR[n_ - 1] = zero;
      if (super_) {
        d.psiL[0] = zero;
        d.psibarR[n_ - 1] = zero;
      }
    } else {
      // absorbing outflow at the far edges
      d.phiL[0] = -dx_forward(st.phiL, 0, dx_);
      d.phiR[n_ - 1] = dx_backward(st.phiR, n_ - 1, dx_);
    }
    return d;
  }

  // dt phi arrays for monitors (interior pi, boundaries from closures)
  void dtphi_arrays(const SimState<S>& st, std::vector<S>& dtL,
                    std::vector<S>& dtR) const {
    dtL = st.piL;
    dtR = st.piR;
    if (clamp_edges_) {
      dtL[0] = Alg<S>::zero(ctx_);
      dtR[n_ - 1] = Alg<S>::zero(ctx_);
    } else {
      dtL[0] = -dx_forward(st.phiL, 0, dx_);
      dtR[n_ - 1] = dx_backward(st.phiR, n_ - 1, dx_);
    }
    if (cfg_.model == SimModel::None) {
      // shared node evolves as interior; pi holds it
      return;
    }
    const BoundaryClosure<S> bc = closure(st);
    dtL[n_ - 1] = bc.dphi1;
    dtR[0] = bc.dphi2;
  }

 private:
  void guard(const S& e) const {
    if (Alg<S>::body_abs(e) > cfg_.params.blowup_guard)
      throw BlowupError(0.0, 0.0, Alg<S>::body_abs(e));
  }

  static void axpy(SimState<S>& y, SimState<S>& k, double h,
                   const SimState<S>& base) {
    y = base;
    y.for_each(k, [&](S& a, S& b) { a += h * b; });
  }

  void init_profiles(SimState<S>& st, const PacketSpec& p) const;

  const SimConfig& cfg_;
  ContextPtr ctx_;
  int n_ = 0;
  double dx_ = 0.0;
  bool super_ = false;
  bool clamp_edges_ = false;
  Complex mu_, beta_, b2_, smu_, kappa_;
};

ExactTypeIISpec background_spec(const PacketSpec& p, const DefectParams& dp) {
  // g1 = A makes the family static: w = g0 + A x, fields functions of x only
  ExactTypeIISpec spec;
  spec.L = Complex(0.0, 0.0);
  spec.g0 = Complex(p.g0, 0.0);
  spec.g1 = kI * dp.mu / (dp.beta * dp.beta);
  return spec;
}

template <>
void SimCore<Complex>::init_profiles(SimState<Complex>& st,
                                     const PacketSpec& p) const {
  auto prof = [&](double x) {
    const double g = p.a * std::exp(-(x - p.x0) * (x - p.x0) / (p.s * p.s));
    return Complex(g, 0.0);
  };
  auto dprof = [&](double x) {
    const double g = -2.0 * (x - p.x0) / (p.s * p.s) * p.a *
                     std::exp(-(x - p.x0) * (x - p.x0) / (p.s * p.s));
    return Complex(g, 0.0);
  };
  for (int i = 0; i < n_; ++i) {
    const double xl = -cfg_.L + i * dx_;
    const double xr = i * dx_;
    st.phiL[i] = prof(xl);
    st.piL[i] = -dprof(xl);  // right-moving packet
    st.phiR[i] = prof(xr);
    st.piR[i] = -dprof(xr);
  }
  st.lam0 = p.lam0;

  if (p.exact_background) {
    DefectParams bp = cfg_.params;
    bp.kappa = Complex(-1.0, 0.0);  // the static family needs kappa = -1
    const ExactTypeIIJets jets =
        make_exact_type2_jets(bp, background_spec(p, cfg_.params));
    for (int i = 0; i < n_; ++i) {
      const double xl = -cfg_.L + i * dx_;
      const double xr = i * dx_;
      // t = 0: z = zbar = x/2
      const Complex u_l = jets.u->eval(0, 0, 0.5 * xl, 0.5 * xl);
      const Complex pp_l = jets.phiplus->eval(0, 0, 0.5 * xl, 0.5 * xl);
      const Complex u_r = jets.u->eval(0, 0, 0.5 * xr, 0.5 * xr);
      const Complex pp_r = jets.phiplus->eval(0, 0, 0.5 * xr, 0.5 * xr);
      st.phiL[i] += 0.5 * (pp_l + u_l);   // member one on the left
      st.phiR[i] += 0.5 * (pp_r - u_r);   // member two on the right
    }
    st.lam0 = jets.L;
  }
}

template <>
void SimCore<GE>::init_profiles(SimState<GE>& st, const PacketSpec& p) const {
  auto prof = [&](double x, double a, double x0, double s) {
    return a * std::exp(-(x - x0) * (x - x0) / (s * s));
  };
  const GE g1 = GE::generator(ctx_, 1);
  const GE g2 = GE::generator(ctx_, 2);
  for (int i = 0; i < n_; ++i) {
    const double xl = -cfg_.L + i * dx_;
    const double xr = i * dx_;
    const double gl = prof(xl, p.a, p.x0, p.s);
    const double gr = prof(xr, p.a, p.x0, p.s);
    const double dgl = -2.0 * (xl - p.x0) / (p.s * p.s) * gl;
    const double dgr = -2.0 * (xr - p.x0) / (p.s * p.s) * gr;
    st.phiL[i] = GE::scalar(ctx_, Complex(gl, 0.0));
    st.piL[i] = GE::scalar(ctx_, Complex(-dgl, 0.0));
    st.phiR[i] = GE::scalar(ctx_, Complex(gr, 0.0));
    st.piR[i] = GE::scalar(ctx_, Complex(-dgr, 0.0));
    st.psiL[i] = Complex(prof(xl, p.fa, p.fx0, p.fs), 0.0) * g1;
    st.psiR[i] = GE::zero(ctx_);
    st.psibarL[i] = GE::zero(ctx_);
    st.psibarR[i] = GE::zero(ctx_);
  }
  st.lam0 = GE::scalar(ctx_, p.lam0);
  st.f1 = p.f10 * g2;

  if (p.exact_background) {
    DefectParams bp = cfg_.params;
    bp.kappa = Complex(-1.0, 0.0);
    SuperLayout layout;
    layout.ctx = ctx_;
    layout.eps = cfg_.generators - 3;
    layout.epsbar = cfg_.generators - 2;
    layout.theta = cfg_.generators - 1;
    layout.thetabar = cfg_.generators;
    ExactSuperSpec spec;
    spec.bosonic = background_spec(p, cfg_.params);
    spec.cf = Complex(p.cf, 0.0);
    spec.f1_generator = 2;
    const SuperJetBundle jets = make_exact_super_jets(layout, bp, spec);
    for (int i = 0; i < n_; ++i) {
      const double xl = -cfg_.L + i * dx_;
      const double xr = i * dx_;
      st.phiL[i] += jets.phi1->eval(0, 0, 0.5 * xl, 0.5 * xl);
      st.phiR[i] += jets.phi2->eval(0, 0, 0.5 * xr, 0.5 * xr);
      st.psiR[i] += jets.psi2->eval(0, 0, 0.5 * xr, 0.5 * xr);
      st.psibarR[i] += jets.psibar2->eval(0, 0, 0.5 * xr, 0.5 * xr);
    }
    st.lam0 = jets.lambda0->eval(0, 0, 0.0, 0.0);
    st.f1 = jets.f1->eval(0, 0, 0.0, 0.0);
  }
}

template <class S>
MonitorSeries run_impl(const SimConfig& cfg, ContextPtr ctx) {
  SimCore<S> core(cfg, ctx);
  SimState<S> st = core.initial_state();

  const double dx = core.dx();
  double dt = cfg.dt > 0.0 ? cfg.dt : cfg.cfl * dx;
  if (dt > cfg.cfl * dx + 1e-15)
    throw std::invalid_argument("sim_run: time step violates the CFL bound");
  const int steps = cfg.T > 0.0 ? static_cast<int>(std::ceil(cfg.T / dt)) : 0;

  MonitorSeries out;
  out.trace.has_dt = false;

  auto sample = [&](double t) {
    std::vector<S> dtL, dtR;
    core.dtphi_arrays(st, dtL, dtR);

    LatticeSide left, right;
    left.dx = right.dx = dx;
    auto lift_arr = [&](const std::vector<S>& src, std::vector<GE>& dst) {
      dst.reserve(src.size());
      for (const auto& v : src) dst.push_back(Alg<S>::lift(v, ctx));
    };
    lift_arr(st.phiL, left.phi);
    lift_arr(dtL, left.dtphi);
    lift_arr(st.psiL, left.psi);
    lift_arr(st.psibarL, left.psibar);
    lift_arr(st.phiR, right.phi);
    lift_arr(dtR, right.dtphi);
    lift_arr(st.psiR, right.psi);
    lift_arr(st.psibarR, right.psibar);

    DefectBlockValues dbv;
    dbv.phi1 = left.phi.back();
    dbv.phi2 = right.phi.front();
    dbv.lambda0 = Alg<S>::lift(st.lam0, ctx);
    dbv.f1 = Alg<S>::lift(st.f1, ctx);
    dbv.psi1 = left.psi.back();
    dbv.psi2 = right.psi.front();
    dbv.psibar1 = left.psibar.back();
    dbv.psibar2 = right.psibar.front();

    ChargeSample cs =
        compute_charges(left, right, dbv, cfg.params,
                        !cfg.disable_defect_terms &&
                            cfg.model != SimModel::None,
                        ctx);
    cs.t = t;
    out.charges.push_back(std::move(cs));

    // boundary trace for the condition monitors
    DefectPointData dp;
    const std::size_t b = cfg.n - 1;
    dp.phi1 = {dbv.phi1, Alg<S>::lift(dx_backward(st.phiL, b, dx), ctx), GE()};
    dp.phi2 = {dbv.phi2, Alg<S>::lift(dx_forward(st.phiR, 0, dx), ctx), GE()};
    dp.psi1 = {dbv.psi1, GE(), GE()};
    dp.psi2 = {dbv.psi2, GE(), GE()};
    dp.psibar1 = {dbv.psibar1, GE(), GE()};
    dp.psibar2 = {dbv.psibar2, GE(), GE()};
    dp.lambda0 = {dbv.lambda0, GE(), GE()};
    dp.f1 = {dbv.f1, GE(), GE()};
    // Lagrange multiplier assigned from the algebraic condition
    {
      const GE pmv = dbv.phi1 - dbv.phi2;
      const GE elh = gr_exp(dbv.lambda0 * 0.5);
      const Complex smu = std::sqrt(cfg.params.mu);
      dp.lambda1 = {dbv.psi1 + dbv.psi2 -
                        (smu / cfg.params.beta) * elh *
                            gr_cosh(pmv * 0.5) * dbv.f1,
                    GE(), GE()};
    }
    out.trace.t.push_back(t);
    out.trace.samples.push_back(std::move(dp));
  };

  sample(0.0);
  for (int k = 0; k < steps; ++k) {
    core.step(st, dt);
    if ((k + 1) % cfg.sample_every == 0 || k + 1 == steps)
      sample((k + 1) * dt);
  }
  out.final_time = steps * dt;
  out.steps = steps;
  return out;
}

}  // namespace

SimModel sim_model_from_string(const std::string& s) {
  if (s == "none") return SimModel::None;
  if (s == "bosonic_type1") return SimModel::BosonicType1;
  if (s == "bosonic_type2") return SimModel::BosonicType2;
  if (s == "super_type2") return SimModel::SuperType2;
  throw std::invalid_argument("unknown sim model: " + s);
}

std::string to_string(SimModel m) {
  switch (m) {
    case SimModel::None: return "none";
    case SimModel::BosonicType1: return "bosonic_type1";
    case SimModel::BosonicType2: return "bosonic_type2";
    case SimModel::SuperType2: return "super_type2";
  }
  return "?";
}

void SimConfig::validate() const {
  params.validate();
  if (n < 16) throw std::invalid_argument("SimConfig: need n >= 16");
  if (L <= 0.0) throw std::invalid_argument("SimConfig: L must be positive");
  if (T < 0.0) throw std::invalid_argument("SimConfig: negative end time");
  const double dxv = L / (n - 1);
  if (dt > cfl * dxv + 1e-15)
    throw std::invalid_argument("SimConfig: dt violates the CFL bound");
  if (generators < 2)
    throw std::invalid_argument("SimConfig: need at least two generators");
  if (model == SimModel::SuperType2 && params.kappa != Complex(-1.0, 0.0))
    throw std::invalid_argument(
        "SimConfig: the super defect closure requires kappa = -1");
}

MonitorSeries sim_run(const SimConfig& cfg) {
  cfg.validate();
  if (cfg.model == SimModel::SuperType2) {
    auto layout = SuperLayout::standard(cfg.generators - 4);
    return run_impl<GE>(cfg, layout.ctx);
  }
  return run_impl<Complex>(cfg, scalar_context());
}

DriftSummary drift_report(const MonitorSeries& series, const SimConfig& cfg) {
  if (series.charges.empty())
    throw std::invalid_argument("drift_report: empty series");
  DriftSummary out;

  auto drift_of = [&](auto proj, const std::string& name) {
    const GE q0 = proj(series.charges.front());
    double scale = std::max(q0.max_abs(), 1e-30);
    double mx = 0.0;
    for (const auto& c : series.charges) {
      scale = std::max(scale, proj(c).max_abs());
      mx = std::max(mx, (proj(c) - q0).max_abs());
    }
    out.rows.push_back({name, mx / scale, scale});
    return mx / scale;
  };

  const double dE = drift_of([](const ChargeSample& c) { return c.E; }, "E");
  const double dP = drift_of([](const ChargeSample& c) { return c.P; }, "P");
  drift_of([](const ChargeSample& c) { return c.Q; }, "Q");
  drift_of([](const ChargeSample& c) { return c.Qbar; }, "Qbar");
  const double dEm =
      drift_of([](const ChargeSample& c) { return c.E_mod; }, "E_mod");
  const double dPm =
      drift_of([](const ChargeSample& c) { return c.P_mod; }, "P_mod");
  const double dQm =
      drift_of([](const ChargeSample& c) { return c.Q_mod; }, "Q_mod");
  const double dQbm =
      drift_of([](const ChargeSample& c) { return c.Qbar_mod; }, "Qbar_mod");

  const bool super = cfg.model == SimModel::SuperType2;
  out.modified_max_drift =
      super ? std::max({dEm, dPm, dQm, dQbm}) : std::max(dEm, dPm);
  out.canonical_over_modified =
      std::max(dE, dP) / std::max(out.modified_max_drift, 1e-30);
  out.conserved_pass = out.modified_max_drift <= cfg.tolerance;
  out.ratio_pass = out.canonical_over_modified >= 1e3;
  return out;
}

nlohmann::json DriftSummary::to_json() const {
  nlohmann::json rows_j = nlohmann::json::array();
  for (const auto& r : rows)
    rows_j.push_back(
        {{"charge", r.charge}, {"drift", r.drift}, {"scale", r.scale}});
  return {{"rows", rows_j},
          {"modified_max_drift", modified_max_drift},
          {"canonical_over_modified", canonical_over_modified},
          {"conserved_pass", conserved_pass},
          {"ratio_pass", ratio_pass}};
}

ResidualReport sim_closure_residual(const MonitorSeries& series,
                                    const SimConfig& cfg) {
  if (cfg.model == SimModel::None)
    throw std::invalid_argument("sim_closure_residual: no defect in model none");
  if (cfg.model == SimModel::BosonicType2) {
    // the three defect conditions with general kappa, on the trace
    ResidualReport rep;
    const auto& tr = series.trace;
    const Complex cmb =
        kI * cfg.params.mu / (cfg.params.beta * cfg.params.beta);
    const Complex cmb2 =
        2.0 * kI * cfg.params.mu * cfg.params.beta * cfg.params.beta;
    double mx[3] = {}, sum[3] = {};
    int cnt = 0;
    const double dt = tr.t.size() > 1 ? tr.t[1] - tr.t[0] : 1.0;
    for (std::size_t k = 1; k + 1 < tr.samples.size(); ++k) {
      const auto& d = tr.samples[k];
      auto ddt = [&](auto proj) {
        return (proj(tr.samples[k + 1]) - proj(tr.samples[k - 1])) /
               (2.0 * dt);
      };
      const GE dtphi1 = ddt([](const DefectPointData& q) { return q.phi1.v; });
      const GE dtphi2 = ddt([](const DefectPointData& q) { return q.phi2.v; });
      const GE dtlam = ddt([](const DefectPointData& q) { return q.lambda0.v; });
      const GE pm = d.phi1.v - d.phi2.v;
      const GE pp = d.phi1.v + d.phi2.v;
      const GE el = gr_exp(d.lambda0.v);
      const GE r[3] = {
          (d.phi1.dx + d.phi2.dx) - (dtphi1 + dtphi2) + 2.0 * dtlam +
              cmb * el * gr_sinh(pm),
          (d.phi1.dx - d.phi2.dx) + (dtphi1 - dtphi2) -
              cmb2 * gr_exp(pp - d.lambda0.v),
          (d.phi1.dx - d.phi2.dx) - (dtphi1 - dtphi2) +
              cmb * el * (gr_cosh(pm) + cfg.params.kappa)};
      for (int q = 0; q < 3; ++q) {
        mx[q] = std::max(mx[q], r[q].max_abs());
        sum[q] += r[q].max_abs();
      }
      ++cnt;
    }
    const char* ids[3] = {"dc_dphi_plus", "dc_dbar_phi_minus",
                          "dc_dphi_minus"};
    for (int q = 0; q < 3; ++q)
      rep.add(ids[q], mx[q], cnt ? sum[q] / cnt : 0.0);
    return rep;
  }
  if (cfg.model == SimModel::BosonicType1) {
    // the two type-I conditions, evaluated on the trace
    ResidualReport rep;
    const auto& tr = series.trace;
    const Complex cmb = kI * cfg.params.mu / (cfg.params.beta * cfg.params.beta);
    double mx1 = 0, mx2 = 0, sum1 = 0, sum2 = 0;
    int cnt = 0;
    const double dt = tr.t.size() > 1 ? tr.t[1] - tr.t[0] : 1.0;
    for (std::size_t k = 1; k + 1 < tr.samples.size(); ++k) {
      const auto& d = tr.samples[k];
      const GE dtphi1 =
          (tr.samples[k + 1].phi1.v - tr.samples[k - 1].phi1.v) / (2.0 * dt);
      const GE dtphi2 =
          (tr.samples[k + 1].phi2.v - tr.samples[k - 1].phi2.v) / (2.0 * dt);
      const GE pm = d.phi1.v - d.phi2.v;
      const GE pp = d.phi1.v + d.phi2.v;
      // d phi+ = dx phi+ - dt phi+
      const GE r1 = (d.phi1.dx + d.phi2.dx) - (dtphi1 + dtphi2) +
                    cmb * gr_sinh(pm);
      const GE r2 = (d.phi1.dx - d.phi2.dx) + (dtphi1 - dtphi2) -
                    2.0 * kI * cfg.params.mu * cfg.params.beta *
                        cfg.params.beta * gr_exp(pp);
      mx1 = std::max(mx1, r1.max_abs());
      mx2 = std::max(mx2, r2.max_abs());
      sum1 += r1.max_abs();
      sum2 += r2.max_abs();
      ++cnt;
    }
    rep.add("tId_dphi_plus", mx1, cnt ? sum1 / cnt : 0.0);
    rep.add("tId_dbar_phi_minus", mx2, cnt ? sum2 / cnt : 0.0);
    return rep;
  }
  return defect_condition_residual(series.trace, cfg.params,
                                   Complex(-1.0, 0.0),
                                   ConditionForm::Reduced);
}

}  // namespace defectlab
