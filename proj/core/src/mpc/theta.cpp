#include "ramplab/mpc/theta.hpp"

#include <limits>
#include <stdexcept>

namespace ramplab::mpc {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

void HorizonConfig::validate() const {
  if (Np < 1 || Nc < 1 || M < 1) throw std::invalid_argument("horizon: Np, Nc, M must be >= 1");
  if (Nc > Np / M)
    throw std::invalid_argument("horizon: Nc must not exceed Np/M");
  if (!(gamma > 0.0) || gamma > 1.0) throw std::invalid_argument("horizon: gamma must be in (0,1]");
}

ThetaLayout ThetaLayout::make(const AblationFlags& flags, int n_segments, int n_origins, int Np) {
  ThetaLayout l;
  l.n_segments = n_segments;
  l.n_origins = n_origins;
  l.Np = Np;
  int at = 0;
  if (flags.learn_rho_crit) l.rho_crit = at++;
  if (flags.learn_a) l.a = at++;
  if (flags.learn_v_free) l.v_free = at++;
  l.theta_T = at++;
  l.theta_V = at++;
  l.Theta_C = at;
  at += Np + 1;
  l.lam_rho = at; at += n_segments;
  l.lam_v = at; at += n_segments;
  l.lam_w = at; at += n_origins;
  l.ell_rho = at; at += n_segments;
  l.ell_v = at; at += n_segments;
  l.ell_w = at; at += n_origins;
  l.gam_rho = at; at += n_segments;
  l.gam_v = at; at += n_segments;
  l.gam_w = at; at += n_origins;
  l.dim = at;
  return l;
}

std::string ThetaLayout::name(int index) const {
  if (index == rho_crit) return "rho_crit";
  if (index == a) return "a";
  if (index == v_free) return "v_free";
  if (index == theta_T) return "theta_T";
  if (index == theta_V) return "theta_V";
  auto block = [&](int start, int len, const char* base) -> std::string {
    if (start >= 0 && index >= start && index < start + len)
      return std::string(base) + "_" + std::to_string(index - start);
    return {};
  };
  std::string s;
  if (!(s = block(Theta_C, Np + 1, "Theta_C")).empty()) return s;
  if (!(s = block(lam_rho, n_segments, "lam_rho")).empty()) return s;
  if (!(s = block(lam_v, n_segments, "lam_v")).empty()) return s;
  if (!(s = block(lam_w, n_origins, "lam_w")).empty()) return s;
  if (!(s = block(ell_rho, n_segments, "ell_rho")).empty()) return s;
  if (!(s = block(ell_v, n_segments, "ell_v")).empty()) return s;
  if (!(s = block(ell_w, n_origins, "ell_w")).empty()) return s;
  if (!(s = block(gam_rho, n_segments, "gam_rho")).empty()) return s;
  if (!(s = block(gam_v, n_segments, "gam_v")).empty()) return s;
  if (!(s = block(gam_w, n_origins, "gam_w")).empty()) return s;
  return "theta_" + std::to_string(index);
}

bool ThetaVector::within_bounds(double tol) const {
  for (int i = 0; i < dim(); ++i)
    if (value[i] < lb[i] - tol || value[i] > ub[i] + tol) return false;
  return true;
}

ThetaVector ThetaVector::initial(const AblationFlags& flags, const traffic::NetworkTopology& topo,
                                 const traffic::MetanetParams& true_params,
                                 const HorizonConfig& horizon, double rho_crit_factor,
                                 double a_factor, double v_free_factor) {
  ThetaVector t;
  t.layout = ThetaLayout::make(flags, topo.num_segments(), topo.num_origins(), horizon.Np);
  t.value.resize(t.layout.dim);
  t.lb = Eigen::VectorXd::Constant(t.layout.dim, -kInf);
  t.ub = Eigen::VectorXd::Constant(t.layout.dim, kInf);

  const ThetaLayout& l = t.layout;
  if (l.rho_crit >= 0) {
    t.value[l.rho_crit] = rho_crit_factor * true_params.rho_crit;
    t.lb[l.rho_crit] = 10.0;
    t.ub[l.rho_crit] = 162.0;
  }
  if (l.a >= 0) {
    t.value[l.a] = a_factor * true_params.a;
    t.lb[l.a] = 1.1;
    t.ub[l.a] = 3.0;
  }
  if (l.v_free >= 0) {
    t.value[l.v_free] = v_free_factor * true_params.v_free;
    t.lb[l.v_free] = 50.0;
    t.ub[l.v_free] = 300.0;
  }
  t.value[l.theta_T] = 1.0;
  t.lb[l.theta_T] = 1e-3;
  t.value[l.theta_V] = 160000.0;
  t.lb[l.theta_V] = 1e-3;
  for (int i = 0; i <= horizon.Np; ++i) {
    t.value[l.Theta_C + i] = 5.0;
    t.lb[l.Theta_C + i] = 1e-3;
  }
  auto fill = [&](int start, int len, double v, double lo) {
    for (int i = 0; i < len; ++i) {
      t.value[start + i] = v;
      t.lb[start + i] = lo;
    }
  };
  const int nS = topo.num_segments(), nO = topo.num_origins();
  fill(l.lam_rho, nS, 1.0, -kInf);
  fill(l.lam_v, nS, 1.0, -kInf);
  fill(l.lam_w, nO, 1.0, -kInf);
  fill(l.ell_rho, nS, 1.0, 1e-6);
  fill(l.ell_v, nS, 1.0, 1e-6);
  fill(l.ell_w, nO, 1.0, 1e-6);
  fill(l.gam_rho, nS, 1.0, 1e-6);
  fill(l.gam_v, nS, 1.0, 1e-6);
  fill(l.gam_w, nO, 1.0, 1e-6);
  return t;
}

ThetaVector ThetaVector::with_zero_weights() const {
  ThetaVector t = *this;
  for (int i = 0; i < dim(); ++i) {
    if (i == layout.rho_crit || i == layout.a || i == layout.v_free) continue;
    t.value[i] = 0.0;
  }
  return t;
}

}  // namespace ramplab::mpc
