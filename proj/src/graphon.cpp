#include "gmf/graphon.hpp"

#include <numbers>

namespace gmf {

namespace {

bool same_grid(const FrequencyGrid& a, const FrequencyGrid& b)
{
  return a.d == b.d && a.ws == b.ws && a.xis == b.xis;
}

} // namespace

RatioField ratio_field(const ComplexField& t_mu, const ComplexField& t_beta, double kappa1, double r_tilde)
{
  if (!same_grid(t_mu.grid, t_beta.grid) || t_mu.components != 1)
    throw ShapeError("ratio_field: transformed fields must share a frequency grid, with scalar T_mu");
  if (!(kappa1 > 0.0) || !(r_tilde > 0.0))
    throw DomainError("ratio_field: kappa1 and r_tilde must be positive");
  const std::size_t nw = t_mu.grid.ws.size();
  const std::size_t nxi = t_mu.grid.xi_count();
  const std::size_t comps = t_beta.components;

  RatioField out;
  out.r_tilde = r_tilde;
  out.values.grid = t_mu.grid;
  out.values.components = comps;
  out.values.values.assign(nw * nxi * comps, 0.0);
  out.mask.assign(nw * nxi, 0);
  std::size_t inside = 0, dropped = 0;
  for (std::size_t iw = 0; iw < nw; ++iw) {
    if (std::abs(t_mu.grid.ws[iw]) > r_tilde)
      continue;
    for (std::size_t q = 0; q < nxi; ++q) {
      ++inside;
      const cplx m = t_mu.at(iw, q);
      if (!(std::abs(m) > kappa1)) {
        ++dropped;
        continue;
      }
      out.mask[iw * nxi + q] = 1;
      for (std::size_t c = 0; c < comps; ++c)
        out.values.at(iw, q, c) = t_beta.at(iw, q, c) / m;
    }
  }
  out.masked_fraction = inside ? static_cast<double>(dropped) / static_cast<double>(inside) : 0.0;
  return out;
}

double a_hat(const RatioField& ratio, double u)
{
  const auto& g = ratio.values.grid;
  const std::size_t comps = ratio.values.components;
  const auto inv = inverse_f_i_at(ratio.values, u, ratio.r_tilde);
  const auto w1 = trapezoid_weights(g.xis);
  const double scale = std::pow(2.0 * std::numbers::pi, -static_cast<double>(g.d));
  std::vector<std::size_t> idx(g.d);
  CompensatedSum total;
  for (std::size_t q = 0; q < g.xi_count(); ++q) {
    double w = scale;
    std::size_t rem = q;
    for (std::size_t k = g.d; k-- > 0;) {
      w *= w1[rem % g.xis.size()];
      rem /= g.xis.size();
    }
    double s = 0.0;
    for (std::size_t c = 0; c < comps; ++c)
      s += std::norm(inv[q * comps + c]);
    total.add(w * s);
  }
  return std::sqrt(std::max(0.0, total.value()));
}

std::vector<cplx> index_transform(const std::function<double(double)>& g, double lo, double hi,
                                  std::span<const double> ws, std::size_t nodes)
{
  const auto us = uniform_nodes(lo, hi, nodes);
  std::vector<double> gv(us.size());
  for (std::size_t i = 0; i < us.size(); ++i)
    gv[i] = g(us[i]);
  std::vector<cplx> out(ws.size());
  for (std::size_t iw = 0; iw < ws.size(); ++iw) {
    const auto wts = linear_fourier_weights(us, ws[iw]);
    cplx s = 0.0;
    for (std::size_t i = 0; i < us.size(); ++i)
      s += wts[i] * gv[i];
    out[iw] = s;
  }
  return out;
}

void rebuild_grids(Theta& theta, double T, std::size_t d, const ThetaOptions& opt)
{
  const double h1 = theta.h.h1;
  if (!(h1 < 0.5 * T))
    throw DomainError("h1 must be below T/2 so that [h1, T - h1] is nonempty");
  const double tau1 = std::max(0.25 * T, h1);
  const double tau2 = std::min(0.75 * T, T - h1);
  if (!(tau2 > tau1))
    throw DomainError("no room for the test function inside [h1, T - h1]");
  theta.phi = make_phi(tau1, tau2, T, opt.phi_shape, opt.phi_amplitude);
  theta.grid.d = d;
  theta.grid.times = uniform_nodes(tau1, tau2, opt.n_times);
  theta.grid.us = uniform_nodes(0.0, 1.0, opt.n_u);
  theta.grid.xs = uniform_nodes(-theta.cut.r, theta.cut.r, opt.n_x);
  const double dx = theta.grid.xs[1] - theta.grid.xs[0];
  theta.fgrid = make_frequency_grid(theta.cut.r_tilde, opt.n_w, opt.n_xi, d, std::numbers::pi / dx);
}

Theta default_theta(std::size_t n, double T, std::size_t d, double g0, double f_l2, const ThetaOptions& opt)
{
  if (n < 1)
    throw DomainError("default schedule needs n >= 1");
  const double nn = static_cast<double>(n);
  Theta theta;
  const double h = std::pow(nn, -0.2);
  theta.h = { h, h, h };
  theta.cut.kappa1 = std::pow(nn, -0.1);
  theta.cut.r = 3.0;
  theta.cut.r_tilde = 50.0;
  theta.cut.kappa0 = 0.25 * g0 * f_l2;
  theta.cut.kappa2 = 1e-3;
  theta.g0 = g0;
  if (!(theta.cut.kappa0 > 0.0))
    throw DomainError("default kappa0 = 0.25 g0 |F|_2 needs a nonzero interaction force");
  rebuild_grids(theta, T, d, opt);
  return theta;
}

GHatResult g_hat_from_ratio(const RatioField& ratio, double u0, double v0, double g0, double kappa0)
{
  GHatResult r;
  r.a_num = a_hat(ratio, u0 - v0);
  r.a_den = a_hat(ratio, 0.0);
  r.g_hat = g0 * r.a_num / std::max(r.a_den, kappa0);
  r.masked_fraction = ratio.masked_fraction;
  return r;
}

GraphonEstimator::GraphonEstimator(const TrajectorySet& traj, const Theta& theta)
  : theta_(theta)
{
  theta_.h.check();
  theta_.cut.check();
  if (!(theta_.g0 > 0.0 && theta_.g0 <= 1.0))
    throw DomainError("g0 must lie in (0, 1]");
  fields_ = fields_on_grid(traj, theta_.kernels, theta_.h, theta_.grid, theta_.cut);
  transformed_ = t_transform(fields_, theta_.phi, theta_.fgrid);
  ratio_ = ratio_field(transformed_.mu, transformed_.beta, theta_.cut.kappa1, theta_.cut.r_tilde);
  a0_ = a_hat(ratio_, 0.0);
}

GHatResult GraphonEstimator::eval(double u0, double v0) const
{
  if (!std::isfinite(u0) || !std::isfinite(v0))
    throw DomainError("graphon arguments must be finite");
  GHatResult r;
  r.a_num = u0 == v0 ? a0_ : a_hat(ratio_, u0 - v0);
  r.a_den = a0_;
  r.g_hat = theta_.g0 * r.a_num / std::max(r.a_den, theta_.cut.kappa0);
  r.masked_fraction = ratio_.masked_fraction;
  return r;
}

double g_hat(const TrajectorySet& traj, double u0, double v0, const Theta& theta)
{
  return GraphonEstimator(traj, theta).eval(u0, v0).g_hat;
}

} // namespace gmf
