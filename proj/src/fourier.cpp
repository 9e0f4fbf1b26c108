#include "gmf/fourier.hpp"

#include "gmf/csv.hpp"

#include <numbers>

namespace gmf {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

} // namespace

double TestFunctionPhi::operator()(double t) const
{
  if (t < tau1 || t > tau2)
    return 0.0;
  const double s = (t - tau1) / (tau2 - tau1);
  const double base = std::sin(two_pi * s);
  if (shape == "smooth") {
    const double q = std::sin(std::numbers::pi * s);
    return amplitude * base * q * q;
  }
  return amplitude * base;
}

double TestFunctionPhi::sup_norm() const
{
  // max of sin(2 pi s) sin^2(pi s) is 3 sqrt(3) / 8
  return std::abs(amplitude) * (shape == "smooth" ? 3.0 * std::sqrt(3.0) / 8.0 : 1.0);
}

TestFunctionPhi make_phi(double tau1, double tau2, double T, const std::string& shape, double amplitude)
{
  if (!(T > 0.0) || !(tau1 > 0.0) || !(tau2 > tau1) || !(tau2 < T))
    throw DomainError("test function needs 0 < tau1 < tau2 < T");
  if (shape != "sine" && shape != "smooth")
    throw ConfigError("unknown test function shape '" + shape + "'");
  if (!std::isfinite(amplitude) || amplitude == 0.0)
    throw DomainError("test function amplitude must be finite and nonzero");
  return { tau1, tau2, T, shape, amplitude };
}

std::vector<double> trapezoid_weights(std::span<const double> nodes)
{
  std::vector<double> w(nodes.size(), 0.0);
  if (nodes.size() < 2)
    return w;
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
    const double h = 0.5 * (nodes[i + 1] - nodes[i]);
    w[i] += h;
    w[i + 1] += h;
  }
  return w;
}

std::vector<double> phi_on_nodes(const TestFunctionPhi& phi, std::span<const double> times)
{
  const auto w = trapezoid_weights(times);
  std::vector<double> v(times.size());
  CompensatedSum total, support;
  for (std::size_t a = 0; a < times.size(); ++a) {
    v[a] = phi(times[a]);
    total.add(w[a] * v[a]);
    if (times[a] >= phi.tau1 && times[a] <= phi.tau2)
      support.add(w[a]);
  }
  if (support.value() > 0.0) {
    const double shift = total.value() / support.value();
    for (std::size_t a = 0; a < times.size(); ++a)
      if (times[a] >= phi.tau1 && times[a] <= phi.tau2)
        v[a] -= shift;
  }
  return v;
}

std::vector<double> l_phi(std::span<const double> values, std::span<const double> times, const TestFunctionPhi& phi)
{
  if (times.empty() || values.size() % times.size() != 0)
    throw ShapeError("l_phi: value array does not align with the time axis");
  if (times.front() > phi.tau1 + 1e-12 || times.back() < phi.tau2 - 1e-12)
    warn("l_phi: time nodes do not cover the support of phi");
  const std::size_t rest = values.size() / times.size();
  const auto w = trapezoid_weights(times);
  const auto p = phi_on_nodes(phi, times);
  std::vector<double> out(rest, 0.0);
  for (std::size_t a = 0; a < times.size(); ++a) {
    const double c = w[a] * p[a];
    if (c == 0.0)
      continue;
    const double* row = values.data() + a * rest;
    for (std::size_t q = 0; q < rest; ++q)
      out[q] += c * row[q];
  }
  return out;
}

std::size_t FrequencyGrid::xi_count() const
{
  std::size_t c = 1;
  for (std::size_t k = 0; k < d; ++k)
    c *= xis.size();
  return c;
}

void FrequencyGrid::xi_node(std::size_t q, std::span<double> out) const
{
  for (std::size_t k = d; k-- > 0;) {
    out[k] = xis[q % xis.size()];
    q /= xis.size();
  }
}

void FrequencyGrid::check() const
{
  if (d < 1 || d > 2)
    throw DomainError("the transform stack supports d = 1 or 2");
  for (const auto* axis : { &ws, &xis }) {
    if (axis->size() < 2 || axis->size() % 2 == 0)
      throw ShapeError("frequency axes need an odd node count >= 3 so that 0 is a node");
    const std::size_t mid = axis->size() / 2;
    if ((*axis)[mid] != 0.0)
      throw ShapeError("frequency axes must have 0 as the middle node");
    for (std::size_t i = 0; i < axis->size(); ++i)
      if (std::abs((*axis)[i] + (*axis)[axis->size() - 1 - i]) > 1e-12 * std::abs((*axis)[i]))
        throw ShapeError("frequency axes must be symmetric about 0");
  }
}

namespace {

std::vector<double> symmetric_axis(double extent, std::size_t count)
{
  if (count < 3 || count % 2 == 0)
    throw DomainError("frequency node counts must be odd and at least 3");
  if (!(extent > 0.0) || !std::isfinite(extent))
    throw DomainError("frequency extent must be positive and finite");
  std::vector<double> v(count);
  const std::size_t mid = count / 2;
  for (std::size_t i = 0; i < count; ++i) {
    const double k = static_cast<double>(i) - static_cast<double>(mid);
    v[i] = extent * k / static_cast<double>(mid);
  }
  v[mid] = 0.0;
  return v;
}

} // namespace

FrequencyGrid make_frequency_grid(double r_tilde, std::size_t n_w, std::size_t n_xi, std::size_t d, double xi_extent)
{
  if (!(xi_extent > 0.0))
    throw DomainError("xi extent must be positive (use pi / dx for the state grid)");
  FrequencyGrid g{ symmetric_axis(r_tilde, n_w), symmetric_axis(xi_extent, n_xi), d };
  g.check();
  return g;
}

std::vector<cplx> linear_fourier_weights(std::span<const double> nodes, double w)
{
  const std::size_t n = nodes.size();
  std::vector<cplx> out(n, 0.0);
  if (n < 2)
    return out;
  const double step = nodes[1] - nodes[0];
  const double x = w * step;

  // Interior hat of width 2 step: step * sinc^2(x / 2).
  double interior;
  // Half hats: int_0^step e^{-i w s}(1 - s/step) ds and its mirror.
  cplx left_half;
  if (std::abs(x) < 1e-4) {
    const double x2 = x * x;
    interior = step * (1.0 - x2 / 12.0 + x2 * x2 / 360.0);
    // Taylor series of 1/a - (1 - e^{-a step})/(a^2 step) with a = i w.
    const cplx ix(0.0, x);
    left_half = step * (0.5 - ix / 6.0 + ix * ix / 24.0 - ix * ix * ix / 120.0);
  } else {
    const double s = std::sin(0.5 * x) / (0.5 * x);
    interior = step * s * s;
    const cplx a(0.0, w);
    left_half = 1.0 / a - (1.0 - std::exp(-a * step)) / (a * a * step);
  }
  const cplx right_half = std::conj(left_half);

  for (std::size_t b = 0; b < n; ++b) {
    const cplx phase = std::exp(cplx(0.0, -w * nodes[b]));
    if (b == 0)
      out[b] = phase * left_half;
    else if (b + 1 == n)
      out[b] = phase * right_half;
    else
      out[b] = phase * interior;
  }
  return out;
}

ComplexField transform_ux(std::span<const double> values, std::size_t components, std::span<const double> us,
                          std::span<const double> xs, std::size_t d, const FrequencyGrid& fgrid)
{
  fgrid.check();
  if (fgrid.d != d)
    throw ShapeError("frequency grid dimension differs from the field dimension");
  const std::size_t nu = us.size();
  const std::size_t nxa = xs.size();
  const std::size_t nx = d == 1 ? nxa : nxa * nxa;
  if (values.size() != nu * nx * components)
    throw ShapeError("transform: field size does not match the (u, x) grid");
  if (us.front() < -1e-12 || us.back() > 1.0 + 1e-12)
    throw ShapeError("transform: index nodes must lie in [0, 1]");

  const std::size_t nxia = fgrid.xis.size();
  const std::size_t nxi = fgrid.xi_count();
  const std::size_t nw = fgrid.ws.size();

  // x-axis weight table ex[k][c] for each xi axis node k
  std::vector<std::vector<cplx>> ex(nxia);
  for (std::size_t k = 0; k < nxia; ++k)
    ex[k] = linear_fourier_weights(xs, fgrid.xis[k]);

  // State transform per index row: fx[(b * nxi + q) * components + comp]
  std::vector<cplx> fx(nu * nxi * components, 0.0);
  parallel_for(nu, [&](std::size_t b) {
    const double* row = values.data() + b * nx * components;
    cplx* dst = fx.data() + b * nxi * components;
    if (d == 1) {
      for (std::size_t k = 0; k < nxia; ++k)
        for (std::size_t c = 0; c < nxa; ++c)
          for (std::size_t comp = 0; comp < components; ++comp)
            dst[k * components + comp] += ex[k][c] * row[c * components + comp];
    } else {
      // first axis 1 (inner index), then axis 0
      std::vector<cplx> half(nxa * nxia * components, 0.0);
      for (std::size_t c0 = 0; c0 < nxa; ++c0)
        for (std::size_t k1 = 0; k1 < nxia; ++k1)
          for (std::size_t c1 = 0; c1 < nxa; ++c1)
            for (std::size_t comp = 0; comp < components; ++comp)
              half[(c0 * nxia + k1) * components + comp] += ex[k1][c1] * row[(c0 * nxa + c1) * components + comp];
      for (std::size_t k0 = 0; k0 < nxia; ++k0)
        for (std::size_t c0 = 0; c0 < nxa; ++c0)
          for (std::size_t k1 = 0; k1 < nxia; ++k1)
            for (std::size_t comp = 0; comp < components; ++comp)
              dst[(k0 * nxia + k1) * components + comp] += ex[k0][c0] * half[(c0 * nxia + k1) * components + comp];
    }
  });

  ComplexField out;
  out.grid = fgrid;
  out.components = components;
  out.values.assign(nw * nxi * components, 0.0);
  parallel_for(nw, [&](std::size_t iw) {
    const auto eu = linear_fourier_weights(us, fgrid.ws[iw]);
    cplx* dst = out.values.data() + iw * nxi * components;
    for (std::size_t b = 0; b < nu; ++b) {
      const cplx* src = fx.data() + b * nxi * components;
      for (std::size_t q = 0; q < nxi * components; ++q)
        dst[q] += eu[b] * src[q];
    }
  });
  return out;
}

Transformed t_transform(const GridFields& fields, const TestFunctionPhi& phi, const FrequencyGrid& fgrid)
{
  const auto& g = fields.grid;
  const std::size_t d = g.d;
  const auto lmu = l_phi(fields.mu, g.times, phi);
  const auto lbeta = l_phi(fields.beta, g.times, phi);
  return { transform_ux(lmu, 1, g.us, g.xs, d, fgrid), transform_ux(lbeta, d, g.us, g.xs, d, fgrid) };
}

std::vector<cplx> inverse_f_i_at(const ComplexField& field, double u, double r_tilde)
{
  const auto& ws = field.grid.ws;
  const std::size_t per_w = field.grid.xi_count() * field.components;
  std::vector<cplx> out(per_w, 0.0);
  const auto w = trapezoid_weights(ws);
  for (std::size_t iw = 0; iw < ws.size(); ++iw) {
    if (std::abs(ws[iw]) > r_tilde * (1.0 + 1e-12))
      continue;
    const cplx c = w[iw] * std::exp(cplx(0.0, u * ws[iw])) / two_pi;
    const cplx* src = field.values.data() + iw * per_w;
    for (std::size_t q = 0; q < per_w; ++q)
      out[q] += c * src[q];
  }
  return out;
}

void write_complex_field_csv(const ComplexField& field, const std::string& path)
{
  const auto& g = field.grid;
  std::vector<std::string> header{ "w" };
  for (std::size_t k = 0; k < g.d; ++k)
    header.push_back("xi" + std::to_string(k + 1));
  for (std::size_t comp = 0; comp < field.components; ++comp) {
    header.push_back("re" + std::to_string(comp));
    header.push_back("im" + std::to_string(comp));
  }
  CsvTable table(header);
  std::vector<double> xi(g.d);
  for (std::size_t iw = 0; iw < g.ws.size(); ++iw)
    for (std::size_t q = 0; q < g.xi_count(); ++q) {
      g.xi_node(q, xi);
      std::vector<double> row{ g.ws[iw] };
      row.insert(row.end(), xi.begin(), xi.end());
      for (std::size_t comp = 0; comp < field.components; ++comp) {
        row.push_back(field.at(iw, q, comp).real());
        row.push_back(field.at(iw, q, comp).imag());
      }
      table.add_row(row);
    }
  table.write(path);
}

} // namespace gmf
