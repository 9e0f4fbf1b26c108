#include "doctest.h"

#include "gmf/graphon.hpp"

#include <numbers>

using namespace gmf;

namespace {

constexpr double pi = std::numbers::pi;

ComplexField zero_field(const FrequencyGrid& g, std::size_t comps = 1)
{
  ComplexField f;
  f.grid = g;
  f.components = comps;
  f.values.assign(g.ws.size() * g.xi_count() * comps, 0.0);
  return f;
}

} // namespace

TEST_CASE("phi values and mean correction")
{
  const auto phi = make_phi(0.25, 0.75, 1.0);
  CHECK(phi(0.1) == 0.0);
  CHECK(phi(0.9) == 0.0);
  CHECK(phi(0.375) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(phi(0.625) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(std::abs(phi(0.5)) < 1e-15);
  const auto smooth = make_phi(0.25, 0.75, 1.0, "smooth", 2.0);
  CHECK(smooth(0.375) == doctest::Approx(2.0 * 0.5).epsilon(1e-14));
  CHECK(smooth.sup_norm() == doctest::Approx(2.0 * 3.0 * std::sqrt(3.0) / 8.0));

  CHECK_THROWS_AS(make_phi(0.0, 0.5, 1.0), DomainError);
  CHECK_THROWS_AS(make_phi(0.6, 0.5, 1.0), DomainError);
  CHECK_THROWS_AS(make_phi(0.2, 0.5, 1.0, "box"), ConfigError);

  // off-aligned nodes: the shifted values integrate to zero exactly
  const auto times = uniform_nodes(0.2, 0.8, 37);
  const auto p = phi_on_nodes(phi, times);
  const auto w = trapezoid_weights(times);
  CompensatedSum s;
  for (std::size_t a = 0; a < times.size(); ++a)
    s.add(w[a] * p[a]);
  CHECK(std::abs(s.value()) < 1e-16);
}

TEST_CASE("l_phi: constants vanish, linearity, a closed form")
{
  const auto phi = make_phi(0.25, 0.75, 1.0);
  const auto times = uniform_nodes(0.25, 0.75, 41);
  std::vector<double> c(times.size() * 2), f(times.size() * 2), g(times.size() * 2), mix(times.size() * 2);
  for (std::size_t a = 0; a < times.size(); ++a) {
    const double t = times[a];
    c[2 * a] = 3.0;
    c[2 * a + 1] = -7.5;
    f[2 * a] = t;
    f[2 * a + 1] = t * t;
    g[2 * a] = std::exp(t);
    g[2 * a + 1] = std::cos(3.0 * t);
    mix[2 * a] = 2.0 * f[2 * a] - 0.5 * g[2 * a];
    mix[2 * a + 1] = 2.0 * f[2 * a + 1] - 0.5 * g[2 * a + 1];
  }
  for (double v : l_phi(c, times, phi))
    CHECK(std::abs(v) < 1e-15);
  const auto lf = l_phi(f, times, phi), lg = l_phi(g, times, phi), lm = l_phi(mix, times, phi);
  for (int q = 0; q < 2; ++q)
    CHECK(lm[q] == doctest::Approx(2.0 * lf[q] - 0.5 * lg[q]).epsilon(1e-13));
  // int t sin(2 pi (t - 1/4) / (1/2)) dt over [1/4, 3/4] = -(1/2)^2 / (2 pi)
  CHECK(lf[0] == doctest::Approx(-0.25 / (2.0 * pi)).epsilon(1e-2));
  CHECK_THROWS_AS(l_phi(std::vector<double>(5), times, phi), ShapeError);
}

TEST_CASE("linear weights: constant field gives the boxcar factor")
{
  const auto us = uniform_nodes(0.0, 1.0, 41);
  for (double w : { 0.0, 1e-6, 0.3, 5.0, 49.0 }) {
    const auto wts = linear_fourier_weights(us, w);
    cplx s = 0.0;
    for (const auto& v : wts)
      s += v;
    // (1 - e^{-iw}) / (iw) without cancellation
    const double sh = std::sin(0.5 * w);
    const cplx want = w == 0.0 ? cplx(1.0) : cplx(std::sin(w) / w, -2.0 * sh * sh / w);
    CHECK(std::abs(s - want) < 1e-12);
  }
}

TEST_CASE("transform_ux: u-constant field, conjugate symmetry, Parseval")
{
  const auto fg = make_frequency_grid(50.0, 401, 63, 1, pi / 0.1);
  const auto xs = uniform_nodes(-3.0, 3.0, 61);

  {
    const auto us = uniform_nodes(0.0, 1.0, 41);
    std::vector<double> v(us.size() * xs.size());
    for (std::size_t b = 0; b < us.size(); ++b)
      for (std::size_t c = 0; c < xs.size(); ++c)
        v[b * xs.size() + c] = std::exp(-xs[c] * xs[c]);
    const auto f = transform_ux(v, 1, us, xs, 1, fg);
    const std::size_t w0 = fg.ws.size() / 2;
    for (std::size_t iw : { std::size_t(0), std::size_t(150), std::size_t(199), std::size_t(320) })
      for (std::size_t q : { std::size_t(3), std::size_t(31), std::size_t(40) }) {
        const double w = fg.ws[iw];
        const cplx factor = (1.0 - std::exp(cplx(0.0, -w))) / cplx(0.0, w);
        CHECK(std::abs(f.at(iw, q) - factor * f.at(w0, q)) < 1e-12);
      }
    // conjugate symmetry of a real field
    double worst = 0.0;
    for (std::size_t iw = 0; iw < fg.ws.size(); ++iw)
      for (std::size_t q = 0; q < fg.xis.size(); ++q)
        worst = std::max(worst, std::abs(f.at(iw, q) - std::conj(f.at(fg.ws.size() - 1 - iw, fg.xis.size() - 1 - q))));
    CHECK(worst < 1e-13);
  }

  // sin^2(pi u) exp(-x^2): int int f^2 = 3/8 sqrt(pi/2)
  const auto us = uniform_nodes(0.0, 1.0, 101);
  std::vector<double> v(us.size() * xs.size());
  for (std::size_t b = 0; b < us.size(); ++b)
    for (std::size_t c = 0; c < xs.size(); ++c)
      v[b * xs.size() + c] = std::pow(std::sin(pi * us[b]), 2) * std::exp(-xs[c] * xs[c]);
  const auto f = transform_ux(v, 1, us, xs, 1, fg);
  const auto ww = trapezoid_weights(fg.ws), wx = trapezoid_weights(fg.xis);
  CompensatedSum s;
  for (std::size_t iw = 0; iw < fg.ws.size(); ++iw)
    for (std::size_t q = 0; q < fg.xis.size(); ++q)
      s.add(ww[iw] * wx[q] * std::norm(f.at(iw, q)));
  const double energy = s.value() / (4.0 * pi * pi);
  CHECK(energy == doctest::Approx(3.0 / 8.0 * std::sqrt(pi / 2.0)).epsilon(1e-2));
}

TEST_CASE("transform_ux: two dimensions factor for product fields")
{
  const auto fg = make_frequency_grid(20.0, 41, 21, 2, pi / 0.2);
  const auto fg1 = make_frequency_grid(20.0, 41, 21, 1, pi / 0.2);
  const auto us = uniform_nodes(0.0, 1.0, 21);
  const auto xs = uniform_nodes(-2.0, 2.0, 21);
  const std::size_t nx = xs.size();
  std::vector<double> v(us.size() * nx * nx), v1(us.size() * nx);
  for (std::size_t b = 0; b < us.size(); ++b)
    for (std::size_t c0 = 0; c0 < nx; ++c0) {
      v1[b * nx + c0] = std::exp(-xs[c0] * xs[c0]) * (1.0 + us[b]);
      for (std::size_t c1 = 0; c1 < nx; ++c1)
        v[(b * nx + c0) * nx + c1] = std::exp(-xs[c0] * xs[c0]) * (1.0 + us[b]) * std::exp(-2.0 * std::abs(xs[c1]));
    }
  const auto f2 = transform_ux(v, 1, us, xs, 2, fg);
  const auto f1 = transform_ux(v1, 1, us, xs, 1, fg1);
  // second-axis factor from a u-free 1-D transform
  std::vector<double> e(nx);
  for (std::size_t c = 0; c < nx; ++c)
    e[c] = std::exp(-2.0 * std::abs(xs[c]));
  for (std::size_t k1 : { std::size_t(0), std::size_t(7), std::size_t(10) }) {
    const auto wt = linear_fourier_weights(xs, fg.xis[k1]);
    cplx g = 0.0;
    for (std::size_t c = 0; c < nx; ++c)
      g += wt[c] * e[c];
    for (std::size_t iw : { std::size_t(3), std::size_t(20) })
      for (std::size_t k0 : { std::size_t(2), std::size_t(10) })
        CHECK(std::abs(f2.at(iw, k0 * fg.xis.size() + k1) - f1.at(iw, k0) * g) < 1e-12);
  }
}

TEST_CASE("transform_ux rejects bad shapes")
{
  const auto fg = make_frequency_grid(10.0, 11, 11, 1, 5.0);
  const auto xs = uniform_nodes(-1.0, 1.0, 5);
  const auto bad = uniform_nodes(-0.5, 1.0, 4);
  CHECK_THROWS_AS(transform_ux(std::vector<double>(20), 1, bad, xs, 1, fg), ShapeError);
  const auto us = uniform_nodes(0.0, 1.0, 4);
  CHECK_THROWS_AS(transform_ux(std::vector<double>(19), 1, us, xs, 1, fg), ShapeError);
  CHECK_THROWS_AS(transform_ux(std::vector<double>(20), 1, us, xs, 2, fg), ShapeError);
  CHECK_THROWS_AS(make_frequency_grid(10.0, 10, 11, 1, 5.0), DomainError);
  FrequencyGrid odd = fg;
  odd.ws[0] = -9.0;
  CHECK_THROWS_AS(odd.check(), ShapeError);
}

TEST_CASE("inverse index transform: boxcar and smooth bump")
{
  {
    const double R = 200.0;
    const auto fg = make_frequency_grid(R, 4001, 3, 1, 1.0);
    auto f = zero_field(fg);
    for (std::size_t iw = 0; iw < fg.ws.size(); ++iw) {
      const double w = fg.ws[iw];
      const cplx box = w == 0.0 ? cplx(1.0) : (1.0 - std::exp(cplx(0.0, -w))) / cplx(0.0, w);
      for (std::size_t q = 0; q < 3; ++q)
        f.at(iw, q) = box;
    }
    const auto mid = inverse_f_i_at(f, 0.5, R);
    CHECK(std::abs(mid[1] - 1.0) < 2e-2);
    const auto out = inverse_f_i_at(f, 1.7, R);
    CHECK(std::abs(out[1]) < 2e-2);
  }
  {
    const double R = 200.0;
    const auto fg = make_frequency_grid(R, 4001, 3, 1, 1.0);
    const auto bump = [](double u) { return std::pow(std::sin(pi * u), 4); };
    const auto tr = index_transform(bump, 0.0, 1.0, fg.ws);
    auto f = zero_field(fg);
    for (std::size_t iw = 0; iw < fg.ws.size(); ++iw)
      f.at(iw, 1) = tr[iw];
    for (double u : { 0.1, 0.3, 0.5, 0.8 })
      CHECK(std::abs(inverse_f_i_at(f, u, R)[1] - bump(u)) < 1e-3);
    // truncation below the grid extent
    const auto cut = inverse_f_i_at(f, 0.3, 1.0);
    CHECK(std::abs(cut[1] - bump(0.3)) > 1e-2);
  }
  const auto fg = make_frequency_grid(30.0, 61, 5, 1, 2.0);
  for (const auto& v : inverse_f_i_at(zero_field(fg, 2), 0.4, 30.0))
    CHECK(v == cplx(0.0));
}

TEST_CASE("t_transform of a time-constant field vanishes")
{
  GridFields gf;
  gf.grid.times = uniform_nodes(0.25, 0.75, 21);
  gf.grid.us = uniform_nodes(0.0, 1.0, 11);
  gf.grid.xs = uniform_nodes(-2.0, 2.0, 21);
  const std::size_t per = gf.grid.us.size() * gf.grid.xs.size();
  for (std::size_t a = 0; a < gf.grid.times.size(); ++a)
    for (std::size_t k = 0; k < per; ++k) {
      gf.mu.push_back(1.0 + 0.1 * static_cast<double>(k % 7));
      gf.beta.push_back(std::sin(static_cast<double>(k)));
    }
  gf.pi = gf.beta;
  const auto fg = make_frequency_grid(20.0, 21, 21, 1, pi / 0.2);
  const auto t = t_transform(gf, make_phi(0.25, 0.75, 1.0), fg);
  double worst = 0.0;
  for (const auto& v : t.mu.values)
    worst = std::max(worst, std::abs(v));
  for (const auto& v : t.beta.values)
    worst = std::max(worst, std::abs(v));
  CHECK(worst < 1e-14);
}
