#include "doctest.h"

#include "gmf/estimators.hpp"
#include "helpers.hpp"

using namespace gmf;
using gmf::test::make_system;

namespace {

TrajectorySet static_set(std::vector<double> x, std::size_t steps = 1, double T = 1.0)
{
  TrajectorySet tr;
  tr.n = x.size();
  tr.d = 1;
  tr.grid = TimeGrid(T, steps);
  for (std::size_t k = 0; k <= steps; ++k)
    tr.positions.insert(tr.positions.end(), x.begin(), x.end());
  return tr;
}

//! Trapezoid over u in [-h2, 1 + h2] and x over the particle hull padded by h3.
double total_mass(const TrajectorySet& tr, const KernelTriple& kt, const Bandwidths& h, double t0)
{
  const std::size_t k = tr.grid.snap(t0);
  double lo = 1e300, hi = -1e300;
  for (std::size_t i = 0; i < tr.n; ++i) {
    lo = std::min(lo, tr.particle(k, i)[0]);
    hi = std::max(hi, tr.particle(k, i)[0]);
  }
  const auto us = uniform_nodes(-h.h2, 1.0 + h.h2, 801);
  const auto xs = uniform_nodes(lo - h.h3, hi + h.h3, 801);
  const double du = us[1] - us[0], dx = xs[1] - xs[0];
  CompensatedSum s;
  for (std::size_t a = 0; a < us.size(); ++a)
    for (std::size_t b = 0; b < xs.size(); ++b) {
      const double w = (a == 0 || a + 1 == us.size() ? 0.5 : 1.0) * (b == 0 || b + 1 == xs.size() ? 0.5 : 1.0);
      s.add(w * mu_hat(tr, kt, h, t0, us[a], std::span(&xs[b], 1)));
    }
  return s.value() * du * dx;
}

} // namespace

TEST_CASE("mu_hat single particle and common position")
{
  const KernelTriple kt;
  const Bandwidths h{ 0.2, 0.6, 0.4 };
  const double y = 0.3, x0 = 0.45, u0 = 0.7;
  const auto one = static_set({ y });
  const double want = dilate_J(kt, h.h2, u0 - 1.0) * dilate_K(kt, h.h3, std::vector<double>{ x0 - y });
  CHECK(mu_hat(one, kt, h, 1.0, u0, std::span(&x0, 1)) == doctest::Approx(want).epsilon(1e-15));

  const std::size_t n = 37;
  const auto same = static_set(std::vector<double>(n, x0));
  const Bandwidths wide{ 0.2, 1.3, 0.25 };
  double acc = 0.0;
  for (std::size_t i = 1; i <= n; ++i) {
    const double t = (0.5 - static_cast<double>(i) / n) / wide.h2;
    acc += 15.0 / 16.0 * (1 - t * t) * (1 - t * t) / wide.h2;
  }
  const double direct = (15.0 / 16.0) / wide.h3 * acc / n;
  CHECK(mu_hat(same, kt, wide, 0.0, 0.5, std::span(&x0, 1)) == doctest::Approx(direct).epsilon(1e-14));
}

TEST_CASE("mass conservation over the extended domain")
{
  const KernelTriple kt;
  const Bandwidths h{ 0.2, 0.15, 0.3 };
  for (std::uint64_t seed : { 1u, 2u, 3u, 4u, 5u }) {
    const auto tr = simulate(gmf::test::ou_system(), 150, TimeGrid(1.0, 20), seed);
    CHECK(total_mass(tr, kt, h, 0.5) == doctest::Approx(1.0).epsilon(1e-2));
  }
}

TEST_CASE("locality of mu_hat")
{
  const KernelTriple kt;
  const Bandwidths h{ 0.2, 0.1, 0.3 };
  auto tr = simulate(gmf::test::ou_system(), 200, TimeGrid(1.0, 10), 8);
  const double x0 = 0.1, u0 = 0.5;
  const double before = mu_hat(tr, kt, h, 1.0, u0, std::span(&x0, 1));
  const std::size_t k = tr.grid.steps;
  std::size_t moved = 0;
  for (std::size_t i = 0; i < tr.n; ++i) {
    const bool near_u = std::abs(u0 - tr.index(i)) <= h.h2;
    const bool near_x = std::abs(x0 - tr.particle(k, i)[0]) <= h.h3;
    if (!near_u || !near_x) {
      tr.positions[k * tr.n + i] = near_u ? x0 + 5.0 : tr.positions[k * tr.n + i] - 3.0 * (i % 3);
      ++moved;
    }
  }
  CHECK(moved > 100);
  CHECK(mu_hat(tr, kt, h, 1.0, u0, std::span(&x0, 1)) == before);
}

TEST_CASE("pi_hat vanishes for frozen particles and is odd in the increments")
{
  const KernelTriple kt;
  const Bandwidths h{ 0.2, 0.3, 0.5 };
  auto frozen = make_system(make_zero_field(), make_zero_field(), make_constant_graphon(1.0),
                            make_scalar_diffusion(0.0), make_point_initial(0.2));
  const auto tf = simulate(frozen, 10, TimeGrid(1.0, 50), 1);
  const double x0 = 0.1;
  for (double v : pi_hat(tf, kt, h, 0.5, 0.5, std::span(&x0, 1)))
    CHECK(v == 0.0);

  auto s = make_system(make_zero_field(), make_zero_field(), make_constant_graphon(1.0), make_scalar_diffusion(0.6),
                       make_point_initial(0.0));
  auto tr = simulate(s, 60, TimeGrid(1.0, 100), 4);
  auto neg = tr;
  for (double& v : neg.positions)
    v = -v;
  const double zero = 0.0;
  const auto p = pi_hat(tr, kt, h, 0.5, 0.4, std::span(&zero, 1));
  const auto q = pi_hat(neg, kt, h, 0.5, 0.4, std::span(&zero, 1));
  CHECK(p[0] != 0.0);
  CHECK(q[0] == -p[0]);
}

TEST_CASE("pi_hat on a deterministic two-particle system matches the Riemann oracle")
{
  auto s = make_system(make_truncated_linear(1.0, 10.0), make_zero_field(), make_constant_graphon(1.0),
                       make_scalar_diffusion(0.0), make_point_initial(0.0));
  s.initial.point.reset();
  s.initial.sampler = [](double u, RandomStream&, std::span<double> out) { out[0] = u < 0.75 ? 1.0 : -1.0; };
  const TimeGrid grid(1.0, 1000);
  const auto tr = simulate(s, 2, grid, 0);
  const KernelTriple kt;
  const Bandwidths h{ 0.2, 1.0, 0.5 };
  const double t0 = 0.5, u0 = 0.75, x0 = 0.6;
  // Y1 = e^{-t}, Y2 = -e^{-t}, Y' = -Y
  const std::size_t panels = 20000;
  CompensatedSum acc;
  for (std::size_t k = 0; k <= panels; ++k) {
    const double t = t0 - h.h1 + 2.0 * h.h1 * k / panels;
    const double w = (k == 0 || k == panels) ? 1.0 : (k % 2 ? 4.0 : 2.0);
    double inner = 0.0;
    for (int i = 0; i < 2; ++i) {
      const double y = (i == 0 ? 1.0 : -1.0) * std::exp(-t);
      const double dy = -y;
      const double ui = (i + 1) / 2.0;
      inner += dilate_J(kt, h.h2, u0 - ui) * dilate_K(kt, h.h3, std::vector<double>{ x0 - y }) * dy / 2.0;
    }
    acc.add(w * dilate_H(kt, h.h1, t0 - t) * inner);
  }
  const double oracle = acc.value() * (2.0 * h.h1 / panels) / 3.0;
  const auto got = pi_hat(tr, kt, h, t0, u0, std::span(&x0, 1));
  CHECK(got[0] == doctest::Approx(oracle).epsilon(5e-3));
  CHECK(std::abs(oracle) > 0.1);
}

TEST_CASE("pi_hat support and bandwidth diagnostics")
{
  const auto tr = simulate(gmf::test::ou_system(), 20, TimeGrid(1.0, 100), 1);
  const KernelTriple kt;
  const double x0 = 0.0;
  CHECK_THROWS_AS(pi_hat(tr, kt, { 0.2, 0.2, 0.2 }, 0.1, 0.5, std::span(&x0, 1)), DomainError);
  CHECK_THROWS_AS(pi_hat(tr, kt, { 0.2, 0.2, 0.2 }, 0.95, 0.5, std::span(&x0, 1)), DomainError);
  std::vector<std::string> warnings;
  set_warning_sink([&](const std::string& m) { warnings.push_back(m); });
  (void)pi_hat(tr, kt, { 0.05, 0.2, 0.2 }, 0.5, 0.5, std::span(&x0, 1));
  set_warning_sink([](const std::string&) {});
  CHECK(warnings.size() == 1);
}

TEST_CASE("beta_hat floor and algebraic inverse")
{
  const KernelTriple kt;
  const Bandwidths h{ 0.2, 0.2, 0.3 };
  const auto tr = simulate(gmf::test::ou_system(), 300, TimeGrid(1.0, 100), 3);
  const double far = 40.0;
  CHECK(mu_hat(tr, kt, h, 0.5, 0.5, std::span(&far, 1)) == 0.0);
  const double kappa2 = 0.01;
  const double x0 = 0.2;
  const auto p = pi_hat(tr, kt, h, 0.5, 0.5, std::span(&x0, 1));
  const double m = mu_hat(tr, kt, h, 0.5, 0.5, std::span(&x0, 1));
  const auto b = beta_hat(tr, kt, h, 0.5, 0.5, std::span(&x0, 1), kappa2);
  REQUIRE(m > kappa2);
  CHECK(std::abs(b[0] * m - p[0]) <= 4e-16 * std::abs(p[0]));
  const auto b_big = beta_hat(tr, kt, h, 0.5, 0.5, std::span(&x0, 1), 1e6);
  CHECK(b_big[0] == p[0] / 1e6);
  CHECK(std::abs(b[0]) <= std::abs(p[0]) / kappa2);
}

TEST_CASE("OU density and drift recovery at desk scale")
{
  const KernelTriple kt;
  const std::size_t n = 4000;
  const double hn = std::pow(static_cast<double>(n), -0.25);
  const Bandwidths h{ 0.2, hn, hn };
  const auto s = gmf::test::ou_system();
  const double x0 = 0.0, xb = 0.5;
  const double truth = gmf::test::normal_density(x0, 0.0, 0.5);
  double mae = 0.0, mean = 0.0, bmean = 0.0, bmae = 0.0;
  const int seeds = 20;
  for (int r = 0; r < seeds; ++r) {
    const auto tr = simulate(s, n, TimeGrid(1.0, 100), 500 + r);
    const double m = mu_hat(tr, kt, h, 1.0, 0.5, std::span(&x0, 1));
    mae += std::abs(m - truth) / seeds;
    mean += m / seeds;
    // index-homogeneous system: a wide h2 costs no bias
    const double b = beta_hat(tr, kt, { 0.25, 0.5, 0.2 }, 0.5, 0.5, std::span(&xb, 1), 1e-3)[0];
    bmean += b / seeds;
    bmae += std::abs(b + xb) / seeds;
  }
  MESSAGE("mu: mean abs error " << mae << ", error of mean " << std::abs(mean - truth));
  MESSAGE("beta: mean abs error " << bmae << ", error of mean " << std::abs(bmean + xb));
  CHECK(std::abs(mean - truth) <= 0.05);
  CHECK(mae <= 0.05);
  CHECK(std::abs(bmean + xb) <= 0.1);
  CHECK(bmae <= 0.1);
}

TEST_CASE("fields_on_grid: truncation and pointwise consistency")
{
  const KernelTriple kt;
  const Bandwidths h{ 0.2, 0.2, 0.4 };
  const auto tr = simulate(gmf::test::ou_system(1.0, 1.0, 1.5), 400, TimeGrid(1.0, 100), 6);
  Cutoffs cut;
  cut.r = 1.0;
  EvalGrid g;
  g.times = uniform_nodes(0.3, 0.7, 5);
  g.us = uniform_nodes(0.0, 1.0, 6);
  g.xs = uniform_nodes(-2.0, 2.0, 9);
  const auto f = fields_on_grid(tr, kt, h, g, cut);
  std::size_t outside = 0;
  for (std::size_t a = 0; a < g.times.size(); ++a)
    for (std::size_t b = 0; b < g.us.size(); ++b)
      for (std::size_t c = 0; c < g.xs.size(); ++c) {
        const std::size_t node = f.node(a, b, c);
        const double x = g.xs[c];
        if (std::abs(x) > cut.r) {
          ++outside;
          CHECK(f.mu[node] == 0.0);
          CHECK(f.beta[node] == 0.0);
        } else {
          CHECK(f.mu[node] == doctest::Approx(mu_hat(tr, kt, h, g.times[a], g.us[b], std::span(&x, 1))).epsilon(1e-12));
          const double p = pi_hat(tr, kt, h, g.times[a], g.us[b], std::span(&x, 1))[0];
          CHECK(std::abs(f.pi[node] - p) <= 1e-12 * std::max(1.0, std::abs(p)));
          // exact algebraic relation of the stored fields
          CHECK(std::abs(f.beta[node] * std::max(f.mu[node], cut.kappa2) - f.pi[node])
                <= 4.0 * std::numeric_limits<double>::epsilon() * std::abs(f.pi[node]));
        }
      }
  CHECK(outside == g.times.size() * g.us.size() * 4);

  EvalGrid one;
  one.times = { 0.5 };
  one.us = { 0.35 };
  one.xs = { 0.25 };
  const auto f1 = fields_on_grid(tr, kt, h, one, cut);
  const double x = 0.25;
  CHECK(f1.mu[0] == doctest::Approx(mu_hat(tr, kt, h, 0.5, 0.35, std::span(&x, 1))).epsilon(1e-13));
  CHECK(f1.beta[0] == doctest::Approx(beta_hat(tr, kt, h, 0.5, 0.35, std::span(&x, 1), cut.kappa2)[0]).epsilon(1e-11));
}

TEST_CASE("fields_on_grid does not depend on the worker count")
{
  const KernelTriple kt;
  const auto tr = simulate(gmf::test::ou_system(), 300, TimeGrid(1.0, 50), 2);
  EvalGrid g;
  g.times = uniform_nodes(0.3, 0.7, 3);
  g.us = uniform_nodes(0.0, 1.0, 7);
  g.xs = uniform_nodes(-1.0, 1.0, 5);
  setenv("GMF_THREADS", "1", 1);
  const auto a = fields_on_grid(tr, kt, { 0.2, 0.2, 0.3 }, g, {});
  setenv("GMF_THREADS", "3", 1);
  const auto b = fields_on_grid(tr, kt, { 0.2, 0.2, 0.3 }, g, {});
  unsetenv("GMF_THREADS");
  CHECK(a.mu == b.mu);
  CHECK(a.pi == b.pi);
  CHECK(a.beta == b.beta);
}
