#include "gmf/kernels.hpp"

#include <sstream>

namespace gmf {

Kernel1D biweight()
{
  return { [](double t) {
            if (std::abs(t) > 1.0)
              return 0.0;
            const double a = 1.0 - t * t;
            return 15.0 / 16.0 * a * a;
          },
           "biweight" };
}

Kernel1D triweight()
{
  return { [](double t) {
            if (std::abs(t) > 1.0)
              return 0.0;
            const double a = 1.0 - t * t;
            return 35.0 / 32.0 * a * a * a;
          },
           "triweight" };
}

Kernel1D epanechnikov()
{
  return { [](double t) { return std::abs(t) > 1.0 ? 0.0 : 0.75 * (1.0 - t * t); }, "epanechnikov" };
}

Kernel1D kernel_by_name(const std::string& name)
{
  if (name == "biweight")
    return biweight();
  if (name == "triweight")
    return triweight();
  if (name == "epanechnikov")
    return epanechnikov();
  throw ConfigError("unknown kernel '" + name + "'");
}

double KernelTriple::K(std::span<const double> x) const
{
  if (K_override)
    return K_override(x);
  double p = 1.0;
  for (double xc : x) {
    if (std::abs(xc) > 1.0)
      return 0.0;
    p *= k_factor(xc);
  }
  return p;
}

void Bandwidths::check() const
{
  for (double h : { h1, h2, h3 })
    if (!(h > 0.0) || !std::isfinite(h))
      throw DomainError("bandwidths must be positive and finite");
}

double dilate(const Kernel1D& k, double h, double t)
{
  if (!(h > 0.0))
    throw DomainError("bandwidth must be positive");
  if (!std::isfinite(t))
    throw DomainError("kernel argument must be finite");
  return k(t / h) / h;
}

double dilate_H(const KernelTriple& kt, double h1, double t)
{
  return dilate(kt.H, h1, t);
}

double dilate_J(const KernelTriple& kt, double h2, double u)
{
  return dilate(kt.J, h2, u);
}

double dilate_K(const KernelTriple& kt, double h3, std::span<const double> x)
{
  if (!(h3 > 0.0))
    throw DomainError("bandwidth must be positive");
  if (!all_finite(x))
    throw DomainError("kernel argument must be finite");
  double buf[16];
  std::vector<double> heap;
  double* y = buf;
  if (x.size() > 16) {
    heap.resize(x.size());
    y = heap.data();
  }
  for (std::size_t c = 0; c < x.size(); ++c)
    y[c] = x[c] / h3;
  return kt.K(std::span<const double>(y, x.size())) / std::pow(h3, static_cast<double>(x.size()));
}

double product_JK(const KernelTriple& kt, const Bandwidths& h, double u, std::span<const double> x)
{
  const double j = dilate_J(kt, h.h2, u);
  if (j == 0.0)
    return 0.0;
  return j * dilate_K(kt, h.h3, x);
}

double product_HJK(const KernelTriple& kt, const Bandwidths& h, double t, double u, std::span<const double> x)
{
  const double a = dilate_H(kt, h.h1, t);
  if (a == 0.0)
    return 0.0;
  return a * product_JK(kt, h, u, x);
}

namespace {

struct Moments
{
  double mass = 0.0;
  double first = 0.0; // worst |first moment| over coordinates
  double min_value = 0.0;
  std::string note;
};

Moments simpson_1d(const std::function<double(double)>& f)
{
  constexpr std::size_t panels = 1 << 14;
  const double h = 2.0 / panels;
  CompensatedSum mass, first;
  double lo = 0.0;
  for (std::size_t i = 0; i <= panels; ++i) {
    const double t = -1.0 + h * static_cast<double>(i);
    const double w = h / 3.0 * ((i == 0 || i == panels) ? 1.0 : (i % 2 ? 4.0 : 2.0));
    const double v = f(t);
    lo = std::min(lo, v);
    mass.add(w * v);
    first.add(w * t * v);
  }
  return { mass.value(), std::abs(first.value()), lo, "Simpson, 2^14 panels" };
}

Moments simpson_2d(const std::function<double(std::span<const double>)>& f)
{
  constexpr std::size_t panels = 1 << 14;
  const double h = 2.0 / panels;
  std::vector<double> w(panels + 1);
  for (std::size_t i = 0; i <= panels; ++i)
    w[i] = h / 3.0 * ((i == 0 || i == panels) ? 1.0 : (i % 2 ? 4.0 : 2.0));
  CompensatedSum mass, m0, m1;
  double lo = 0.0;
  double pt[2];
  for (std::size_t i = 0; i <= panels; ++i) {
    pt[0] = -1.0 + h * static_cast<double>(i);
    CompensatedSum row, row1;
    for (std::size_t j = 0; j <= panels; ++j) {
      pt[1] = -1.0 + h * static_cast<double>(j);
      const double v = f(pt);
      lo = std::min(lo, v);
      row.add(w[j] * v);
      row1.add(w[j] * pt[1] * v);
    }
    mass.add(w[i] * row.value());
    m0.add(w[i] * pt[0] * row.value());
    m1.add(w[i] * row1.value());
  }
  return { mass.value(), std::max(std::abs(m0.value()), std::abs(m1.value())), lo, "Simpson, 2^14 panels per axis" };
}

Moments monte_carlo(const std::function<double(std::span<const double>)>& f, std::size_t d)
{
  constexpr std::size_t samples = 1000000;
  RandomStream rng(0, StreamPurpose::validation, 7, static_cast<std::uint32_t>(d));
  std::vector<double> x(d);
  const double volume = std::pow(2.0, static_cast<double>(d));
  CompensatedSum mass, mass2;
  std::vector<CompensatedSum> first(d);
  double lo = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    for (double& c : x)
      c = 2.0 * rng.uniform() - 1.0;
    const double v = f(x) * volume;
    lo = std::min(lo, v);
    mass.add(v);
    mass2.add(v * v);
    for (std::size_t c = 0; c < d; ++c)
      first[c].add(v * x[c]);
  }
  const double ns = static_cast<double>(samples);
  const double mean = mass.value() / ns;
  const double se = std::sqrt(std::max(0.0, mass2.value() / ns - mean * mean) / ns);
  double worst = 0.0;
  for (auto& fc : first)
    worst = std::max(worst, std::abs(fc.value() / ns));
  std::ostringstream os;
  os << "Monte Carlo, 1e6 samples, standard error " << se;
  return { mean, worst, lo, os.str() };
}

// One-sided derivative slopes at the support edge t = 1: inside slope versus
// the zero slope outside. A C^1 kernel has both near zero.
double boundary_jump(const std::function<double(double)>& f)
{
  const double eps = 1e-6;
  const double inside = (f(1.0) - f(1.0 - eps)) / eps;
  const double outside = (f(1.0 + eps) - f(1.0)) / eps;
  const double inside_l = (f(-1.0 + eps) - f(-1.0)) / eps;
  const double outside_l = (f(-1.0) - f(-1.0 - eps)) / eps;
  return std::max(std::abs(inside - outside), std::abs(inside_l - outside_l));
}

} // namespace

ValidationReport validate_kernels(const KernelTriple& kt, std::size_t d, double tol)
{
  if (d < 1)
    throw DomainError("validate_kernels needs d >= 1");
  ValidationReport report;
  auto add = [&](std::string name, bool ok, double witness, std::string detail = {}) {
    report.entries.push_back({ std::move(name), ok, witness, std::move(detail) });
  };

  // Probe tolerance for the C^1 check: a jump of order one in the slope is a
  // failure, discretization noise of order eps is not.
  constexpr double smooth_tol = 1e-3;

  auto check_1d = [&](const std::string& label, const Kernel1D& k) {
    const auto m = simpson_1d(k.f);
    add(label + ".nonnegative", m.min_value >= 0.0, m.min_value);
    add(label + ".normalization", std::abs(m.mass - 1.0) <= tol, m.mass, m.note);
    add(label + ".first_moment", m.first <= tol, m.first, m.note);
    double outside = 0.0;
    for (double t : { 1.0 + 1e-12, 1.0 + 1e-6, 1.5, 2.0, 10.0 })
      outside = std::max({ outside, std::abs(k(t)), std::abs(k(-t)) });
    add(label + ".support", outside == 0.0, outside);
    const double jump = boundary_jump(k.f);
    add(label + ".c1_boundary", jump <= smooth_tol, jump, "one-sided derivative jump at |t| = 1");
  };
  check_1d("H", kt.H);
  check_1d("J", kt.J);

  const std::function<double(std::span<const double>)> kfun = [&](std::span<const double> x) { return kt.K(x); };
  Moments mk;
  if (d == 1)
    mk = simpson_1d([&](double t) { return kt.K(std::span(&t, 1)); });
  else if (d == 2)
    mk = simpson_2d(kfun);
  else
    mk = monte_carlo(kfun, d);
  // Monte Carlo moments carry sampling error; the tolerance widens to 5
  // standard errors of a unit-variance estimate.
  const double ktol = d <= 2 ? tol : std::max(tol, 5e-3);
  add("K.nonnegative", mk.min_value >= 0.0, mk.min_value);
  add("K.normalization", std::abs(mk.mass - 1.0) <= ktol, mk.mass, mk.note);
  add("K.first_moment", mk.first <= ktol, mk.first, mk.note);

  {
    std::vector<double> x(d, 0.0);
    double outside = 0.0;
    for (std::size_t c = 0; c < d; ++c)
      for (double t : { 1.0 + 1e-12, 1.5, 3.0 }) {
        std::fill(x.begin(), x.end(), 0.0);
        x[c] = t;
        outside = std::max(outside, std::abs(kt.K(x)));
        x[c] = -t;
        outside = std::max(outside, std::abs(kt.K(x)));
      }
    add("K.support", outside == 0.0, outside, "unit cube (sup-norm ball)");

    double jump = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      jump = std::max(jump, boundary_jump([&](double t) {
        std::fill(x.begin(), x.end(), 0.0);
        x[c] = t;
        return kt.K(x);
      }));
    }
    add("K.c1_boundary", jump <= smooth_tol, jump, "one-sided derivative jump across each face");
  }
  return report;
}

} // namespace gmf
