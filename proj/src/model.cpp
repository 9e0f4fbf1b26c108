#include "gmf/model.hpp"

#include "gmf/config.hpp"
#include "gmf/digest.hpp"

#include <Eigen/Dense>

#include <numbers>
#include <sstream>

namespace gmf {

using nlohmann::json;

double smooth_cutoff(double s)
{
  if (s <= 1.0)
    return 1.0;
  if (s >= 2.0)
    return 0.0;
  const double t = s - 1.0;
  return 1.0 - t * t * (3.0 - 2.0 * t);
}

double smooth_cutoff_derivative(double s)
{
  if (s <= 1.0 || s >= 2.0)
    return 0.0;
  const double t = s - 1.0;
  return -6.0 * t * (1.0 - t);
}

namespace {

void require_positive(double v, const char* what)
{
  if (!(v > 0.0) || !std::isfinite(v))
    throw DomainError(std::string(what) + " must be positive and finite");
}

// Bounds for radial fields f(z) = -k z psi(|z|): sup |f| = k max r psi(r) and
// the Jacobian has eigenvalues k psi(r) and k (psi(r) + r psi'(r)).
struct RadialBounds
{
  double sup = 0.0;
  double lip = 0.0;
};

template<class Psi, class DPsi>
RadialBounds radial_bounds(double k, double r_max, Psi psi, DPsi dpsi)
{
  constexpr int samples = 200000;
  RadialBounds b;
  for (int i = 0; i <= samples; ++i) {
    const double r = r_max * i / samples;
    const double p = psi(r);
    b.sup = std::max(b.sup, r * std::abs(p));
    b.lip = std::max({ b.lip, std::abs(p), std::abs(p + r * dpsi(r)) });
  }
  // sampling margin
  b.sup *= std::abs(k) * (1.0 + 1e-6);
  b.lip *= std::abs(k) * (1.0 + 1e-6);
  return b;
}

class ZeroField final : public VectorField
{
public:
  void eval(std::size_t, std::span<const double>, std::span<double> out) const override
  {
    std::fill(out.begin(), out.end(), 0.0);
  }
  double support_radius() const override { return 0.0; }
  double sup_norm(std::size_t) const override { return 0.0; }
  double lipschitz(std::size_t) const override { return 0.0; }
  bool is_zero() const override { return true; }
  bool is_odd() const override { return true; }
  json describe() const override { return { { "family", "zero" } }; }
};

class TruncatedLinear final : public VectorField
{
public:
  TruncatedLinear(double k, double radius)
    : k_(k)
    , radius_(radius)
  {
    require_positive(radius, "truncated_linear radius");
    bounds_ = radial_bounds(
      k, 2.0 * radius, [&](double r) { return smooth_cutoff(r / radius_); },
      [&](double r) { return smooth_cutoff_derivative(r / radius_) / radius_; });
  }

  void eval(std::size_t d, std::span<const double> z, std::span<double> out) const override
  {
    const std::size_t count = z.size() / d;
    for (std::size_t p = 0; p < count; ++p) {
      const double* zp = z.data() + p * d;
      double* op = out.data() + p * d;
      double r2 = 0.0;
      for (std::size_t c = 0; c < d; ++c)
        r2 += zp[c] * zp[c];
      const double s2 = r2 / (radius_ * radius_);
      const double chi = s2 <= 1.0 ? 1.0 : smooth_cutoff(std::sqrt(s2));
      for (std::size_t c = 0; c < d; ++c)
        op[c] = -k_ * zp[c] * chi;
    }
  }
  double support_radius() const override { return 2.0 * radius_; }
  double sup_norm(std::size_t) const override { return bounds_.sup; }
  double lipschitz(std::size_t) const override { return bounds_.lip; }
  bool is_zero() const override { return k_ == 0.0; }
  bool is_odd() const override { return true; }
  std::optional<double> linear_slope() const override { return k_; }
  double plateau_radius() const override { return radius_; }
  json describe() const override
  {
    return { { "family", "truncated_linear" }, { "strength", k_ }, { "radius", radius_ } };
  }

private:
  double k_;
  double radius_;
  RadialBounds bounds_;
};

class TruncatedTanh final : public VectorField
{
public:
  TruncatedTanh(double a, double radius)
    : a_(a)
    , radius_(radius)
  {
    require_positive(radius, "truncated_tanh radius");
  }

  void eval(std::size_t d, std::span<const double> z, std::span<double> out) const override
  {
    const std::size_t count = z.size() / d;
    for (std::size_t p = 0; p < count; ++p) {
      const double* zp = z.data() + p * d;
      double* op = out.data() + p * d;
      double r2 = 0.0;
      for (std::size_t c = 0; c < d; ++c)
        r2 += zp[c] * zp[c];
      const double chi = smooth_cutoff(std::sqrt(r2) / radius_);
      for (std::size_t c = 0; c < d; ++c)
        op[c] = -a_ * std::tanh(zp[c]) * chi;
    }
  }
  double support_radius() const override { return 2.0 * radius_; }
  double sup_norm(std::size_t d) const override
  {
    return std::abs(a_) * std::min(std::sqrt(static_cast<double>(d)), 2.0 * radius_);
  }
  double lipschitz(std::size_t d) const override
  {
    return std::abs(a_) * (1.0 + 1.5 * std::sqrt(static_cast<double>(d)) / radius_);
  }
  bool is_zero() const override { return a_ == 0.0; }
  bool is_odd() const override { return true; }
  json describe() const override
  {
    return { { "family", "truncated_tanh" }, { "strength", a_ }, { "radius", radius_ } };
  }

private:
  double a_;
  double radius_;
};

class GaussianForce final : public VectorField
{
public:
  GaussianForce(double k, double width, double radius)
    : k_(k)
    , width_(width)
    , radius_(radius)
  {
    require_positive(width, "gaussian_force width");
    require_positive(radius, "gaussian_force radius");
    const double w2 = width * width;
    bounds_ = radial_bounds(
      k, 2.0 * radius,
      [&](double r) { return std::exp(-r * r / (2.0 * w2)) * smooth_cutoff(r / radius_); },
      [&](double r) {
        const double e = std::exp(-r * r / (2.0 * w2));
        return e * (-r / w2) * smooth_cutoff(r / radius_) + e * smooth_cutoff_derivative(r / radius_) / radius_;
      });
  }

  void eval(std::size_t d, std::span<const double> z, std::span<double> out) const override
  {
    const std::size_t count = z.size() / d;
    const double inv2w2 = 1.0 / (2.0 * width_ * width_);
    const double inv_r2 = 1.0 / (radius_ * radius_);
    for (std::size_t p = 0; p < count; ++p) {
      const double* zp = z.data() + p * d;
      double* op = out.data() + p * d;
      double r2 = 0.0;
      for (std::size_t c = 0; c < d; ++c)
        r2 += zp[c] * zp[c];
      double w = std::exp(-r2 * inv2w2);
      if (r2 * inv_r2 > 1.0)
        w *= smooth_cutoff(std::sqrt(r2 * inv_r2));
      for (std::size_t c = 0; c < d; ++c)
        op[c] = -k_ * zp[c] * w;
    }
  }
  double support_radius() const override { return 2.0 * radius_; }
  double sup_norm(std::size_t) const override { return bounds_.sup; }
  double lipschitz(std::size_t) const override { return bounds_.lip; }
  bool is_zero() const override { return k_ == 0.0; }
  bool is_odd() const override { return true; }
  json describe() const override
  {
    return { { "family", "gaussian_force" }, { "strength", k_ }, { "width", width_ }, { "radius", radius_ } };
  }

private:
  double k_;
  double width_;
  double radius_;
  RadialBounds bounds_;
};

class FunctionField final : public VectorField
{
public:
  FunctionField(PointFunction f, double support, double sup, double lip, std::string label, bool odd)
    : f_(std::move(f))
    , support_(support)
    , sup_(sup)
    , lip_(lip)
    , label_(std::move(label))
    , odd_(odd)
  {
    if (!f_)
      throw DomainError("plug-in field needs a function");
  }

  void eval(std::size_t d, std::span<const double> z, std::span<double> out) const override
  {
    const std::size_t count = z.size() / d;
    for (std::size_t p = 0; p < count; ++p)
      f_(z.subspan(p * d, d), out.subspan(p * d, d));
  }
  double support_radius() const override { return support_; }
  double sup_norm(std::size_t) const override { return sup_; }
  double lipschitz(std::size_t) const override { return lip_; }
  bool is_odd() const override { return odd_; }
  json describe() const override { return { { "family", "plugin" }, { "label", label_ } }; }

private:
  PointFunction f_;
  double support_;
  double sup_;
  double lip_;
  std::string label_;
  bool odd_;
};

double normal_pdf(double x, double mean, double sd)
{
  const double z = (x - mean) / sd;
  return std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * std::numbers::pi));
}

} // namespace

FieldPtr make_zero_field()
{
  return std::make_shared<ZeroField>();
}

FieldPtr make_truncated_linear(double strength, double radius)
{
  return std::make_shared<TruncatedLinear>(strength, radius);
}

FieldPtr make_truncated_tanh(double strength, double radius)
{
  return std::make_shared<TruncatedTanh>(strength, radius);
}

FieldPtr make_gaussian_force(double strength, double width, double radius)
{
  return std::make_shared<GaussianForce>(strength, width, radius);
}

FieldPtr make_function_field(PointFunction f, double support_radius, double sup_norm, double lipschitz,
                             std::string label, bool odd)
{
  return std::make_shared<FunctionField>(std::move(f), support_radius, sup_norm, lipschitz, std::move(label), odd);
}

DriftSpec make_drift(FieldPtr F, FieldPtr V, std::size_t d)
{
  if (!F || !V)
    throw DomainError("drift needs both F and V");
  DriftSpec drift;
  drift.bound_b = F->sup_norm(d) + V->sup_norm(d);
  drift.lip_b = F->lipschitz(d) + V->lipschitz(d);
  drift.F = std::move(F);
  drift.V = std::move(V);
  return drift;
}

GraphonSpec make_constant_graphon(double g0)
{
  GraphonSpec g;
  g.g = [g0](double) { return g0; };
  g.g0 = g0;
  g.lip_g = 0.0;
  g.constant = g0;
  g.description = { { "family", "constant" }, { "g0", g0 } };
  return g;
}

GraphonSpec make_gaussian_bump_graphon(double g0, double length)
{
  require_positive(length, "gaussian_bump length");
  GraphonSpec g;
  g.g = [g0, length](double u) { return g0 * std::exp(-u * u / (2.0 * length * length)); };
  g.g0 = g0;
  g.lip_g = std::abs(g0) / (length * std::sqrt(std::numbers::e));
  g.description = { { "family", "gaussian_bump" }, { "g0", g0 }, { "length", length } };
  return g;
}

GraphonSpec make_periodic_graphon(double g0, double depth, int blocks)
{
  if (blocks < 1)
    throw DomainError("periodic graphon needs blocks >= 1");
  GraphonSpec g;
  g.g = [g0, depth, blocks](double u) {
    const double s = std::sin(std::numbers::pi * blocks * u);
    return g0 * (1.0 - depth * s * s);
  };
  g.g0 = g0;
  g.lip_g = std::abs(g0 * depth) * std::numbers::pi * blocks;
  g.description = { { "family", "periodic" }, { "g0", g0 }, { "depth", depth }, { "blocks", blocks } };
  return g;
}

DiffusionSpec make_scalar_diffusion(double s)
{
  DiffusionSpec diff;
  diff.sigma = [s](std::span<const double> x, std::span<double> out) {
    const std::size_t d = x.size();
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t c = 0; c < d; ++c)
      out[c * d + c] = s;
  };
  diff.sigma_minus = std::abs(s);
  diff.sigma_plus = std::abs(s);
  diff.scalar = s;
  diff.description = { { "family", "scalar" }, { "sigma", s } };
  return diff;
}

DiffusionSpec make_identity_diffusion()
{
  auto diff = make_scalar_diffusion(1.0);
  diff.description = { { "family", "identity" } };
  return diff;
}

InitialLawSpec make_gaussian_initial(double mean, double sd, double mean_slope)
{
  require_positive(sd, "initial sd");
  InitialLawSpec law;
  law.gaussian = [=](double u) { return GaussianMoments{ mean + mean_slope * u, sd }; };
  law.sampler = [=](double u, RandomStream& rng, std::span<double> out) {
    const double m = mean + mean_slope * u;
    for (double& x : out)
      x = m + sd * rng.normal();
  };
  law.density = [=](double u, std::span<const double> x) {
    const double m = mean + mean_slope * u;
    double p = 1.0;
    for (double xc : x)
      p *= normal_pdf(xc, m, sd);
    return p;
  };
  law.description = { { "family", "gaussian" }, { "mean", mean }, { "sd", sd }, { "mean_slope", mean_slope } };
  if (mean_slope == 0.0)
    law.rho_I = 0.0;
  return law;
}

InitialLawSpec make_block_gaussian_initial(std::vector<double> means, std::vector<double> sds)
{
  if (means.empty() || means.size() != sds.size())
    throw DomainError("block_gaussian needs equally many means and sds (at least one)");
  for (double s : sds)
    require_positive(s, "block_gaussian sd");
  const auto m = static_cast<double>(means.size());
  auto block = [m](double u) {
    const double j = std::ceil(u * m);
    return static_cast<std::size_t>(std::clamp(j, 1.0, m)) - 1;
  };
  InitialLawSpec law;
  law.gaussian = [=](double u) { return GaussianMoments{ means[block(u)], sds[block(u)] }; };
  law.sampler = [=](double u, RandomStream& rng, std::span<double> out) {
    const std::size_t j = block(u);
    for (double& x : out)
      x = means[j] + sds[j] * rng.normal();
  };
  law.density = [=](double u, std::span<const double> x) {
    const std::size_t j = block(u);
    double p = 1.0;
    for (double xc : x)
      p *= normal_pdf(xc, means[j], sds[j]);
    return p;
  };
  law.description = { { "family", "block_gaussian" }, { "means", means }, { "sds", sds } };
  return law;
}

InitialLawSpec make_point_initial(double value)
{
  InitialLawSpec law;
  law.sampler = [value](double, RandomStream&, std::span<double> out) { std::fill(out.begin(), out.end(), value); };
  law.point = value;
  law.rho_I = 0.0;
  law.description = { { "family", "point" }, { "value", value } };
  return law;
}

json SystemSpec::describe() const
{
  json j;
  j["d"] = d;
  j["T"] = T;
  j["drift"] = { { "F", drift.F ? drift.F->describe() : json() }, { "V", drift.V ? drift.V->describe() : json() } };
  j["graphon"] = graphon.description;
  j["diffusion"] = diffusion.description;
  j["initial"] = initial.description;
  return j;
}

std::string SystemSpec::digest() const
{
  return to_hex(sha256(describe().dump()));
}

void check_structure(const SystemSpec& spec)
{
  if (spec.d < 1)
    throw DomainError("state dimension d must be at least 1");
  if (!(spec.T > 0.0) || !std::isfinite(spec.T))
    throw DomainError("horizon T must be positive and finite");
  if (!spec.drift.F || !spec.drift.V)
    throw DomainError("drift is missing F or V");
  if (!spec.graphon.g)
    throw DomainError("graphon function is missing");
  if (!spec.diffusion.sigma)
    throw DomainError("diffusion coefficient is missing");
  if (!spec.initial.sampler)
    throw DomainError("initial law sampler is missing");
}

void eval_b(const DriftSpec& drift, std::span<const double> x, std::span<const double> y, std::span<double> out)
{
  if (x.size() != y.size() || out.size() != x.size())
    throw ShapeError("eval_b: x, y and out must have the same dimension");
  if (!all_finite(x) || !all_finite(y))
    throw DomainError("eval_b: non-finite input");
  const std::size_t d = x.size();
  std::vector<double> z(d), fv(d);
  for (std::size_t c = 0; c < d; ++c)
    z[c] = x[c] - y[c];
  drift.F->eval(d, z, out);
  drift.V->eval(d, x, fv);
  for (std::size_t c = 0; c < d; ++c)
    out[c] += fv[c];
}

std::vector<double> eval_b(const DriftSpec& drift, std::span<const double> x, std::span<const double> y)
{
  std::vector<double> out(x.size());
  eval_b(drift, x, y, out);
  return out;
}

bool ValidationReport::all_passed() const
{
  return std::all_of(entries.begin(), entries.end(), [](const auto& e) { return e.passed; });
}

const ValidationEntry& ValidationReport::at(const std::string& name) const
{
  for (const auto& e : entries)
    if (e.name == name)
      return e;
  throw std::out_of_range("no validation entry named " + name);
}

std::string ValidationReport::to_text() const
{
  std::ostringstream os;
  os.precision(6);
  for (const auto& e : entries) {
    os << (e.passed ? "PASS " : "FAIL ") << e.name << "  witness=" << e.witness;
    if (!e.detail.empty())
      os << "  (" << e.detail << ")";
    os << '\n';
  }
  return os.str();
}

namespace {

double max_radius(const SystemSpec& spec)
{
  return std::max({ 1.0, spec.drift.F->support_radius(), spec.drift.V->support_radius() });
}

void fill_uniform(RandomStream& rng, std::span<double> v, double half_width)
{
  for (double& x : v)
    x = half_width * (2.0 * rng.uniform() - 1.0);
}

// Simpson weights on [a, b] with an even number of panels.
std::vector<double> simpson_weights(std::size_t panels, double a, double b)
{
  std::vector<double> w(panels + 1);
  const double h = (b - a) / static_cast<double>(panels);
  for (std::size_t i = 0; i <= panels; ++i)
    w[i] = h / 3.0 * ((i == 0 || i == panels) ? 1.0 : (i % 2 ? 4.0 : 2.0));
  return w;
}

} // namespace

ValidationReport validate_spec(const SystemSpec& spec, std::size_t n_samples, double tol, std::uint64_t seed)
{
  ValidationReport report;
  auto add = [&](std::string name, bool ok, double witness, std::string detail = {}) {
    report.entries.push_back({ std::move(name), ok, witness, std::move(detail) });
  };

  add("structure.dimension", spec.d >= 1, static_cast<double>(spec.d));
  add("structure.horizon", spec.T > 0.0 && std::isfinite(spec.T), spec.T);
  if (spec.d < 1 || !spec.drift.F || !spec.drift.V || !spec.graphon.g || !spec.diffusion.sigma) {
    add("structure.complete", false, 0.0, "missing coefficient functions");
    return report;
  }

  const std::size_t d = spec.d;
  const std::size_t samples = std::max<std::size_t>(n_samples, 1);
  RandomStream rng(seed, StreamPurpose::validation, 0, 0);
  const double box = 1.25 * max_radius(spec);

  // Boundedness of b.
  {
    std::vector<double> x(d), y(d), z(d), fz(d), vx(d);
    double worst = 0.0;
    for (std::size_t s = 0; s < samples; ++s) {
      fill_uniform(rng, x, box);
      fill_uniform(rng, y, box);
      for (std::size_t c = 0; c < d; ++c)
        z[c] = x[c] - y[c];
      spec.drift.F->eval(d, z, fz);
      spec.drift.V->eval(d, x, vx);
      worst = std::max(worst, norm2(fz) + norm2(vx));
    }
    add("drift.bound", worst <= spec.drift.bound_b * (1.0 + tol), worst,
        "declared bound_b=" + std::to_string(spec.drift.bound_b));
  }

  // Lipschitz slope of b by small finite differences.
  {
    std::vector<double> x(d), y(d), x2(d), y2(d), b1(d), b2(d), diff(d), dx(d), dy(d);
    double worst = 0.0;
    const double step = 1e-4 * box;
    for (std::size_t s = 0; s < samples; ++s) {
      fill_uniform(rng, x, box);
      fill_uniform(rng, y, box);
      fill_uniform(rng, dx, step);
      fill_uniform(rng, dy, step);
      for (std::size_t c = 0; c < d; ++c) {
        x2[c] = x[c] + dx[c];
        y2[c] = y[c] + dy[c];
      }
      eval_b(spec.drift, x, y, b1);
      eval_b(spec.drift, x2, y2, b2);
      for (std::size_t c = 0; c < d; ++c)
        diff[c] = b1[c] - b2[c];
      const double denom = norm2(dx) + norm2(dy);
      if (denom > 0.0)
        worst = std::max(worst, norm2(diff) / denom);
    }
    add("drift.lipschitz", worst <= spec.drift.lip_b * (1.0 + tol) + tol, worst,
        "declared lip_b=" + std::to_string(spec.drift.lip_b));
  }

  // Compact support of F and V.
  {
    std::vector<double> z(d), out(d);
    double worst = 0.0;
    auto probe = [&](const VectorField& f) {
      const double radius = f.support_radius();
      for (std::size_t s = 0; s < samples; ++s) {
        fill_uniform(rng, z, 1.0);
        const double len = norm2(z);
        if (len == 0.0)
          continue;
        const double target = radius * (1.0 + 1e-9) + 1e-12 + rng.uniform() * (radius + 1.0);
        for (double& c : z)
          c *= target / len;
        f.eval(d, z, out);
        worst = std::max(worst, norm2(out));
      }
    };
    probe(*spec.drift.F);
    probe(*spec.drift.V);
    add("drift.support", worst <= tol, worst);
  }

  // Graphon range, g(0) and Lipschitz slope on [-1, 1].
  {
    double worst_violation = -1.0;
    double witness = -std::numeric_limits<double>::infinity();
    auto look = [&](double u) {
      const double v = spec.graphon.g(u);
      const double violation = std::max(v - 1.0, -v);
      if (!std::isfinite(v)) {
        worst_violation = std::numeric_limits<double>::infinity();
        witness = v;
      } else if (violation > 0.0 && violation > worst_violation) {
        worst_violation = violation;
        witness = v;
      } else if (worst_violation <= 0.0) {
        witness = std::max(witness, v);
      }
    };
    look(0.0);
    look(1.0);
    look(-1.0);
    for (std::size_t s = 0; s < samples; ++s)
      look(2.0 * rng.uniform() - 1.0);
    add("graphon.range", worst_violation <= 0.0, witness);

    const double g_at_0 = spec.graphon.g(0.0);
    add("graphon.g0", std::abs(g_at_0 - spec.graphon.g0) <= tol && spec.graphon.g0 > 0.0 && spec.graphon.g0 <= 1.0,
        g_at_0, "declared g0=" + std::to_string(spec.graphon.g0));

    double slope = 0.0;
    for (std::size_t s = 0; s < samples; ++s) {
      const double u = 2.0 * rng.uniform() - 1.0;
      const double h = 1e-4 * (2.0 * rng.uniform() - 1.0);
      if (h == 0.0)
        continue;
      slope = std::max(slope, std::abs(spec.graphon.g(u + h) - spec.graphon.g(u)) / std::abs(h));
    }
    add("graphon.lipschitz", slope <= spec.graphon.lip_g * (1.0 + tol) + tol, slope,
        "declared lip_g=" + std::to_string(spec.graphon.lip_g));
  }

  // Ellipticity of sigma sigma^T.
  {
    std::vector<double> x(d), sig(d * d);
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (std::size_t s = 0; s < samples; ++s) {
      fill_uniform(rng, x, box);
      spec.diffusion.sigma(x, sig);
      Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> m(
        sig.data(), static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
      const Eigen::MatrixXd a = m * m.transpose();
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::EigenvaluesOnly);
      lo = std::min(lo, es.eigenvalues().minCoeff());
      hi = std::max(hi, es.eigenvalues().maxCoeff());
    }
    const double sm2 = spec.diffusion.sigma_minus * spec.diffusion.sigma_minus;
    const double sp2 = spec.diffusion.sigma_plus * spec.diffusion.sigma_plus;
    add("diffusion.lower", spec.diffusion.sigma_minus > 0.0 && lo >= sm2 * (1.0 - tol) - tol, lo,
        "smallest eigenvalue of sigma sigma^T");
    add("diffusion.upper", hi <= sp2 * (1.0 + tol) + tol, hi, "largest eigenvalue of sigma sigma^T");
  }

  // Initial law: finite samples and normalized density.
  if (spec.initial.sampler) {
    std::vector<double> x(d);
    bool finite = true;
    double reach = 0.0;
    for (std::size_t s = 0; s < std::min<std::size_t>(samples, 1000); ++s) {
      const double u = rng.uniform();
      RandomStream law_rng(seed, StreamPurpose::validation, 1, static_cast<std::uint32_t>(s));
      spec.initial.sampler(u, law_rng, x);
      finite = finite && all_finite(x);
      if (finite)
        reach = std::max(reach, norm_inf(x));
    }
    add("initial.finite", finite, reach, "largest sampled coordinate");

    if (spec.initial.density && finite && d <= 2) {
      const double half = 2.0 * reach + 5.0;
      const std::size_t panels = d == 1 ? 8192 : 1024;
      const auto w = simpson_weights(panels, -half, half);
      const double h = 2.0 * half / static_cast<double>(panels);
      double worst = 0.0;
      for (double u : { 0.0, 0.25, 0.5, 0.75, 1.0 }) {
        CompensatedSum total;
        if (d == 1) {
          for (std::size_t i = 0; i <= panels; ++i) {
            const double xi = -half + h * static_cast<double>(i);
            total.add(w[i] * spec.initial.density(u, std::span(&xi, 1)));
          }
        } else {
          double pt[2];
          for (std::size_t i = 0; i <= panels; ++i)
            for (std::size_t j = 0; j <= panels; ++j) {
              pt[0] = -half + h * static_cast<double>(i);
              pt[1] = -half + h * static_cast<double>(j);
              total.add(w[i] * w[j] * spec.initial.density(u, pt));
            }
        }
        worst = std::max(worst, std::abs(total.value() - 1.0));
      }
      add("initial.normalization", worst <= std::max(tol, 1e-6), worst, "max |integral - 1| over sampled u");
    } else {
      add("initial.normalization", true, 0.0,
          spec.initial.density ? "skipped: quadrature check implemented for d <= 2" : "no density supplied");
    }
  }

  return report;
}

double field_l2_norm(const VectorField& field, std::size_t d)
{
  if (d > 2)
    throw DomainError("field_l2_norm supports d <= 2");
  if (field.is_zero())
    return 0.0;
  const double half = field.support_radius();
  const std::size_t panels = d == 1 ? 1 << 14 : 1 << 10;
  const auto w = simpson_weights(panels, -half, half);
  const double h = 2.0 * half / static_cast<double>(panels);
  CompensatedSum total;
  std::vector<double> z(d), out(d);
  if (d == 1) {
    for (std::size_t i = 0; i <= panels; ++i) {
      z[0] = -half + h * static_cast<double>(i);
      field.eval(1, z, out);
      total.add(w[i] * out[0] * out[0]);
    }
  } else {
    for (std::size_t i = 0; i <= panels; ++i)
      for (std::size_t j = 0; j <= panels; ++j) {
        z[0] = -half + h * static_cast<double>(i);
        z[1] = -half + h * static_cast<double>(j);
        field.eval(2, z, out);
        total.add(w[i] * w[j] * (out[0] * out[0] + out[1] * out[1]));
      }
  }
  return std::sqrt(total.value());
}

namespace {

FieldPtr field_from_json(const ConfigView& c)
{
  const auto family = c.string("family");
  if (family == "zero")
    return make_zero_field();
  if (family == "truncated_linear")
    return make_truncated_linear(c.number("strength"), c.number_or("radius", 10.0));
  if (family == "truncated_tanh")
    return make_truncated_tanh(c.number("strength"), c.number_or("radius", 10.0));
  if (family == "gaussian_force")
    return make_gaussian_force(c.number("strength"), c.number_or("width", 1.0), c.number_or("radius", 10.0));
  throw ConfigError("unknown field family '" + family + "' at '" + c.path() + "'");
}

GraphonSpec graphon_from_json(const ConfigView& c)
{
  const auto family = c.string("family");
  if (family == "constant")
    return make_constant_graphon(c.number("g0"));
  if (family == "gaussian_bump")
    return make_gaussian_bump_graphon(c.number("g0"), c.number("length"));
  if (family == "periodic")
    return make_periodic_graphon(c.number("g0"), c.number("depth"), static_cast<int>(c.integer("blocks")));
  throw ConfigError("unknown graphon family '" + family + "'");
}

DiffusionSpec diffusion_from_json(const ConfigView& c)
{
  const auto family = c.string("family");
  if (family == "identity")
    return make_identity_diffusion();
  if (family == "scalar")
    return make_scalar_diffusion(c.number("sigma"));
  throw ConfigError("unknown diffusion family '" + family + "'");
}

InitialLawSpec initial_from_json(const ConfigView& c)
{
  const auto family = c.string("family");
  if (family == "gaussian")
    return make_gaussian_initial(c.number("mean"), c.number("sd"), c.number_or("mean_slope", 0.0));
  if (family == "block_gaussian")
    return make_block_gaussian_initial(c.numbers("means"), c.numbers("sds"));
  if (family == "point")
    return make_point_initial(c.number("value"));
  throw ConfigError("unknown initial law family '" + family + "'");
}

} // namespace

SystemSpec spec_from_json(const json& cfg)
{
  const ConfigView root(cfg);
  SystemSpec spec;
  const auto d = root.integer("d");
  if (d < 1)
    throw ConfigError("config key 'd' must be at least 1");
  spec.d = static_cast<std::size_t>(d);
  spec.T = root.number("T");
  if (!(spec.T > 0.0))
    throw ConfigError("config key 'T' must be positive");
  const auto drift = root.child("drift");
  spec.drift = make_drift(field_from_json(drift.child("F")), field_from_json(drift.child("V")), spec.d);
  spec.graphon = graphon_from_json(root.child("graphon"));
  spec.diffusion = diffusion_from_json(root.child("diffusion"));
  spec.initial = initial_from_json(root.child("initial"));
  return spec;
}

} // namespace gmf
