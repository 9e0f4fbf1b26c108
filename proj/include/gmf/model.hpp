#pragma once

#include "gmf/common.hpp"
#include "gmf/rng.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace gmf {

//! C^1 cutoff profile: 1 on [0, 1], cubic smoothstep down to 0 on [1, 2],
//! 0 beyond. Applied as chi(|z| / R) with R the plateau radius.
double smooth_cutoff(double s);
double smooth_cutoff_derivative(double s);

//! A vector field R^d -> R^d evaluated in batches. Used for the interaction
//! force F and the external force V.
class VectorField
{
public:
  virtual ~VectorField() = default;

  //! points and out are count x d, row-major.
  virtual void eval(std::size_t d, std::span<const double> points, std::span<double> out) const = 0;

  //! The field vanishes for |z| > support_radius().
  virtual double support_radius() const = 0;
  //! Upper bounds on sup |f| and the Lipschitz constant in dimension d.
  virtual double sup_norm(std::size_t d) const = 0;
  virtual double lipschitz(std::size_t d) const = 0;

  virtual bool is_zero() const { return false; }
  //! f(-z) = -f(z) for all z.
  virtual bool is_odd() const { return false; }
  //! If the field equals -slope * z on |z| <= plateau_radius(), the slope.
  virtual std::optional<double> linear_slope() const { return std::nullopt; }
  virtual double plateau_radius() const { return 0.0; }

  //! Canonical parameter record, used for digests and manifests.
  virtual nlohmann::json describe() const = 0;

  void eval_one(std::span<const double> z, std::span<double> out) const
  {
    eval(z.size(), z, out);
  }
};

using FieldPtr = std::shared_ptr<const VectorField>;

FieldPtr make_zero_field();
//! f(z) = -strength * z * chi(|z| / radius)
FieldPtr make_truncated_linear(double strength, double radius);
//! f(z)_k = -strength * tanh(z_k) * chi(|z| / radius)
FieldPtr make_truncated_tanh(double strength, double radius);
//! f(z) = -strength * z * exp(-|z|^2 / (2 width^2)) * chi(|z| / radius)
FieldPtr make_gaussian_force(double strength, double width, double radius);

//! Plug-in field from a single-point function. Bounds are declared by the
//! caller and checked by validate_spec.
using PointFunction = std::function<void(std::span<const double> z, std::span<double> out)>;
FieldPtr make_function_field(PointFunction f,
                             double support_radius,
                             double sup_norm,
                             double lipschitz,
                             std::string label,
                             bool odd = false);

struct DriftSpec
{
  FieldPtr F;
  FieldPtr V;
  double bound_b = 0.0;
  double lip_b = 0.0;
};

//! Fills bound_b and lip_b from the field bounds.
DriftSpec make_drift(FieldPtr F, FieldPtr V, std::size_t d);

struct GraphonSpec
{
  std::function<double(double)> g;
  double g0 = 1.0;
  double lip_g = 0.0;
  //! g(-u) = g(u); enables pair-symmetric drift summation.
  bool even = true;
  //! Set when g is constant.
  std::optional<double> constant;
  nlohmann::json description;
};

GraphonSpec make_constant_graphon(double g0);
//! g(u) = g0 * exp(-u^2 / (2 length^2))
GraphonSpec make_gaussian_bump_graphon(double g0, double length);
//! g(u) = g0 * (1 - depth * sin^2(pi * blocks * u)); 1/blocks-periodic.
GraphonSpec make_periodic_graphon(double g0, double depth, int blocks);

struct DiffusionSpec
{
  //! sigma(x) written into a d x d row-major matrix.
  std::function<void(std::span<const double> x, std::span<double> out)> sigma;
  double sigma_minus = 1.0;
  double sigma_plus = 1.0;
  //! Set when sigma(x) = scalar * I for all x.
  std::optional<double> scalar;
  nlohmann::json description;
};

DiffusionSpec make_scalar_diffusion(double s);
DiffusionSpec make_identity_diffusion();

struct GaussianMoments
{
  double mean = 0.0;
  double sd = 1.0;
};

//! Initial law of the particle with index u. For built-in Gaussian families
//! every coordinate is independent N(mean(u), sd(u)^2).
struct InitialLawSpec
{
  std::function<void(double u, RandomStream& rng, std::span<double> out)> sampler;
  std::function<double(double u, std::span<const double> x)> density;
  std::function<GaussianMoments(double u)> gaussian;
  //! Set when every particle starts at the same point (value in each coordinate).
  std::optional<double> point;
  std::optional<double> rho_I;
  nlohmann::json description;
};

InitialLawSpec make_gaussian_initial(double mean, double sd, double mean_slope = 0.0);
//! Block j = ((j-1)/m, j/m] gets N(means[j], sds[j]^2).
InitialLawSpec make_block_gaussian_initial(std::vector<double> means, std::vector<double> sds);
InitialLawSpec make_point_initial(double value);

struct SystemSpec
{
  std::size_t d = 1;
  double T = 1.0;
  DriftSpec drift;
  GraphonSpec graphon;
  DiffusionSpec diffusion;
  InitialLawSpec initial;

  //! Canonical record of all parameters.
  nlohmann::json describe() const;
  //! SHA-256 of the canonical record, hex encoded.
  std::string digest() const;
};

//! Throws DomainError on structural problems (d = 0, T <= 0, missing parts).
void check_structure(const SystemSpec& spec);

//! b(x, y) = F(x - y) + V(x), written to out.
void eval_b(const DriftSpec& drift, std::span<const double> x, std::span<const double> y, std::span<double> out);
std::vector<double> eval_b(const DriftSpec& drift, std::span<const double> x, std::span<const double> y);

struct ValidationEntry
{
  std::string name;
  bool passed = true;
  double witness = 0.0;
  std::string detail;
};

struct ValidationReport
{
  std::vector<ValidationEntry> entries;

  bool all_passed() const;
  const ValidationEntry& at(const std::string& name) const;
  std::string to_text() const;
};

//! Sampling-based checks of the standing coefficient conditions. Never
//! throws for condition failures; they become report entries.
ValidationReport validate_spec(const SystemSpec& spec, std::size_t n_samples, double tol, std::uint64_t seed = 0);

//! Builds a spec from a configuration tree. See docs/config.md.
SystemSpec spec_from_json(const nlohmann::json& cfg);

//! Quadrature of |F|_2 over R^d (d <= 2).
double field_l2_norm(const VectorField& field, std::size_t d);

} // namespace gmf
