#pragma once

#include "gmf/model.hpp"

#include <string>

namespace gmf {

//! Scalar kernel profile on [-1, 1].
struct Kernel1D
{
  std::function<double(double)> f;
  std::string name;

  double operator()(double t) const { return f(t); }
};

Kernel1D biweight();
Kernel1D triweight();
Kernel1D epanechnikov();
//! Looks up "biweight", "triweight" or "epanechnikov"; ConfigError otherwise.
Kernel1D kernel_by_name(const std::string& name);

//! H on time, J on index, K on state. K is the tensor product of k_factor
//! over the d coordinates, supported in the unit cube (the unit ball of the
//! sup-norm).
struct KernelTriple
{
  Kernel1D H = biweight();
  Kernel1D J = biweight();
  Kernel1D k_factor = biweight();
  //! Optional full K replacing the tensor product (plug-in kernels).
  std::function<double(std::span<const double>)> K_override;

  double K(std::span<const double> x) const;
};

struct Bandwidths
{
  double h1 = 0.1;
  double h2 = 0.1;
  double h3 = 0.1;

  void check() const;
};

double dilate(const Kernel1D& k, double h, double t);
double dilate_H(const KernelTriple& kt, double h1, double t);
double dilate_J(const KernelTriple& kt, double h2, double u);
double dilate_K(const KernelTriple& kt, double h3, std::span<const double> x);

double product_JK(const KernelTriple& kt, const Bandwidths& h, double u, std::span<const double> x);
double product_HJK(const KernelTriple& kt, const Bandwidths& h, double t, double u, std::span<const double> x);

//! Checks nonnegativity, normalization, first moments, support and a
//! one-sided finite-difference C^1 probe at the support boundary for H, J
//! and K in dimension d. Simpson with 2^14 panels per axis for d <= 2, Monte
//! Carlo with 10^6 samples for d >= 3.
ValidationReport validate_kernels(const KernelTriple& kt, std::size_t d, double tol);

} // namespace gmf
