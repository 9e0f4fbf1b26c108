#pragma once

#include "gmf/estimators.hpp"

#include <complex>
#include <string>

namespace gmf {

using cplx = std::complex<double>;

//! Mean-zero test function supported in [tau1, tau2] inside (0, T).
struct TestFunctionPhi
{
  double tau1 = 0.25;
  double tau2 = 0.75;
  double T = 1.0;
  //! "sine": sin(2 pi s); "smooth": sin(2 pi s) sin^2(pi s), s = (t - tau1)/(tau2 - tau1).
  std::string shape = "sine";
  double amplitude = 1.0;

  double operator()(double t) const;
  double sup_norm() const;
};

TestFunctionPhi make_phi(double tau1, double tau2, double T, const std::string& shape = "sine",
                         double amplitude = 1.0);

//! phi on the time nodes, shifted on its support so the trapezoid integral is
//! exactly zero on this grid.
std::vector<double> phi_on_nodes(const TestFunctionPhi& phi, std::span<const double> times);

//! Trapezoid weights for uniform nodes.
std::vector<double> trapezoid_weights(std::span<const double> nodes);

//! L_phi f = int f(t) phi(t) dt. values is times.size() x rest, row-major; returns rest.
std::vector<double> l_phi(std::span<const double> values, std::span<const double> times, const TestFunctionPhi& phi);

struct FrequencyGrid
{
  std::vector<double> ws;
  std::vector<double> xis;
  std::size_t d = 1;

  std::size_t xi_count() const;
  void xi_node(std::size_t q, std::span<double> out) const;
  void check() const;
};

//! Odd node counts so that 0 is a node. xi_extent defaults to pi / dx when <= 0.
FrequencyGrid make_frequency_grid(double r_tilde, std::size_t n_w, std::size_t n_xi, std::size_t d,
                                  double xi_extent);

//! values[(iw * Nxi + q) * components + comp]
struct ComplexField
{
  FrequencyGrid grid;
  std::size_t components = 1;
  std::vector<cplx> values;

  cplx at(std::size_t iw, std::size_t q, std::size_t comp = 0) const
  {
    return values[(iw * grid.xi_count() + q) * components + comp];
  }
  cplx& at(std::size_t iw, std::size_t q, std::size_t comp = 0)
  {
    return values[(iw * grid.xi_count() + q) * components + comp];
  }
};

//! int e^{-i w s} ell_b(s) ds for the hat functions ell_b of the uniform nodes,
//! i.e. the exact transform of the piecewise-linear interpolant.
std::vector<cplx> linear_fourier_weights(std::span<const double> nodes, double w);

//! F_I F_{R^d} of a field given on (u, x) nodes: u over [0, 1] by zero
//! extension, x over the grid box. values is Nu x Nx x components.
ComplexField transform_ux(std::span<const double> values, std::size_t components, std::span<const double> us,
                          std::span<const double> xs, std::size_t d, const FrequencyGrid& fgrid);

struct Transformed
{
  ComplexField mu;
  ComplexField beta;
};

//! T = F_I F_{R^d} L_phi applied to mu and (componentwise) beta.
Transformed t_transform(const GridFields& fields, const TestFunctionPhi& phi, const FrequencyGrid& fgrid);

//! (1/2pi) int_{|w| <= r_tilde} e^{i u w} field(w, xi) dw by trapezoid per xi
//! node; result[q * components + comp].
std::vector<cplx> inverse_f_i_at(const ComplexField& field, double u, double r_tilde);

void write_complex_field_csv(const ComplexField& field, const std::string& path);

} // namespace gmf
