#pragma once

#include "gmf/simulator.hpp"

namespace gmf::test {

inline SystemSpec make_system(FieldPtr F, FieldPtr V, GraphonSpec g, DiffusionSpec sigma, InitialLawSpec init,
                              std::size_t d = 1, double T = 1.0)
{
  SystemSpec s;
  s.d = d;
  s.T = T;
  s.drift = make_drift(std::move(F), std::move(V), d);
  s.graphon = std::move(g);
  s.diffusion = std::move(sigma);
  s.initial = std::move(init);
  return s;
}

//! Zero-interaction linear system dX = -a deg V dt + sigma dB.
inline SystemSpec ou_system(double a = 1.0, double sigma = 1.0, double sd0 = std::sqrt(0.5), double g0 = 1.0)
{
  return make_system(make_zero_field(), make_truncated_linear(a, 10.0), make_constant_graphon(g0),
                     make_scalar_diffusion(sigma), make_gaussian_initial(0.0, sd0));
}

inline double normal_density(double x, double m, double var)
{
  return std::exp(-0.5 * (x - m) * (x - m) / var) / std::sqrt(2.0 * 3.14159265358979323846 * var);
}

} // namespace gmf::test
