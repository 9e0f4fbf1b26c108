#pragma once

#include "gmf/fourier.hpp"

namespace gmf {

//! T_beta / T_mu on nodes with |T_mu| > kappa1 and |w| <= r_tilde, 0 elsewhere.
struct RatioField
{
  ComplexField values;
  //! mask[iw * Nxi + q]
  std::vector<std::uint8_t> mask;
  double r_tilde = 0.0;
  //! Share of nodes with |w| <= r_tilde dropped by the kappa1 threshold.
  double masked_fraction = 0.0;
};

RatioField ratio_field(const ComplexField& t_mu, const ComplexField& t_beta, double kappa1, double r_tilde);

//! L^2 norm over xi (measure dxi / (2 pi)^d, components summed) of the
//! truncated inverse index transform at u.
double a_hat(const RatioField& ratio, double u);

//! int_lo^hi e^{-i w u} g(u) du on the given w nodes, for forward-constructed fields.
std::vector<cplx> index_transform(const std::function<double(double)>& g, double lo, double hi,
                                  std::span<const double> ws, std::size_t nodes = 4001);

//! The full estimator parameter tuple plus discretization.
struct Theta
{
  KernelTriple kernels;
  Bandwidths h;
  Cutoffs cut;
  TestFunctionPhi phi;
  EvalGrid grid;
  FrequencyGrid fgrid;
  double g0 = 1.0;
};

struct ThetaOptions
{
  std::size_t n_times = 41;
  std::size_t n_u = 41;
  std::size_t n_x = 61;
  std::size_t n_w = 201;
  std::size_t n_xi = 63;
  double phi_amplitude = 1.0;
  std::string phi_shape = "sine";
};

//! h1 = h2 = h3 = n^{-1/5}, kappa1 = n^{-1/10}, r = 3, r_tilde = 50,
//! kappa0 = 0.25 g0 |F|_2, kappa2 = 1e-3; phi on [T/4, 3T/4] pulled inside
//! [h1, T - h1]; x nodes on [-r, r]^d, xi extent pi / dx.
Theta default_theta(std::size_t n, double T, std::size_t d, double g0, double f_l2, const ThetaOptions& opt = {});

//! Rebuilds grid and fgrid from the current h, cut and phi.
void rebuild_grids(Theta& theta, double T, std::size_t d, const ThetaOptions& opt);

struct GHatResult
{
  double g_hat = 0.0;
  double a_num = 0.0;
  double a_den = 0.0;
  double masked_fraction = 0.0;
};

//! Runs the pipeline once and evaluates many (u0, v0) pairs.
class GraphonEstimator
{
public:
  GraphonEstimator(const TrajectorySet& traj, const Theta& theta);

  GHatResult eval(double u0, double v0) const;
  double a_hat_at(double u) const { return a_hat(ratio_, u); }

  const GridFields& fields() const { return fields_; }
  const Transformed& transformed() const { return transformed_; }
  const RatioField& ratio() const { return ratio_; }
  const Theta& theta() const { return theta_; }

private:
  Theta theta_;
  GridFields fields_;
  Transformed transformed_;
  RatioField ratio_;
  double a0_ = 0.0;
};

//! g0 * A(u0 - v0) / max(A(0), kappa0) with A from a_hat.
GHatResult g_hat_from_ratio(const RatioField& ratio, double u0, double v0, double g0, double kappa0);
double g_hat(const TrajectorySet& traj, double u0, double v0, const Theta& theta);

} // namespace gmf
