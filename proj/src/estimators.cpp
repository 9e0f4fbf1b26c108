#include "gmf/estimators.hpp"

#include <sstream>

namespace gmf {

void Cutoffs::check() const
{
  for (double v : { kappa0, kappa1, kappa2, r, r_tilde })
    if (!(v > 0.0) || !std::isfinite(v))
      throw DomainError("cutoffs kappa0, kappa1, kappa2, r, r_tilde must be positive and finite");
}

void advise_kappa0(const Cutoffs& cut, double g0, double f_l2)
{
  if (cut.kappa0 >= g0 * f_l2) {
    std::ostringstream os;
    os << "kappa0 = " << cut.kappa0 << " is not below g0 * |F|_2 = " << g0 * f_l2;
    warn(os.str());
  }
}

std::vector<double> uniform_nodes(double a, double b, std::size_t count)
{
  if (count == 0)
    throw DomainError("node count must be positive");
  if (count == 1)
    return { a };
  std::vector<double> v(count);
  for (std::size_t i = 0; i < count; ++i)
    v[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1);
  return v;
}

std::size_t EvalGrid::x_count() const
{
  std::size_t c = 1;
  for (std::size_t k = 0; k < d; ++k)
    c *= xs.size();
  return c;
}

void EvalGrid::x_node(std::size_t c, std::span<double> out) const
{
  for (std::size_t k = d; k-- > 0;) {
    out[k] = xs[c % xs.size()];
    c /= xs.size();
  }
}

void EvalGrid::check() const
{
  if (d < 1 || times.empty() || us.empty() || xs.empty())
    throw ShapeError("evaluation grid needs nonempty time, index and state axes");
  auto uniform = [](const std::vector<double>& v, const char* what) {
    if (!all_finite(v))
      throw DomainError(std::string(what) + " nodes must be finite");
    if (v.size() < 2)
      return;
    const double step = v[1] - v[0];
    if (!(step > 0.0))
      throw ShapeError(std::string(what) + " nodes must be increasing");
    for (std::size_t i = 1; i < v.size(); ++i)
      if (std::abs((v[i] - v[i - 1]) - step) > 1e-9 * std::max(1.0, std::abs(step)))
        throw ShapeError(std::string(what) + " nodes must be uniform");
  };
  uniform(times, "time");
  uniform(us, "index");
  uniform(xs, "state");
}

namespace {

void check_point(const TrajectorySet& traj, const Bandwidths& h, double u0, std::span<const double> x0)
{
  h.check();
  if (x0.size() != traj.d)
    throw ShapeError("evaluation point has dimension " + std::to_string(x0.size()) + ", trajectory has " +
                     std::to_string(traj.d));
  if (!std::isfinite(u0) || !all_finite(x0))
    throw DomainError("evaluation point must be finite");
  if (traj.n == 0 || traj.positions.size() != (traj.grid.steps + 1) * traj.n * traj.d)
    throw ShapeError("trajectory array is inconsistent with its header");
}

// Zero-based particles i with |u0 - (i+1)/n| <= h2.
std::pair<std::size_t, std::size_t> index_window(std::size_t n, double u0, double h2)
{
  const double nn = static_cast<double>(n);
  const double lo = std::ceil((u0 - h2) * nn) - 1.0;
  const double hi = std::floor((u0 + h2) * nn) - 1.0;
  const auto first = static_cast<std::size_t>(std::clamp(lo, 0.0, nn));
  const auto last = static_cast<std::size_t>(std::clamp(hi + 1.0, 0.0, nn));
  return { first, std::max(first, last) };
}

double jk_weight(const TrajectorySet& traj, const KernelTriple& kt, const Bandwidths& h, std::size_t k,
                 std::size_t i, double u0, std::span<const double> x0, std::span<double> diff)
{
  const double j = dilate_J(kt, h.h2, u0 - traj.index(i));
  if (j == 0.0)
    return 0.0;
  const double* xi = traj.particle(k, i);
  for (std::size_t c = 0; c < traj.d; ++c)
    diff[c] = x0[c] - xi[c];
  return j * dilate_K(kt, h.h3, diff);
}

void check_pi_time(const TrajectorySet& traj, const Bandwidths& h, double t0)
{
  const double T = traj.grid.T;
  const double slack = 1e-12 * T;
  if (!std::isfinite(t0) || t0 < h.h1 - slack || t0 > T - h.h1 + slack) {
    std::ostringstream os;
    os << "time " << t0 << " is outside [h1, T - h1] = [" << h.h1 << ", " << T - h.h1
       << "]; the time kernel would leave [0, T]";
    throw DomainError(os.str());
  }
  if (h.h1 < 10.0 * traj.grid.dt()) {
    std::ostringstream os;
    os << "h1 = " << h.h1 << " is below 10 dt = " << 10.0 * traj.grid.dt() << "; the Ito sum is coarse";
    warn(os.str());
  }
}

} // namespace

double mu_hat(const TrajectorySet& traj, const KernelTriple& kt, const Bandwidths& h, double t0, double u0,
              std::span<const double> x0)
{
  check_point(traj, h, u0, x0);
  const std::size_t k = traj.grid.snap(t0);
  const auto [first, last] = index_window(traj.n, u0, h.h2);
  std::vector<double> diff(traj.d);
  CompensatedSum acc;
  for (std::size_t i = first; i < last; ++i)
    acc.add(jk_weight(traj, kt, h, k, i, u0, x0, diff));
  return acc.value() / static_cast<double>(traj.n);
}

std::vector<double> pi_hat(const TrajectorySet& traj, const KernelTriple& kt, const Bandwidths& h, double t0,
                           double u0, std::span<const double> x0)
{
  check_point(traj, h, u0, x0);
  check_pi_time(traj, h, t0);
  const std::size_t d = traj.d;
  const auto [first, last] = index_window(traj.n, u0, h.h2);
  std::vector<double> diff(d);
  std::vector<CompensatedSum> acc(d);
  for (std::size_t k = 0; k < traj.grid.steps; ++k) {
    const double hk = dilate_H(kt, h.h1, t0 - traj.grid.t(k));
    if (hk == 0.0)
      continue;
    for (std::size_t i = first; i < last; ++i) {
      const double w = jk_weight(traj, kt, h, k, i, u0, x0, diff);
      if (w == 0.0)
        continue;
      const double* a = traj.particle(k, i);
      const double* b = traj.particle(k + 1, i);
      for (std::size_t c = 0; c < d; ++c)
        acc[c].add(hk * w * (b[c] - a[c]));
    }
  }
  std::vector<double> out(d);
  for (std::size_t c = 0; c < d; ++c)
    out[c] = acc[c].value() / static_cast<double>(traj.n);
  return out;
}

std::vector<double> beta_hat(const TrajectorySet& traj, const KernelTriple& kt, const Bandwidths& h, double t0,
                             double u0, std::span<const double> x0, double kappa2)
{
  if (!(kappa2 > 0.0))
    throw DomainError("kappa2 must be positive");
  auto p = pi_hat(traj, kt, h, t0, u0, x0);
  const double denom = std::max(mu_hat(traj, kt, h, t0, u0, x0), kappa2);
  for (double& v : p)
    v /= denom;
  return p;
}

namespace {

// Kernel-weighted sums over particles at one time step, on the (u, x) nodes:
// out[(b * Nx + c) * width + comp] = (1/n) sum_i J K * weight_i[comp],
// with weight 1 (width 1) for mu or the increment X(t_{k+1}) - X(t_k) for pi.
class StepScatter
{
public:
  StepScatter(const TrajectorySet& traj, const KernelTriple& kt, const Bandwidths& h, const EvalGrid& grid)
    : traj_(traj)
    , kt_(kt)
    , h_(h)
    , grid_(grid)
    , nx_(grid.x_count())
    , dx_(grid.xs.size() > 1 ? grid.xs[1] - grid.xs[0] : 0.0)
  {
  }

  void run(std::size_t k, bool increments, std::span<double> out) const
  {
    const std::size_t width = increments ? traj_.d : 1;
    const std::size_t nu = grid_.us.size();
    std::fill(out.begin(), out.end(), 0.0);
    parallel_for(nu, [&](std::size_t b) { row(k, increments, width, b, out.subspan(b * nx_ * width, nx_ * width)); });
  }

private:
  // Range of axis nodes within h3 of y, and their 1-D kernel factors.
  void axis_factors(double y, std::size_t& lo, std::size_t& hi, std::vector<double>& f) const
  {
    const auto& xs = grid_.xs;
    const double h3 = h_.h3;
    if (xs.size() == 1) {
      lo = 0;
      hi = std::abs(xs[0] - y) <= h3 ? 1 : 0;
    } else {
      const double a = std::ceil((y - h3 - xs[0]) / dx_);
      const double b = std::floor((y + h3 - xs[0]) / dx_);
      const double top = static_cast<double>(xs.size());
      lo = static_cast<std::size_t>(std::clamp(a, 0.0, top));
      hi = static_cast<std::size_t>(std::clamp(b + 1.0, 0.0, top));
      hi = std::max(hi, lo);
    }
    f.resize(hi - lo);
    for (std::size_t c = lo; c < hi; ++c)
      f[c - lo] = kt_.k_factor((xs[c] - y) / h3) / h3;
  }

  void row(std::size_t k, bool increments, std::size_t width, std::size_t b, std::span<double> out) const
  {
    const std::size_t d = traj_.d;
    const double u = grid_.us[b];
    const double inv_n = 1.0 / static_cast<double>(traj_.n);
    const auto [first, last] = index_window(traj_.n, u, h_.h2);
    std::vector<std::size_t> lo(d), hi(d), idx(d);
    std::vector<std::vector<double>> f(d);
    std::vector<double> weight(width, 1.0), point(d), diff(d);

    for (std::size_t i = first; i < last; ++i) {
      const double j = dilate_J(kt_, h_.h2, u - traj_.index(i));
      if (j == 0.0)
        continue;
      const double* xi = traj_.particle(k, i);
      if (increments) {
        const double* xn = traj_.particle(k + 1, i);
        for (std::size_t c = 0; c < d; ++c)
          weight[c] = xn[c] - xi[c];
      }
      const double scale = j * inv_n;

      if (kt_.K_override) {
        for (std::size_t c = 0; c < nx_; ++c) {
          grid_.x_node(c, point);
          for (std::size_t a = 0; a < d; ++a)
            diff[a] = point[a] - xi[a];
          const double kv = dilate_K(kt_, h_.h3, diff);
          if (kv != 0.0)
            for (std::size_t w = 0; w < width; ++w)
              out[c * width + w] += scale * kv * weight[w];
        }
        continue;
      }

      bool empty = false;
      for (std::size_t a = 0; a < d; ++a) {
        axis_factors(xi[a], lo[a], hi[a], f[a]);
        empty = empty || lo[a] == hi[a];
      }
      if (empty)
        continue;
      // odometer over the product of per-axis ranges
      idx = lo;
      for (;;) {
        double kv = scale;
        std::size_t flat = 0;
        for (std::size_t a = 0; a < d; ++a) {
          kv *= f[a][idx[a] - lo[a]];
          flat = flat * grid_.xs.size() + idx[a];
        }
        for (std::size_t w = 0; w < width; ++w)
          out[flat * width + w] += kv * weight[w];
        bool done = true;
        for (std::size_t a = d; a-- > 0;) {
          if (++idx[a] < hi[a]) {
            done = false;
            break;
          }
          idx[a] = lo[a];
        }
        if (done)
          break;
      }
    }
  }

  const TrajectorySet& traj_;
  const KernelTriple& kt_;
  const Bandwidths& h_;
  const EvalGrid& grid_;
  std::size_t nx_;
  double dx_;
};

} // namespace

GridFields fields_on_grid(const TrajectorySet& traj, const KernelTriple& kt, const Bandwidths& h,
                          const EvalGrid& grid, const Cutoffs& cut)
{
  h.check();
  cut.check();
  grid.check();
  if (grid.d != traj.d)
    throw ShapeError("evaluation grid dimension differs from the trajectory dimension");
  for (double t : grid.times)
    check_pi_time(traj, h, t);

  const std::size_t d = traj.d;
  const std::size_t na = grid.times.size();
  const std::size_t nu = grid.us.size();
  const std::size_t nx = grid.x_count();
  const std::size_t plane = nu * nx;

  GridFields out;
  out.grid = grid;
  out.mu.assign(na * plane, 0.0);
  out.pi.assign(na * plane * d, 0.0);
  out.beta.assign(na * plane * d, 0.0);

  StepScatter scatter(traj, kt, h, grid);
  std::vector<double> buf(plane * d);

  for (std::size_t a = 0; a < na; ++a) {
    scatter.run(traj.grid.snap(grid.times[a]), false, std::span(buf.data(), plane));
    std::copy_n(buf.begin(), plane, out.mu.begin() + static_cast<std::ptrdiff_t>(a * plane));
  }

  // Steps in increasing order; each step's sums are added to every time node
  // whose H window covers it.
  for (std::size_t k = 0; k < traj.grid.steps; ++k) {
    const double tk = traj.grid.t(k);
    std::vector<std::pair<std::size_t, double>> hits;
    for (std::size_t a = 0; a < na; ++a) {
      const double hv = dilate_H(kt, h.h1, grid.times[a] - tk);
      if (hv != 0.0)
        hits.emplace_back(a, hv);
    }
    if (hits.empty())
      continue;
    scatter.run(k, true, buf);
    for (const auto& [a, hv] : hits) {
      double* dst = out.pi.data() + a * plane * d;
      for (std::size_t q = 0; q < plane * d; ++q)
        dst[q] += hv * buf[q];
    }
  }

  std::vector<double> point(d);
  for (std::size_t c = 0; c < nx; ++c) {
    grid.x_node(c, point);
    const bool inside = norm_inf(point) <= cut.r;
    for (std::size_t a = 0; a < na; ++a)
      for (std::size_t b = 0; b < nu; ++b) {
        const std::size_t q = out.node(a, b, c);
        if (!inside) {
          out.mu[q] = 0.0;
          for (std::size_t comp = 0; comp < d; ++comp)
            out.pi[q * d + comp] = 0.0;
          continue;
        }
        const double denom = std::max(out.mu[q], cut.kappa2);
        for (std::size_t comp = 0; comp < d; ++comp)
          out.beta[q * d + comp] = out.pi[q * d + comp] / denom;
      }
  }
  return out;
}

} // namespace gmf
