#include "gmf/simulator.hpp"

#include "gmf/digest.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace gmf {

TimeGrid::TimeGrid(double horizon, std::size_t m)
  : T(horizon)
  , steps(m)
{
  if (!(horizon > 0.0) || !std::isfinite(horizon))
    throw DomainError("time grid horizon must be positive and finite");
  if (m < 1)
    throw DomainError("time grid needs at least one step");
}

std::size_t TimeGrid::snap(double t) const
{
  if (!std::isfinite(t) || t < 0.0 || t > T)
    throw DomainError("time " + std::to_string(t) + " lies outside [0, T]");
  const double k = std::round(t / dt());
  return std::min(static_cast<std::size_t>(k), steps);
}

namespace {

// g((i - j)/n) for offsets i - j in [-(n-1), n-1], stored at (i - j) + n - 1.
std::vector<double> graphon_table(const GraphonSpec& g, std::size_t n)
{
  std::vector<double> table(2 * n - 1);
  const double nn = static_cast<double>(n);
  for (std::size_t o = 0; o < table.size(); ++o)
    table[o] = g.g((static_cast<double>(o) - (nn - 1.0)) / nn);
  return table;
}

// degree_i = (1/n) sum_j g((i - j)/n)
std::vector<double> degrees(std::span<const double> table, std::size_t n)
{
  std::vector<double> deg(n);
  for (std::size_t i = 0; i < n; ++i) {
    CompensatedSum acc;
    for (std::size_t j = 0; j < n; ++j)
      acc.add(table[i + n - 1 - j]);
    deg[i] = acc.value() / static_cast<double>(n);
  }
  return deg;
}

void add_external(const SystemSpec& spec, std::span<const double> x, std::span<const double> deg,
                  std::span<double> out)
{
  const std::size_t d = spec.d;
  const std::size_t n = x.size() / d;
  if (spec.drift.V->is_zero())
    return;
  std::vector<double> vx(n * d);
  spec.drift.V->eval(d, x, vx);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < d; ++c)
      out[i * d + c] += deg[i] * vx[i * d + c];
}

void interaction_reference(const SystemSpec& spec, std::span<const double> x, std::span<const double> table,
                           std::span<double> out)
{
  const std::size_t d = spec.d;
  const std::size_t n = x.size() / d;
  parallel_for(n, [&](std::size_t i) {
    std::vector<double> z(n * d), f(n * d);
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t c = 0; c < d; ++c)
        z[j * d + c] = x[i * d + c] - x[j * d + c];
    spec.drift.F->eval(d, z, f);
    for (std::size_t c = 0; c < d; ++c) {
      CompensatedSum acc;
      for (std::size_t j = 0; j < n; ++j)
        acc.add(table[i + n - 1 - j] * f[j * d + c]);
      out[i * d + c] += acc.value() / static_cast<double>(n);
    }
  });
}

// F(x_i - x_j) = -F(x_j - x_i) and g((i-j)/n) = g((j-i)/n): each pair once.
void interaction_pairs(const SystemSpec& spec, std::span<const double> x, std::span<const double> table,
                       std::span<double> out)
{
  const std::size_t d = spec.d;
  const std::size_t n = x.size() / d;
  std::vector<double> acc(n * d, 0.0);
  std::vector<double> z, f;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const std::size_t m = n - i - 1;
    z.resize(m * d);
    f.resize(m * d);
    for (std::size_t j = i + 1; j < n; ++j)
      for (std::size_t c = 0; c < d; ++c)
        z[(j - i - 1) * d + c] = x[i * d + c] - x[j * d + c];
    spec.drift.F->eval(d, z, f);
    for (std::size_t j = i + 1; j < n; ++j) {
      const double w = table[j - i + n - 1];
      if (w == 0.0)
        continue;
      for (std::size_t c = 0; c < d; ++c) {
        const double v = w * f[(j - i - 1) * d + c];
        acc[i * d + c] += v;
        acc[j * d + c] -= v;
      }
    }
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t k = 0; k < n * d; ++k)
    out[k] += acc[k] * inv_n;
}

// F(z) = -k z on the plateau. When every pairwise distance is inside it,
// row i is -k (deg_i x_i - (1/n) sum_j g_ij x_j).
bool interaction_linear(const SystemSpec& spec, std::span<const double> x, std::span<const double> table,
                        std::span<double> out)
{
  const auto slope = spec.drift.F->linear_slope();
  if (!slope)
    return false;
  const std::size_t d = spec.d;
  const std::size_t n = x.size() / d;
  double spread2 = 0.0;
  for (std::size_t c = 0; c < d; ++c) {
    double lo = x[c], hi = x[c];
    for (std::size_t i = 1; i < n; ++i) {
      lo = std::min(lo, x[i * d + c]);
      hi = std::max(hi, x[i * d + c]);
    }
    spread2 += (hi - lo) * (hi - lo);
  }
  if (std::sqrt(spread2) > spec.drift.F->plateau_radius())
    return false;

  const double k = *slope;
  const double inv_n = 1.0 / static_cast<double>(n);
  if (spec.graphon.constant) {
    const double g0 = *spec.graphon.constant;
    std::vector<CompensatedSum> total(d);
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t c = 0; c < d; ++c)
        total[c].add(x[j * d + c]);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t c = 0; c < d; ++c)
        out[i * d + c] += -k * g0 * (x[i * d + c] - total[c].value() * inv_n);
    return true;
  }
  parallel_for(n, [&](std::size_t i) {
    for (std::size_t c = 0; c < d; ++c) {
      CompensatedSum acc;
      for (std::size_t j = 0; j < n; ++j)
        acc.add(table[i + n - 1 - j] * (x[i * d + c] - x[j * d + c]));
      out[i * d + c] += -k * acc.value() * inv_n;
    }
  });
  return true;
}

void drift_into(const SystemSpec& spec, std::span<const double> x, std::span<const double> table,
                std::span<const double> deg, DriftPath path, std::span<double> out)
{
  std::fill(out.begin(), out.end(), 0.0);
  if (!spec.drift.F->is_zero()) {
    const bool symmetric = spec.drift.F->is_odd() && spec.graphon.even;
    if (path == DriftPath::reference)
      interaction_reference(spec, x, table, out);
    else if (!interaction_linear(spec, x, table, out)) {
      if (symmetric)
        interaction_pairs(spec, x, table, out);
      else if (path == DriftPath::automatic)
        interaction_reference(spec, x, table, out);
      else
        throw DomainError("accelerated drift path needs an odd F and an even g");
    }
  }
  add_external(spec, x, deg, out);
}

} // namespace

std::vector<double> drift_field(const SystemSpec& spec, std::span<const double> positions, DriftPath path)
{
  check_structure(spec);
  if (positions.size() % spec.d != 0 || positions.empty())
    throw ShapeError("drift_field: positions must be a non-empty n x d array");
  if (!all_finite(positions))
    throw DomainError("drift_field: non-finite position");
  const std::size_t n = positions.size() / spec.d;
  const auto table = graphon_table(spec.graphon, n);
  const auto deg = degrees(table, n);
  std::vector<double> out(positions.size());
  drift_into(spec, positions, table, deg, path, out);
  return out;
}

TrajectorySet simulate(const SystemSpec& spec, std::size_t n, const TimeGrid& grid, std::uint64_t seed,
                       const SimulateOptions& options)
{
  check_structure(spec);
  if (n < 1)
    throw DomainError("simulate needs at least one particle");
  if (grid.steps < 1 || !(grid.T > 0.0))
    throw DomainError("simulate needs a grid with at least one step");
  if (options.key_stride < 1)
    throw DomainError("key_stride must be at least 1");

  const std::size_t d = spec.d;
  TrajectorySet traj;
  traj.n = n;
  traj.d = d;
  traj.grid = grid;
  traj.seed = seed;
  traj.spec_digest = spec.digest();
  traj.positions.assign((grid.steps + 1) * n * d, 0.0);

  auto key = [&](std::size_t i) { return static_cast<std::uint32_t>((i + 1) * options.key_stride); };

  {
    auto x0 = traj.at(0);
    parallel_for(n, [&](std::size_t i) {
      RandomStream rng(seed, StreamPurpose::initial_law, key(i), 0);
      spec.initial.sampler(traj.index(i), rng, x0.subspan(i * d, d));
    });
    if (!all_finite(x0))
      throw IntegrationError("initial law produced a non-finite state");
  }

  const auto table = graphon_table(spec.graphon, n);
  const auto deg = degrees(table, n);
  const double dt = grid.dt();
  const double sqrt_dt = std::sqrt(dt);
  std::vector<double> drift(n * d);

  for (std::size_t k = 0; k < grid.steps; ++k) {
    const auto x = traj.at(k);
    auto next = traj.at(k + 1);
    drift_into(spec, x, table, deg, options.path, drift);
    parallel_for(n, [&](std::size_t i) {
      RandomStream rng(seed, StreamPurpose::brownian, key(i), static_cast<std::uint32_t>(k));
      double db[16];
      std::vector<double> db_heap;
      double* dbp = db;
      if (d > 16) {
        db_heap.resize(d);
        dbp = db_heap.data();
      }
      for (std::size_t c = 0; c < d; ++c)
        dbp[c] = sqrt_dt * rng.normal();
      const double* xi = x.data() + i * d;
      double* yi = next.data() + i * d;
      if (spec.diffusion.scalar) {
        const double s = *spec.diffusion.scalar;
        for (std::size_t c = 0; c < d; ++c)
          yi[c] = xi[c] + drift[i * d + c] * dt + s * dbp[c];
      } else {
        std::vector<double> sig(d * d);
        spec.diffusion.sigma(std::span(xi, d), sig);
        for (std::size_t r = 0; r < d; ++r) {
          double noise = 0.0;
          for (std::size_t c = 0; c < d; ++c)
            noise += sig[r * d + c] * dbp[c];
          yi[r] = xi[r] + drift[i * d + r] * dt + noise;
        }
      }
    });
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t c = 0; c < d; ++c)
        if (!std::isfinite(next[i * d + c])) {
          std::ostringstream os;
          os << "non-finite state at step " << k + 1 << " for particle " << i + 1;
          throw IntegrationError(os.str());
        }
  }
  return traj;
}

namespace {

constexpr char kMagic[5] = { 'G', 'M', 'F', 'T', '1' };
constexpr std::size_t kHeaderBytes = sizeof(kMagic) + 6 * 8;

static_assert(std::endian::native == std::endian::little, "trajectory files assume a little-endian host");

template<class T>
void put(std::vector<std::uint8_t>& buf, T v)
{
  std::uint8_t raw[sizeof(T)];
  std::memcpy(raw, &v, sizeof(T));
  buf.insert(buf.end(), raw, raw + sizeof(T));
}

template<class T>
T get(const std::uint8_t* p)
{
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;
}

} // namespace

void save_trajectories(const TrajectorySet& traj, const std::string& path)
{
  if (traj.positions.size() != (traj.grid.steps + 1) * traj.n * traj.d)
    throw ShapeError("trajectory positions do not match (M+1) x n x d");
  std::vector<std::uint8_t> buf;
  buf.reserve(kHeaderBytes + traj.positions.size() * 8 + 32);
  buf.insert(buf.end(), kMagic, kMagic + sizeof(kMagic));
  put<std::int64_t>(buf, static_cast<std::int64_t>(traj.n));
  put<std::int64_t>(buf, static_cast<std::int64_t>(traj.d));
  put<std::int64_t>(buf, static_cast<std::int64_t>(traj.grid.steps));
  put<double>(buf, traj.grid.T);
  put<double>(buf, traj.grid.dt());
  put<std::int64_t>(buf, static_cast<std::int64_t>(traj.seed));
  const auto* raw = reinterpret_cast<const std::uint8_t*>(traj.positions.data());
  buf.insert(buf.end(), raw, raw + traj.positions.size() * sizeof(double));
  const auto digest = sha256(std::span<const std::uint8_t>(buf));
  buf.insert(buf.end(), digest.begin(), digest.end());

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw IoError("cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out)
    throw IoError("failed writing '" + path + "'");
}

TrajectorySet load_trajectories(const std::string& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot open '" + path + "'");
  std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (buf.size() < kHeaderBytes + 32 || std::memcmp(buf.data(), kMagic, sizeof(kMagic)) != 0)
    throw CorruptionError("'" + path + "' is not a trajectory file or is truncated");
  const std::uint8_t* p = buf.data() + sizeof(kMagic);
  const auto n = get<std::int64_t>(p);
  const auto d = get<std::int64_t>(p + 8);
  const auto m = get<std::int64_t>(p + 16);
  const auto T = get<double>(p + 24);
  const auto dt = get<double>(p + 32);
  const auto seed = get<std::int64_t>(p + 40);
  if (n < 1 || d < 1 || m < 1 || !(T > 0.0) || !std::isfinite(T))
    throw CorruptionError("'" + path + "' has an invalid header");
  const auto count = static_cast<std::size_t>(m + 1) * static_cast<std::size_t>(n) * static_cast<std::size_t>(d);
  if (count > (buf.size() - kHeaderBytes) / 8 || buf.size() != kHeaderBytes + count * 8 + 32)
    throw CorruptionError("'" + path + "' is truncated or has trailing bytes");

  const std::size_t body = kHeaderBytes + count * 8;
  const auto digest = sha256(std::span<const std::uint8_t>(buf.data(), body));
  if (std::memcmp(digest.data(), buf.data() + body, 32) != 0)
    throw CorruptionError("'" + path + "' failed its content digest check");

  TrajectorySet traj;
  traj.n = static_cast<std::size_t>(n);
  traj.d = static_cast<std::size_t>(d);
  traj.grid = TimeGrid(T, static_cast<std::size_t>(m));
  if (traj.grid.dt() != dt)
    throw CorruptionError("'" + path + "' stores a dt inconsistent with T and M");
  traj.seed = static_cast<std::uint64_t>(seed);
  traj.positions.resize(count);
  std::memcpy(traj.positions.data(), buf.data() + kHeaderBytes, count * 8);
  return traj;
}

} // namespace gmf
