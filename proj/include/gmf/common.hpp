#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace gmf {

// Error categories. The CLI maps UserError subclasses to exit code 1 and
// anything else to exit code 2.
class UserError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

//! Non-finite or out-of-range numeric input.
class DomainError : public UserError
{
public:
  using UserError::UserError;
};

//! Array or grid shapes that do not line up.
class ShapeError : public UserError
{
public:
  using UserError::UserError;
};

//! Malformed or inconsistent configuration.
class ConfigError : public UserError
{
public:
  using UserError::UserError;
};

//! Corrupted or truncated persisted data.
class CorruptionError : public UserError
{
public:
  using UserError::UserError;
};

//! The SDE integration produced a non-finite state.
class IntegrationError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

class IoError : public UserError
{
public:
  using UserError::UserError;
};

inline bool all_finite(std::span<const double> v)
{
  for (double x : v)
    if (!std::isfinite(x))
      return false;
  return true;
}

inline double norm2(std::span<const double> v)
{
  double s = 0.0;
  for (double x : v)
    s += x * x;
  return std::sqrt(s);
}

inline double norm_inf(std::span<const double> v)
{
  double s = 0.0;
  for (double x : v)
    s = std::max(s, std::abs(x));
  return s;
}

//! Neumaier compensated accumulator.
class CompensatedSum
{
public:
  void add(double x)
  {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// Warnings go through a replaceable sink so tests can capture them.
using WarningSink = std::function<void(const std::string&)>;
void set_warning_sink(WarningSink sink);
void warn(const std::string& message);

//! Worker count from GMF_THREADS (default 1).
std::size_t thread_count();

//! Runs fn(i) for i in [0, count). Each index must write only its own
//! outputs; the result is then independent of scheduling. Nested calls run
//! serially on the calling thread.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

} // namespace gmf
