#include "gmf/common.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <iostream>
#include <mutex>
#include <thread>

namespace gmf {

namespace {

std::mutex sink_mutex;
WarningSink& sink_ref()
{
  static WarningSink sink = [](const std::string& m) { std::cerr << "warning: " << m << '\n'; };
  return sink;
}

thread_local bool in_parallel_region = false;

} // namespace

void set_warning_sink(WarningSink sink)
{
  std::lock_guard lock(sink_mutex);
  sink_ref() = std::move(sink);
}

void warn(const std::string& message)
{
  std::lock_guard lock(sink_mutex);
  if (sink_ref())
    sink_ref()(message);
}

std::size_t thread_count()
{
  if (const char* env = std::getenv("GMF_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v >= 1)
      return static_cast<std::size_t>(v);
  }
  return 1;
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn)
{
  const std::size_t workers = std::min(thread_count(), count);
  if (workers <= 1 || in_parallel_region) {
    for (std::size_t i = 0; i < count; ++i)
      fn(i);
    return;
  }

  std::atomic<std::size_t> next{ 0 };
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&] {
    in_parallel_region = true;
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count)
        break;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error)
          error = std::current_exception();
        next = count;
      }
    }
    in_parallel_region = false;
  };

  std::vector<std::jthread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w)
    pool.emplace_back(body);
  body();
  pool.clear();
  if (error)
    std::rethrow_exception(error);
}

} // namespace gmf
