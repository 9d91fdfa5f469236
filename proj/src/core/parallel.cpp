#include "deft/core/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace deft {

namespace {

int threads_from_env() {
  const char* v = std::getenv("DEFT_THREADS");
  if (v == nullptr) return 1;
  try {
    return std::max(1, std::stoi(v));
  } catch (...) {
    return 1;
  }
}

std::atomic<int>& thread_setting() {
  static std::atomic<int> n{threads_from_env()};
  return n;
}

}  // namespace

int num_threads() { return thread_setting().load(); }

void set_num_threads(int n) { thread_setting().store(std::max(1, n)); }

void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& fn) {
  auto workers = static_cast<std::int64_t>(std::min<std::int64_t>(num_threads(), n));
  if (workers <= 1) {
    for (std::int64_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(static_cast<std::size_t>(workers - 1));
  auto chunk = (n + workers - 1) / workers;
  for (std::int64_t w = 1; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::int64_t i = w * chunk; i < std::min(n, (w + 1) * chunk); ++i) fn(i);
    });
  }
  for (std::int64_t i = 0; i < std::min(n, chunk); ++i) fn(i);
}

}  // namespace deft
