#include "phmoe/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace phmoe {

int worker_count() {
  int n = 0;
  if (const char* env = std::getenv("PHMOE_THREADS")) {
    try {
      n = std::stoi(env);
    } catch (...) {
      n = 0;
    }
  }
  if (n <= 0) n = static_cast<int>(std::thread::hardware_concurrency());
  return std::max(1, n);
}

void parallel_for(std::size_t n,
                  const std::function<void(std::size_t, std::size_t)>& body) {
  if (n == 0) return;
  constexpr std::size_t kChunk = 64;
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(worker_count()), chunks);
  if (workers <= 1) {
    body(0, n);
    return;
  }
  std::vector<std::exception_ptr> errors(chunks);
  std::atomic<std::size_t> next{0};
  auto run = [&] {
    for (std::size_t c = next++; c < chunks; c = next++) {
      const std::size_t begin = c * kChunk;
      try {
        body(begin, std::min(n, begin + kChunk));
      } catch (...) {
        errors[c] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t i = 1; i < workers; ++i) pool.emplace_back(run);
  run();
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace phmoe
