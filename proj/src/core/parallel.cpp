#include "neckfol/core/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>
#include <vector>

namespace neckfol {

namespace {
std::atomic<int> g_workers{1};
}

void set_workers(int w) { g_workers = std::max(1, w); }

int workers() { return g_workers; }

void parallel_for(std::size_t count, const std::function<void(std::size_t, std::size_t)>& body) {
  const std::size_t w = std::min<std::size_t>(static_cast<std::size_t>(g_workers.load()), count);
  if (w <= 1) {
    if (count > 0) body(0, count);
    return;
  }
  std::vector<std::exception_ptr> errors(w);
  std::vector<std::thread> pool;
  pool.reserve(w);
  for (std::size_t k = 0; k < w; ++k) {
    const std::size_t b = count * k / w;
    const std::size_t e = count * (k + 1) / w;
    pool.emplace_back([&, k, b, e] {
      try {
        body(b, e);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace neckfol
