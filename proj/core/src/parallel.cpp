#include "etacurv/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <limits>
#include <thread>
#include <vector>

namespace etacurv {

namespace {

std::atomic<int> g_threads{1};

}  // namespace

void set_thread_count(int threads) {
  if (threads <= 0) {
    threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  }
  g_threads.store(threads);
}

int thread_count() { return g_threads.load(); }

void parallel_for(int count, const std::function<void(int)>& body) {
  const int workers = std::min(thread_count(), count);
  if (workers <= 1) {
    for (int i = 0; i < count; ++i) {
      body(i);
    }
    return;
  }

  std::vector<int> failed_at(static_cast<std::size_t>(workers), std::numeric_limits<int>::max());
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      const int begin = static_cast<int>(static_cast<long long>(count) * w / workers);
      const int end = static_cast<int>(static_cast<long long>(count) * (w + 1) / workers);
      pool.emplace_back([&, w, begin, end] {
        for (int i = begin; i < end; ++i) {
          try {
            body(i);
          } catch (...) {
            failed_at[static_cast<std::size_t>(w)] = i;
            errors[static_cast<std::size_t>(w)] = std::current_exception();
            return;
          }
        }
      });
    }
  }
  const auto first = std::min_element(failed_at.begin(), failed_at.end());
  if (*first != std::numeric_limits<int>::max()) {
    std::rethrow_exception(errors[static_cast<std::size_t>(first - failed_at.begin())]);
  }
}

}  // namespace etacurv
