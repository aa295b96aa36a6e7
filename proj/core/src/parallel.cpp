#include "cortex/parallel.hpp"

#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <thread>
#include <vector>

namespace cortex {
namespace {

thread_local bool tls_in_worker = false;

int env_worker_count() {
  unsigned hw = std::thread::hardware_concurrency();
  int n = hw == 0 ? 1 : static_cast<int>(hw);
  if (const char* env = std::getenv("CORTEX_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && v > 0 && v < 1024) n = static_cast<int>(std::min<long>(n, v));
  }
  return n;
}

int g_override = 0;

// Persistent pool. Workers pick chunk indices off a shared atomic counter;
// the submitting thread participates, so a pool of size N uses N-1 threads.
class Pool {
 public:
  explicit Pool(int threads) : threads_(threads) {
    for (int i = 0; i < threads_ - 1; ++i) {
      workers_.emplace_back([this] { worker_loop(); });
    }
  }

  ~Pool() {
    {
      std::lock_guard<std::mutex> lk(mu_);
      stop_ = true;
    }
    cv_.notify_all();
    for (auto& t : workers_) t.join();
  }

  int size() const { return threads_; }

  void run(std::int64_t n, std::int64_t chunk,
           const std::function<void(std::int64_t, std::int64_t)>& fn) {
    {
      std::lock_guard<std::mutex> lk(mu_);
      job_fn_ = &fn;
      job_n_ = n;
      job_chunk_ = chunk;
      next_.store(0, std::memory_order_relaxed);
      pending_ = threads_ - 1;
      ++generation_;
    }
    cv_.notify_all();
    drain(fn, n, chunk);
    std::unique_lock<std::mutex> lk(mu_);
    done_cv_.wait(lk, [this] { return pending_ == 0; });
    job_fn_ = nullptr;
  }

 private:
  void drain(const std::function<void(std::int64_t, std::int64_t)>& fn,
             std::int64_t n, std::int64_t chunk) {
    for (;;) {
      std::int64_t begin = next_.fetch_add(chunk, std::memory_order_relaxed);
      if (begin >= n) break;
      fn(begin, std::min(begin + chunk, n));
    }
  }

  void worker_loop() {
    tls_in_worker = true;
    std::uint64_t seen = 0;
    for (;;) {
      const std::function<void(std::int64_t, std::int64_t)>* fn = nullptr;
      std::int64_t n = 0, chunk = 0;
      {
        std::unique_lock<std::mutex> lk(mu_);
        cv_.wait(lk, [&] { return stop_ || generation_ != seen; });
        if (stop_) return;
        seen = generation_;
        fn = job_fn_;
        n = job_n_;
        chunk = job_chunk_;
      }
      if (fn) drain(*fn, n, chunk);
      {
        std::lock_guard<std::mutex> lk(mu_);
        if (--pending_ == 0) done_cv_.notify_all();
      }
    }
  }

  int threads_;
  std::vector<std::thread> workers_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::condition_variable done_cv_;
  bool stop_ = false;
  std::uint64_t generation_ = 0;
  int pending_ = 0;
  const std::function<void(std::int64_t, std::int64_t)>* job_fn_ = nullptr;
  std::int64_t job_n_ = 0;
  std::int64_t job_chunk_ = 1;
  std::atomic<std::int64_t> next_{0};
};

std::mutex g_pool_mu;
Pool* g_pool = nullptr;

Pool& pool() {
  std::lock_guard<std::mutex> lk(g_pool_mu);
  int want = g_override > 0 ? g_override : env_worker_count();
  if (g_pool && g_pool->size() != want) {
    delete g_pool;
    g_pool = nullptr;
  }
  if (!g_pool) g_pool = new Pool(want);
  return *g_pool;
}

}  // namespace

int worker_count() {
  return g_override > 0 ? g_override : env_worker_count();
}

void set_worker_count(int n) {
  std::lock_guard<std::mutex> lk(g_pool_mu);
  g_override = n > 0 ? n : 0;
  if (g_pool) {
    delete g_pool;
    g_pool = nullptr;
  }
}

void parallel_for(std::int64_t n,
                  const std::function<void(std::int64_t, std::int64_t)>& fn) {
  if (n <= 0) return;
  const int workers = worker_count();
  if (workers <= 1 || tls_in_worker || n == 1) {
    fn(0, n);
    return;
  }
  // Aim for a few chunks per worker so uneven work still balances.
  std::int64_t chunk = n / (static_cast<std::int64_t>(workers) * 4);
  if (chunk < 1) chunk = 1;
  pool().run(n, chunk, fn);
}

}  // namespace cortex
