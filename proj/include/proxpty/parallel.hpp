#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace proxpty {

/// Process-wide execution settings.
///
/// PROXPTY_THREADS selects the worker count (unset or 0 -> all hardware
/// threads). PROXPTY_DETERMINISTIC=1 requests byte-reproducible artifacts.
/// All reductions in this library run in fixed index order regardless of the
/// worker count, so numerical results are bit-identical in both modes; the
/// deterministic flag additionally zeroes wall-clock fields in traces so that
/// serialized outputs compare byte-for-byte across runs.
struct RuntimeConfig {
  int threads = 0;  // 0 -> hardware_concurrency
  bool deterministic = false;

  static RuntimeConfig from_env() {
    RuntimeConfig cfg;
    if (const char* t = std::getenv("PROXPTY_THREADS")) {
      cfg.threads = std::atoi(t);
      if (cfg.threads < 0) cfg.threads = 0;
    }
    if (const char* d = std::getenv("PROXPTY_DETERMINISTIC")) {
      cfg.deterministic = (std::string(d) == "1");
    }
    return cfg;
  }

  int effective_threads() const {
    if (threads > 0) return threads;
    unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
  }
};

inline RuntimeConfig& runtime_config() {
  static RuntimeConfig cfg = RuntimeConfig::from_env();
  return cfg;
}

namespace detail {

class ThreadPool {
 public:
  explicit ThreadPool(int workers) {
    workers = workers < 1 ? 1 : workers;
    for (int i = 0; i < workers - 1; ++i) {
      threads_.emplace_back([this] { worker_loop(); });
    }
  }

  ThreadPool(const ThreadPool&) = delete;
  ThreadPool& operator=(const ThreadPool&) = delete;

  ~ThreadPool() {
    {
      std::lock_guard<std::mutex> lock(mutex_);
      stop_ = true;
    }
    cv_.notify_all();
    for (auto& t : threads_) t.join();
  }

  /// Runs fn(i) for i in [0, n), blocking until all calls complete. The
  /// calling thread participates. Nested calls from inside a task run
  /// serially on the caller. The first exception thrown by any task is
  /// rethrown on the caller once the job has drained.
  void run(std::size_t n, const std::function<void(std::size_t)>& fn) {
    if (n == 0) return;
    if (in_task_ || threads_.empty() || n == 1) {
      for (std::size_t i = 0; i < n; ++i) fn(i);
      return;
    }
    Job job;
    job.fn = &fn;
    job.n = n;
    {
      std::lock_guard<std::mutex> lock(mutex_);
      job_ = &job;
    }
    cv_.notify_all();
    job.active.fetch_add(1);
    work_on(job);
    {
      std::unique_lock<std::mutex> lock(job.done_mutex);
      job.done_cv.wait(lock, [&] { return job.active.load() == 0; });
    }
    {
      // Workers only attach to a job while holding mutex_ and only when
      // indices remain, so after this the stack object is unreachable.
      std::lock_guard<std::mutex> lock(mutex_);
      job_ = nullptr;
    }
    if (job.error) std::rethrow_exception(job.error);
  }

 private:
  struct Job {
    const std::function<void(std::size_t)>* fn = nullptr;
    std::size_t n = 0;
    std::atomic<std::size_t> next{0};
    std::atomic<int> active{0};
    std::mutex done_mutex;
    std::condition_variable done_cv;
    std::exception_ptr error;
    std::mutex error_mutex;
  };

  void work_on(Job& job) {
    in_task_ = true;
    for (;;) {
      std::size_t i = job.next.fetch_add(1);
      if (i >= job.n) break;
      try {
        (*job.fn)(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(job.error_mutex);
        if (!job.error) job.error = std::current_exception();
        job.next.store(job.n);  // abandon remaining indices
        break;
      }
    }
    in_task_ = false;
    if (job.active.fetch_sub(1) == 1) {
      std::lock_guard<std::mutex> lock(job.done_mutex);
      job.done_cv.notify_all();
    }
  }

  void worker_loop() {
    for (;;) {
      Job* job = nullptr;
      {
        std::unique_lock<std::mutex> lock(mutex_);
        cv_.wait(lock, [&] {
          return stop_ || (job_ != nullptr && job_->next.load() < job_->n);
        });
        if (stop_) return;
        job = job_;
        job->active.fetch_add(1);  // attach while mutex_ is held
      }
      work_on(*job);
    }
  }

  std::vector<std::thread> threads_;
  std::mutex mutex_;
  std::condition_variable cv_;
  Job* job_ = nullptr;
  bool stop_ = false;
  static thread_local bool in_task_;
};

inline thread_local bool ThreadPool::in_task_ = false;

inline ThreadPool& global_pool() {
  static ThreadPool pool(runtime_config().effective_threads());
  return pool;
}

}  // namespace detail

/// Executes fn(i) for i in [0, n) on the shared pool. Work items must be
/// independent; any reduction over their results is the caller's job and
/// must run in index order to keep results bit-reproducible.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  detail::global_pool().run(n, fn);
}

}  // namespace proxpty
