#pragma once

#include <atomic>
#include <condition_variable>
#include <mutex>
#include <thread>
#include <vector>

namespace marlob::util {

// Fixed worker pool with a function-pointer dispatch so per-call scheduling
// never allocates. Work items are partitioned into contiguous chunks by
// worker index; callers write results to per-item slots, which keeps
// outcomes independent of the worker count.
class ThreadPool {
 public:
  explicit ThreadPool(int workers) : workers_(workers < 1 ? 1 : workers) {
    for (int w = 1; w < workers_; ++w)
      threads_.emplace_back([this, w] { worker_loop(w); });
  }

  ThreadPool(const ThreadPool&) = delete;
  ThreadPool& operator=(const ThreadPool&) = delete;

  ~ThreadPool() {
    {
      std::lock_guard<std::mutex> lock(mutex_);
      stop_ = true;
      ++epoch_;
    }
    cv_.notify_all();
    for (auto& t : threads_) t.join();
  }

  int size() const { return workers_; }

  // Runs fn(ctx, item) for every item in [0, n_items); blocks until done.
  void run(void (*fn)(void*, int), void* ctx, int n_items) {
    if (n_items <= 0) return;
    if (workers_ == 1) {
      for (int i = 0; i < n_items; ++i) fn(ctx, i);
      return;
    }
    {
      std::lock_guard<std::mutex> lock(mutex_);
      fn_ = fn;
      ctx_ = ctx;
      n_items_ = n_items;
      pending_ = workers_ - 1;
      ++epoch_;
    }
    cv_.notify_all();
    run_chunk(0);
    std::unique_lock<std::mutex> lock(mutex_);
    done_cv_.wait(lock, [this] { return pending_ == 0; });
  }

 private:
  void run_chunk(int worker) {
    const int chunk = (n_items_ + workers_ - 1) / workers_;
    const int begin = worker * chunk;
    const int end = begin + chunk < n_items_ ? begin + chunk : n_items_;
    for (int i = begin; i < end; ++i) fn_(ctx_, i);
  }

  void worker_loop(int worker) {
    std::uint64_t seen = 0;
    while (true) {
      {
        std::unique_lock<std::mutex> lock(mutex_);
        cv_.wait(lock, [this, &seen] { return stop_ || epoch_ != seen; });
        if (stop_) return;
        seen = epoch_;
      }
      run_chunk(worker);
      {
        std::lock_guard<std::mutex> lock(mutex_);
        if (--pending_ == 0) done_cv_.notify_one();
      }
    }
  }

  int workers_;
  std::vector<std::thread> threads_;
  std::mutex mutex_;
  std::condition_variable cv_;
  std::condition_variable done_cv_;
  std::uint64_t epoch_ = 0;
  int pending_ = 0;
  bool stop_ = false;
  void (*fn_)(void*, int) = nullptr;
  void* ctx_ = nullptr;
  int n_items_ = 0;
};

}  // namespace marlob::util
