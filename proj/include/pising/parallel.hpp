#pragma once

#include <algorithm>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace pising {

/// Persistent workers that execute one phase at a time.  Items are assigned
/// statically (item % size == worker), so which worker runs an item never
/// depends on timing.  The calling thread acts as worker 0.
class WorkerPool {
 public:
  using Task = std::function<void(std::size_t item, int worker)>;

  explicit WorkerPool(int threads = 1) : size_(std::max(1, threads)) {
    for (int w = 1; w < size_; ++w) {
      workers_.emplace_back([this, w](std::stop_token st) { worker_loop(st, w); });
    }
  }

  ~WorkerPool() {
    {
      std::lock_guard lock(mutex_);
      for (auto& t : workers_) t.request_stop();
    }
    wake_.notify_all();
  }

  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  int size() const noexcept { return size_; }

  /// Runs task(item, worker) for every item in [0, count) and returns once
  /// all of them have finished.
  void run(std::size_t count, const Task& task) {
    if (size_ == 1 || count <= 1) {
      for (std::size_t i = 0; i < count; ++i) task(i, 0);
      return;
    }
    {
      std::lock_guard lock(mutex_);
      task_ = &task;
      count_ = count;
      pending_ = size_ - 1;
      ++generation_;
    }
    wake_.notify_all();
    for (std::size_t i = 0; i < count; i += static_cast<std::size_t>(size_)) task(i, 0);
    std::unique_lock lock(mutex_);
    done_.wait(lock, [this] { return pending_ == 0; });
    task_ = nullptr;
  }

 private:
  void worker_loop(std::stop_token st, int w) {
    std::uint64_t seen = 0;
    while (true) {
      const Task* task = nullptr;
      std::size_t count = 0;
      {
        std::unique_lock lock(mutex_);
        wake_.wait(lock, [&] { return st.stop_requested() || generation_ != seen; });
        if (st.stop_requested()) return;
        seen = generation_;
        task = task_;
        count = count_;
      }
      for (std::size_t i = static_cast<std::size_t>(w); i < count; i += static_cast<std::size_t>(size_)) {
        (*task)(i, w);
      }
      {
        std::lock_guard lock(mutex_);
        --pending_;
      }
      done_.notify_one();
    }
  }

  int size_;
  std::mutex mutex_;
  std::condition_variable wake_;
  std::condition_variable done_;
  const Task* task_ = nullptr;
  std::size_t count_ = 0;
  int pending_ = 0;
  std::uint64_t generation_ = 0;
  std::vector<std::jthread> workers_;
};

inline int resolve_thread_count(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace pising
