#pragma once

#include <condition_variable>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace gossipsim {

// Fixed-size pool for data-parallel loops over independent items. Work is
// split into static contiguous slices, so which thread runs an item never
// affects results. Exceptions thrown by items are rethrown in the caller,
// lowest item index first.
class ThreadPool {
 public:
  explicit ThreadPool(unsigned thread_count) : size_(thread_count == 0 ? 1 : thread_count) {
    for (unsigned slot = 1; slot < size_; ++slot) {
      threads_.emplace_back([this, slot] { worker_loop(slot); });
    }
  }

  ~ThreadPool() {
    {
      std::lock_guard<std::mutex> lock(mutex_);
      stop_ = true;
    }
    work_cv_.notify_all();
    for (auto& t : threads_) t.join();
  }

  ThreadPool(const ThreadPool&) = delete;
  ThreadPool& operator=(const ThreadPool&) = delete;

  unsigned size() const noexcept { return size_; }

  void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn) {
    if (count == 0) return;
    if (size_ == 1 || count == 1) {
      for (std::size_t i = 0; i < count; ++i) fn(i);
      return;
    }
    std::vector<std::exception_ptr> errors(count);
    {
      std::lock_guard<std::mutex> lock(mutex_);
      job_fn_ = &fn;
      job_count_ = count;
      job_errors_ = &errors;
      finished_ = 0;
      ++generation_;
    }
    work_cv_.notify_all();
    run_slice(0, count, fn, errors);
    {
      std::unique_lock<std::mutex> lock(mutex_);
      done_cv_.wait(lock, [this] { return finished_ == size_ - 1; });
      job_fn_ = nullptr;
    }
    for (std::size_t i = 0; i < count; ++i) {
      if (errors[i]) std::rethrow_exception(errors[i]);
    }
  }

 private:
  void run_slice(unsigned slot, std::size_t count, const std::function<void(std::size_t)>& fn,
                 std::vector<std::exception_ptr>& errors) {
    const std::size_t begin = count * slot / size_;
    const std::size_t end = count * (slot + 1) / size_;
    for (std::size_t i = begin; i < end; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  }

  void worker_loop(unsigned slot) {
    std::uint64_t seen = 0;
    for (;;) {
      const std::function<void(std::size_t)>* fn = nullptr;
      std::size_t count = 0;
      std::vector<std::exception_ptr>* errors = nullptr;
      {
        std::unique_lock<std::mutex> lock(mutex_);
        work_cv_.wait(lock, [&] { return stop_ || generation_ != seen; });
        if (stop_) return;
        seen = generation_;
        fn = job_fn_;
        count = job_count_;
        errors = job_errors_;
      }
      run_slice(slot, count, *fn, *errors);
      {
        std::lock_guard<std::mutex> lock(mutex_);
        ++finished_;
      }
      done_cv_.notify_one();
    }
  }

  const unsigned size_;
  std::vector<std::thread> threads_;
  std::mutex mutex_;
  std::condition_variable work_cv_;
  std::condition_variable done_cv_;
  const std::function<void(std::size_t)>* job_fn_ = nullptr;
  std::size_t job_count_ = 0;
  std::vector<std::exception_ptr>* job_errors_ = nullptr;
  std::uint64_t generation_ = 0;
  unsigned finished_ = 0;
  bool stop_ = false;
};

}  // namespace gossipsim
