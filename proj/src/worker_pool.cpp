#include "hbp/worker_pool.hpp"

#include <algorithm>
#include <stdexcept>

namespace hbp {

WorkerPool::WorkerPool(std::size_t workers) {
  if (workers == 0) throw std::invalid_argument("WorkerPool: need at least one worker");
  threads_.reserve(workers - 1);
  for (std::size_t id = 1; id < workers; ++id) threads_.emplace_back([this, id] { worker_loop(id); });
}

WorkerPool::~WorkerPool() {
  {
    std::lock_guard lock(mutex_);
    stopping_ = true;
  }
  wake_.notify_all();
  for (auto& t : threads_) t.join();
}

std::size_t WorkerPool::hardware_workers() { return std::max(1u, std::thread::hardware_concurrency()); }

void WorkerPool::run(const std::function<void(std::size_t)>& task) {
  {
    std::lock_guard lock(mutex_);
    task_ = &task;
    pending_ = threads_.size();
    error_ = nullptr;
    ++generation_;
  }
  wake_.notify_all();

  std::exception_ptr local;
  try {
    task(0);
  } catch (...) {
    local = std::current_exception();
  }

  std::unique_lock lock(mutex_);
  done_.wait(lock, [this] { return pending_ == 0; });
  task_ = nullptr;
  if (local) std::rethrow_exception(local);
  if (error_) std::rethrow_exception(error_);
}

void WorkerPool::worker_loop(std::size_t id) {
  std::size_t seen = 0;
  for (;;) {
    const std::function<void(std::size_t)>* task = nullptr;
    {
      std::unique_lock lock(mutex_);
      wake_.wait(lock, [&] { return stopping_ || generation_ != seen; });
      if (stopping_) return;
      seen = generation_;
      task = task_;
    }
    std::exception_ptr failure;
    try {
      (*task)(id);
    } catch (...) {
      failure = std::current_exception();
    }
    {
      std::lock_guard lock(mutex_);
      if (failure && !error_) error_ = failure;
      if (--pending_ == 0) done_.notify_one();
    }
  }
}

void parallel_for(WorkerPool& pool, std::size_t n, const std::function<void(std::size_t, std::size_t)>& body) {
  const std::size_t workers = pool.size();
  if (workers == 1 || n < 2) {
    if (n > 0) body(0, n);
    return;
  }
  pool.run([&](std::size_t id) {
    const std::size_t begin = n * id / workers;
    const std::size_t end = n * (id + 1) / workers;
    if (begin < end) body(begin, end);
  });
}

}  // namespace hbp
