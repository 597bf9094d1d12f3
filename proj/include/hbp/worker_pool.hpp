#pragma once

#include <condition_variable>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace hbp {

// Fixed set of workers that all execute the same task, fork-join style.
// Worker 0 is the thread calling run(); workers 1..size()-1 are owned
// threads parked between runs. A pool of size 1 spawns no threads.
class WorkerPool {
 public:
  explicit WorkerPool(std::size_t workers);
  ~WorkerPool();

  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  std::size_t size() const { return threads_.size() + 1; }

  // Calls task(worker_id) once per worker and blocks until every call has
  // returned. The first exception thrown by any worker is rethrown here.
  void run(const std::function<void(std::size_t)>& task);

  static std::size_t hardware_workers();

 private:
  void worker_loop(std::size_t id);

  std::vector<std::thread> threads_;
  std::mutex mutex_;
  std::condition_variable wake_;
  std::condition_variable done_;
  const std::function<void(std::size_t)>* task_ = nullptr;
  std::size_t generation_ = 0;
  std::size_t pending_ = 0;
  bool stopping_ = false;
  std::exception_ptr error_;
};

// Splits [0, n) into size() contiguous chunks and runs body(begin, end)
// on each worker.
void parallel_for(WorkerPool& pool, std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace hbp
