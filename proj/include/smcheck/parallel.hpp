#pragma once

#include <condition_variable>
#include <cstddef>
#include <exception>
#include <functional>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

#include "smcheck/simulator.hpp"

namespace smcheck {

/// Fixed-size pool of workers, each owning one simulator for its lifetime.
///
/// Simulators are created lazily inside their worker and rebuilt if they die.
/// Tasks write results into caller-owned slots indexed by task number, so the
/// outcome never depends on which worker ran what.
class WorkerPool {
public:
    using Task = std::function<void(std::size_t index, Simulator& sim)>;

    WorkerPool(SimulatorFactory factory, std::size_t workers);
    ~WorkerPool();

    WorkerPool(const WorkerPool&) = delete;
    WorkerPool& operator=(const WorkerPool&) = delete;

    std::size_t size() const noexcept { return sims_.size(); }

    /// Runs task(i, sim) for every i in [0, count). Blocks until all finish.
    /// If any task throws, the exception of the lowest failing index is
    /// rethrown after the batch completes; remaining indices are skipped.
    void run(std::size_t count, const Task& task);

private:
    void worker_loop(std::size_t w);
    void execute(std::size_t w);
    Simulator& simulator(std::size_t w);

    SimulatorFactory factory_;
    std::vector<std::unique_ptr<Simulator>> sims_;
    std::vector<std::thread> threads_;

    std::mutex mu_;
    std::condition_variable start_cv_;
    std::condition_variable done_cv_;
    std::uint64_t generation_ = 0;
    std::size_t busy_ = 0;
    bool stop_ = false;

    // Current batch.
    const Task* task_ = nullptr;
    std::size_t count_ = 0;
    std::size_t next_ = 0;
    std::size_t failed_index_ = 0;
    std::exception_ptr failure_;
};

/// Resolves the worker count: explicit value, else SMCHECK_WORKERS, else the
/// number of logical CPUs.
std::size_t resolve_workers(std::size_t requested);

}  // namespace smcheck
