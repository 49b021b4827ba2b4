#include "smcheck/parallel.hpp"

#include <cstdlib>
#include <limits>
#include <string>

namespace smcheck {

WorkerPool::WorkerPool(SimulatorFactory factory, std::size_t workers) : factory_(std::move(factory))
{
    if (workers == 0) {
        throw ConfigError("worker count must be at least 1");
    }
    sims_.resize(workers);
    // The calling thread acts as worker 0.
    for (std::size_t w = 1; w < workers; ++w) {
        threads_.emplace_back([this, w] { worker_loop(w); });
    }
}

WorkerPool::~WorkerPool()
{
    {
        std::lock_guard lock(mu_);
        stop_ = true;
    }
    start_cv_.notify_all();
    for (auto& t : threads_) {
        t.join();
    }
}

Simulator& WorkerPool::simulator(std::size_t w)
{
    auto& sim = sims_[w];
    if (!sim || !sim->alive()) {
        sim.reset();
        sim = factory_();
    }
    return *sim;
}

void WorkerPool::execute(std::size_t w)
{
    for (;;) {
        std::size_t i = 0;
        {
            std::lock_guard lock(mu_);
            if (next_ >= count_) {
                return;
            }
            i = next_++;
        }
        try {
            (*task_)(i, simulator(w));
        } catch (...) {
            std::lock_guard lock(mu_);
            if (!failure_ || i < failed_index_) {
                failure_ = std::current_exception();
                failed_index_ = i;
            }
            next_ = count_;
        }
    }
}

void WorkerPool::worker_loop(std::size_t w)
{
    std::uint64_t seen = 0;
    for (;;) {
        {
            std::unique_lock lock(mu_);
            start_cv_.wait(lock, [&] { return stop_ || generation_ != seen; });
            if (stop_) {
                return;
            }
            seen = generation_;
        }
        execute(w);
        {
            std::lock_guard lock(mu_);
            --busy_;
        }
        done_cv_.notify_all();
    }
}

void WorkerPool::run(std::size_t count, const Task& task)
{
    if (count == 0) {
        return;
    }
    {
        std::lock_guard lock(mu_);
        task_ = &task;
        count_ = count;
        next_ = 0;
        failure_ = nullptr;
        failed_index_ = std::numeric_limits<std::size_t>::max();
        busy_ = threads_.size();
        ++generation_;
    }
    start_cv_.notify_all();
    execute(0);
    std::exception_ptr failure;
    {
        std::unique_lock lock(mu_);
        done_cv_.wait(lock, [&] { return busy_ == 0; });
        failure = failure_;
        task_ = nullptr;
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

std::size_t resolve_workers(std::size_t requested)
{
    if (requested > 0) {
        return requested;
    }
    if (const char* env = std::getenv("SMCHECK_WORKERS"); env != nullptr && *env != '\0') {
        char* end = nullptr;
        const unsigned long v = std::strtoul(env, &end, 10);
        if (end == nullptr || *end != '\0' || v == 0 || v > 4096) {
            throw ConfigError(std::string("SMCHECK_WORKERS must be a positive integer, got '") + env + "'");
        }
        return v;
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : hc;
}

}  // namespace smcheck
