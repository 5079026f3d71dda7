#include "tstlab/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace tstlab {

int thread_count()
{
    if (const char* s = std::getenv("TSTLAB_THREADS"))
    {
        char* end = nullptr;
        long v = std::strtol(s, &end, 10);
        if (end != s && v > 0)
            return static_cast<int>(std::min<long>(v, 1024));
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& f, int threads)
{
    if (threads <= 0)
        threads = thread_count();
    threads = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(threads), n));
    if (threads <= 1)
    {
        for (std::size_t i = 0; i < n; ++i)
            f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex mu;
    std::size_t fail_at = n;
    std::exception_ptr err;
    auto work = [&] {
        for (;;)
        {
            std::size_t i = next.fetch_add(1);
            if (i >= n)
                return;
            try
            {
                f(i);
            }
            catch (...)
            {
                std::lock_guard<std::mutex> lk(mu);
                if (i < fail_at)
                {
                    fail_at = i;
                    err = std::current_exception();
                }
            }
        }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
        pool.emplace_back(work);
    for (auto& t : pool)
        t.join();
    if (err)
        std::rethrow_exception(err);
}

}  // namespace tstlab
