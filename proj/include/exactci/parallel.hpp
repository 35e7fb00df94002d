#ifndef EXACTCI_PARALLEL_HPP
#define EXACTCI_PARALLEL_HPP

#include <atomic>
#include <exception>
#include <thread>
#include <vector>

namespace exactci {
namespace detail {

/// Runs fn(i) for i in [0, n). With threads > 1 the indices are handed out
/// atomically; fn must write only to its own slot so that results are
/// identical to the serial order.
template <class F>
void parallel_for(long long n, int threads, F&& fn) {
    if (threads <= 1 || n <= 1) {
        for (long long i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<long long> next{0};
    std::exception_ptr error;
    std::atomic<bool> failed{false};
    const int workers = static_cast<int>(std::min<long long>(threads, n));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const long long i = next.fetch_add(1);
                if (i >= n || failed.load()) return;
                try {
                    fn(i);
                } catch (...) {
                    if (!failed.exchange(true)) error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace detail
}  // namespace exactci

#endif  // EXACTCI_PARALLEL_HPP
