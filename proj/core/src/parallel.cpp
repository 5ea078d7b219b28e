#include "clonegraph/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>
#include <vector>

namespace clonegraph {
namespace {
std::atomic<unsigned> g_max_threads{0};
}

void set_max_threads(unsigned threads) { g_max_threads.store(threads); }

unsigned max_threads() {
    unsigned cap = g_max_threads.load();
    if (cap == 0) cap = std::max(1u, std::thread::hardware_concurrency());
    return cap;
}

void parallel_for(std::size_t first, std::size_t last, std::size_t grain,
                  const std::function<void(std::size_t, std::size_t)>& body) {
    if (last <= first) return;
    grain = std::max<std::size_t>(grain, 1);
    const std::size_t chunks = (last - first + grain - 1) / grain;
    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(max_threads(), chunks));
    if (workers <= 1) {
        for (std::size_t c = 0; c < chunks; ++c) {
            const std::size_t b = first + c * grain;
            body(b, std::min(last, b + grain));
        }
        return;
    }

    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(chunks);
    auto worker = [&] {
        for (std::size_t c = next.fetch_add(1); c < chunks; c = next.fetch_add(1)) {
            const std::size_t b = first + c * grain;
            try {
                body(b, std::min(last, b + grain));
            } catch (...) {
                errors[c] = std::current_exception();
            }
        }
    };
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (unsigned t = 1; t < workers; ++t) pool.emplace_back(worker);
    worker();
    pool.clear();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace clonegraph
