#include "mcfin/parallel.hpp"

namespace mcfin {

namespace {

std::atomic<unsigned>& default_thread_count() {
    static std::atomic<unsigned> count{std::max(1u, std::thread::hardware_concurrency())};
    return count;
}

}  // namespace

unsigned default_threads() noexcept { return default_thread_count().load(); }

void set_default_threads(unsigned threads) noexcept {
    default_thread_count().store(threads == 0 ? std::max(1u, std::thread::hardware_concurrency())
                                              : threads);
}

}  // namespace mcfin
