#include "d2ue/diagnostics.hpp"

#include <atomic>
#include <iostream>
#include <mutex>
#include <set>
#include <string>

namespace d2ue::diag {
namespace {

std::mutex g_mutex;
std::atomic<std::size_t> g_count{0};

Sink& active_sink() {
    static Sink sink = [seen = std::set<std::string, std::less<>>{}](std::string_view msg) mutable {
        if (seen.contains(msg)) return;
        seen.emplace(msg);
        std::cerr << "warning: " << msg << " (further repeats suppressed)\n";
    };
    return sink;
}

}  // namespace

void warn(std::string_view message) {
    g_count.fetch_add(1, std::memory_order_relaxed);
    std::lock_guard lock(g_mutex);
    if (auto& sink = active_sink()) sink(message);
}

Sink set_sink(Sink sink) {
    std::lock_guard lock(g_mutex);
    Sink previous = std::move(active_sink());
    active_sink() = std::move(sink);
    return previous;
}

std::size_t warning_count() { return g_count.load(std::memory_order_relaxed); }

}  // namespace d2ue::diag
