#pragma once

#include <cstddef>
#include <functional>
#include <string_view>

namespace d2ue::diag {

/// Receives warning diagnostics. The default sink writes `warning: <msg>` to
/// stderr once per distinct message; tests install a capturing sink.
using Sink = std::function<void(std::string_view)>;

void warn(std::string_view message);

/// Replaces the active sink and returns the previous one. An empty sink
/// silences warnings.
Sink set_sink(Sink sink);

/// Number of warnings emitted since process start (all sinks).
std::size_t warning_count();

/// RAII sink override.
class ScopedSink {
public:
    explicit ScopedSink(Sink sink) : previous_(set_sink(std::move(sink))) {}
    ~ScopedSink() { set_sink(std::move(previous_)); }
    ScopedSink(const ScopedSink&) = delete;
    ScopedSink& operator=(const ScopedSink&) = delete;

private:
    Sink previous_;
};

}  // namespace d2ue::diag
