#pragma once

#include <cstddef>
#include <exception>
#include <functional>
#include <optional>

namespace tclkit {

/// Explicit request if given, else TCLKIT_THREADS, else hardware concurrency
/// (at least 1).
std::size_t resolve_threads(std::optional<std::size_t> requested = std::nullopt);

/// Runs body(i) for i in [0, count) on up to `threads` workers. Work is
/// handed out by index, so results written to slot i do not depend on the
/// thread count. If any call throws, the exception from the lowest failing
/// index is rethrown after all workers finish.
void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& body);

}  // namespace tclkit
