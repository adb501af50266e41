#pragma once

#include <cstddef>
#include <cstdlib>
#include <string>

namespace tsgcn {

/// Worker count for row-parallel kernels, from TSGCN_THREADS (default 1).
/// Results never depend on this value.
inline std::size_t worker_threads() {
  const char* env = std::getenv("TSGCN_THREADS");
  if (!env || !*env) return 1;
  try {
    const long v = std::stol(env);
    return v > 0 ? static_cast<std::size_t>(v) : 1;
  } catch (...) {
    return 1;
  }
}

}  // namespace tsgcn
