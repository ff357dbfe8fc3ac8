#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <functional>
#include <string>
#include <thread>
#include <vector>

namespace cssdf {

/// Joint vector in rad.
using Configuration = Eigen::VectorXd;
/// Workspace point in m. Planar robots keep z = 0.
using Point = Eigen::Vector3d;

inline constexpr double kPi = 3.14159265358979323846;

/// Worker count: CSSDF_WORKERS if set, else hardware concurrency.
inline int default_workers() {
  if (const char* env = std::getenv("CSSDF_WORKERS")) {
    int v = std::atoi(env);
    if (v > 0) return v;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs body(begin, end, worker) over contiguous chunks of [0, count).
/// Chunk boundaries depend only on count and workers.
inline void parallel_for(std::size_t count, int workers,
                         const std::function<void(std::size_t, std::size_t, int)>& body) {
  if (count == 0) return;
  workers = std::max(1, std::min<int>(workers, static_cast<int>(count)));
  if (workers == 1) {
    body(0, count, 0);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  pool.reserve(workers);
  const std::size_t chunk = (count + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    std::size_t b = w * chunk;
    std::size_t e = std::min(count, b + chunk);
    if (b >= e) break;
    pool.emplace_back([&, b, e, w] {
      try {
        body(b, e, w);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& err : errors)
    if (err) std::rethrow_exception(err);
}

}  // namespace cssdf
