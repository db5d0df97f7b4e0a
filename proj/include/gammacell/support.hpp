#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <span>
#include <string_view>
#include <thread>
#include <vector>

namespace gammacell {

inline constexpr const char* kVersion = "0.3.0";

std::uint64_t splitmix64(std::uint64_t x);
inline std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t v) {
  return splitmix64(seed ^ splitmix64(v + 0x9e3779b97f4a7c15ULL));
}

// 64-bit FNV-1a over bytes.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL);
std::string to_hex(std::uint64_t v);

// Shortest decimal string that round-trips to the same double.
std::string format_double(double v);
double parse_double(std::string_view s);

// Pairwise (tree) summation; the reduction order depends only on the length.
double pairwise_sum(std::span<const double> v);

// Runs fn(i) for i in [0, count) on up to `workers` threads. Exceptions are
// rethrown on the calling thread (first by index).
template <class Fn>
void parallel_for(std::size_t count, int workers, Fn&& fn) {
  const std::size_t nthreads =
      std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, workers)));
  std::vector<std::exception_ptr> errors(count);
  if (nthreads <= 1) {
    for (std::size_t i = 0; i < count; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(nthreads);
    for (std::size_t t = 0; t < nthreads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

inline int default_workers() {
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

}  // namespace gammacell
