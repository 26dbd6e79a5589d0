#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace teflow {

constexpr double kInf = std::numeric_limits<double>::infinity();

inline bool is_inf(double v) { return std::isinf(v) && v > 0; }

/// Error thrown by loaders, builders and solvers on contract violations.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

enum class Severity { Warning, Error };

/// One validation/diagnostic finding. Diagnostics never abort; errors do.
struct Diagnostic {
  Severity severity = Severity::Warning;
  std::string code;     // stable machine-readable tag, e.g. "origin-isolated"
  std::string message;  // human-readable detail
};

using Diagnostics = std::vector<Diagnostic>;

template <typename... Args>
std::string concat(Args&&... args) {
  std::ostringstream os;
  (os << ... << args);
  return os.str();
}

template <typename... Args>
[[noreturn]] void fail(Args&&... args) {
  throw Error(concat(std::forward<Args>(args)...));
}

inline bool nearly_equal(double a, double b, double rel_tol, double abs_tol = 0.0) {
  const double diff = std::abs(a - b);
  if (diff <= abs_tol) return true;
  return diff <= rel_tol * std::max(std::abs(a), std::abs(b));
}

// FNV-1a over raw bytes; used for graph fingerprints in solution files.
inline std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t seed = 1469598103934665603ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t fnv1a(double v, std::uint64_t seed) { return fnv1a(&v, sizeof(v), seed); }
inline std::uint64_t fnv1a(std::int64_t v, std::uint64_t seed) { return fnv1a(&v, sizeof(v), seed); }

}  // namespace teflow
