#include "flare/error.hpp"
#include "flare/parallel.hpp"
#include "flare/random.hpp"

#include <cstdlib>
#include <string>

namespace flare {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::PointNotInRing: return "PointNotInRing";
    case ErrorCode::UnitRadiusOutOfBand: return "UnitRadiusOutOfBand";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::SolverDivergence: return "SolverDivergence";
    case ErrorCode::DegenerateQuery: return "DegenerateQuery";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::FormatError: return "FormatError";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

namespace {
std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
}  // namespace

std::uint64_t derive_seed(std::uint64_t root, std::string_view stage) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : stage) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return splitmix64(splitmix64(root) ^ h);
}

int default_thread_count() {
  if (const char* env = std::getenv("FLARE_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end != env && n > 0) return static_cast<int>(n);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace flare
