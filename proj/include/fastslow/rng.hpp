#pragma once

#include <cstdint>
#include <random>

namespace fastslow {

// splitmix64 finalizer; mixes (seed, path, stream) triples into engine seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// One root seed, independent streams per (path_index, tag).
constexpr std::uint64_t derive_stream(std::uint64_t seed,
                                      std::uint64_t path_index,
                                      std::uint64_t tag = 0) {
  return splitmix64(splitmix64(splitmix64(seed) ^ path_index) ^ tag);
}

inline constexpr std::uint64_t kStreamWiener = 0x57u;
inline constexpr std::uint64_t kStreamAux = 0xA5u;
inline constexpr std::uint64_t kStreamThermal = 0x7Eu;

// Deterministic standard-normal source: mt19937_64 (sequence pinned by the
// standard) plus an explicit 53-bit Box-Muller, so streams are bit-identical
// across standard libraries.
class NormalSource {
 public:
  explicit NormalSource(std::uint64_t stream_seed) : engine_(stream_seed) {}
  NormalSource(std::uint64_t seed, std::uint64_t path_index, std::uint64_t tag)
      : engine_(derive_stream(seed, path_index, tag)) {}

  double operator()();

  // Uniform on (0,1), 53-bit resolution, never exactly 0 or 1.
  double uniform_open01();

 private:
  std::mt19937_64 engine_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace fastslow
