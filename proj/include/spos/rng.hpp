#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "spos/errors.hpp"

namespace spos {

// SplitMix64: tiny counter-free engine used for all library randomness.
// Every (seed, purpose, step, particle) tuple gets its own independent
// stream, so draws never depend on thread scheduling.
class SplitMix64 {
public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t state) : state_(state) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~std::uint64_t{0}; }

  result_type operator()() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

private:
  std::uint64_t state_;
};

enum class StreamPurpose : std::uint64_t {
  init = 1,
  batch = 2,
  noise = 3,
  epoch_draw = 4,
  snapshot_batch = 5,
  reference = 6,
};

namespace detail {
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}
}  // namespace detail

// Stream-splitting rule: hash the tuple down to one 64-bit state.
inline SplitMix64 make_stream(std::uint64_t seed, StreamPurpose purpose,
                              long long step, long long particle) {
  std::uint64_t s = detail::mix64(seed + 0x632be59bd9b4e019ull);
  s = detail::mix64(s ^ (static_cast<std::uint64_t>(purpose) * 0x9e3779b97f4a7c15ull));
  s = detail::mix64(s ^ (static_cast<std::uint64_t>(step) + 0xd1b54a32d192ed03ull));
  s = detail::mix64(s ^ (static_cast<std::uint64_t>(particle) + 0x8cb92ba72f3d8dd7ull));
  return SplitMix64(s);
}

inline double normal_draw(SplitMix64& stream) {
  std::normal_distribution<double> dist(0.0, 1.0);
  return dist(stream);
}

inline int uniform_index(int n, SplitMix64& stream) {
  std::uniform_int_distribution<int> dist(0, n - 1);
  return dist(stream);
}

// B i.i.d. uniform draws from {0,…,N−1}, with replacement.
struct BatchDraw {
  std::vector<int> indices;
};

inline BatchDraw sample_batch(int num_terms, int batch_size, SplitMix64& stream) {
  if (num_terms < 1) throw std::invalid_argument("sample_batch: num_terms must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("sample_batch: batch_size must be >= 1");
  BatchDraw draw;
  draw.indices.resize(batch_size);
  std::uniform_int_distribution<int> dist(0, num_terms - 1);
  for (int b = 0; b < batch_size; ++b) draw.indices[b] = dist(stream);
  return draw;
}

}  // namespace spos
