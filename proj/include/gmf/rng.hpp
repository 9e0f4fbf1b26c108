#pragma once

#include <array>
#include <cstdint>

namespace gmf {

//! Philox4x32-10 counter-based generator (Salmon et al., SC'11).
//! Output is a pure function of (counter, key).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

//! Stream tags occupying the last counter word, so draws made for
//! different purposes never collide.
enum class StreamPurpose : std::uint32_t
{
  brownian = 0,
  initial_law = 1,
  validation = 2,
  experiment = 3,
};

//! Sequential uniforms/normals from the Philox block sequence addressed by
//! (seed, purpose, a, b). Typically a = particle key and b = time step.
class RandomStream
{
public:
  RandomStream(std::uint64_t seed, StreamPurpose purpose, std::uint32_t a, std::uint32_t b);

  //! Uniform on the open interval (0, 1) with 53 random bits.
  double uniform();
  //! Standard normal via Box-Muller.
  double normal();

private:
  std::uint32_t next_word();

  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> counter_;
  std::array<std::uint32_t, 4> block_{};
  int used_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

//! SplitMix64 finalizer, used to derive per-cell seeds from a master seed.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

} // namespace gmf
