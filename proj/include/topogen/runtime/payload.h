#pragma once

#include <cstdint>
#include <mutex>
#include <optional>
#include <random>
#include <string>

namespace topogen::runtime {

// Exactly n bytes drawn from `rng`.
std::string random_payload(std::size_t n, std::mt19937_64& rng);

// Shared by all request threads of one service. Seeded sources replay the
// same byte stream; unseeded ones draw their seed from std::random_device.
class PayloadSource {
 public:
  explicit PayloadSource(std::optional<std::uint64_t> seed);
  std::string next(std::size_t n);

 private:
  std::mutex mu_;
  std::mt19937_64 rng_;
};

}  // namespace topogen::runtime
