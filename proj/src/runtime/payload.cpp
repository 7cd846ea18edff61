#include "topogen/runtime/payload.h"

#include <cstring>

namespace topogen::runtime {

std::string random_payload(std::size_t n, std::mt19937_64& rng) {
  std::string out(n, '\0');
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    std::uint64_t word = rng();
    std::memcpy(out.data() + i, &word, 8);
  }
  if (i < n) {
    std::uint64_t word = rng();
    std::memcpy(out.data() + i, &word, n - i);
  }
  return out;
}

namespace {

std::uint64_t entropy() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

}  // namespace

PayloadSource::PayloadSource(std::optional<std::uint64_t> seed) : rng_(seed ? *seed : entropy()) {}

std::string PayloadSource::next(std::size_t n) {
  std::lock_guard lock(mu_);
  return random_payload(n, rng_);
}

}  // namespace topogen::runtime
