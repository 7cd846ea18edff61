#include "topogen/common/ip.h"

#include <arpa/inet.h>

#include <array>
#include <charconv>
#include <cstring>

#include <fmt/format.h>

namespace topogen {

namespace {

u128 mask_for(int width, int length) {
  if (length <= 0) return 0;
  u128 all = width == 32 ? u128{0xffffffffu} : ~u128{0};
  if (length >= width) return all;
  return all & ~((u128{1} << (width - length)) - 1);
}

}  // namespace

std::optional<IpAddress> IpAddress::parse(std::string_view text) {
  std::string s(text);
  in_addr v4{};
  if (inet_pton(AF_INET, s.c_str(), &v4) == 1) {
    return IpAddress::v4(ntohl(v4.s_addr));
  }
  in6_addr v6{};
  if (inet_pton(AF_INET6, s.c_str(), &v6) == 1) {
    u128 value = 0;
    for (unsigned char byte : v6.s6_addr) value = (value << 8) | byte;
    return IpAddress(AddressFamily::v6, value);
  }
  return std::nullopt;
}

std::string IpAddress::to_string() const {
  std::array<char, INET6_ADDRSTRLEN> buf{};
  if (family_ == AddressFamily::v4) {
    in_addr v4{};
    v4.s_addr = htonl(static_cast<std::uint32_t>(value_));
    inet_ntop(AF_INET, &v4, buf.data(), buf.size());
  } else {
    in6_addr v6{};
    for (int i = 15; i >= 0; --i) {
      v6.s6_addr[i] = static_cast<unsigned char>(value_ >> ((15 - i) * 8));
    }
    inet_ntop(AF_INET6, &v6, buf.data(), buf.size());
  }
  return buf.data();
}

Prefix::Prefix(IpAddress base, int length)
    : base_(base.family(), base.value() & mask_for(base.bit_width(), length)),
      length_(length) {}

std::optional<Prefix> Prefix::parse(std::string_view cidr) {
  auto slash = cidr.find('/');
  if (slash == std::string_view::npos) return std::nullopt;
  auto addr = IpAddress::parse(cidr.substr(0, slash));
  if (!addr) return std::nullopt;
  auto len_text = cidr.substr(slash + 1);
  int length = -1;
  auto [ptr, ec] = std::from_chars(len_text.data(), len_text.data() + len_text.size(), length);
  if (ec != std::errc{} || ptr != len_text.data() + len_text.size()) return std::nullopt;
  if (length < 0 || length > addr->bit_width()) return std::nullopt;
  return Prefix(*addr, length);
}

bool Prefix::contains(const IpAddress& addr) const {
  if (addr.family() != family()) return false;
  u128 mask = mask_for(base_.bit_width(), length_);
  return (addr.value() & mask) == base_.value();
}

std::string Prefix::to_string() const { return fmt::format("{}/{}", base_.to_string(), length_); }

}  // namespace topogen
