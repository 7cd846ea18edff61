#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace topogen {

enum class AddressFamily { v4, v6 };

using u128 = unsigned __int128;

class IpAddress {
 public:
  IpAddress() = default;
  IpAddress(AddressFamily family, u128 value) : family_(family), value_(value) {}

  static IpAddress v4(std::uint32_t value) { return {AddressFamily::v4, value}; }
  static std::optional<IpAddress> parse(std::string_view text);

  AddressFamily family() const { return family_; }
  u128 value() const { return value_; }
  int bit_width() const { return family_ == AddressFamily::v4 ? 32 : 128; }

  // Dotted quad for IPv4, RFC 5952 compressed form for IPv6.
  std::string to_string() const;

  IpAddress operator+(u128 offset) const { return {family_, value_ + offset}; }

  auto operator<=>(const IpAddress&) const = default;

 private:
  AddressFamily family_ = AddressFamily::v4;
  u128 value_ = 0;
};

class Prefix {
 public:
  Prefix() = default;
  Prefix(IpAddress base, int length);

  static std::optional<Prefix> parse(std::string_view cidr);

  const IpAddress& base() const { return base_; }
  int length() const { return length_; }
  AddressFamily family() const { return base_.family(); }
  int host_bits() const { return base_.bit_width() - length_; }

  bool contains(const IpAddress& addr) const;
  IpAddress host(u128 index) const { return base_ + index; }
  std::string to_string() const;

  auto operator<=>(const Prefix&) const = default;

 private:
  IpAddress base_;
  int length_ = 0;
};

inline u128 pow2(int bits) { return bits >= 128 ? ~u128{0} : (u128{1} << bits); }

}  // namespace topogen
