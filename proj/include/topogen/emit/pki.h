#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace topogen::emit {

struct LeafRequest {
  std::string name;
  std::vector<std::string> dns_names;
  std::vector<std::string> ip_addresses;
};

struct KeyPair {
  std::string certificate_pem;
  std::string private_key_pem;
};

struct Pki {
  KeyPair authority;
  std::map<std::string, KeyPair> leaves;
};

// Self-signed authority plus one leaf per request, all Ed25519. Keys are
// derived from `seed`, and validity and serials are fixed, so identical
// inputs give identical PEM text.
Pki generate_pki(std::uint64_t seed, const std::vector<LeafRequest>& requests);

}  // namespace topogen::emit
