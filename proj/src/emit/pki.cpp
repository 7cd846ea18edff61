#include "topogen/emit/pki.h"

#include <openssl/evp.h>
#include <openssl/pem.h>
#include <openssl/sha.h>
#include <openssl/x509.h>
#include <openssl/x509v3.h>

#include <memory>
#include <stdexcept>

namespace topogen::emit {

namespace {

template <typename T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using PkeyPtr = std::unique_ptr<EVP_PKEY, Deleter<EVP_PKEY, EVP_PKEY_free>>;
using X509Ptr = std::unique_ptr<X509, Deleter<X509, X509_free>>;
using BioPtr = std::unique_ptr<BIO, Deleter<BIO, BIO_free_all>>;

constexpr const char* kNotBefore = "20250101000000Z";
constexpr const char* kNotAfter = "20450101000000Z";

void check(bool ok, const char* what) {
  if (!ok) throw std::runtime_error(std::string("certificate generation failed: ") + what);
}

PkeyPtr derive_key(std::uint64_t seed, const std::string& label) {
  unsigned char digest[SHA256_DIGEST_LENGTH];
  std::string input;
  for (int i = 0; i < 8; ++i) input.push_back(static_cast<char>((seed >> (8 * i)) & 0xff));
  input += label;
  SHA256(reinterpret_cast<const unsigned char*>(input.data()), input.size(), digest);
  PkeyPtr key(EVP_PKEY_new_raw_private_key(EVP_PKEY_ED25519, nullptr, digest, 32));
  check(key != nullptr, "key derivation");
  return key;
}

std::string to_pem(X509* cert) {
  BioPtr bio(BIO_new(BIO_s_mem()));
  check(PEM_write_bio_X509(bio.get(), cert) == 1, "certificate PEM");
  char* data = nullptr;
  long len = BIO_get_mem_data(bio.get(), &data);
  return std::string(data, static_cast<std::size_t>(len));
}

std::string to_pem(EVP_PKEY* key) {
  BioPtr bio(BIO_new(BIO_s_mem()));
  check(PEM_write_bio_PrivateKey(bio.get(), key, nullptr, nullptr, 0, nullptr, nullptr) == 1,
        "key PEM");
  char* data = nullptr;
  long len = BIO_get_mem_data(bio.get(), &data);
  return std::string(data, static_cast<std::size_t>(len));
}

void add_extension(X509* cert, X509* issuer, int nid, const std::string& value) {
  X509V3_CTX ctx;
  X509V3_set_ctx_nodb(&ctx);
  X509V3_set_ctx(&ctx, issuer, cert, nullptr, nullptr, 0);
  X509_EXTENSION* ext = X509V3_EXT_conf_nid(nullptr, &ctx, nid, value.c_str());
  check(ext != nullptr, "extension");
  X509_add_ext(cert, ext, -1);
  X509_EXTENSION_free(ext);
}

X509Ptr make_certificate(const std::string& common_name, long serial, EVP_PKEY* key) {
  X509Ptr cert(X509_new());
  check(cert != nullptr, "allocation");
  X509_set_version(cert.get(), 2);
  ASN1_INTEGER_set(X509_get_serialNumber(cert.get()), serial);
  check(ASN1_TIME_set_string(X509_getm_notBefore(cert.get()), kNotBefore) == 1, "validity");
  check(ASN1_TIME_set_string(X509_getm_notAfter(cert.get()), kNotAfter) == 1, "validity");
  X509_set_pubkey(cert.get(), key);
  X509_NAME* name = X509_get_subject_name(cert.get());
  X509_NAME_add_entry_by_txt(name, "O", MBSTRING_ASC,
                             reinterpret_cast<const unsigned char*>("topogen"), -1, -1, 0);
  X509_NAME_add_entry_by_txt(name, "CN", MBSTRING_ASC,
                             reinterpret_cast<const unsigned char*>(common_name.c_str()), -1, -1,
                             0);
  return cert;
}

}  // namespace

Pki generate_pki(std::uint64_t seed, const std::vector<LeafRequest>& requests) {
  Pki pki;
  PkeyPtr ca_key = derive_key(seed, "authority");
  X509Ptr ca = make_certificate("topogen authority", 1, ca_key.get());
  X509_set_issuer_name(ca.get(), X509_get_subject_name(ca.get()));
  add_extension(ca.get(), ca.get(), NID_basic_constraints, "critical,CA:TRUE");
  add_extension(ca.get(), ca.get(), NID_key_usage, "critical,keyCertSign,cRLSign");
  add_extension(ca.get(), ca.get(), NID_subject_key_identifier, "hash");
  check(X509_sign(ca.get(), ca_key.get(), nullptr) > 0, "authority signature");
  pki.authority = {to_pem(ca.get()), to_pem(ca_key.get())};

  long serial = 2;
  for (const auto& req : requests) {
    PkeyPtr key = derive_key(seed, "leaf:" + req.name);
    X509Ptr cert = make_certificate(req.name, serial++, key.get());
    X509_set_issuer_name(cert.get(), X509_get_subject_name(ca.get()));
    add_extension(cert.get(), ca.get(), NID_basic_constraints, "critical,CA:FALSE");
    add_extension(cert.get(), ca.get(), NID_key_usage, "critical,digitalSignature");
    add_extension(cert.get(), ca.get(), NID_ext_key_usage, "serverAuth,clientAuth");
    add_extension(cert.get(), ca.get(), NID_authority_key_identifier, "keyid:always");
    std::string san;
    for (const auto& dns : req.dns_names) san += (san.empty() ? "" : ",") + ("DNS:" + dns);
    for (const auto& ip : req.ip_addresses) san += (san.empty() ? "" : ",") + ("IP:" + ip);
    if (!san.empty()) add_extension(cert.get(), ca.get(), NID_subject_alt_name, san);
    check(X509_sign(cert.get(), ca_key.get(), nullptr) > 0, "leaf signature");
    pki.leaves[req.name] = {to_pem(cert.get()), to_pem(key.get())};
  }
  return pki;
}

}  // namespace topogen::emit
