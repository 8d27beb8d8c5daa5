// Copyright 2026 The sessec Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "sessec/crypto.hpp"

#include <openssl/bn.h>
#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/rand.h>

#include <string>

#include "sessec/error.hpp"

namespace sessec {

namespace {

const EVP_MD* md_of(HashAlgo algo) { return algo == HashAlgo::Sha1 ? EVP_sha1() : EVP_sha256(); }

BIGNUM* bn(void* p) { return static_cast<BIGNUM*>(p); }

struct BnCtx {
  BN_CTX* ctx = BN_CTX_new();
  ~BnCtx() { BN_CTX_free(ctx); }
};

void check(int ok, const char* what) {
  if (ok != 1) throw Error(Errc::InvalidState, std::string("bignum ") + what + " failed");
}

}  // namespace

std::string_view hash_name(HashAlgo algo) { return algo == HashAlgo::Sha1 ? "sha1" : "sha256"; }
std::size_t hash_size(HashAlgo algo) { return algo == HashAlgo::Sha1 ? 20 : 32; }

struct Hasher::Ctx {
  EVP_MD_CTX* md = EVP_MD_CTX_new();
  ~Ctx() { EVP_MD_CTX_free(md); }
};

Hasher::Hasher(HashAlgo algo) : ctx_(std::make_unique<Ctx>()) {
  if (!ctx_->md || EVP_DigestInit_ex(ctx_->md, md_of(algo), nullptr) != 1)
    throw Error(Errc::InvalidState, "digest init failed");
}

Hasher::~Hasher() = default;

Hasher& Hasher::update(ByteView data) {
  EVP_DigestUpdate(ctx_->md, data.data(), data.size());
  return *this;
}

Hasher& Hasher::update(std::string_view data) {
  EVP_DigestUpdate(ctx_->md, data.data(), data.size());
  return *this;
}

Bytes Hasher::finish() {
  Bytes out(EVP_MAX_MD_SIZE);
  unsigned len = 0;
  EVP_DigestFinal_ex(ctx_->md, out.data(), &len);
  out.resize(len);
  return out;
}

Bytes hash(HashAlgo algo, ByteView data) { return Hasher(algo).update(data).finish(); }

Bytes hmac_sha256(ByteView key, ByteView data) {
  Bytes out(EVP_MAX_MD_SIZE);
  unsigned len = 0;
  if (!HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()), data.data(), data.size(), out.data(), &len))
    throw Error(Errc::InvalidState, "hmac failed");
  out.resize(len);
  return out;
}

Bytes aes256_ctr(ByteView key, ByteView iv, ByteView data) {
  if (key.size() != 32 || iv.size() != 16) throw Error(Errc::InvalidArgument, "aes-256-ctr needs 32-byte key, 16-byte iv");
  EVP_CIPHER_CTX* ctx = EVP_CIPHER_CTX_new();
  Bytes out(data.size());
  int len = 0;
  bool ok = ctx && EVP_EncryptInit_ex(ctx, EVP_aes_256_ctr(), nullptr, key.data(), iv.data()) == 1 &&
            EVP_EncryptUpdate(ctx, out.data(), &len, data.data(), static_cast<int>(data.size())) == 1;
  EVP_CIPHER_CTX_free(ctx);
  if (!ok) throw Error(Errc::InvalidState, "aes-256-ctr failed");
  return out;
}

Bytes random_bytes(std::size_t n) {
  Bytes out(n);
  if (n && RAND_bytes(out.data(), static_cast<int>(n)) != 1)
    throw Error(Errc::EntropyFailure, "system random source failed");
  return out;
}

bool constant_time_equal(ByteView a, ByteView b) {
  if (a.size() != b.size()) return false;
  return CRYPTO_memcmp(a.data(), b.data(), a.size()) == 0;
}

// --- BigNum ---

BigNum::BigNum() : bn_(BN_new()) {}
BigNum::BigNum(void* raw) : bn_(raw) {}
BigNum::~BigNum() { BN_clear_free(bn(bn_)); }
BigNum::BigNum(const BigNum& other) : bn_(BN_dup(bn(other.bn_))) {}
BigNum& BigNum::operator=(const BigNum& other) {
  if (this != &other) BN_copy(bn(bn_), bn(other.bn_));
  return *this;
}
BigNum::BigNum(BigNum&& other) noexcept : bn_(other.bn_) { other.bn_ = BN_new(); }
BigNum& BigNum::operator=(BigNum&& other) noexcept {
  std::swap(bn_, other.bn_);
  return *this;
}

BigNum BigNum::from_bytes(ByteView be) {
  return BigNum(BN_bin2bn(be.data(), static_cast<int>(be.size()), nullptr));
}

BigNum BigNum::from_hex(std::string_view hex) { return from_bytes(sessec::from_hex(hex.size() % 2 ? "0" + std::string(hex) : std::string(hex))); }

BigNum BigNum::from_word(unsigned long w) {
  BigNum r;
  check(BN_set_word(bn(r.bn_), w), "set_word");
  return r;
}

Bytes BigNum::to_bytes(std::size_t width) const {
  std::size_t n = num_bytes();
  if (width < n) width = n;
  Bytes out(width);
  if (width) BN_bn2binpad(bn(bn_), out.data(), static_cast<int>(width));
  return out;
}

std::string BigNum::to_hex() const { return is_zero() ? "00" : sessec::to_hex(to_bytes()); }
std::size_t BigNum::num_bytes() const { return static_cast<std::size_t>(BN_num_bytes(bn(bn_))); }
std::size_t BigNum::num_bits() const { return static_cast<std::size_t>(BN_num_bits(bn(bn_))); }
bool BigNum::is_zero() const { return BN_is_zero(bn(bn_)); }

BigNum BigNum::mod(const BigNum& m) const {
  BnCtx c;
  BigNum r;
  check(BN_nnmod(bn(r.bn_), bn(bn_), bn(m.bn_), c.ctx), "mod");
  return r;
}

BigNum BigNum::mod_add(const BigNum& b, const BigNum& m) const {
  BnCtx c;
  BigNum r;
  check(BN_mod_add(bn(r.bn_), bn(bn_), bn(b.bn_), bn(m.bn_), c.ctx), "mod_add");
  return r;
}

BigNum BigNum::mod_sub(const BigNum& b, const BigNum& m) const {
  BnCtx c;
  BigNum r;
  check(BN_mod_sub(bn(r.bn_), bn(bn_), bn(b.bn_), bn(m.bn_), c.ctx), "mod_sub");
  return r;
}

BigNum BigNum::mod_mul(const BigNum& b, const BigNum& m) const {
  BnCtx c;
  BigNum r;
  check(BN_mod_mul(bn(r.bn_), bn(bn_), bn(b.bn_), bn(m.bn_), c.ctx), "mod_mul");
  return r;
}

BigNum BigNum::mod_exp(const BigNum& e, const BigNum& m) const {
  BnCtx c;
  BigNum r;
  check(BN_mod_exp(bn(r.bn_), bn(bn_), bn(e.bn_), bn(m.bn_), c.ctx), "mod_exp");
  return r;
}

BigNum BigNum::mul(const BigNum& b) const {
  BnCtx c;
  BigNum r;
  check(BN_mul(bn(r.bn_), bn(bn_), bn(b.bn_), c.ctx), "mul");
  return r;
}

BigNum BigNum::add(const BigNum& b) const {
  BigNum r;
  check(BN_add(bn(r.bn_), bn(bn_), bn(b.bn_)), "add");
  return r;
}

bool BigNum::is_probable_prime() const {
  BnCtx c;
  return BN_check_prime(bn(bn_), c.ctx, nullptr) == 1;
}

bool operator==(const BigNum& a, const BigNum& b) { return BN_cmp(bn(a.bn_), bn(b.bn_)) == 0; }
bool operator<(const BigNum& a, const BigNum& b) { return BN_cmp(bn(a.bn_), bn(b.bn_)) < 0; }

}  // namespace sessec
