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

#pragma once

#include <cstddef>
#include <memory>
#include <string_view>

#include "sessec/bytes.hpp"

// Thin wrappers over OpenSSL libcrypto primitives.

namespace sessec {

enum class HashAlgo { Sha1, Sha256 };

std::string_view hash_name(HashAlgo algo);
std::size_t hash_size(HashAlgo algo);

/// Incremental hash.
class Hasher {
 public:
  explicit Hasher(HashAlgo algo);
  ~Hasher();
  Hasher(const Hasher&) = delete;
  Hasher& operator=(const Hasher&) = delete;

  Hasher& update(ByteView data);
  Hasher& update(std::string_view data);
  Bytes finish();

 private:
  struct Ctx;
  std::unique_ptr<Ctx> ctx_;
};

Bytes hash(HashAlgo algo, ByteView data);

Bytes hmac_sha256(ByteView key, ByteView data);

/// AES-256 in counter mode; encryption and decryption are the same operation.
Bytes aes256_ctr(ByteView key, ByteView iv, ByteView data);

/// Cryptographically secure random bytes; Error(EntropyFailure) if the source fails.
Bytes random_bytes(std::size_t n);

/// Equality whose running time depends only on the lengths.
bool constant_time_equal(ByteView a, ByteView b);

/// Non-negative arbitrary-precision integer.
class BigNum {
 public:
  BigNum();
  ~BigNum();
  BigNum(const BigNum& other);
  BigNum& operator=(const BigNum& other);
  BigNum(BigNum&&) noexcept;
  BigNum& operator=(BigNum&&) noexcept;

  static BigNum from_bytes(ByteView be);
  static BigNum from_hex(std::string_view hex);
  static BigNum from_word(unsigned long w);

  /// Big-endian, minimal length (empty for zero) or left-padded to `width`.
  Bytes to_bytes(std::size_t width = 0) const;
  std::string to_hex() const;
  std::size_t num_bytes() const;
  std::size_t num_bits() const;
  bool is_zero() const;

  BigNum mod(const BigNum& m) const;
  BigNum mod_add(const BigNum& b, const BigNum& m) const;
  BigNum mod_sub(const BigNum& b, const BigNum& m) const;
  BigNum mod_mul(const BigNum& b, const BigNum& m) const;
  BigNum mod_exp(const BigNum& e, const BigNum& m) const;
  BigNum mul(const BigNum& b) const;
  BigNum add(const BigNum& b) const;

  /// Miller-Rabin with the library's default round count.
  bool is_probable_prime() const;

  friend bool operator==(const BigNum& a, const BigNum& b);
  friend bool operator<(const BigNum& a, const BigNum& b);

 private:
  explicit BigNum(void* raw);
  void* bn_;
};

}  // namespace sessec
