#!/usr/bin/env python3
# Copyright 2026 The sessec Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

# Independent recomputation of the SRP-6a test vector (RFC 5054 Appendix B inputs)
# using Python integers and hashlib. Output is frozen into tests/test_srp.cpp and tests/acceptance.cpp.
import hashlib

N_HEX = (
    "EEAF0AB9ADB38DD69C33F80AFA8FC5E86072618775FF3C0B9EA2314C"
    "9C256576D674DF7496EA81D3383B4813D692C6E0E0D5D8E250B98BE4"
    "8E495C1D6089DAD15DC7D7B46154D6B6CE8EF4AD69B15D4982559B29"
    "7BCF1885C529F566660E57EC68EDBC3C05726CC02FD4CBF4976EAA9A"
    "FD5138FE8376435B9FC61D2FC0EB06E3")
N2048_HEX = (
    "AC6BDB41324A9A9BF166DE5E1389582FAF72B6651987EE07FC319294"
    "3DB56050A37329CBB4A099ED8193E0757767A13DD52312AB4B03310D"
    "CD7F48A9DA04FD50E8083969EDB767B0CF6095179A163AB3661A05FB"
    "D5FAAAE82918A9962F0B93B855F97993EC975EEAA80D740ADBF4FF74"
    "7359D041D5C33EA71D281E446B14773BCA97B43A23FB801676BD207A"
    "436C6481F1D2B9078717461A5B9D32E688F87748544523B524B0D57D"
    "5EA77A2775D2ECFA032CFBDBF52FB3786160279004E57AE6AF874E73"
    "03CE53299CCC041C7BC308D82A5698F3A8D0C38271AE35F8E9DBFBB6"
    "94B5C803D89F7AE435DE236D525F54759B65E372FCD68EF20FA7111F"
    "9E4AFF73")

def is_probable_prime(n, rounds=32):
    if n < 2: return False
    d, r = n - 1, 0
    while d % 2 == 0: d //= 2; r += 1
    import random
    rnd = random.Random(1)
    for _ in range(rounds):
        a = rnd.randrange(2, n - 1)
        x = pow(a, d, n)
        if x in (1, n - 1): continue
        for _ in range(r - 1):
            x = pow(x, 2, n)
            if x == n - 1: break
        else:
            return False
    return True

def main():
    N = int(N_HEX, 16); g = 2
    nlen = (N.bit_length() + 7) // 8
    pad = lambda v: v.to_bytes(nlen, "big")
    H = lambda *parts: hashlib.sha1(b"".join(parts)).digest()
    Hi = lambda *parts: int.from_bytes(H(*parts), "big")

    for name, hx in (("1024", N_HEX), ("2048", N2048_HEX)):
        n = int(hx, 16)
        print(f"group {name}: bits={n.bit_length()} prime={is_probable_prime(n)} "
              f"safe={is_probable_prime((n - 1) // 2)}")

    I, P = b"alice", b"password123"
    s = bytes.fromhex("BEB25379D1A8581EB5A727673A2441EE")
    a = int("60975527035CF2AD1989806F0407210BC81EDC04E2762A56AFD529DDDA2D4393", 16)
    b = int("E487CB59D31AC550471E81F00F6928E01DDA08E974A004F49E61F5D105284D20", 16)

    k = Hi(N.to_bytes(nlen, "big"), pad(g))
    x = Hi(s, H(I + b":" + P))
    v = pow(g, x, N)
    A = pow(g, a, N)
    B = (k * v + pow(g, b, N)) % N
    u = Hi(pad(A), pad(B))
    S_client = pow((B - k * pow(g, x, N)) % N, a + u * x, N)
    S_server = pow(A * pow(v, u, N) % N, b, N)
    assert S_client == S_server
    K = H(pad(S_client))
    M1 = H(pad(A), pad(B), K)
    M2 = H(pad(A), M1, K)
    for label, val in (("k", k), ("x", x), ("v", v), ("A", A), ("B", B), ("u", u), ("S", S_client)):
        print(f"{label} = {val:X}")
    print(f"K = {K.hex().upper()}")
    print(f"M1 = {M1.hex().upper()}")
    print(f"M2 = {M2.hex().upper()}")

if __name__ == "__main__":
    main()
