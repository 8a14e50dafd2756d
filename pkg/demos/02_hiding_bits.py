"""
Hiding an encrypted message in covertext
=========================================

A one-time pad makes the ciphertext uniform.  Iterative coupling then
samples covertext symbols so that, averaged over the ciphertext, the
stegotext has exactly the covertext distribution, while a receiver who
knows the covertext model can read the ciphertext back.
"""

import numpy as np

from entrocoup import (
    bits_from_hex,
    decrypt,
    encrypt,
    hex_from_bits,
    keygen,
    perfect_security_gap,
    random_ngram,
    stego_decode,
    stego_encode,
)

# an order-1 covertext model over 12 symbols
cover = random_ngram(12, 1, seed=3)

plain = np.array([0, 1, 1, 0, 1, 0, 0, 0, 0, 1, 1, 0, 1, 0, 0, 1], dtype=np.uint8)
key = bits_from_hex(keygen(16, seed=42), 16)
cipher = encrypt(plain, key)
print("ciphertext", hex_from_bits(cipher))

for variant in ("timec", "fimec", "arimec"):
    t = stego_encode(cipher, cover, 30, variant=variant, seed=7)
    est, pset = stego_decode(t.stegotext, cover, 16, variant=variant)
    ok = np.array_equal(decrypt(est, key), plain)
    print("%-7s stegotext %s...  decoded %s  plaintext ok: %s"
          % (variant, t.stegotext[:8], hex_from_bits(est), ok))

# how many symbols did the receiver need?  the posterior on the true
# ciphertext grows as symbols arrive
t = stego_encode(cipher, cover, 30, variant="arimec", seed=7)
for m in (2, 5, 10, 20, 30):
    _, pset = stego_decode(t.stegotext[:m], cover, 16, variant="arimec")
    x = tuple(int(b) for b in cipher)
    print("after %2d symbols: P(true ciphertext) = %.4f" % (m, pset.element_posterior(x)))

# perfect security, checked by enumerating every ciphertext and stegotext
small = random_ngram(3, 1, seed=1)
small = small.with_max_len(3)
for variant in ("timec", "fimec", "arimec"):
    gap = perfect_security_gap(small, 3, 3, variant=variant)
    print("%-7s max |P_stego(y) - P_cover(y)| = %.1e" % (variant, gap))
