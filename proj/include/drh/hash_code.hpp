#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace drh {

/// Fixed-length binary code packed into 64-bit words. Bit i lives in word
/// i / 64 at position i % 64; bits past `size()` are always zero.
class HashCode {
 public:
  HashCode() = default;
  explicit HashCode(std::size_t bits) : bits_(bits), words_(word_count(bits), 0) {}
  HashCode(std::size_t bits, std::vector<std::uint64_t> words);

  static constexpr std::size_t word_count(std::size_t bits) noexcept { return (bits + 63) / 64; }

  [[nodiscard]] std::size_t size() const noexcept { return bits_; }
  [[nodiscard]] std::span<const std::uint64_t> words() const noexcept { return words_; }

  [[nodiscard]] bool test(std::size_t i) const noexcept { return (words_[i >> 6] >> (i & 63)) & 1u; }
  void set(std::size_t i, bool v = true) noexcept {
    const std::uint64_t mask = std::uint64_t{1} << (i & 63);
    if (v) words_[i >> 6] |= mask; else words_[i >> 6] &= ~mask;
  }

  [[nodiscard]] HashCode complement() const;
  [[nodiscard]] std::size_t popcount() const noexcept;
  [[nodiscard]] std::string to_string() const;  // '0'/'1' per bit, bit 0 first

  friend bool operator==(const HashCode&, const HashCode&) = default;

 private:
  std::size_t bits_ = 0;
  std::vector<std::uint64_t> words_;
};

/// Differing bits of two packed word runs of equal length.
inline std::uint32_t hamming_words(const std::uint64_t* a, const std::uint64_t* b,
                                   std::size_t n) noexcept {
  std::uint32_t d = 0;
  for (std::size_t i = 0; i < n; ++i) d += static_cast<std::uint32_t>(std::popcount(a[i] ^ b[i]));
  return d;
}

/// Throws LengthMismatch when the codes have different lengths.
std::uint32_t hamming(const HashCode& a, const HashCode& b);

/// 1 - hamming / bits, in [0, 1].
double similarity(const HashCode& a, const HashCode& b);

}  // namespace drh
