#include "drh/hash_code.hpp"

#include "drh/error.hpp"

namespace drh {

namespace {
std::uint64_t tail_mask(std::size_t bits) {
  const auto r = bits & 63;
  return r == 0 ? ~std::uint64_t{0} : ((std::uint64_t{1} << r) - 1);
}
}  // namespace

HashCode::HashCode(std::size_t bits, std::vector<std::uint64_t> words)
    : bits_(bits), words_(std::move(words)) {
  if (words_.size() != word_count(bits))
    throw Error(ErrorCode::LengthMismatch, "word count does not match bit length");
  if (!words_.empty() && (words_.back() & ~tail_mask(bits)) != 0)
    throw Error(ErrorCode::LengthMismatch, "pad bits must be zero");
}

HashCode HashCode::complement() const {
  HashCode out(*this);
  for (auto& w : out.words_) w = ~w;
  if (!out.words_.empty()) out.words_.back() &= tail_mask(bits_);
  return out;
}

std::size_t HashCode::popcount() const noexcept {
  std::size_t n = 0;
  for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
  return n;
}

std::string HashCode::to_string() const {
  std::string s(bits_, '0');
  for (std::size_t i = 0; i < bits_; ++i)
    if (test(i)) s[i] = '1';
  return s;
}

std::uint32_t hamming(const HashCode& a, const HashCode& b) {
  if (a.size() != b.size())
    throw Error(ErrorCode::LengthMismatch, "hamming: " + std::to_string(a.size()) + " vs " +
                                               std::to_string(b.size()) + " bits");
  return hamming_words(a.words().data(), b.words().data(), a.words().size());
}

double similarity(const HashCode& a, const HashCode& b) {
  const auto d = hamming(a, b);
  if (a.size() == 0) return 1.0;
  return 1.0 - static_cast<double>(d) / static_cast<double>(a.size());
}

}  // namespace drh
