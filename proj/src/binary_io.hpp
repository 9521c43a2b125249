#pragma once

// Little-endian primitives shared by the DRHF / DRHM / DRHI codecs.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "drh/error.hpp"

namespace drh::detail {

template <typename T>
T byteswap_if_big(T v) noexcept {
  if constexpr (std::endian::native == std::endian::big) {
    std::array<unsigned char, sizeof(T)> buf;
    std::memcpy(buf.data(), &v, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(buf[i], buf[sizeof(T) - 1 - i]);
    std::memcpy(&v, buf.data(), sizeof(T));
  }
  return v;
}

class LeWriter {
 public:
  explicit LeWriter(std::ostream& os) : os_(os) {}

  void bytes(const void* p, std::size_t n) {
    os_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    if (!os_) throw Error(ErrorCode::IoFailure, "write failed");
  }
  template <typename T>
  void put(T v) {
    v = byteswap_if_big(v);
    bytes(&v, sizeof(T));
  }
  void u32(std::uint32_t v) { put(v); }
  void u64(std::uint64_t v) { put(v); }
  void f32(float v) { put(std::bit_cast<std::uint32_t>(v)); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }

 private:
  std::ostream& os_;
};

// Short reads raise `truncated_code`; callers choose the code that fits their
// format (DimensionMismatch for payloads, MalformedHeader for headers).
class LeReader {
 public:
  explicit LeReader(std::istream& is) : is_(is) {}

  void bytes(void* p, std::size_t n, ErrorCode truncated_code) {
    is_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(is_.gcount()) != n)
      throw Error(truncated_code, "unexpected end of file");
  }
  template <typename T>
  T get(ErrorCode truncated_code) {
    T v;
    bytes(&v, sizeof(T), truncated_code);
    return byteswap_if_big(v);
  }
  std::uint32_t u32(ErrorCode c = ErrorCode::MalformedHeader) { return get<std::uint32_t>(c); }
  std::uint64_t u64(ErrorCode c = ErrorCode::MalformedHeader) { return get<std::uint64_t>(c); }
  float f32(ErrorCode c) { return std::bit_cast<float>(get<std::uint32_t>(c)); }
  std::string str(ErrorCode c = ErrorCode::MalformedHeader, std::uint32_t max_len = 1u << 20) {
    const auto n = u32(c);
    if (n > max_len) throw Error(c, "string length " + std::to_string(n) + " too large");
    std::string s(n, '\0');
    bytes(s.data(), n, c);
    return s;
  }
  void magic(const char (&expected)[5]) {
    char m[4];
    bytes(m, 4, ErrorCode::MalformedHeader);
    if (std::memcmp(m, expected, 4) != 0)
      throw Error(ErrorCode::MalformedHeader, std::string("bad magic, expected ") + expected);
  }
  [[nodiscard]] bool at_eof() { return is_.peek() == std::char_traits<char>::eof(); }

 private:
  std::istream& is_;
};

}  // namespace drh::detail
