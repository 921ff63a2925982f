#ifndef BDPCA_BYTES_HPP
#define BDPCA_BYTES_HPP

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string_view>
#include <vector>

namespace bdpca::bytes {

// Little-endian append/read helpers shared by the shard and wire formats.

template <typename T>
void put_uint(std::vector<std::uint8_t>& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i)
    out.push_back(static_cast<std::uint8_t>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xFFu));
}

inline void put_f64(std::vector<std::uint8_t>& out, double v) {
  put_uint<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
}

inline void put_magic(std::vector<std::uint8_t>& out, std::string_view magic) {
  out.insert(out.end(), magic.begin(), magic.end());
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> data) : data_(data) {}

  bool has(std::size_t n) const { return data_.size() - pos_ >= n; }
  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }

  template <typename T>
  T uint() {
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
      v |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
    pos_ += sizeof(T);
    return static_cast<T>(v);
  }

  double f64() { return std::bit_cast<double>(uint<std::uint64_t>()); }

  bool magic(std::string_view expected) {
    if (!has(expected.size())) return false;
    const bool ok = std::memcmp(data_.data() + pos_, expected.data(), expected.size()) == 0;
    pos_ += expected.size();
    return ok;
  }

  std::span<const std::uint8_t> slice(std::size_t n) const { return data_.subspan(pos_, n); }

 private:
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

}  // namespace bdpca::bytes

#endif  // BDPCA_BYTES_HPP
