#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace docqa {

using Vector = std::vector<double>;

// 64-bit FNV-1a. Stable across platforms, used for fingerprints and seeds.
class Fnv1a {
 public:
  Fnv1a& update(std::string_view bytes);
  Fnv1a& update(std::uint64_t value);
  std::uint64_t digest() const { return state_; }
  std::string hex() const;

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::uint64_t fnv1a(std::string_view bytes);
std::string hex64(std::uint64_t value);
std::string hash_file(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> v);

// Little-endian binary helpers shared by the index and embedding store formats.
namespace binary {
void put_u32(std::string& out, std::uint32_t v);
void put_u64(std::string& out, std::uint64_t v);
void put_f32(std::string& out, float v);
void put_string(std::string& out, std::string_view s);

class Reader {
 public:
  Reader(std::string_view data, std::string source)
      : data_(data), source_(std::move(source)) {}
  std::uint32_t u32();
  std::uint64_t u64();
  float f32();
  std::string string();
  bool at_end() const { return pos_ == data_.size(); }

 private:
  std::string_view take(std::size_t n);
  std::string_view data_;
  std::string source_;
  std::size_t pos_ = 0;
};
}  // namespace binary

}  // namespace docqa
