#pragma once

#include "ddrom/common.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>

namespace ddrom {

// Ordered collection of named dense matrices; the on-disk layout is
//   "DDNMROM1" { u32 name_len, name, u64 rows, u64 cols, rows*cols f64 (column-major) }*
// with every integer and double little-endian.
class MatrixArchive {
 public:
  void add(std::string name, Mat m);
  bool contains(std::string_view name) const;
  const Mat& get(std::string_view name) const;
  const std::vector<std::pair<std::string, Mat>>& records() const { return records_; }

  std::string serialize() const;
  static MatrixArchive deserialize(std::string_view bytes);
  void save(const std::filesystem::path& path) const;
  static MatrixArchive load(const std::filesystem::path& path);

 private:
  std::vector<std::pair<std::string, Mat>> records_;
};

inline constexpr std::string_view kArchiveMagic = "DDNMROM1";

// Flat "key = value" text with optional [section] headers (section names are folded into
// keys as "section.key").
using KeyValues = std::vector<std::pair<std::string, std::string>>;
void write_key_values(const std::filesystem::path& path, const KeyValues& kv);
KeyValues read_key_values(const std::filesystem::path& path);
const std::string& lookup(const KeyValues& kv, std::string_view key);
std::string lookup_or(const KeyValues& kv, std::string_view key, std::string fallback);

}  // namespace ddrom
