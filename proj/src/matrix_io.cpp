#include "ddrom/matrix_io.hpp"

#include <bit>
#include <fstream>
#include <sstream>

namespace ddrom {

namespace {

void put_le(std::string& out, std::uint64_t v, int bytes) {
  for (int b = 0; b < bytes; ++b) out.push_back(char((v >> (8 * b)) & 0xff));
}

class Reader {
 public:
  explicit Reader(std::string_view s) : s_(s) {}
  std::uint64_t le(int bytes) {
    need(std::size_t(bytes));
    std::uint64_t v = 0;
    for (int b = 0; b < bytes; ++b) v |= std::uint64_t(static_cast<unsigned char>(s_[pos_ + b])) << (8 * b);
    pos_ += std::size_t(bytes);
    return v;
  }
  std::string_view take(std::size_t n) {
    need(n);
    const auto out = s_.substr(pos_, n);
    pos_ += n;
    return out;
  }
  bool done() const { return pos_ == s_.size(); }

 private:
  void need(std::size_t n) const {
    if (s_.size() - pos_ < n) throw FormatError("matrix archive truncated at byte " + std::to_string(pos_));
  }
  std::string_view s_;
  std::size_t pos_ = 0;
};

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

}  // namespace

void MatrixArchive::add(std::string name, Mat m) {
  for (auto& [n, v] : records_)
    if (n == name) {
      v = std::move(m);
      return;
    }
  records_.emplace_back(std::move(name), std::move(m));
}

bool MatrixArchive::contains(std::string_view name) const {
  for (const auto& r : records_)
    if (r.first == name) return true;
  return false;
}

const Mat& MatrixArchive::get(std::string_view name) const {
  for (const auto& r : records_)
    if (r.first == name) return r.second;
  throw FormatError("matrix archive has no record '" + std::string(name) + "'");
}

std::string MatrixArchive::serialize() const {
  std::string out(kArchiveMagic);
  for (const auto& [name, m] : records_) {
    put_le(out, name.size(), 4);
    out += name;
    put_le(out, std::uint64_t(m.rows()), 8);
    put_le(out, std::uint64_t(m.cols()), 8);
    for (Index k = 0; k < m.size(); ++k) put_le(out, std::bit_cast<std::uint64_t>(m.data()[k]), 8);
  }
  return out;
}

MatrixArchive MatrixArchive::deserialize(std::string_view bytes) {
  Reader rd(bytes);
  if (rd.take(std::min(bytes.size(), kArchiveMagic.size())) != kArchiveMagic)
    throw FormatError("matrix archive: bad magic");
  MatrixArchive ar;
  while (!rd.done()) {
    const auto len = rd.le(4);
    std::string name(rd.take(len));
    const auto rows = rd.le(8), cols = rd.le(8);
    if (cols != 0 && rows > (bytes.size() / 8) / cols) throw FormatError("matrix archive: dimensions exceed file size");
    Mat m(static_cast<Index>(rows), static_cast<Index>(cols));
    for (Index k = 0; k < m.size(); ++k) m.data()[k] = std::bit_cast<double>(rd.le(8));
    ar.records_.emplace_back(std::move(name), std::move(m));
  }
  return ar;
}

void MatrixArchive::save(const std::filesystem::path& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path.string() + " for writing");
  const std::string bytes = serialize();
  f.write(bytes.data(), std::streamsize(bytes.size()));
  if (!f) throw Error("write failed: " + path.string());
}

MatrixArchive MatrixArchive::load(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return deserialize(ss.str());
}

void write_key_values(const std::filesystem::path& path, const KeyValues& kv) {
  std::ofstream f(path);
  if (!f) throw Error("cannot open " + path.string() + " for writing");
  for (const auto& [k, v] : kv) f << k << " = " << v << '\n';
}

KeyValues read_key_values(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open " + path.string());
  KeyValues kv;
  std::string line, section;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    const auto hash = line.find('#');
    line = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']') {
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    if (!section.empty()) key = section + "." + key;
    kv.emplace_back(std::move(key), trim(line.substr(eq + 1)));
  }
  return kv;
}

const std::string& lookup(const KeyValues& kv, std::string_view key) {
  for (const auto& [k, v] : kv)
    if (k == key) return v;
  throw ConfigError("missing key '" + std::string(key) + "'");
}

std::string lookup_or(const KeyValues& kv, std::string_view key, std::string fallback) {
  for (const auto& [k, v] : kv)
    if (k == key) return v;
  return fallback;
}

}  // namespace ddrom
