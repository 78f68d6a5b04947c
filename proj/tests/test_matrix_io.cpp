#include "ddrom/matrix_io.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

namespace ddrom {
namespace {

TEST(MatrixArchive, LittleEndianTestVector) {
  MatrixArchive ar;
  Mat m(1, 2);
  m << 1.0, -2.5;
  ar.add("a", m);
  const std::string expect = std::string("DDNMROM1") + std::string("\x01\x00\x00\x00", 4) + "a" +
                             std::string("\x01\0\0\0\0\0\0\0", 8) + std::string("\x02\0\0\0\0\0\0\0", 8) +
                             std::string("\0\0\0\0\0\0\xf0\x3f", 8) + std::string("\0\0\0\0\0\0\x04\xc0", 8);
  EXPECT_EQ(ar.serialize(), expect);
  const MatrixArchive back = MatrixArchive::deserialize(expect);
  EXPECT_EQ(back.get("a"), m);
}

TEST(MatrixArchive, ColumnMajorOrder) {
  Mat m(2, 2);
  m << 1, 2, 3, 4;
  MatrixArchive ar;
  ar.add("m", m);
  const std::string bytes = ar.serialize();
  const std::size_t data = 8 + 4 + 1 + 16;
  double second;
  std::memcpy(&second, bytes.data() + data + 8, 8);
  EXPECT_EQ(second, 3.0);
}

TEST(MatrixArchive, SaveLoadSaveIsIdempotent) {
  MatrixArchive ar;
  ar.add("x", Mat::Random(7, 3));
  ar.add("empty", Mat(0, 4));
  ar.add("name with spaces/and slashes", Mat::Constant(1, 1, -0.0));
  const auto dir = std::filesystem::temp_directory_path() / "ddrom_io_test";
  std::filesystem::create_directories(dir);
  ar.save(dir / "a.bin");
  const MatrixArchive back = MatrixArchive::load(dir / "a.bin");
  EXPECT_EQ(back.serialize(), ar.serialize());
  EXPECT_EQ(back.get("x"), ar.get("x"));
  EXPECT_EQ(back.get("empty").cols(), 4);
  std::filesystem::remove_all(dir);
}

TEST(MatrixArchive, RejectsCorruption) {
  MatrixArchive ar;
  ar.add("x", Mat::Ones(3, 3));
  std::string bytes = ar.serialize();
  std::string bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(MatrixArchive::deserialize(bad), FormatError);
  EXPECT_THROW(MatrixArchive::deserialize(bytes.substr(0, bytes.size() - 3)), FormatError);
  EXPECT_THROW(MatrixArchive::deserialize("DDNM"), FormatError);
  EXPECT_THROW(ar.get("missing"), FormatError);
}

TEST(KeyValues, SectionsAndComments) {
  const auto path = std::filesystem::temp_directory_path() / "ddrom_kv_test.txt";
  {
    std::ofstream f(path);
    f << "# comment\nalpha = 1\n[grid]\nnx = 120  # trailing\n ny=12\n";
  }
  const KeyValues kv = read_key_values(path);
  EXPECT_EQ(lookup(kv, "alpha"), "1");
  EXPECT_EQ(lookup(kv, "grid.nx"), "120");
  EXPECT_EQ(lookup(kv, "grid.ny"), "12");
  EXPECT_EQ(lookup_or(kv, "grid.nz", "none"), "none");
  EXPECT_THROW(lookup(kv, "beta"), ConfigError);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace ddrom
