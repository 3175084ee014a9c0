#include <gtest/gtest.h>

#include <filesystem>

#include "sphgd/csv.hpp"

namespace sphgd {
namespace {

TEST(Csv, ShortestRoundTripFormatting) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0}) EXPECT_EQ(parse_double(format_double(v)), v);
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(NAN), "nan");
  EXPECT_EQ(format_double(-INFINITY), "-inf");
}

TEST(Csv, WriteReadRoundTrip) {
  CsvTable t({"a", "b", "c"});
  t.row().cell(1).cell(0.25).cell("x");
  t.row().cell(std::size_t{7}).empty_cell().cell(-1e-9);
  const auto path = (std::filesystem::temp_directory_path() / "sphgd_csv_test.csv").string();
  t.write(path);
  const auto d = read_csv(path);
  EXPECT_EQ(d.header, t.header());
  ASSERT_EQ(d.rows.size(), 2u);
  EXPECT_EQ(d.rows[1][d.column("b")], "");
  EXPECT_EQ(parse_double(d.rows[1][2]), -1e-9);
  EXPECT_THROW(d.column("zzz"), std::invalid_argument);
  std::filesystem::remove(path);
}

TEST(Csv, RowWidthIsChecked) {
  CsvTable t({"a", "b"});
  t.row().cell(1);
  EXPECT_THROW(t.str(), std::logic_error);
  CsvTable u({"a"});
  EXPECT_THROW(u.cell(1), std::logic_error);
  EXPECT_THROW(parse_double("1.5x"), std::invalid_argument);
}

}  // namespace
}  // namespace sphgd
