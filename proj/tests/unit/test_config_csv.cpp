#include <cmath>
#include <filesystem>
#include <limits>

#include <gtest/gtest.h>

#include "ampsi/config.hpp"
#include "ampsi/csv.hpp"

using namespace ampsi;

TEST(Config, SectionsCommentsAndLists) {
  const Config c = Config::parse(
      "# top comment\n"
      "seed = 7\n"
      "[signal]\n"
      "n = 1000   # trailing\n"
      "eps = 0.78, 0.01 0.20,0.01\n"
      "[amp]\n"
      "lambda_mode = se\n"
      "verbose = true\n");
  EXPECT_EQ(c.integer("seed"), 7);
  EXPECT_EQ(c.integer("signal.n"), 1000);
  EXPECT_EQ(c.list("signal.eps"), (std::vector<double>{0.78, 0.01, 0.20, 0.01}));
  EXPECT_EQ(c.str("amp.lambda_mode"), "se");
  EXPECT_TRUE(c.flag("amp.verbose", false));
  EXPECT_EQ(c.num("amp.damping", 0.9), 0.9);
  EXPECT_FALSE(c.has("amp.damping"));
}

TEST(Config, OverridesReplaceValues) {
  Config c = Config::parse("[run]\ntrials = 20\n");
  c.apply_override("run.trials=3");
  c.apply_override("signal.n = 500");
  EXPECT_EQ(c.integer("run.trials"), 3);
  EXPECT_EQ(c.integer("signal.n"), 500);
  EXPECT_THROW(c.apply_override("novalue"), ConfigError);
}

TEST(Config, Errors) {
  EXPECT_THROW(Config::parse("[s\n"), ConfigError);
  EXPECT_THROW(Config::parse("novalue\n"), ConfigError);
  const Config c = Config::parse("a = x\nb = 1.5\nc =\n");
  EXPECT_THROW(c.num("a"), ConfigError);
  EXPECT_THROW(c.integer("b"), ConfigError);
  EXPECT_THROW(c.str("missing"), ConfigError);
  EXPECT_THROW(c.flag("a", false), ConfigError);
  EXPECT_THROW(c.list("c"), ConfigError);
  EXPECT_THROW(Config::load("/nonexistent/config.ini"), ConfigError);
}

TEST(Config, CanonicalIsSortedAndStable) {
  const Config a = Config::parse("b = 2\na = 1\n");
  const Config b = Config::parse("a = 1\n\n# x\nb = 2\n");
  EXPECT_EQ(a.canonical(), b.canonical());
  EXPECT_EQ(a.canonical(), "a = 1\nb = 2\n");
}

TEST(Csv, ShortestRoundTripFormatting) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(-2.5), "-2.5");
  EXPECT_EQ(format_double(std::numeric_limits<double>::quiet_NaN()), "nan");
  EXPECT_EQ(format_double(std::numeric_limits<double>::infinity()), "inf");
  const double v = 1.0 / 3.0;
  EXPECT_EQ(std::stod(format_double(v)), v);
}

TEST(Csv, TableBuildsRows) {
  CsvTable t({"a", "b", "c"});
  t.row().add(1.5).add(2LL).add("x");
  t.row().add(0.0).add(-1LL).add("y");
  EXPECT_EQ(t.str(), "a,b,c\n1.5,2,x\n0,-1,y\n");
  EXPECT_EQ(t.rows(), 2u);
  EXPECT_EQ(split_csv_line("1.5,2,x"), (std::vector<std::string>{"1.5", "2", "x"}));
}

TEST(Csv, TableMisuse) {
  CsvTable t({"a", "b"});
  EXPECT_THROW(t.add(1.0), std::logic_error);
  t.row().add(1.0);
  EXPECT_THROW(t.str(), std::logic_error);
  t.add(2.0);
  EXPECT_THROW(t.add(3.0), std::logic_error);
}

TEST(Csv, AtomicWriteCreatesDirectories) {
  const auto dir = std::filesystem::temp_directory_path() / "ampsi_csv_test" / "nested";
  std::filesystem::remove_all(dir.parent_path());
  write_file_atomic(dir / "out.csv", "a\n1\n");
  EXPECT_EQ(read_file(dir / "out.csv"), "a\n1\n");
  write_file_atomic(dir / "out.csv", "a\n2\n");
  EXPECT_EQ(read_file(dir / "out.csv"), "a\n2\n");
  std::size_t files = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir)) files += e.is_regular_file();
  EXPECT_EQ(files, 1u);
  std::filesystem::remove_all(dir.parent_path());
}
