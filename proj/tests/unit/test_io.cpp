#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "corrml/io.hpp"

using namespace corrml::io;

TEST(FormatDouble, RoundTripsShortest) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(100.0), "100");
  EXPECT_EQ(format_double(-2.5), "-2.5");
  for (double v : {1.0 / 3.0, 2.0 / 7.0, 1e-300, 123456.789e10, std::nextafter(1.0, 2.0)})
    EXPECT_EQ(*parse_double(format_double(v)), v);
}

TEST(ParseDouble, RejectsGarbage) {
  EXPECT_FALSE(parse_double("").has_value());
  EXPECT_FALSE(parse_double("abc").has_value());
  EXPECT_FALSE(parse_double("1.5x").has_value());
  EXPECT_DOUBLE_EQ(*parse_double(" 2.25 "), 2.25);
}

TEST(Csv, SplitsQuotedFields) {
  const auto f = split_csv_line("a,\"b,c\",\"say \"\"hi\"\"\",");
  ASSERT_EQ(f.size(), 4u);
  EXPECT_EQ(f[0], "a");
  EXPECT_EQ(f[1], "b,c");
  EXPECT_EQ(f[2], "say \"hi\"");
  EXPECT_EQ(f[3], "");
  EXPECT_EQ(escape_csv("x,y"), "\"x,y\"");
  EXPECT_EQ(escape_csv("plain"), "plain");
}

TEST(Csv, SplitLinesHandlesCrLf) {
  const auto lines = split_lines("a\r\nb\nc\n");
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_EQ(lines[0], "a");
  EXPECT_EQ(lines[1], "b");
  EXPECT_EQ(lines[2], "c");
}

TEST(Csv, TableRoundTrip) {
  CsvTable t;
  t.header = {"id", "value"};
  t.rows = {{"a", "1"}, {"b,c", "2"}};
  const auto back = CsvTable::parse(t.to_string());
  EXPECT_EQ(back.header, t.header);
  EXPECT_EQ(back.rows, t.rows);
  EXPECT_EQ(back.column("value"), 1u);
  EXPECT_FALSE(back.column("missing").has_value());
}

TEST(Hash, Fnv1aKnownVector) {
  EXPECT_EQ(fnv1a("", 0), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a("a", 1), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(hex64(0xabcULL), "0000000000000abc");
}
