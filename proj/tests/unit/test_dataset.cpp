#include <gtest/gtest.h>

#include <cmath>

#include "corrml/dataset.hpp"
#include "corrml/errors.hpp"

using namespace corrml;

namespace {

std::string csv_with(const std::string& rows) {
  return "id,env,temp_c,duration_days,rate,rate_unit,grade,Al,Mg\n" + rows;
}

}  // namespace

TEST(Composition, WeightAtomicRoundTrip) {
  ElementComposition wt;
  wt.basis = Basis::Weight;
  wt["Al"] = 90.0;
  wt["Mg"] = 4.0;
  wt["Zn"] = 6.0;
  const auto back = at_to_wt(wt_to_at(wt));
  for (std::size_t e = 0; e < kElementCount; ++e) EXPECT_NEAR(back.percent[e], wt.percent[e], 1e-10);
}

TEST(Composition, AlMgHalfHalf) {
  ElementComposition wt;
  wt.basis = Basis::Weight;
  wt["Al"] = 50.0;
  wt["Mg"] = 50.0;
  const auto at = wt_to_at(wt);
  EXPECT_NEAR(at["Al"], 47.39, 0.01);
  EXPECT_NEAR(at["Mg"], 52.61, 0.01);
}

TEST(Composition, RejectsOverfullTotal) {
  ElementComposition c;
  c["Al"] = 80.0;
  c["Mg"] = 30.0;
  EXPECT_THROW(c.validate(), ValidationError);
  EXPECT_FALSE(element_index("Xx").has_value());
  EXPECT_EQ(element_index("Fe"), 29u);
}

TEST(Rate, Conversions) {
  EXPECT_EQ(convert_rate(10.0, RateUnit::Mpy, RateUnit::Mmpy), 10.0 * 0.0254);
  EXPECT_EQ(convert_rate(10.0, RateUnit::Mmpy, RateUnit::Mpy), 10.0 / 0.0254);
  EXPECT_THROW(parse_rate_unit("ipy"), ValidationError);
}

TEST(GradeMap, LookupAndValidation) {
  GradeMap g;
  EXPECT_EQ(g.lookup('A'), 1.0);
  EXPECT_EQ(g.lookup('D'), 50.0);
  EXPECT_THROW(g.lookup('E'), ValidationError);
  g.rate_mpy = {1.0, 1.0, 2.0, 3.0};
  EXPECT_THROW(g.validate(), ValidationError);
}

TEST(CsvParse, ValidRows) {
  CsvOptions opt;
  const auto r = parse_csv_text(csv_with("s1,seawater,25,30,2.5,mpy,,95,5\n"
                                         "s2,tap_water,,,0.0254,mmpy,,99,1\n"
                                         "s3,salt_spray,,,,,C,98,2\n"),
                                opt);
  ASSERT_TRUE(r.errors.empty());
  ASSERT_EQ(r.dataset.size(), 3u);
  const auto& s = r.dataset.samples;
  EXPECT_EQ(s[0].rate_mpy, 2.5);
  EXPECT_EQ(*s[0].temperature_c, 25.0);
  EXPECT_NEAR(s[1].rate_mpy, 1.0, 1e-12);
  EXPECT_FALSE(s[1].duration_days.has_value());
  EXPECT_EQ(s[2].rate_mpy, 20.0);
  EXPECT_EQ(r.dataset.environment_names[static_cast<std::size_t>(s[0].environment)], "seawater");
}

TEST(CsvParse, CollectsEveryBadRow) {
  CsvOptions opt;
  const auto r = parse_csv_text(csv_with("s1,seawater,,,1,furlongs,,95,5\n"
                                         "s2,seawater,,,1,mpy,,95,5\n"
                                         "s3,moon,,,1,mpy,,95,5\n"
                                         "s2,seawater,,,1,mpy,,95,5\n"
                                         "s5,seawater,,,1,mpy,,95,15\n"),
                                opt);
  ASSERT_EQ(r.errors.size(), 4u);
  EXPECT_EQ(r.errors[0].row, 1u);
  EXPECT_NE(r.errors[0].message.find("furlongs"), std::string::npos);
  EXPECT_EQ(r.errors[1].row, 3u);
  EXPECT_EQ(r.errors[2].row, 4u);
  EXPECT_EQ(r.errors[3].row, 5u);
  EXPECT_EQ(r.dataset.size(), 1u);
}

TEST(CsvParse, BothRateAndGradeNotes) {
  const auto r = parse_csv_text(csv_with("s1,seawater,,,3,mpy,A,95,5\n"), CsvOptions{});
  ASSERT_EQ(r.notes.size(), 1u);
  EXPECT_EQ(r.dataset.samples[0].rate_mpy, 3.0);
}

TEST(CsvParse, StrictFloor) {
  CsvOptions opt;
  opt.strict = true;
  const auto r = parse_csv_text(csv_with("s1,seawater,,,3,mpy,,80,5\n"), opt);
  EXPECT_EQ(r.errors.size(), 1u);
}

TEST(CsvParse, MissingColumnThrows) {
  EXPECT_THROW(parse_csv_text("id,env\ns1,seawater\n", CsvOptions{}), ValidationError);
}

TEST(CsvParse, WeightUnitsConverted) {
  CsvOptions opt;
  opt.units = Basis::Weight;
  const auto r = parse_csv_text(csv_with("s1,seawater,,,3,mpy,,50,50\n"), opt);
  ASSERT_TRUE(r.errors.empty());
  EXPECT_NEAR(r.dataset.samples[0].composition["Al"], 47.39, 0.01);
}

TEST(CsvWrite, RoundTrip) {
  const Dataset d = generate_synthetic(20, 4, 0.1);
  const auto back = parse_csv_text(to_csv(d), CsvOptions{});
  ASSERT_TRUE(back.errors.empty());
  ASSERT_EQ(back.dataset.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    EXPECT_EQ(back.dataset.samples[i].id, d.samples[i].id);
    EXPECT_EQ(back.dataset.samples[i].rate_mpy, d.samples[i].rate_mpy);
    EXPECT_EQ(back.dataset.samples[i].composition.percent, d.samples[i].composition.percent);
    EXPECT_EQ(back.dataset.samples[i].temperature_c, d.samples[i].temperature_c);
  }
}

TEST(Synthetic, DeterministicAndValid) {
  const Dataset a = generate_synthetic(50, 9, 0.1), b = generate_synthetic(50, 9, 0.1);
  a.validate();
  ASSERT_EQ(a.size(), 50u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.samples[i].rate_mpy, b.samples[i].rate_mpy);
    EXPECT_GT(a.samples[i].rate_mpy, 0.0);
  }
  const Dataset c = generate_synthetic(50, 10, 0.1);
  EXPECT_NE(a.samples[0].rate_mpy, c.samples[0].rate_mpy);
}

TEST(Synthetic, NoiseFreeMatchesLogRate) {
  const Dataset d = generate_synthetic(10, 1, 0.0);
  for (const auto& s : d.samples)
    EXPECT_NEAR(std::log(s.rate_mpy), synthetic_log_rate(s.composition, s.environment), 1e-12);
}

TEST(Summary, Counts) {
  const Dataset d = generate_synthetic(40, 2, 0.1);
  const auto s = summarize(d);
  EXPECT_EQ(s.samples, 40u);
  std::size_t env_total = 0;
  for (auto c : s.environment_counts) env_total += c;
  EXPECT_EQ(env_total, 40u);
  EXPECT_LE(s.with_both, std::min(s.with_temperature, s.with_duration));
  EXPECT_FALSE(format_summary(s, d).empty());
}
