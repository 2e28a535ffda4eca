#include "gma/errors.hpp"
#include "gma/report.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>

using namespace gma;

namespace {

CheckResult sample_row() {
  auto a = CheckResult::inequality("part.a", 2.0, 1.0, 1e-8);
  auto b = CheckResult::identity("part.b", 0.1, 0.1 + 1e-12, 1e-8);
  auto r = CheckResult::bundle("bundle", {a, b});
  r.add_term("fisher", 2.25);
  r.add_term("third_order", 1.0 / 3.0);
  r.notes.push_back("note with \"quotes\" and, commas");
  Vec p(2);
  p << 0.1, -4.0;
  r.samples = WorstSample{p, 1e-300};
  return r;
}

}  // namespace

TEST(Report, FormatDoubleRoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, 2.25, 1e-300, -7.5e12, 5e-324}) {
    EXPECT_EQ(std::strtod(format_double(v).c_str(), nullptr), v);
  }
  EXPECT_EQ(format_double(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_EQ(format_double(std::nan("")), "nan");
}

TEST(Report, JsonLineRoundTripIsExact) {
  auto r = sample_row();
  std::string line = to_json_line(r);
  EXPECT_EQ(line.find('\n'), std::string::npos);
  auto back = from_json_line(line);
  EXPECT_EQ(back.name, r.name);
  EXPECT_EQ(back.kind, r.kind);
  EXPECT_EQ(back.lhs, r.lhs);
  EXPECT_EQ(back.rhs, r.rhs);
  EXPECT_EQ(back.residual_or_slack, r.residual_or_slack);
  EXPECT_EQ(back.tolerance, r.tolerance);
  EXPECT_EQ(back.pass, r.pass);
  EXPECT_EQ(back.status, r.status);
  EXPECT_EQ(*back.term("third_order"), 1.0 / 3.0);
  EXPECT_EQ(back.notes, r.notes);
  ASSERT_TRUE(back.samples.has_value());
  EXPECT_EQ(back.samples->point[1], -4.0);
  ASSERT_EQ(back.parts.size(), 2u);
  EXPECT_EQ(back.parts[1].name, "part.b");
  EXPECT_EQ(to_json_line(back), line);
}

TEST(Report, FieldNames) {
  std::string line = to_json_line(CheckResult::identity("x", 1.0, 1.0, 1e-8));
  for (const char* key : {"\"name\"", "\"kind\"", "\"lhs\"", "\"rhs\"", "\"residual_or_slack\"",
                          "\"tolerance\"", "\"pass\""})
    EXPECT_NE(line.find(key), std::string::npos) << key;
}

TEST(Report, SkippedRowsSerializeNull) {
  auto s = CheckResult::skipped("third_deriv_bound", CheckKind::Inequality, "no third derivatives");
  std::string line = to_json_line(s);
  EXPECT_NE(line.find("\"lhs\":null"), std::string::npos);
  EXPECT_NE(line.find("\"status\":\"skipped\""), std::string::npos);
  auto back = from_json_line(line);
  EXPECT_TRUE(std::isnan(back.lhs));
  EXPECT_EQ(back.reason, "no third derivatives");
}

TEST(Report, MalformedLinesRejected) {
  EXPECT_THROW(from_json_line("{not json"), InvalidArgument);
  EXPECT_THROW(from_json_line("{\"name\":\"x\",\"kind\":\"equation\"}"), InvalidArgument);
}

TEST(Report, CsvHeaderAndQuoting) {
  std::vector<CheckResult> rows = {CheckResult::inequality("contraction[1,2]", 1.0, 0.5, 1e-8),
                                   CheckResult::skipped("s", CheckKind::Identity, "r")};
  std::string csv = to_csv(rows);
  EXPECT_EQ(csv.rfind("name,kind,lhs,rhs,residual_or_slack,tolerance,pass\n", 0), 0u);
  EXPECT_NE(csv.find("\"contraction[1,2]\",inequality,1,0.5,0.5,1e-08,true\n"), std::string::npos);
  EXPECT_NE(csv.find("s,identity,nan,nan,nan,0,skipped\n"), std::string::npos);
  EXPECT_EQ(csv_field("a\"b"), "\"a\"\"b\"");
}

TEST(Report, SortIsStableByName) {
  std::vector<CheckResult> rows = {CheckResult::identity("b", 1, 1, 0), CheckResult::identity("a", 1, 2, 0),
                                   CheckResult::identity("a", 1, 3, 0)};
  sort_by_name(rows);
  EXPECT_EQ(rows[0].name, "a");
  EXPECT_EQ(rows[0].rhs, 2.0);
  EXPECT_EQ(rows[1].rhs, 3.0);
  EXPECT_EQ(rows[2].name, "b");
}
