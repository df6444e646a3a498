#include <torsion_lab/experiments.hpp>
#include <torsion_lab/io.hpp>

#include <gtest/gtest.h>

using namespace tlab;

TEST(Format, RoundTripsDoubles) {
  for (double v : {0.1, 1.0 / 3, -2.5e-300, 6.02214076e23, 1e-16, 123456789.0}) {
    std::string s = format_double(v);
    EXPECT_EQ(parse_number("x", s), v) << s;
  }
  EXPECT_EQ(format_double(NAN), "nan");
  EXPECT_EQ(format_double(-INFINITY), "-inf");
}

TEST(Table, CsvLayout) {
  Table t({"Name", "Value", "Count"});
  t.add({std::string("a,b"), 0.5, 3LL});
  t.add({std::string("say \"hi\""), -1.0, -7LL});
  EXPECT_EQ(t.csv(), "name,value,count\n\"a,b\",0.5,3\n\"say \"\"hi\"\"\",-1,-7\n");
}

TEST(Table, RowWidthChecked) {
  Table t({"a", "b"});
  EXPECT_THROW(t.add({1.0}), Error);
}

TEST(Table, JsonKeepsColumnOrder) {
  Table t({"z", "a"});
  t.add({1.0, std::string("x")});
  EXPECT_EQ(t.json().dump(), "[{\"z\":1.0,\"a\":\"x\"}]");
}

TEST(Config, ParsesKeyValueWithComments) {
  auto m = parse_flat_config("# header\nbirth-death.a = 1000  # amplitude\n\n  seed=5\r\n");
  ASSERT_EQ(m.size(), 2u);
  EXPECT_EQ(m.at("birth-death.a"), "1000");
  EXPECT_EQ(m.at("seed"), "5");
}

TEST(Config, MalformedLineRejected) {
  EXPECT_THROW(parse_flat_config("a=1\nthis line has no equals\n"), Error);
  EXPECT_THROW(parse_flat_config("=3\n"), Error);
}

TEST(Config, StrictNumbers) {
  EXPECT_THROW(parse_number("k", "1.5x"), Error);
  EXPECT_THROW(parse_number("k", ""), Error);
  EXPECT_EQ(parse_number("k", "-2e3"), -2000.0);
}

TEST(Params, DefaultsResolve) {
  for (const auto& ex : experiments()) EXPECT_NO_THROW(resolve_params(ex, {})) << ex.name;
}

TEST(Params, UnknownKeyRejected) {
  EXPECT_THROW(resolve_params(find_experiment("birth-death"), {{"bogus", "1"}}), Error);
  EXPECT_THROW(find_experiment("no-such-experiment"), Error);
}

TEST(Params, RangeEnumAndIntegerChecks) {
  const Experiment& bd = find_experiment("birth-death");
  EXPECT_THROW(resolve_params(bd, {{"r2", "0.08"}}), Error);
  EXPECT_THROW(resolve_params(bd, {{"a", "nan"}}), Error);
  EXPECT_THROW(resolve_params(find_experiment("anomaly"), {{"family", "other"}}), Error);
  EXPECT_THROW(resolve_params(find_experiment("suspension"), {{"n", "3"}}), Error);
  EXPECT_THROW(resolve_params(find_experiment("cheeger-muller"), {{"theta", "0"}}), Error);
  EXPECT_THROW(resolve_params(find_experiment("torsion"), {{"samples", "2.5"}}), Error);
}

TEST(Params, CanonicalConfigIsSorted) {
  const Experiment& ex = find_experiment("cheeger-muller");
  ParamSet a = resolve_params(ex, {{"theta", "1.5"}});
  std::string c = canonical_config(ex.name, a, 7);
  EXPECT_EQ(c.rfind("experiment=cheeger-muller\nseed=7\n", 0), 0u);
  EXPECT_NE(c.find("cheeger-muller.theta=1.5\n"), std::string::npos);
}

TEST(Experiments, DeterministicForFixedSeed) {
  const Experiment& ex = find_experiment("torsion");
  ParamSet p = resolve_params(ex, {});
  EXPECT_EQ(ex.run(p, 42).table.csv(), ex.run(p, 42).table.csv());
  EXPECT_NE(ex.run(p, 42).table.csv(), ex.run(p, 43).table.csv());
}
