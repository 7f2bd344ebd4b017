#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace ebstab;
using oracle::v2;

TEST(Report, InfinitiesAreStrings) {
  EXPECT_EQ(num(kInf).dump(), "\"inf\"");
  EXPECT_EQ(num(-kInf).dump(), "\"-inf\"");
  EXPECT_EQ(num(0.5).dump(), "0.5");
  EXPECT_EQ(csv_number(kInf), "inf");
  EXPECT_EQ(csv_number(-kInf), "-inf");
  EXPECT_EQ(csv_number(0.1), "0.10000000000000001");
}

TEST(Report, InfiniteLocalModulusSerializes) {
  const ModulusEstimate e = local_modulus(fixtures::remark31(), Vector::Zero(1), {}, 100, 42);
  const Json j = to_json(e);
  EXPECT_EQ(j["value"], "inf");
  EXPECT_EQ(j["scope"], "Local");
  EXPECT_EQ(j["radius_schedule"].size(), 3u);
}

TEST(Report, CsvTableLayout) {
  CsvTable t({"a", "b"});
  t.add({"1", "x y"});
  t.add({csv_number(2.5), csv_number(kInf)});
  EXPECT_EQ(t.str(), "a,b\n1,x y\n2.5,inf\n");
  EXPECT_THROW(t.add({"only one"}), Error);
}

TEST(Report, SubsetTableCsv) {
  const System sys = fixtures::example1();
  const HoffmanReport r = subset_tau(sys, SubsetMode::AllSubsets);
  const std::string s = subset_table_csv(sys, r).str();
  std::istringstream in(s);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "subset,theta,direction,branch,realizable");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 7);
  EXPECT_NE(s.find("\n1 2 3,"), std::string::npos);
}

TEST(Report, SampleTraceCsv) {
  SamplingOptions opt;
  opt.record_trace = true;
  const ModulusEstimate e = global_modulus(fixtures::example1(), Box::cube(2, -5, 5), 50, 42, opt);
  EXPECT_EQ(static_cast<int>(e.trace.size()), e.infeasible_samples);
  EXPECT_GT(e.infeasible_samples, 0);
  const std::string s = samples_csv(e).str();
  EXPECT_EQ(s.substr(0, s.find('\n')), "index,x,f,distance,value,refined");
}

TEST(Report, VerdictJsonCarriesWitnessBound) {
  const System sys = fixtures::example2();
  const Json j = to_json(sys, local_stability_verdict(sys, v2(0, 0), 0.1));
  EXPECT_EQ(j["classification"], "Unstable");
  EXPECT_TRUE(j["witness"]["within_bound"].get<bool>());
  EXPECT_DOUBLE_EQ(j["witness"]["replay_bound"].get<double>(), 0.5);
  EXPECT_EQ(j["active"], Json::array({"1", "2"}));
}

TEST(Repro, PayloadsAreDeterministic) {
  ReproOptions opt;
  opt.samples = 600;
  opt.sphere_resolution = 20000;
  for (const char* name : {"example1", "example2", "remark31", "remark32"}) {
    const std::string a = repro_case(name, opt).dump(2);
    const std::string b = repro_case(name, opt).dump(2);
    EXPECT_EQ(a, b) << name;
  }
}

TEST(Repro, ExampleOneReferenceTable) {
  ReproOptions opt;
  opt.samples = 500;
  opt.sphere_resolution = 20000;
  const Json j = repro_example1(opt);
  EXPECT_NE(j.dump().find("reference"), std::string::npos);
  EXPECT_THROW(repro_case("example9", opt), Error);
}
