#include <gtest/gtest.h>

#include <sstream>

#include "coulomb/io.hpp"

using namespace coulomb;

TEST(Csv, HeaderPrecisionAndQuoting) {
    io::Table t{{"k", "value", "label", "ok"}, {}};
    t.add({1LL, 1.0 / 3.0, std::string("plain"), true});
    t.add({2LL, -4.0825e-7, std::string("with, comma"), false});
    std::ostringstream ss;
    io::write_csv(t, ss);
    const std::string s = ss.str();
    EXPECT_EQ(s,
              "k,value,label,ok\n"
              "1,0.333333333333333,plain,true\n"
              "2,-4.0825e-07,\"with, comma\",false\n");
    EXPECT_EQ(s.find('\r'), std::string::npos);
    EXPECT_THROW(t.add({1LL}), Error);
}

TEST(Csv, AtLeastTwelveSignificantDigits) {
    const double v = 0.123456789012345678;
    EXPECT_NEAR(std::stod(io::format_number(v)), v, 1e-15);
    EXPECT_EQ(io::format_number(INFINITY), "inf");
    EXPECT_EQ(io::format_number(std::nan("")), "nan");
}

TEST(Json, MirrorsTableRows) {
    io::Table t{{"lag", "cov"}, {}};
    t.add({0LL, 2.5});
    t.add({1LL, std::nan("")});
    const auto j = io::to_json(t);
    ASSERT_EQ(j.size(), 2u);
    EXPECT_EQ(j[0]["lag"], 0);
    EXPECT_DOUBLE_EQ(j[0]["cov"].get<double>(), 2.5);
    EXPECT_EQ(j[1]["cov"], "nan");
    EXPECT_EQ(j[0].begin().key(), "lag");
}

TEST(Paths, SiblingsAndManifest) {
    EXPECT_EQ(io::sibling("out/run.csv", "lags", ".csv").string(), "out/run.lags.csv");
    EXPECT_EQ(io::manifest_path("out/run.csv").string(), "out/run.manifest.json");
    EXPECT_EQ(io::manifest_path("run").string(), "run.manifest.json");
}
