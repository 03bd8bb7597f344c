#include "uavtl/radiomap.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "support/test_util.hpp"
#include "uavtl/config.hpp"
#include "uavtl/random.hpp"

namespace uavtl::radiomap {
namespace {

using uavtl::testing::data_path;
using uavtl::testing::throws_error;

RawGrid random_grid(Rng& rng, double missing_rate) {
  RawGrid g;
  g.geometry = {static_cast<int>(1 + uniform_index(rng, 12)), static_cast<int>(1 + uniform_index(rng, 12)), 5.0, 0.0,
                0.0};
  const std::size_t n = g.geometry.cell_count();
  g.values.resize(n);
  g.missing.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    g.values[i] = uniform(rng, -20.0, 30.0);
    g.missing[i] = uniform01(rng) < missing_rate;
  }
  g.missing[uniform_index(rng, n)] = false;
  return g;
}

TEST(GridFormat, ParsesHeaderValuesAndMissingCells) {
  const RawGrid g = parse_grid("GRID v1 3 2 5 10 20\n1.5 NA -2\n0 3e1 4\n");
  EXPECT_EQ(g.geometry, (GridGeometry{3, 2, 5.0, 10.0, 20.0}));
  EXPECT_EQ(g.missing_count(), 1u);
  EXPECT_TRUE(g.missing[1]);
  EXPECT_DOUBLE_EQ(g.values[g.geometry.index(1, 1)], 30.0);
  EXPECT_DOUBLE_EQ(g.values[g.geometry.index(2, 0)], -2.0);
}

TEST(GridFormat, RoundTripIsExact) {
  Rng rng(5);
  for (int k = 0; k < 20; ++k) {
    RawGrid g = random_grid(rng, 0.2);
    for (std::size_t i = 0; i < g.values.size(); ++i)
      if (g.missing[i]) g.values[i] = 0.0;
    const RawGrid back = parse_grid(serialize_grid(g));
    EXPECT_EQ(back, g);
    EXPECT_EQ(serialize_grid(back), serialize_grid(g));
  }
}

TEST(GridFormat, DimensionMismatchNamesBothCounts) {
  EXPECT_TRUE(throws_error(ErrorKind::parse, "header declares 3x2 = 6 values in 2 rows, found 3 values in 1 rows",
                           [] { parse_grid("GRID v1 3 2 5 0 0\n1 2 3\n"); }));
}

TEST(GridFormat, RaggedRowIsReportedWithLine) {
  EXPECT_TRUE(throws_error(ErrorKind::parse, "line 2 (row 0): expected 3 values, found 4",
                           [] { parse_grid("GRID v1 3 2 5 0 0\n1 2 3 4\n1 2\n"); }));
  EXPECT_TRUE(throws_error(ErrorKind::parse, "found 5 values in 2 rows",
                           [] { parse_grid("GRID v1 3 2 5 0 0\n1 2 3\n1 2\n"); }));
}

TEST(GridFormat, BadTokenCarriesCoordinates) {
  EXPECT_TRUE(throws_error(ErrorKind::parse, "line 3 (row 1, col 2): cannot parse 'x7'",
                           [] { parse_grid("GRID v1 3 2 5 0 0\n1 2 3\n4 5 x7\n"); }));
}

TEST(GridFormat, RejectsMalformedHeader) {
  EXPECT_TRUE(throws_error(ErrorKind::parse, "line 1", [] { parse_grid("GRID v2 1 1 5 0 0\n1\n"); }));
  EXPECT_TRUE(throws_error(ErrorKind::parse, "line 1", [] { parse_grid("GRID v1 0 1 5 0 0\n"); }));
  EXPECT_TRUE(throws_error(ErrorKind::parse, "empty input", [] { parse_grid(""); }));
}

TEST(OutageFormat, RejectsMissingAndOutOfRangeValues) {
  EXPECT_TRUE(throws_error(ErrorKind::parse, "cannot parse 'NA'", [] { parse_outage("OUTAGE v1 2 1 5 0 0\n0.5 NA\n"); }));
  EXPECT_TRUE(throws_error(ErrorKind::parse, "line 2 (row 0, col 1): outage value outside [0,1]", [] { parse_outage("OUTAGE v1 2 1 5 0 0\n0.5 1.5\n"); }));
  const OutageMap m = parse_outage("OUTAGE v1 2 1 5 0 0\n0 1\n");
  EXPECT_EQ(parse_outage(serialize_outage(m)), m);
}

TEST(Median, EvenCountTakesMeanOfCentralPair) {
  EXPECT_DOUBLE_EQ(median({4.0, 1.0, 3.0, 2.0}), 2.5);
  EXPECT_DOUBLE_EQ(median({5.0, -1.0, 2.0}), 2.0);
  EXPECT_TRUE(throws_error(ErrorKind::data, "empty", [] { median({}); }));
}

TEST(MedianFill, UsesPresentNeighboursOnly) {
  const RawGrid g = parse_grid("GRID v1 3 3 1 0 0\n1 2 3\n4 NA 6\n7 8 9\n");
  const SinrGrid f = median_fill(g);
  EXPECT_DOUBLE_EQ(f.at(1, 1), 5.0);
}

TEST(MedianFill, LaterSweepsReachCellsWithoutPresentNeighbours) {
  // The last cell has no present neighbour until the first sweep fills the middle one.
  RawGrid g = parse_grid("GRID v1 3 1 1 0 0\n2 NA NA\n");
  EXPECT_EQ(median_fill(g).values, (std::vector<double>{2.0, 2.0, 2.0}));
  EXPECT_TRUE(throws_error(ErrorKind::data, "every cell", [] { median_fill(parse_grid("GRID v1 2 1 1 0 0\nNA NA\n")); }));
}

TEST(MedianFill, PropertiesOnRandomGrids) {
  Rng rng(17);
  for (int k = 0; k < 100; ++k) {
    const RawGrid g = random_grid(rng, 0.3);
    const SinrGrid f = median_fill(g);
    ASSERT_EQ(f.values.size(), g.values.size());
    for (std::size_t i = 0; i < g.values.size(); ++i) {
      ASSERT_TRUE(std::isfinite(f.values[i]));
      if (!g.missing[i]) ASSERT_EQ(f.values[i], g.values[i]);
    }
    EXPECT_EQ(median_fill(to_raw(f)), f);
  }
}

struct Golden {
  std::string name;
  int cols;
  int rows;
  double gamma_th_db;
};

class GoldenPipeline : public ::testing::TestWithParam<Golden> {};

TEST_P(GoldenPipeline, MatchesOracleFiles) {
  const Golden& p = GetParam();
  const RawGrid raw = read_grid_file(data_path(p.name + ".grid"));
  EXPECT_GE(raw.missing_count(), 3u);
  const SinrGrid filled = median_fill(raw);
  const RawGrid want_filled = read_grid_file(data_path(p.name + ".filled.grid"));
  EXPECT_EQ(want_filled.missing_count(), 0u);
  EXPECT_EQ(filled.geometry, want_filled.geometry);
  EXPECT_EQ(filled.values, want_filled.values);

  const SinrGrid rescaled = rescale(filled, p.cols, p.rows);
  const RawGrid want_rescaled = read_grid_file(data_path(p.name + ".rescaled.grid"));
  EXPECT_EQ(rescaled.geometry, want_rescaled.geometry);
  EXPECT_EQ(rescaled.values, want_rescaled.values);

  EXPECT_EQ(sinr_to_outage(filled, p.gamma_th_db), read_outage_file(data_path(p.name + ".outage")));
  EXPECT_EQ(config::ingest(raw, p.gamma_th_db, p.cols, p.rows),
            read_outage_file(data_path(p.name + ".rescaled.outage")));
}

INSTANTIATE_TEST_SUITE_P(Fixtures, GoldenPipeline,
                         ::testing::Values(Golden{"fixture_a", 7, 7, 3.0}, Golden{"fixture_b", 3, 3, 0.0}),
                         [](const auto& info) { return info.param.name; });

TEST(Rescale, IdentityDimensionsReturnTheInput) {
  Rng rng(3);
  for (int k = 0; k < 10; ++k) {
    const SinrGrid g = median_fill(random_grid(rng, 0.0));
    EXPECT_EQ(rescale(g, g.geometry.cols, g.geometry.rows), g);
  }
}

TEST(Rescale, ReceiverGridToMapCells) {
  SinrGrid g{{192, 126, 5.0, 0.0, 0.0}, std::vector<double>(192 * 126, 1.0)};
  const SinrGrid r = rescale(g, 192, 126);
  EXPECT_DOUBLE_EQ(r.geometry.width_m(), 960.0);
  EXPECT_DOUBLE_EQ(r.geometry.height_m(), 630.0);
}

TEST(Rescale, StaysWithinSourceRangeAndKeepsCorners) {
  Rng rng(11);
  for (int k = 0; k < 30; ++k) {
    const SinrGrid g = median_fill(random_grid(rng, 0.0));
    const int c = static_cast<int>(1 + uniform_index(rng, 20)), r = static_cast<int>(1 + uniform_index(rng, 20));
    const SinrGrid out = rescale(g, c, r);
    const auto [lo, hi] = std::minmax_element(g.values.begin(), g.values.end());
    for (double v : out.values) {
      ASSERT_GE(v, *lo);
      ASSERT_LE(v, *hi);
    }
    EXPECT_NEAR(out.geometry.width_m(), g.geometry.width_m(), 1e-9);
    if (c > 1 && r > 1 && g.geometry.cols > 1 && g.geometry.rows > 1) {
      EXPECT_EQ(out.at(0, 0), g.at(0, 0));
      EXPECT_EQ(out.at(c - 1, r - 1), g.at(g.geometry.cols - 1, g.geometry.rows - 1));
    }
  }
  EXPECT_TRUE(throws_error(ErrorKind::usage, "positive", [] { rescale(SinrGrid{{1, 1, 1, 0, 0}, {0.0}}, 0, 1); }));
}

TEST(Outage, RayleighFormAtReferencePoints) {
  EXPECT_DOUBLE_EQ(outage_probability(3.0, 3.0), 1.0 - std::exp(-1.0));
  EXPECT_NEAR(outage_probability(13.0, 3.0), 1.0 - std::exp(-0.1), 1e-15);
  EXPECT_NEAR(outage_probability(-7.0, 3.0), 1.0 - std::exp(-10.0), 1e-15);
}

TEST(Outage, BoundedAndStrictlyDecreasingInSinr) {
  double prev = 2.0;
  for (double s = -40.0; s <= 60.0; s += 0.25) {
    const double p = outage_probability(s, 0.0);
    ASSERT_LE(p, prev) << "at " << s << " dB";
    prev = p;
  }
  // Strict while the exponent is representable away from 1.
  prev = 2.0;
  for (double s = -15.0; s <= 60.0; s += 0.25) {
    const double p = outage_probability(s, 0.0);
    ASSERT_GE(p, 0.0);
    ASSERT_LE(p, 1.0);
    ASSERT_LT(p, prev) << "at " << s << " dB";
    prev = p;
  }
  EXPECT_TRUE(throws_error(ErrorKind::domain, "finite", [] {
    sinr_to_outage(SinrGrid{{1, 1, 1, 0, 0}, {0.0}}, std::nan(""));
  }));
}

TEST(Locate, SharedEdgesGoToTheLowerIndex) {
  const GridGeometry g{4, 3, 10.0, 0.0, 0.0};
  EXPECT_EQ(locate(g, {10.0, 5.0}), (CellIndex{0, 0}));
  EXPECT_EQ(locate(g, {10.0001, 20.0}), (CellIndex{1, 1}));
  EXPECT_EQ(locate(g, {0.0, 0.0}), (CellIndex{0, 0}));
  EXPECT_EQ(locate(g, {40.0, 30.0}), (CellIndex{3, 2}));
  EXPECT_EQ(locate(g, {35.0, 25.0}), (CellIndex{3, 2}));
  EXPECT_TRUE(throws_error(ErrorKind::domain, "outside", [&] { locate(g, {40.5, 1.0}); }));
  EXPECT_TRUE(throws_error(ErrorKind::domain, "outside", [&] { locate(g, {1.0, -0.1}); }));
}

TEST(Locate, OutageAtReadsTheContainingCell) {
  const OutageMap m = parse_outage("OUTAGE v1 2 2 10 100 200\n0.1 0.2\n0.3 0.4\n");
  EXPECT_DOUBLE_EQ(outage_at(m, {115.0, 212.0}), 0.4);
  EXPECT_DOUBLE_EQ(outage_at(m, {110.0, 210.0}), 0.1);
}

}  // namespace
}  // namespace uavtl::radiomap
