#include <gtest/gtest.h>

#include <cmath>

#include "hopgat/errors.hpp"
#include "hopgat/hop_codec.hpp"

using namespace hopgat;

namespace {

void expect_row(const HopEncodingTable& t, int hv, const std::vector<double>& want) {
  const auto row = t.lookup(hv);
  ASSERT_EQ(row.size(), want.size());
  for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(row[i], want[i], 1e-15) << "hv " << hv << " col " << i;
}

}  // namespace

// Reference rows computed independently with numpy.
TEST(HopCodecTest, FrozenRowsWidthFour) {
  const HopEncodingTable t(4, 2);
  expect_row(t, 0, {0.0, 0.0, 1.0, 1.0});
  expect_row(t, 1, {0.8414709848078965, 0.479425538604203, 0.5403023058681398, 0.8775825618903728});
  expect_row(t, 2, {0.9092974268256817, 0.8414709848078965, -0.4161468365471424, 0.5403023058681398});
}

TEST(HopCodecTest, FrozenRowWidthEight) {
  const HopEncodingTable t(8, 3);
  expect_row(t, 2, {0.9092974268256817, 0.9831062042907308, 0.8200507624277859, 0.618369803069737,
                    -0.4161468365471424, 0.18303603766764603, 0.5722907888841189, 0.785887260776948});
}

TEST(HopCodecTest, HopZeroIsSinZerosThenCosOnes) {
  const HopEncodingTable t(10, 4);
  const auto row = t.lookup(0);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(row[i], 0.0);
    EXPECT_EQ(row[i + 5], 1.0);
  }
}

TEST(HopCodecTest, RowsHaveUnitPairNorms) {
  const HopEncodingTable t(6, 5);
  for (int hv = 0; hv <= 5; ++hv) {
    const auto row = t.lookup(hv);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(row[i] * row[i] + row[i + 3] * row[i + 3], 1.0, 1e-15);
  }
  EXPECT_DOUBLE_EQ(t.frequency(0), 1.0);
  EXPECT_NEAR(t.frequency(2), 1.0 / 5.0, 1e-15);
}

TEST(HopCodecTest, InvalidArguments) {
  EXPECT_THROW(HopEncodingTable(3, 2), ConfigError);
  EXPECT_THROW(HopEncodingTable(0, 2), ConfigError);
  EXPECT_THROW(HopEncodingTable(4, 1), ConfigError);
  const HopEncodingTable t(4, 2);
  EXPECT_THROW(t.lookup(3), UsageError);
  EXPECT_THROW(t.lookup(-1), UsageError);
}

TEST(HopCodecTest, TableWidthRoundsUpToEven) {
  EXPECT_EQ(hop_table_width(1), 2u);
  EXPECT_EQ(hop_table_width(2), 2u);
  EXPECT_EQ(hop_table_width(7), 8u);
  EXPECT_EQ(hop_table_width(121), 122u);
  EXPECT_EQ(hop_table_width(256), 256u);
}
