#include <gtest/gtest.h>

#include <random>

#include "mgsim/core.hpp"

using namespace mgsim;

TEST(LeaseContains, HitInsideLease) { EXPECT_TRUE(lease_contains(8, 0, 10)); }

TEST(LeaseContains, ExpiredLease) { EXPECT_FALSE(lease_contains(11, 0, 7)); }

TEST(LeaseContains, ZeroLeaseContainsOnlyZero) {
  EXPECT_TRUE(lease_contains(0, 0, 0));
  EXPECT_FALSE(lease_contains(1, 0, 0));
}

TEST(LeaseContains, BelowWtsIsOutside) { EXPECT_FALSE(lease_contains(7, 8, 12)); }

TEST(LeaseContains, InvertedLeaseAborts) { EXPECT_THROW(lease_contains(5, 9, 3), ProtocolError); }

TEST(AdvanceCts, MovesForward) { EXPECT_EQ(advance_cts(0, 8), 8u); }
TEST(AdvanceCts, OlderResponseLeavesCts) { EXPECT_EQ(advance_cts(8, 0), 8u); }
TEST(AdvanceCts, L2KeepsLargerCts) { EXPECT_EQ(advance_cts(11, 8), 11u); }

TEST(TsAdd, PlainSum) { EXPECT_EQ(ts_add(7, 5), (TsAddResult{12, false})); }
TEST(TsAdd, ForcedWrap) { EXPECT_EQ(ts_add(65535, 1), (TsAddResult{0, true})); }
TEST(TsAdd, AnySumPastMaxWraps) { EXPECT_EQ(ts_add(65530, 10), (TsAddResult{0, true})); }
TEST(TsAdd, ExactMaxDoesNotWrap) { EXPECT_EQ(ts_add(65530, 5), (TsAddResult{65535, false})); }

TEST(TsAdd, MatchesIntegerOracle) {
  std::mt19937 rng(7);
  std::uniform_int_distribution<std::uint32_t> ts(0, 65535), d(1, 70000);
  for (int i = 0; i < 10000; ++i) {
    const std::uint32_t a = ts(rng), b = d(rng);
    const TsAddResult r = ts_add(a, b);
    if (a + b <= 65535) {
      EXPECT_EQ(r, (TsAddResult{static_cast<Timestamp>(a + b), false}));
    } else {
      EXPECT_EQ(r, (TsAddResult{0, true}));
    }
  }
}

TEST(AdvanceCtsProperty, IdempotentAndMonotone) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 10000; ++i) {
    const CacheTime c = rng() % 200000;
    const auto w = static_cast<Timestamp>(rng());
    const CacheTime once = advance_cts(c, w);
    EXPECT_EQ(advance_cts(once, w), once);
    EXPECT_GE(once, c);
    EXPECT_GE(once, w);
  }
}

TEST(LeaseProperty, WideningRtsKeepsHit) {
  std::mt19937 rng(3);
  for (int i = 0; i < 10000; ++i) {
    const auto w = static_cast<Timestamp>(rng() % 1000);
    const auto r = static_cast<Timestamp>(w + rng() % 1000);
    const CacheTime c = rng() % 2500;
    if (!lease_contains(c, w, r)) continue;
    for (Timestamp r2 = r; r2 < r + 50; ++r2) EXPECT_TRUE(lease_contains(c, w, r2));
  }
}

TEST(BlockAddress, TruncatesToBlock) {
  EXPECT_EQ(BlockAddress::from_byte(0x1047).value(), 0x1040u);
  EXPECT_EQ(BlockAddress::from_byte(0x1040).value() % kBlockBytes, 0u);
  EXPECT_EQ(BlockAddress::from_byte(130).block_number(), 2u);
}

TEST(WriteIdTest, UniqueAndNonInitial) {
  EXPECT_TRUE(WriteId::initial().is_initial());
  EXPECT_FALSE(WriteId::make(0, 0).is_initial());
  EXPECT_NE(WriteId::make(0, 1), WriteId::make(1, 0));
  EXPECT_NE(WriteId::make(2, 5), WriteId::make(2, 6));
}

TEST(LeaseConfigTest, RejectsZeroLeases) {
  LeaseConfig c;
  EXPECT_NO_THROW(c.validate());
  c.rd_lease = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c.rd_lease = 1;
  c.wr_lease = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(LeaseConfigTest, OverrideByAddress) {
  LeaseConfig c;
  c.rd_override[0x1040] = 7;
  EXPECT_EQ(c.read_lease_for(BlockAddress::from_byte(0x1040)), 7);
  EXPECT_EQ(c.read_lease_for(BlockAddress::from_byte(0x1000)), 10);
}
