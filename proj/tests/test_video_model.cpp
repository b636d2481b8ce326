#include "fixtures.hpp"
#include "idnc/video_model.hpp"

#include <gtest/gtest.h>

using namespace idnc;

TEST(GopModel, DefaultShape) {
  const auto g = default_gop();
  EXPECT_EQ(g.layers(), 4u);
  EXPECT_EQ(g.packets(), 17u);
  EXPECT_DOUBLE_EQ(g.psnr(4), 35.64);
  EXPECT_EQ(g.layer_of(0), 1u);
  EXPECT_EQ(g.layer_of(7), 1u);
  EXPECT_EQ(g.layer_of(8), 2u);
  EXPECT_EQ(g.layer_of(16), 4u);
  EXPECT_THROW(g.layer_of(17), std::out_of_range);
}

TEST(GopModel, Validation) {
  EXPECT_THROW(GopModel({}, {30.0}), ConfigError);
  EXPECT_THROW(GopModel({2, 0}, {20, 25, 30}), ConfigError);
  EXPECT_THROW(GopModel({2, 1}, {20, 25}), ConfigError);
  EXPECT_THROW(GopModel({2, 1}, {20, 25, 25}), ConfigError);
  EXPECT_THROW(GopModel({2}, {20, 25}, 0.0), ConfigError);
  EXPECT_NO_THROW(GopModel({2}, {20, 25}, 1e6));
}

TEST(Packetize, CeilingDivision) {
  EXPECT_EQ(packetize({11700, 1400, 1401}), (std::vector<std::size_t>{9, 1, 2}));
  EXPECT_EQ(packetize({100}, 50), (std::vector<std::size_t>{2}));
  EXPECT_THROW(packetize({0}), ConfigError);
  EXPECT_THROW(packetize({10}, 0), ConfigError);
}

TEST(SlotsPerGop, Examples) {
  const double rate = 1500.0 * 8 * 30;
  EXPECT_EQ(slots_per_gop(rate), 8u);
  EXPECT_EQ(slots_per_gop(2 * rate), 16u);
  EXPECT_EQ(slots_per_gop(1000.0), 0u);
  EXPECT_THROW(slots_per_gop(0.0), ConfigError);
}

TEST(PacketImportance, LayerTruncation) {
  const auto g = default_gop();
  const auto d = packet_importance(g);
  ASSERT_EQ(d.size(), 17u);
  EXPECT_NEAR(d[0], 35.64 - 20.0, 1e-12);
  EXPECT_NEAR(d[16], 35.64 - 33.5, 1e-12);
  for (std::size_t l = 1; l < d.size(); ++l) EXPECT_LE(d[l], d[l - 1]);
  for (double x : d) EXPECT_GT(x, 0.0);
  const auto delta = importance_matrix(g, 3);
  EXPECT_EQ(delta.devices(), 3u);
  EXPECT_DOUBLE_EQ(delta(2, 9), d[9]);
}

TEST(DecodablePrefix, Examples) {
  const auto g = default_gop();
  PacketSet all(17);
  for (PacketId l = 0; l < 17; ++l) all[l] = l;
  EXPECT_EQ(decodable_prefix(g, all), 4u);
  EXPECT_DOUBLE_EQ(g.psnr(decodable_prefix(g, all)), 35.64);

  PacketSet no_top = all;
  no_top.erase(no_top.begin() + 15);
  EXPECT_EQ(decodable_prefix(g, no_top), 3u);

  PacketSet no_base = all;
  no_base.erase(no_base.begin() + 3);
  EXPECT_EQ(decodable_prefix(g, no_base), 0u);

  PacketSet two_layers(11);
  for (PacketId l = 0; l < 11; ++l) two_layers[l] = l;
  EXPECT_EQ(decodable_prefix(g, two_layers), 2u);
  EXPECT_EQ(decodable_prefix(g, {}), 0u);
}

TEST(DecodablePrefix, MonotoneInHasSet) {
  const auto g = GopModel({2, 2, 1}, {10, 20, 25, 28});
  rng::Generator gen(51);
  for (int trial = 0; trial < 500; ++trial) {
    PacketSet has;
    for (PacketId l = 0; l < 5; ++l)
      if (gen.uniform() < 0.6) has.push_back(l);
    const auto before = decodable_prefix(g, has);
    PacketSet more = has;
    more.push_back(gen.below(5));
    std::sort(more.begin(), more.end());
    more.erase(std::unique(more.begin(), more.end()), more.end());
    EXPECT_GE(decodable_prefix(g, more), before);
  }
}

TEST(QualityReport, MeanPsnr) {
  const auto g = GopModel({1, 1}, {20.0, 30.0, 35.64});
  const auto complete = StatusMatrix::from_rows({{0, 0}, {0, 0}, {0, 0}, {0, 0}});
  EXPECT_DOUBLE_EQ(quality_report(g, complete).mean_psnr, 35.64);

  const auto one_lost = StatusMatrix::from_rows({{1, 0}, {0, 0}, {0, 0}, {0, 0}});
  const auto r = quality_report(g, one_lost);
  EXPECT_NEAR(r.mean_psnr, (3 * 35.64 + 20.0) / 4, 1e-12);
  EXPECT_EQ(r.decoded_layers, (std::vector<std::size_t>{0, 2, 2, 2}));
  EXPECT_NEAR(r.residual_distortion[0], 15.64, 1e-12);
  EXPECT_DOUBLE_EQ(r.residual_distortion[1], 0.0);

  EXPECT_THROW(quality_report(default_gop(), complete), ConfigError);
}

TEST(QualityReport, DefaultGopTwoLayers) {
  const auto g = default_gop();
  std::vector<std::vector<int>> rows(2, std::vector<int>(17, 0));
  for (PacketId l = 11; l < 17; ++l) rows[0][l] = 1;
  const auto r = quality_report(g, StatusMatrix::from_rows(rows));
  EXPECT_DOUBLE_EQ(r.psnr[0], g.psnr(2));
  EXPECT_DOUBLE_EQ(r.psnr[1], 35.64);
}

TEST(QualityReport, MeanPsnrGrowsWithReception) {
  const auto g = GopModel({2, 1, 1}, {18, 26, 31, 34});
  rng::Generator gen(52);
  for (int trial = 0; trial < 300; ++trial) {
    auto f = fixtures::random_gsm(4, 4, 0.5, gen);
    const double before = quality_report(g, f).mean_psnr;
    const DeviceId k = gen.below(4);
    const auto wants = wants_set(f, k);
    if (wants.empty()) continue;
    f.mark_received(k, wants[gen.below(wants.size())]);
    EXPECT_GE(quality_report(g, f).mean_psnr, before);
  }
}
