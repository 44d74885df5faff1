#include <gtest/gtest.h>

#include <sstream>

#include "hashednets/error.hpp"
#include "hashednets/experiment.hpp"
#include "hashednets/model_io.hpp"

using namespace hashednets;

namespace {

Network mixed_network() {
  std::vector<std::unique_ptr<Layer>> layers;
  layers.push_back(std::make_unique<HashedLayer>(8, 7, HashSpec{123456789012345ULL, 0, 19}));
  layers.push_back(std::make_unique<EdgeRemovedLayer>(7, 6, 20, 55));
  layers.push_back(std::make_unique<LowRankLayer>(6, 5, 2, 0xFFFFFFFFFFFFFFF1ULL));
  std::vector<std::uint32_t> buckets(4 * 6);
  std::vector<std::int8_t> signs(4 * 6);
  for (std::size_t k = 0; k < buckets.size(); ++k) {
    buckets[k] = static_cast<std::uint32_t>((k * 7) % 5);
    signs[k] = k % 3 == 0 ? -1 : 1;
  }
  layers.push_back(std::make_unique<HashedLayer>(5, 4, BucketAssignment::table(5, 6, buckets, signs), false,
                                                 IndexMode::precomputed));
  layers.push_back(std::make_unique<StandardLayer>(4, 3));
  Network net(std::move(layers), ActivationKind::sigmoid);
  net.init_weights(9);
  Rng rng(4);
  for (std::size_t l = 0; l < net.layer_count(); ++l)
    for (double& p : net.layer(l).params()) p += rng.uniform(-0.1, 0.1);
  return net;
}

std::string serialize(const Network& net) {
  std::ostringstream out;
  save_model(net, out);
  return out.str();
}

}  // namespace

TEST(ModelIo, RoundTripIsBitIdentical) {
  const Network net = mixed_network();
  const std::string bytes = serialize(net);
  EXPECT_EQ(bytes.substr(0, 8), "HSHNET01");
  std::istringstream in(bytes);
  const Network back = load_model(in);
  ASSERT_EQ(back.layer_count(), net.layer_count());
  EXPECT_EQ(back.hidden_activation(), ActivationKind::sigmoid);
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    Matrix a, b;
    net.layer(l).materialize(a);
    back.layer(l).materialize(b);
    EXPECT_EQ(a, b) << "layer " << l;
    EXPECT_EQ(back.layer(l).kind(), net.layer(l).kind());
  }
  Matrix x(3, 8, 0.25);
  EXPECT_EQ(net.logits(x), back.logits(x));
  EXPECT_EQ(serialize(back), bytes);
}

TEST(ModelIo, FileRoundTrip) {
  const Network net = mixed_network();
  const auto path = std::filesystem::temp_directory_path() / "hashednets_model_io_roundtrip.bin";
  save_model(net, path);
  const Network back = load_model(path);
  EXPECT_EQ(serialize(back), serialize(net));
  std::filesystem::remove(path);
}

TEST(ModelIo, RejectsBadMagic) {
  std::string bytes = serialize(mixed_network());
  bytes[0] = 'X';
  std::istringstream in(bytes);
  EXPECT_THROW(load_model(in), FormatError);
}

TEST(ModelIo, RejectsTruncatedPayload) {
  const std::string bytes = serialize(mixed_network());
  std::istringstream in(bytes.substr(0, bytes.size() - 5));
  EXPECT_THROW(load_model(in), FormatError);
}

TEST(ModelIo, RejectsMalformedHeader) {
  std::string bytes = serialize(mixed_network());
  bytes[16] = '#';
  std::istringstream in(bytes);
  EXPECT_THROW(load_model(in), FormatError);
  std::istringstream empty("");
  EXPECT_THROW(load_model(empty), FormatError);
  EXPECT_THROW(load_model(std::filesystem::path("/nonexistent/model.bin")), FormatError);
}
