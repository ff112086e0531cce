#include <gtest/gtest.h>

#include <filesystem>

#include "grnn/checkpoint.hpp"
#include "grnn/linkage.hpp"

using namespace grnn;

namespace {

Checkpoint sample() {
  Checkpoint c;
  c.params = init_params(3, 4, 1, 9);
  c.alpha = 0.25;
  c.nodes = {"a", "b", "c", "d"};
  c.hidden = init_hidden(3, 4, 11);
  c.hidden_timestamp = 17;
  c.normalizer = Normalizer{-2.5, 80.0};
  c.extra = {{"run.note", std::string("x")}, {"run.big", std::int64_t{-5}}, {"run.list", std::vector<std::string>{"p", ""}}};
  return c;
}

}  // namespace

TEST(Checkpoint, SaveLoadSaveIsByteExact) {
  const auto bytes = encode_checkpoint(sample());
  const auto back = decode_checkpoint(bytes);
  EXPECT_EQ(encode_checkpoint(back), bytes);
  EXPECT_EQ(back.hidden, sample().hidden);
  EXPECT_EQ(back.params.update_state, sample().params.update_state);
  EXPECT_EQ(back.hidden_timestamp, 17);
  ASSERT_TRUE(back.normalizer.has_value());
  EXPECT_EQ(back.normalizer->min, -2.5);
  EXPECT_EQ(back.alpha, 0.25);
}

TEST(Checkpoint, FileRoundTrip) {
  const auto path = (std::filesystem::temp_directory_path() / "grnn_ckpt_test.bin").string();
  save_checkpoint(path, sample());
  EXPECT_EQ(encode_checkpoint(load_checkpoint(path)), encode_checkpoint(sample()));
  std::filesystem::remove(path);
}

TEST(Checkpoint, NonFiniteAndExtremeValuesSurvive) {
  auto c = sample();
  c.hidden(0, 0) = -0.0;
  c.hidden(1, 1) = std::numeric_limits<double>::denorm_min();
  c.hidden(2, 2) = std::numeric_limits<double>::max();
  const auto back = decode_checkpoint(encode_checkpoint(c));
  EXPECT_TRUE(std::signbit(back.hidden(0, 0)));
  EXPECT_EQ(back.hidden(1, 1), c.hidden(1, 1));
  EXPECT_EQ(back.hidden(2, 2), c.hidden(2, 2));
}

TEST(Checkpoint, CorruptInputsRejected) {
  const auto bytes = encode_checkpoint(sample());
  EXPECT_THROW(decode_checkpoint("NOTACKPT"), ValidationError);
  EXPECT_THROW(decode_checkpoint(bytes.substr(0, bytes.size() - 3)), ValidationError);
  EXPECT_THROW(decode_checkpoint(bytes + "x"), ValidationError);
  auto wrong_version = bytes;
  wrong_version[8] = 9;
  EXPECT_THROW(decode_checkpoint(wrong_version), ValidationError);
  EXPECT_THROW(load_checkpoint("/nonexistent/ckpt.bin"), std::exception);
}

TEST(Checkpoint, ShapeMismatchRejectedOnWrite) {
  auto c = sample();
  c.nodes.pop_back();
  EXPECT_THROW(encode_checkpoint(c), std::exception);
}
