#include <gtest/gtest.h>

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ai2v/checkpoint.hpp"
#include "support/synthetic.hpp"

namespace ai2v {
namespace {

Ai2vParams random_ai2v(std::uint64_t seed) { return testing::random_params({17, 6, 3, 2}, seed).cast<float>(); }

I2vParams random_i2v(std::uint64_t seed) {
  Rng rng(seed);
  return I2vParams::init(13, 5, rng);
}

template <typename Params>
AdagradState<Params> random_state(const Params& like, std::uint64_t seed) {
  Rng rng(seed);
  AdagradState<Params> s{like, 0.1, 1e-10};
  s.accum.for_each_tensor([&](Matrix<float>& m) {
    for (auto& x : m.flat()) x = static_cast<float>(rng.uniform());
  });
  return s;
}

std::string bytes_of(const Ai2vParams& p, const AdagradState<Ai2vParams>* s = nullptr) {
  std::ostringstream out;
  write_checkpoint(out, p, s);
  return out.str();
}

TEST(Checkpoint, Ai2vRoundTrip) {
  const auto p = random_ai2v(1);
  std::istringstream in(bytes_of(p));
  const auto ck = std::get<Ai2vCheckpoint>(read_checkpoint(in));
  EXPECT_TRUE(ck.params == p);
  EXPECT_FALSE(ck.state.has_value());
}

TEST(Checkpoint, Ai2vRoundTripWithState) {
  const auto p = random_ai2v(2);
  const auto s = random_state(p, 3);
  const auto raw = bytes_of(p, &s);
  std::istringstream in(raw);
  const auto ck = std::get<Ai2vCheckpoint>(read_checkpoint(in));
  EXPECT_TRUE(ck.params == p);
  ASSERT_TRUE(ck.state.has_value());
  EXPECT_TRUE(ck.state->accum == s.accum);
  EXPECT_EQ(bytes_of(ck.params, &*ck.state), raw);
}

TEST(Checkpoint, I2vRoundTripFile) {
  const auto p = random_i2v(4);
  const auto s = random_state(p, 5);
  const auto dir = std::filesystem::temp_directory_path() / "ai2v_ckpt_test";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "i2v.ckpt").string();
  save_checkpoint(path, p, &s);
  const auto ck = load_i2v_checkpoint(path);
  EXPECT_TRUE(ck.params == p);
  ASSERT_TRUE(ck.state.has_value());
  EXPECT_TRUE(ck.state->accum == s.accum);
  save_checkpoint(path, p);
  EXPECT_FALSE(load_i2v_checkpoint(path).state.has_value());
  EXPECT_EQ(checkpoint_kind(load_checkpoint(path)), ModelKind::kI2v);
  std::filesystem::remove_all(dir);
}

TEST(Checkpoint, HeaderLayout) {
  const auto p = random_ai2v(6);
  const auto raw = bytes_of(p);
  ASSERT_GE(raw.size(), 30u);
  EXPECT_EQ(raw.substr(0, 8), "AI2VCKPT");
  auto u32 = [&](std::size_t off) {
    std::uint32_t v = 0;
    for (int b = 3; b >= 0; --b) v = (v << 8) | static_cast<unsigned char>(raw[off + b]);
    return v;
  };
  EXPECT_EQ(u32(8), 1u);
  EXPECT_EQ(raw[12], 1);
  EXPECT_EQ(u32(13), 17u);
  EXPECT_EQ(u32(17), 6u);
  EXPECT_EQ(u32(21), 3u);
  EXPECT_EQ(u32(25), 2u);
  EXPECT_EQ(raw[29], 0);
  std::size_t floats = 0;
  p.for_each_tensor([&](const Matrix<float>& m) { floats += m.size(); });
  EXPECT_EQ(raw.size(), 30u + 4u * floats);
  // First tensor value, little-endian float32.
  float first = 0;
  std::memcpy(&first, raw.data() + 30, 4);
  EXPECT_EQ(first, p.context_embeddings(0, 0));
}

TEST(Checkpoint, BadMagic) {
  auto raw = bytes_of(random_ai2v(7));
  raw[0] = 'X';
  std::istringstream in(raw);
  try {
    read_checkpoint(in);
    FAIL() << "expected an error";
  } catch (const CheckpointError& e) {
    EXPECT_NE(std::string(e.what()).find("bad magic"), std::string::npos);
  }
}

TEST(Checkpoint, BadVersion) {
  auto raw = bytes_of(random_ai2v(7));
  raw[8] = 9;
  std::istringstream in(raw);
  EXPECT_THROW(read_checkpoint(in), CheckpointError);
}

TEST(Checkpoint, Truncated) {
  const auto raw = bytes_of(random_ai2v(8));
  for (std::size_t cut : {std::size_t{4}, std::size_t{20}, raw.size() / 2, raw.size() - 1}) {
    std::istringstream in(raw.substr(0, cut));
    EXPECT_THROW(read_checkpoint(in), CheckpointError) << cut;
  }
}

TEST(Checkpoint, TrailingBytes) {
  std::istringstream in(bytes_of(random_ai2v(8)) + "x");
  EXPECT_THROW(read_checkpoint(in), CheckpointError);
}

TEST(Checkpoint, KindMismatchIsTypedError) {
  const auto dir = std::filesystem::temp_directory_path() / "ai2v_ckpt_kind";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "i2v.ckpt").string();
  save_checkpoint(path, random_i2v(9));
  EXPECT_THROW(load_ai2v_checkpoint(path), CheckpointError);
  save_checkpoint(path, random_ai2v(9));
  EXPECT_THROW(load_i2v_checkpoint(path), CheckpointError);
  EXPECT_THROW(load_checkpoint((dir / "missing.ckpt").string()), DataError);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace ai2v
