#include <gtest/gtest.h>

#include <filesystem>

#include "helpers.hpp"
#include "tsgcn/ad/adam.hpp"
#include "tsgcn/nn/checkpoint.hpp"

using namespace tsgcn;
using namespace tsgcn::nn;
using test_util::random_tensor;

namespace {

ModelConfig small(Variant v = Variant::full) {
  ModelConfig c;
  c.variant = v;
  c.classes = 4;
  c.k = 4;
  c.stream_widths = {4, 6, 8};
  c.fuse_width = 8;
  c.head_widths = {8, 4};
  c.tnet_widths = {4, 8, 4};
  c.seed = 21;
  return c;
}

ad::Tensor eval_probs(Model& m, const mesh::CellDescriptors& d) {
  ad::Tape tape(ad::Tape::Mode::inference);
  ForwardOptions opt;
  opt.mode = ad::NormMode::eval;
  return m.forward(tape, d, opt).probs.value();
}

// A model whose parameters and statistics differ from a fresh build.
Model trained(const ModelConfig& cfg) {
  Model m(cfg);
  Rng rng(5);
  const mesh::CellDescriptors d{random_tensor(rng, {20, 12}), random_tensor(rng, {20, 12})};
  ad::Tape tape;
  m.forward(tape, d);  // folds batch statistics into the running averages
  for (const auto& [name, v] : m.params().named_params())
    for (auto& x : ad::Var(v).mutable_value().data) x += rng.uniform(-0.1, 0.1);
  return m;
}

}  // namespace

TEST(Checkpoint, RoundTripRestoresTheModelExactly) {
  Model m = trained(small());
  Rng rng(8);
  const mesh::CellDescriptors d{random_tensor(rng, {15, 12}), random_tensor(rng, {15, 12})};
  const auto bytes = encode(capture(m));
  Model back = restore_model(decode(bytes));
  EXPECT_EQ(back.config().variant, Variant::full);
  EXPECT_EQ(back.config().head_widths, m.config().head_widths);
  EXPECT_EQ(eval_probs(back, d).data, eval_probs(m, d).data);
  EXPECT_EQ(encode(capture(back)), bytes);
}

TEST(Checkpoint, OptimizerStateIsOptional) {
  Model m(small(Variant::m_a));
  ad::Adam opt(m.params().vars());
  for (auto& v : m.params().vars()) std::fill(v.mutable_grad().begin(), v.mutable_grad().end(), 0.5);
  opt.step(1e-3);
  const auto ck = decode(encode(capture(m, &opt.state())));
  ASSERT_TRUE(ck.adam.has_value());
  EXPECT_EQ(ck.adam->step, 1u);
  EXPECT_EQ(ck.adam->first_moment, opt.state().first_moment);
  EXPECT_EQ(ck.adam->second_moment, opt.state().second_moment);
  EXPECT_FALSE(decode(encode(capture(m))).adam.has_value());
  EXPECT_EQ(ck.config.variant, Variant::m_a);
}

TEST(Checkpoint, FileRoundTrip) {
  Model m = trained(small(Variant::l_fusion));
  const auto path = std::filesystem::temp_directory_path() / "tsgcn_ckpt_roundtrip.bin";
  save_checkpoint(path, capture(m));
  const auto ck = load_checkpoint(path);
  EXPECT_EQ(encode(ck), encode(capture(m)));
  std::filesystem::remove(path);
  EXPECT_THROW(load_checkpoint(path), ContractError);
}

TEST(Checkpoint, CorruptBytesAreRejected) {
  const auto bytes = encode(capture(Model(small())));
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(decode(bad), ContractError);
  bad = bytes;
  bad[8] = 9;  // version
  EXPECT_THROW(decode(bad), ContractError);
  bad = bytes;
  bad.push_back(0);
  EXPECT_THROW(decode(bad), ContractError);
  for (std::size_t cut : {0ul, 7ul, 12ul, 40ul, bytes.size() / 2, bytes.size() - 1}) {
    std::vector<char> prefix(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(cut));
    EXPECT_THROW(decode(prefix), ContractError) << cut;
  }
}

TEST(Checkpoint, ApplyChecksNamesAndShapes) {
  const auto ck = capture(Model(small()));
  ModelConfig wider = small();
  wider.fuse_width = 9;
  Model other(wider);
  EXPECT_THROW(apply(ck, other), ContractError);
  Model different(small(Variant::c_only));
  EXPECT_THROW(apply(ck, different), ContractError);
  Model same(small());
  EXPECT_NO_THROW(apply(ck, same));
}
