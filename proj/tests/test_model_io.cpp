// Model file format: bit-exact round trips and corruption detection.
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>

#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace harnn;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

void spit(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream f(p, std::ios::binary);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST(ModelIo, RoundTripIsBitExact) {
  const auto dir = testsup::scratch_dir("model_roundtrip");
  NetworkParams p = testsup::make_net(123, 3, 7, 6);
  // Perturb a few entries away from the uniform init, including awkward values.
  p.layers[1].forget.b[2] = -0.0;
  p.layers[2].candidate.W(0, 0) = 1e-308;
  p.output.b[5] = 3.141592653589793;

  const auto path = dir / "m.bin";
  save_model(path, p, 777, {{"note", "round trip"}});
  const ModelFile mf = load_model(path);

  EXPECT_EQ(mf.seed, 777u);
  EXPECT_EQ(mf.metadata.at("note").get<std::string>(), "round trip");
  auto a = tensor_spans(p);
  auto b = tensor_spans(mf.params);
  ASSERT_EQ(a.size(), b.size());
  std::size_t checked = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ASSERT_EQ(a[i].size(), b[i].size());
    for (std::size_t j = 0; j < a[i].size(); ++j) {
      // Bit-level comparison: -0.0 vs 0.0 and subnormals must survive.
      EXPECT_EQ(std::bit_cast<std::uint64_t>(a[i][j]), std::bit_cast<std::uint64_t>(b[i][j]));
      ++checked;
    }
  }
  EXPECT_EQ(checked, count_trainable_scalars(p.config()));
}

TEST(ModelIo, SavingTwiceIsByteIdentical) {
  const auto dir = testsup::scratch_dir("model_bytes");
  NetworkParams p = testsup::make_net(9, 2, 5, 4);
  save_model(dir / "a.bin", p, 1, {{"k", "v"}});
  save_model(dir / "b.bin", p, 1, {{"k", "v"}});
  EXPECT_EQ(slurp(dir / "a.bin"), slurp(dir / "b.bin"));
}

TEST(ModelIo, DetectsPayloadCorruption) {
  const auto dir = testsup::scratch_dir("model_corrupt");
  NetworkParams p = testsup::make_net(4, 2, 4, 3);
  const auto path = dir / "m.bin";
  save_model(path, p, 2);
  std::string bytes = slurp(path);
  bytes[bytes.size() - 5] ^= 0x40;  // flip one payload bit
  spit(path, bytes);
  try {
    load_model(path);
    FAIL() << "corrupt payload accepted";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("checksum"), std::string::npos);
  }
}

TEST(ModelIo, DetectsTruncation) {
  const auto dir = testsup::scratch_dir("model_trunc");
  NetworkParams p = testsup::make_net(4, 1, 3, 2);
  const auto path = dir / "m.bin";
  save_model(path, p, 3);
  std::string bytes = slurp(path);
  spit(path, bytes.substr(0, bytes.size() - 16));
  EXPECT_THROW(load_model(path), std::runtime_error);
  spit(path, bytes.substr(0, 10));  // cut inside the fixed header
  EXPECT_THROW(load_model(path), std::runtime_error);
}

TEST(ModelIo, RejectsBadMagicAndVersion) {
  const auto dir = testsup::scratch_dir("model_magic");
  NetworkParams p = testsup::make_net(4, 1, 3, 2);
  const auto path = dir / "m.bin";
  save_model(path, p, 4);
  std::string bytes = slurp(path);

  std::string wrong_magic = bytes;
  wrong_magic[0] = 'X';
  spit(dir / "magic.bin", wrong_magic);
  try {
    load_model(dir / "magic.bin");
    FAIL() << "bad magic accepted";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("magic"), std::string::npos);
  }

  std::string wrong_version = bytes;
  wrong_version[8] = 9;  // version field, little endian
  spit(dir / "version.bin", wrong_version);
  try {
    load_model(dir / "version.bin");
    FAIL() << "bad version accepted";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("version"), std::string::npos);
  }

  EXPECT_THROW(load_model(dir / "missing.bin"), std::runtime_error);
}

TEST(ModelIo, DetectsManifestShapeMismatch) {
  const auto dir = testsup::scratch_dir("model_shape");
  NetworkParams p = testsup::make_net(4, 1, 3, 2);
  const auto path = dir / "m.bin";
  save_model(path, p, 5);
  std::string bytes = slurp(path);
  // The first tensor is layer0.input.W with rows == 3; forge it to 4.
  // The header JSON begins at offset 20.
  const auto pos = bytes.find("\"name\":\"layer0.input.W\"");
  ASSERT_NE(pos, std::string::npos);
  const auto rows_pos = bytes.find("\"rows\":3", pos);
  ASSERT_NE(rows_pos, std::string::npos);
  bytes[rows_pos + 7] = '4';
  spit(path, bytes);
  try {
    load_model(path);
    FAIL() << "forged manifest accepted";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("shape mismatch"), std::string::npos);
  }
}

TEST(ModelIo, HeaderCarriesConfigAndNoTimestamps) {
  const auto dir = testsup::scratch_dir("model_header");
  NetworkParams p = testsup::make_net(4, 2, 5, 3);
  const auto path = dir / "m.bin";
  save_model(path, p, 6);
  const ModelFile mf = load_model(path);
  const NetworkConfig cfg = mf.params.config();
  EXPECT_EQ(cfg.internal_layers, 2u);
  EXPECT_EQ(cfg.units, 5u);
  EXPECT_EQ(cfg.classes, 3u);
  EXPECT_EQ(cfg.input_dim, 3u);
  // Reproducibility: the file must not embed wall-clock data. Search for
  // quoted JSON keys; tensor names like layer0.candidate.W are fine.
  const std::string bytes = slurp(path);
  EXPECT_EQ(bytes.find("\"time\""), std::string::npos);
  EXPECT_EQ(bytes.find("\"date\""), std::string::npos);
  EXPECT_EQ(bytes.find("timestamp"), std::string::npos);
  EXPECT_EQ(bytes.find("created"), std::string::npos);
}

TEST(ModelIo, RoundTripPreservesPredictions) {
  const auto dir = testsup::scratch_dir("model_preds");
  NetworkParams p = testsup::make_net(31, 2, 6, 4);
  const auto path = dir / "m.bin";
  save_model(path, p, 7);
  const ModelFile mf = load_model(path);

  NetworkState sa = reset_state(p), sb = reset_state(mf.params);
  Rng rng(2);
  for (const Vector& x : testsup::random_inputs(rng, 20)) {
    const Vector ya = forward_step(p, sa, x);
    const Vector yb = forward_step(mf.params, sb, x);
    for (std::size_t h = 0; h < ya.size(); ++h) EXPECT_EQ(ya[h], yb[h]);
  }
}
