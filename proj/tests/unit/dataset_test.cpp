// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "alforge/dataset.hpp"
#include "alforge/synthetic.hpp"
#include "test_support.hpp"

using namespace alforge;
using alforge::testing::TempDir;
namespace fs = std::filesystem;

namespace {

DatasetManifest tiny_manifest() {
  DatasetManifest m;
  m.dataset_name = "tiny";
  m.model_name = "toy-encoder";
  m.pooling = Pooling::MEAN;
  m.num_classes = 2;
  m.embedding_dim = 2;
  m.num_train = 3;
  m.num_test = 2;
  m.budget = 2;
  return m;
}

EmbeddingMatrix tiny_train() { return EmbeddingMatrix(3, 2, {1, 2, 3, 4, 5, 6}); }
EmbeddingMatrix tiny_test() { return EmbeddingMatrix(2, 2, {0.5f, -1.25f, 7, 8}); }

void truncate_file(const fs::path& p, std::size_t by) {
  const auto size = fs::file_size(p);
  fs::resize_file(p, size - by);
}

void flip_byte(const fs::path& p, std::size_t offset) {
  std::fstream f(p, std::ios::in | std::ios::out | std::ios::binary);
  f.seekg(static_cast<std::streamoff>(offset));
  char c = 0;
  f.read(&c, 1);
  c = static_cast<char>(c ^ 0x5a);
  f.seekp(static_cast<std::streamoff>(offset));
  f.write(&c, 1);
}

template <class Fn>
std::string error_message(Fn&& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(DatasetStore, RoundTripRecoversIdenticalFloats) {
  TempDir dir;
  const auto written = write_dataset(tiny_manifest(), tiny_train(), {0, 1, 0}, tiny_test(), {1, 0}, dir.path());
  EXPECT_EQ(written.source_checksum.size(), 64u);

  const auto ds = load_dataset(dir.path());
  EXPECT_EQ(ds.train.rows, 3u);
  EXPECT_EQ(ds.train.dim, 2u);
  EXPECT_EQ(ds.train.data, tiny_train().data);
  EXPECT_EQ(ds.test.data, tiny_test().data);
  EXPECT_EQ(ds.train_labels, (LabelVector{0, 1, 0}));
  EXPECT_EQ(ds.test_labels, (LabelVector{1, 0}));
  EXPECT_EQ(ds.manifest.dataset_name, "tiny");
  EXPECT_EQ(ds.manifest.model_name, "toy-encoder");
  EXPECT_EQ(ds.manifest.pooling, Pooling::MEAN);
  EXPECT_EQ(ds.manifest.source_checksum, written.source_checksum);
}

TEST(DatasetStore, LabelOutOfRangeIsRejected) {
  TempDir dir;
  const auto msg = error_message(
      [&] { write_dataset(tiny_manifest(), tiny_train(), {0, 2, 0}, tiny_test(), {1, 0}, dir.path()); });
  EXPECT_NE(msg.find("label out of range"), std::string::npos) << msg;
  EXPECT_THROW(write_dataset(tiny_manifest(), tiny_train(), {0, 2, 0}, tiny_test(), {1, 0}, dir.path()),
               ValidationError);
}

TEST(DatasetStore, EmptyTrainMatrixIsRejected) {
  TempDir dir;
  auto m = tiny_manifest();
  m.num_train = 0;
  m.budget = 0;
  const auto msg =
      error_message([&] { write_dataset(m, EmbeddingMatrix(0, 2), {}, tiny_test(), {1, 0}, dir.path()); });
  EXPECT_NE(msg.find("num_train must be >= 1"), std::string::npos) << msg;
}

TEST(DatasetStore, BudgetAboveTrainSizeIsRejected) {
  TempDir dir;
  auto m = tiny_manifest();
  m.budget = 4;
  EXPECT_THROW(write_dataset(m, tiny_train(), {0, 1, 0}, tiny_test(), {1, 0}, dir.path()), ValidationError);
}

TEST(DatasetStore, NonFiniteEmbeddingIsRejected) {
  TempDir dir;
  auto train = tiny_train();
  train.data[3] = std::numeric_limits<float>::quiet_NaN();
  EXPECT_THROW(write_dataset(tiny_manifest(), train, {0, 1, 0}, tiny_test(), {1, 0}, dir.path()), ValidationError);
}

TEST(DatasetStore, ValidFixtureHasManifestShape) {
  TempDir dir;
  BlobSpec spec;
  spec.num_train = 120;
  spec.num_test = 40;
  spec.dim = 6;
  spec.num_classes = 3;
  spec.budget = 30;
  write_dataset(make_blobs(spec), dir.path());
  const auto ds = load_dataset(dir.path());
  EXPECT_EQ(ds.train.rows, 120u);
  EXPECT_EQ(ds.test.rows, 40u);
  EXPECT_EQ(ds.train.dim, 6u);
  EXPECT_EQ(ds.num_classes(), 3u);
}

TEST(DatasetStore, TruncatedPayloadIsShapeError) {
  for (const char* file : {"train.emb", "test.emb", "train.lbl", "test.lbl"}) {
    TempDir dir;
    write_dataset(tiny_manifest(), tiny_train(), {0, 1, 0}, tiny_test(), {1, 0}, dir.path());
    truncate_file(dir / file, 4);
    EXPECT_THROW(load_dataset(dir.path()), ShapeError) << file;
  }
}

TEST(DatasetStore, CorruptedByteIsChecksumError) {
  TempDir dir;
  write_dataset(tiny_manifest(), tiny_train(), {0, 1, 0}, tiny_test(), {1, 0}, dir.path());
  // Last byte of the float payload: header and shape stay intact.
  flip_byte(dir / "train.emb", fs::file_size(dir / "train.emb") - 1);
  const auto msg = error_message([&] { load_dataset(dir.path()); });
  EXPECT_NE(msg.find("checksum mismatch"), std::string::npos) << msg;
  EXPECT_THROW(load_dataset(dir.path()), ChecksumError);
}

TEST(DatasetStore, MissingFileIsIoError) {
  TempDir dir;
  write_dataset(tiny_manifest(), tiny_train(), {0, 1, 0}, tiny_test(), {1, 0}, dir.path());
  fs::remove(dir / "test.lbl");
  EXPECT_THROW(load_dataset(dir.path()), IoError);
  fs::remove(dir / "manifest.json");
  EXPECT_THROW(load_dataset(dir.path()), IoError);
}

TEST(DatasetStore, ManifestShapeDisagreementIsShapeError) {
  TempDir dir;
  write_dataset(tiny_manifest(), tiny_train(), {0, 1, 0}, tiny_test(), {1, 0}, dir.path());
  std::ifstream in(dir / "manifest.json");
  auto j = nlohmann::json::parse(in);
  in.close();
  j["num_train"] = 4;
  std::ofstream(dir / "manifest.json") << j.dump(2);
  EXPECT_THROW(load_dataset(dir.path()), ShapeError);
}

TEST(DatasetStore, EmbCodecHeaderLayout) {
  const auto bytes = encode_emb(tiny_train());
  ASSERT_EQ(bytes.size(), 21u + 6 * 4);
  EXPECT_EQ(std::string(bytes.data(), 4), "ALEB");
  EXPECT_EQ(bytes[4], 1);  // version, little endian
  EXPECT_EQ(bytes[8], 3);  // N
  EXPECT_EQ(bytes[16], 2);  // D
  EXPECT_EQ(bytes[20], 1);  // dtype f32
  const auto back = decode_emb(bytes, "x");
  EXPECT_EQ(back.data, tiny_train().data);

  const auto lbl = encode_lbl({7, 0, 3});
  ASSERT_EQ(lbl.size(), 16u + 12);
  EXPECT_EQ(std::string(lbl.data(), 4), "ALLB");
  EXPECT_EQ(decode_lbl(lbl, "y"), (LabelVector{7, 0, 3}));
}

TEST(DatasetStore, BadMagicIsRejected) {
  auto bytes = encode_emb(tiny_train());
  bytes[0] = 'X';
  EXPECT_THROW(decode_emb(bytes, "x"), ValidationError);
}

TEST(DatasetStore, ChecksumCoversAllPayloadsInOrder) {
  EmbeddingDataset ds;
  ds.manifest = tiny_manifest();
  ds.train = tiny_train();
  ds.test = tiny_test();
  ds.train_labels = {0, 1, 0};
  ds.test_labels = {1, 0};
  const auto a = payload_checksum(ds);
  std::swap(ds.test_labels[0], ds.test_labels[1]);
  EXPECT_NE(payload_checksum(ds), a);

  // Independent recomputation over the concatenated file bytes.
  std::swap(ds.test_labels[0], ds.test_labels[1]);
  std::string all;
  for (const auto& part : {encode_emb(ds.train), encode_emb(ds.test), encode_lbl(ds.train_labels),
                           encode_lbl(ds.test_labels)})
    all.append(part.data(), part.size());
  EXPECT_EQ(sha256_hex(all), a);
}

TEST(DatasetStore, Sha256KnownVectors) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(DatasetStore, PoolingNames) {
  EXPECT_EQ(parse_pooling("CLS"), Pooling::CLS);
  EXPECT_EQ(parse_pooling("EOS"), Pooling::EOS);
  EXPECT_EQ(parse_pooling("MEAN"), Pooling::MEAN);
  EXPECT_THROW(parse_pooling("max"), ValidationError);
}
