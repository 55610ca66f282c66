// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "alforge/error.hpp"
#include "alforge/matrix.hpp"
#include "alforge/sha256.hpp"

namespace alforge {

static_assert(std::endian::native == std::endian::little,
              "payload codecs assume a little-endian host");

enum class Pooling { CLS, EOS, MEAN };

inline std::string_view to_string(Pooling p) {
  switch (p) {
    case Pooling::CLS: return "CLS";
    case Pooling::EOS: return "EOS";
    case Pooling::MEAN: return "MEAN";
  }
  return "?";
}

inline Pooling parse_pooling(std::string_view s) {
  if (s == "CLS") return Pooling::CLS;
  if (s == "EOS") return Pooling::EOS;
  if (s == "MEAN") return Pooling::MEAN;
  throw ValidationError("pooling: unknown value '" + std::string(s) + "'");
}

struct DatasetManifest {
  std::string dataset_name;
  std::string model_name;
  Pooling pooling = Pooling::CLS;
  std::uint64_t num_train = 0;
  std::uint64_t num_test = 0;
  std::uint64_t num_classes = 0;
  std::uint64_t embedding_dim = 0;
  std::uint64_t budget = 0;
  std::string source_checksum;

  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

struct EmbeddingDataset {
  DatasetManifest manifest;
  EmbeddingMatrix train;
  LabelVector train_labels;
  EmbeddingMatrix test;
  LabelVector test_labels;

  std::size_t num_classes() const { return manifest.num_classes; }
};

inline nlohmann::json to_json(const DatasetManifest& m) {
  return nlohmann::json{{"dataset_name", m.dataset_name},
                        {"model_name", m.model_name},
                        {"pooling", std::string(to_string(m.pooling))},
                        {"num_train", m.num_train},
                        {"num_test", m.num_test},
                        {"num_classes", m.num_classes},
                        {"embedding_dim", m.embedding_dim},
                        {"budget", m.budget},
                        {"source_checksum", m.source_checksum}};
}

inline DatasetManifest manifest_from_json(const nlohmann::json& j) {
  auto field = [&j](const char* key) -> const nlohmann::json& {
    if (!j.contains(key)) throw ValidationError(std::string("manifest: missing field ") + key);
    return j.at(key);
  };
  try {
    DatasetManifest m;
    m.dataset_name = field("dataset_name").get<std::string>();
    m.model_name = field("model_name").get<std::string>();
    m.pooling = parse_pooling(field("pooling").get<std::string>());
    m.num_train = field("num_train").get<std::uint64_t>();
    m.num_test = field("num_test").get<std::uint64_t>();
    m.num_classes = field("num_classes").get<std::uint64_t>();
    m.embedding_dim = field("embedding_dim").get<std::uint64_t>();
    m.budget = field("budget").get<std::uint64_t>();
    m.source_checksum = field("source_checksum").get<std::string>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("manifest: ") + e.what());
  }
}

namespace detail {

inline constexpr std::array<char, 4> kEmbMagic{'A', 'L', 'E', 'B'};
inline constexpr std::array<char, 4> kLblMagic{'A', 'L', 'L', 'B'};
inline constexpr std::uint32_t kFormatVersion = 1;
inline constexpr std::uint8_t kDtypeF32 = 1;
inline constexpr std::size_t kEmbHeaderSize = 4 + 4 + 8 + 4 + 1;
inline constexpr std::size_t kLblHeaderSize = 4 + 4 + 8;

template <class T>
void put(std::vector<char>& buf, T value) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  buf.insert(buf.end(), bytes, bytes + sizeof(T));
}

template <class T>
T get(const char* p) {
  T value;
  std::memcpy(&value, p, sizeof(T));
  return value;
}

inline std::vector<char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0);
  std::vector<char> buf(size);
  if (size != 0 && !in.read(buf.data(), static_cast<std::streamsize>(size)))
    throw IoError("short read on " + path.string());
  return buf;
}

inline void write_file(const std::filesystem::path& path, const std::vector<char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot create " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed on " + path.string());
}

}  // namespace detail

// `.emb`: "ALEB", u32 version, u64 N, u32 D, u8 dtype (1 = f32), N*D f32 LE.
inline std::vector<char> encode_emb(const EmbeddingMatrix& m) {
  std::vector<char> buf;
  buf.reserve(detail::kEmbHeaderSize + m.data.size() * sizeof(float));
  buf.insert(buf.end(), detail::kEmbMagic.begin(), detail::kEmbMagic.end());
  detail::put<std::uint32_t>(buf, detail::kFormatVersion);
  detail::put<std::uint64_t>(buf, m.rows);
  detail::put<std::uint32_t>(buf, static_cast<std::uint32_t>(m.dim));
  detail::put<std::uint8_t>(buf, detail::kDtypeF32);
  const auto* raw = reinterpret_cast<const char*>(m.data.data());
  buf.insert(buf.end(), raw, raw + m.data.size() * sizeof(float));
  return buf;
}

inline EmbeddingMatrix decode_emb(const std::vector<char>& buf, const std::string& name) {
  if (buf.size() < detail::kEmbHeaderSize) throw ShapeError(name + ": truncated header");
  if (!std::equal(detail::kEmbMagic.begin(), detail::kEmbMagic.end(), buf.begin()))
    throw ValidationError(name + ": bad magic");
  const char* p = buf.data() + 4;
  if (detail::get<std::uint32_t>(p) != detail::kFormatVersion)
    throw ValidationError(name + ": unsupported version");
  const auto rows = detail::get<std::uint64_t>(p + 4);
  const auto dim = detail::get<std::uint32_t>(p + 12);
  if (static_cast<std::uint8_t>(p[16]) != detail::kDtypeF32)
    throw ValidationError(name + ": unsupported dtype code");
  const std::size_t payload = buf.size() - detail::kEmbHeaderSize;
  if (dim == 0 || payload != rows * dim * sizeof(float))
    throw ShapeError(name + ": payload holds " + std::to_string(payload) + " bytes, header declares " +
                     std::to_string(rows) + " x " + std::to_string(dim) + " f32");
  EmbeddingMatrix m(rows, dim);
  std::memcpy(m.data.data(), buf.data() + detail::kEmbHeaderSize, payload);
  return m;
}

// `.lbl`: "ALLB", u32 version, u64 N, N u32 LE.
inline std::vector<char> encode_lbl(const LabelVector& labels) {
  std::vector<char> buf;
  buf.reserve(detail::kLblHeaderSize + labels.size() * sizeof(Label));
  buf.insert(buf.end(), detail::kLblMagic.begin(), detail::kLblMagic.end());
  detail::put<std::uint32_t>(buf, detail::kFormatVersion);
  detail::put<std::uint64_t>(buf, labels.size());
  const auto* raw = reinterpret_cast<const char*>(labels.data());
  buf.insert(buf.end(), raw, raw + labels.size() * sizeof(Label));
  return buf;
}

inline LabelVector decode_lbl(const std::vector<char>& buf, const std::string& name) {
  if (buf.size() < detail::kLblHeaderSize) throw ShapeError(name + ": truncated header");
  if (!std::equal(detail::kLblMagic.begin(), detail::kLblMagic.end(), buf.begin()))
    throw ValidationError(name + ": bad magic");
  if (detail::get<std::uint32_t>(buf.data() + 4) != detail::kFormatVersion)
    throw ValidationError(name + ": unsupported version");
  const auto n = detail::get<std::uint64_t>(buf.data() + 8);
  const std::size_t payload = buf.size() - detail::kLblHeaderSize;
  if (payload != n * sizeof(Label))
    throw ShapeError(name + ": payload holds " + std::to_string(payload) + " bytes, header declares " +
                     std::to_string(n) + " labels");
  LabelVector labels(n);
  std::memcpy(labels.data(), buf.data() + detail::kLblHeaderSize, payload);
  return labels;
}

// Digest over the four payload files in the order train.emb, test.emb,
// train.lbl, test.lbl (full file bytes, headers included).
inline std::string payload_checksum(const std::vector<char>& train_emb, const std::vector<char>& test_emb,
                                    const std::vector<char>& train_lbl, const std::vector<char>& test_lbl) {
  Sha256 h;
  for (const auto* part : {&train_emb, &test_emb, &train_lbl, &test_lbl}) h.update(part->data(), part->size());
  return h.hex_digest();
}

inline std::string payload_checksum(const EmbeddingDataset& ds) {
  return payload_checksum(encode_emb(ds.train), encode_emb(ds.test), encode_lbl(ds.train_labels),
                          encode_lbl(ds.test_labels));
}

// Checks every manifest/payload invariant; throws ValidationError naming the
// offending field. The checksum is not part of this check.
inline void validate(const DatasetManifest& m, const EmbeddingMatrix& train, const LabelVector& train_labels,
                     const EmbeddingMatrix& test, const LabelVector& test_labels) {
  if (m.num_classes < 2) throw ValidationError("num_classes must be >= 2");
  if (m.embedding_dim < 1) throw ValidationError("embedding_dim must be >= 1");
  if (m.num_train < 1 || train.rows < 1) throw ValidationError("num_train must be >= 1");
  if (m.num_test < 1 || test.rows < 1) throw ValidationError("num_test must be >= 1");
  if (train.rows != m.num_train) throw ShapeError("num_train does not match train matrix rows");
  if (test.rows != m.num_test) throw ShapeError("num_test does not match test matrix rows");
  if (train.dim != m.embedding_dim) throw ShapeError("embedding_dim does not match train matrix dim");
  if (test.dim != m.embedding_dim) throw ShapeError("embedding_dim does not match test matrix dim");
  if (train_labels.size() != m.num_train) throw ShapeError("train labels length != num_train");
  if (test_labels.size() != m.num_test) throw ShapeError("test labels length != num_test");
  if (m.budget > m.num_train) throw ValidationError("budget must be <= num_train");
  if (!train.all_finite()) throw ValidationError("train embeddings contain non-finite values");
  if (!test.all_finite()) throw ValidationError("test embeddings contain non-finite values");
  for (Label y : train_labels)
    if (y >= m.num_classes) throw ValidationError("train_labels: label out of range");
  for (Label y : test_labels)
    if (y >= m.num_classes) throw ValidationError("test_labels: label out of range");
}

inline void validate(const EmbeddingDataset& ds) {
  validate(ds.manifest, ds.train, ds.train_labels, ds.test, ds.test_labels);
}

// Writes manifest.json plus the four payload files into `dir` (created if
// needed). Returns the manifest as written, with source_checksum filled in.
inline DatasetManifest write_dataset(DatasetManifest manifest, const EmbeddingMatrix& train,
                                     const LabelVector& train_labels, const EmbeddingMatrix& test,
                                     const LabelVector& test_labels, const std::filesystem::path& dir) {
  validate(manifest, train, train_labels, test, test_labels);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());

  const auto train_emb = encode_emb(train);
  const auto test_emb = encode_emb(test);
  const auto train_lbl = encode_lbl(train_labels);
  const auto test_lbl = encode_lbl(test_labels);
  manifest.source_checksum = payload_checksum(train_emb, test_emb, train_lbl, test_lbl);

  detail::write_file(dir / "train.emb", train_emb);
  detail::write_file(dir / "test.emb", test_emb);
  detail::write_file(dir / "train.lbl", train_lbl);
  detail::write_file(dir / "test.lbl", test_lbl);

  const std::string text = to_json(manifest).dump(2) + "\n";
  detail::write_file(dir / "manifest.json", std::vector<char>(text.begin(), text.end()));
  return manifest;
}

inline DatasetManifest write_dataset(const EmbeddingDataset& ds, const std::filesystem::path& dir) {
  return write_dataset(ds.manifest, ds.train, ds.train_labels, ds.test, ds.test_labels, dir);
}

inline EmbeddingDataset load_dataset(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  if (!std::filesystem::exists(manifest_path)) throw IoError("missing file " + manifest_path.string());
  EmbeddingDataset ds;
  {
    const auto text = detail::read_file(manifest_path);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text.begin(), text.end());
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("manifest.json: " + std::string(e.what()));
    }
    ds.manifest = manifest_from_json(j);
  }
  for (const char* name : {"train.emb", "test.emb", "train.lbl", "test.lbl"})
    if (!std::filesystem::exists(dir / name)) throw IoError("missing file " + (dir / name).string());

  const auto train_emb = detail::read_file(dir / "train.emb");
  const auto test_emb = detail::read_file(dir / "test.emb");
  const auto train_lbl = detail::read_file(dir / "train.lbl");
  const auto test_lbl = detail::read_file(dir / "test.lbl");

  ds.train = decode_emb(train_emb, "train.emb");
  ds.test = decode_emb(test_emb, "test.emb");
  ds.train_labels = decode_lbl(train_lbl, "train.lbl");
  ds.test_labels = decode_lbl(test_lbl, "test.lbl");

  if (ds.train.rows != ds.manifest.num_train) throw ShapeError("train.emb: row count does not match manifest num_train");
  if (ds.test.rows != ds.manifest.num_test) throw ShapeError("test.emb: row count does not match manifest num_test");
  if (ds.train.dim != ds.manifest.embedding_dim) throw ShapeError("train.emb: dim does not match manifest embedding_dim");
  if (ds.test.dim != ds.manifest.embedding_dim) throw ShapeError("test.emb: dim does not match manifest embedding_dim");
  if (ds.train_labels.size() != ds.manifest.num_train) throw ShapeError("train.lbl: length does not match manifest num_train");
  if (ds.test_labels.size() != ds.manifest.num_test) throw ShapeError("test.lbl: length does not match manifest num_test");

  const auto digest = payload_checksum(train_emb, test_emb, train_lbl, test_lbl);
  if (digest != ds.manifest.source_checksum)
    throw ChecksumError("checksum mismatch: payload digest " + digest + " != manifest source_checksum " +
                        ds.manifest.source_checksum + " (train.emb, test.emb, train.lbl, test.lbl in " +
                        dir.string() + ")");

  validate(ds);
  return ds;
}

}  // namespace alforge
