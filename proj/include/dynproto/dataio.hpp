#pragma once

// On-disk formats and the synthetic feature generator.
//
// DPFT feature file, little-endian throughout:
//   offset 0  char[4]  magic "DPFT"
//   offset 4  u16      version (1)
//   offset 6  u8       dtype (1 = IEEE-754 binary32)
//   offset 7  u8       flags (bit 0: rows pre-normalized)
//   offset 8  u32      dim D
//   offset 12 u64      count N
//   offset 20 f32[N*D] row-major payload
//
// Label file: N little-endian int32 values, no header. >= 0 is an ID class
// index, -1 marks OOD / unknown.

#include <array>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "dynproto/error.hpp"
#include "dynproto/features.hpp"
#include "dynproto/random.hpp"
#include "dynproto/scoring.hpp"

namespace dynproto {

inline constexpr std::array<char, 4> kFeatureMagic{'D', 'P', 'F', 'T'};
inline constexpr std::uint16_t kFeatureVersion = 1;
inline constexpr std::uint8_t kDtypeFloat32 = 1;
inline constexpr std::uint8_t kFlagNormalized = 0x1;
inline constexpr std::size_t kFeatureHeaderSize = 20;

struct FeatureFileHeader {
  std::uint16_t version = kFeatureVersion;
  std::uint8_t dtype = kDtypeFloat32;
  std::uint8_t flags = 0;
  std::uint32_t dim = 0;
  std::uint64_t count = 0;
};

struct FeatureFile {
  FeatureFileHeader header;
  FeatureMatrix rows;
  bool normalized() const noexcept { return (header.flags & kFlagNormalized) != 0; }
};

namespace detail {

template <typename T>
void put_le(std::vector<unsigned char>& out, T value) {
  using U = std::make_unsigned_t<T>;
  auto u = static_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<unsigned char>(u & 0xFFu));
    u = static_cast<U>(u >> 8);
  }
}

template <typename T>
T get_le(const unsigned char* p) {
  using U = std::make_unsigned_t<T>;
  U u = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) u |= static_cast<U>(static_cast<U>(p[i]) << (8 * i));
  return static_cast<T>(u);
}

inline std::vector<unsigned char> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IOFailure, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_all(const std::filesystem::path& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IOFailure, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::IOFailure, "write failed for " + path.string());
}

}  // namespace detail

inline std::vector<unsigned char> encode_features(const FeatureMatrix& rows, bool normalized) {
  std::vector<unsigned char> out;
  out.reserve(kFeatureHeaderSize + rows.data().size() * 4);
  out.insert(out.end(), kFeatureMagic.begin(), kFeatureMagic.end());
  detail::put_le<std::uint16_t>(out, kFeatureVersion);
  detail::put_le<std::uint8_t>(out, kDtypeFloat32);
  detail::put_le<std::uint8_t>(out, normalized ? kFlagNormalized : 0);
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(rows.dim()));
  detail::put_le<std::uint64_t>(out, static_cast<std::uint64_t>(rows.rows()));
  for (double v : rows.data()) {
    detail::put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  return out;
}

inline FeatureFile decode_features(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < kFeatureHeaderSize ||
      std::memcmp(bytes.data(), kFeatureMagic.data(), kFeatureMagic.size()) != 0) {
    fail(ErrorCode::BadMagic, "not a DPFT feature file");
  }
  FeatureFile f;
  const unsigned char* p = bytes.data();
  f.header.version = detail::get_le<std::uint16_t>(p + 4);
  f.header.dtype = p[6];
  f.header.flags = p[7];
  f.header.dim = detail::get_le<std::uint32_t>(p + 8);
  f.header.count = detail::get_le<std::uint64_t>(p + 12);
  if (f.header.version != kFeatureVersion) {
    fail(ErrorCode::UnsupportedVersion, "version " + std::to_string(f.header.version));
  }
  if (f.header.dtype != kDtypeFloat32) {
    fail(ErrorCode::UnsupportedVersion, "dtype " + std::to_string(f.header.dtype));
  }
  if (f.header.dim == 0 && f.header.count > 0) fail(ErrorCode::TruncatedPayload, "zero dimension");
  const std::uint64_t cells = f.header.count * f.header.dim;
  if (f.header.dim != 0 && cells / f.header.dim != f.header.count) {
    fail(ErrorCode::TruncatedPayload, "header size overflows");
  }
  if (bytes.size() - kFeatureHeaderSize != cells * 4) {
    fail(ErrorCode::TruncatedPayload, "payload is " + std::to_string(bytes.size() - kFeatureHeaderSize) +
                                          " bytes, header implies " + std::to_string(cells * 4));
  }
  std::vector<double> data(cells);
  for (std::uint64_t i = 0; i < cells; ++i) {
    data[i] = std::bit_cast<float>(detail::get_le<std::uint32_t>(p + kFeatureHeaderSize + 4 * i));
  }
  f.rows = f.header.dim == 0 ? FeatureMatrix() : FeatureMatrix(f.header.dim, std::move(data));
  return f;
}

inline void write_features(const std::filesystem::path& path, const FeatureMatrix& rows,
                           bool normalized) {
  detail::write_all(path, encode_features(rows, normalized));
}

inline FeatureFile read_features(const std::filesystem::path& path) {
  return decode_features(detail::read_all(path));
}

inline void write_labels(const std::filesystem::path& path, const std::vector<std::int32_t>& labels) {
  std::vector<unsigned char> out;
  out.reserve(labels.size() * 4);
  for (auto l : labels) detail::put_le<std::int32_t>(out, l);
  detail::write_all(path, out);
}

inline std::vector<std::int32_t> read_labels(const std::filesystem::path& path) {
  const auto bytes = detail::read_all(path);
  if (bytes.size() % 4 != 0) fail(ErrorCode::TruncatedPayload, "label file is not whole int32s");
  std::vector<std::int32_t> out(bytes.size() / 4);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = detail::get_le<std::int32_t>(bytes.data() + 4 * i);
  for (auto l : out) {
    if (l < -1) fail(ErrorCode::InvalidSpec, "label " + std::to_string(l) + " < -1");
  }
  return out;
}

/// Rows grouped by label value 0..C-1 (C = max label + 1). Negative labels are ignored.
inline std::vector<FeatureMatrix> group_by_label(const FeatureMatrix& rows,
                                                 const std::vector<std::int32_t>& labels) {
  if (rows.rows() != labels.size()) fail(ErrorCode::DimensionMismatch, "labels do not match rows");
  std::int32_t max_label = -1;
  for (auto l : labels) max_label = std::max(max_label, l);
  std::vector<FeatureMatrix> out(static_cast<std::size_t>(max_label + 1), FeatureMatrix(rows.dim()));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= 0) out[static_cast<std::size_t>(labels[i])].push_back(rows.row(i));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic generator

struct IdClusterSpec {
  std::size_t train_count = 0;
  std::size_t test_count = 0;
  double spread = 0.05;
};

struct OodClusterSpec {
  std::size_t count = 0;
  double spread = 0.05;
  std::optional<std::size_t> confusable_with;  // ID class whose centre this one sits near
  double angle_deg = 25.0;
  std::string name;
};

struct SyntheticSpec {
  std::size_t dim = 64;
  std::vector<IdClusterSpec> id_clusters;
  std::vector<OodClusterSpec> ood_clusters;
  double logit_tau = 0.05;  // synthetic logits are cos(sample, ID centre) / logit_tau
  std::uint64_t seed = 7;
  std::string name;

  void validate() const {
    if (dim < 2) fail(ErrorCode::InvalidSpec, "dim must be >= 2");
    if (id_clusters.empty()) fail(ErrorCode::InvalidSpec, "need at least one ID cluster");
    for (const auto& c : id_clusters) {
      if (c.train_count == 0 || c.test_count == 0) fail(ErrorCode::InvalidSpec, "ID counts must be >= 1");
      if (!(c.spread >= 0.0)) fail(ErrorCode::InvalidSpec, "spread must be >= 0");
    }
    for (const auto& c : ood_clusters) {
      if (c.count == 0) fail(ErrorCode::InvalidSpec, "OOD counts must be >= 1");
      if (!(c.spread >= 0.0)) fail(ErrorCode::InvalidSpec, "spread must be >= 0");
      if (c.confusable_with && *c.confusable_with >= id_clusters.size()) {
        fail(ErrorCode::InvalidSpec, "confusable class out of range");
      }
    }
    if (!(logit_tau > 0.0)) fail(ErrorCode::InvalidSpec, "logit_tau must be > 0");
  }
};

/// The fixed acceptance geometry: 10 ID classes, three OOD clusters each 25
/// degrees from a distinct ID centre, two unrelated OOD clusters.
inline constexpr double kDesk64Spread = 0.06;

inline SyntheticSpec desk64_spec(double spread = kDesk64Spread) {
  SyntheticSpec s;
  s.name = "desk-64";
  s.dim = 64;
  s.seed = 7;
  s.id_clusters.assign(10, IdClusterSpec{2000, 500, spread});
  for (std::size_t q = 0; q < 3; ++q) {
    s.ood_clusters.push_back({1000, spread, q, 25.0, "near" + std::to_string(q)});
  }
  s.ood_clusters.push_back({1000, spread, std::nullopt, 0.0, "far0"});
  s.ood_clusters.push_back({1000, spread, std::nullopt, 0.0, "far1"});
  return s;
}

struct SyntheticData {
  std::size_t dim = 0;
  std::size_t num_classes = 0;
  FeatureMatrix id_centers;
  FeatureMatrix ood_centers;
  FeatureMatrix train;
  std::vector<std::int32_t> train_labels;
  FeatureMatrix train_logits;
  // Test pool: ID test rows class by class, then each OOD cluster in order.
  FeatureMatrix test;
  std::vector<std::int32_t> test_labels;
  std::vector<std::int32_t> test_sources;  // 0 = ID, q + 1 = OOD cluster q
  FeatureMatrix test_logits;
  std::vector<std::string> source_names;   // index by source id
};

namespace detail {

// Generated values are stored as binary32, so in-memory and on-disk runs see the same numbers.
inline FeatureVector to_float_precision(FeatureVector v) {
  for (auto& x : v) x = static_cast<double>(static_cast<float>(x));
  return v;
}

inline FeatureVector random_unit(Rng& rng, std::size_t dim) {
  FeatureVector v(dim);
  for (auto& x : v) x = rng.normal();
  return normalize(v);
}

inline FeatureVector sample_around(Rng& rng, std::span<const double> center, double spread) {
  FeatureVector v(center.begin(), center.end());
  for (auto& x : v) x += spread * rng.normal();
  return to_float_precision(normalize(v));
}

inline FeatureVector logits_for(std::span<const double> v, const FeatureMatrix& centers, double tau) {
  FeatureVector z(centers.rows());
  for (std::size_t c = 0; c < centers.rows(); ++c) z[c] = cosine(v, centers.row(c)) / tau;
  return to_float_precision(std::move(z));
}

// Modified Gram-Schmidt with reorthogonalization; drops near-dependent rows.
inline std::vector<FeatureVector> orthonormal_basis(const FeatureMatrix& rows) {
  std::vector<FeatureVector> basis;
  for (std::size_t r = 0; r < rows.rows(); ++r) {
    FeatureVector v = rows.row_copy(r);
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& e : basis) {
        const double proj = dot(v, e);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] -= proj * e[i];
      }
    }
    if (l2_norm(v) > 1e-9) basis.push_back(normalize(v));
  }
  return basis;
}

}  // namespace detail

inline SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  SyntheticData out;
  out.dim = spec.dim;
  out.num_classes = spec.id_clusters.size();
  out.id_centers = FeatureMatrix(spec.dim);
  out.ood_centers = FeatureMatrix(spec.dim);
  for (std::size_t c = 0; c < spec.id_clusters.size(); ++c) {
    out.id_centers.push_back(detail::random_unit(rng, spec.dim));
  }
  for (const auto& q : spec.ood_clusters) {
    if (!q.confusable_with) {
      // Far clusters sit orthogonal to every ID centre.
      FeatureVector v = detail::random_unit(rng, spec.dim);
      if (spec.id_clusters.size() < spec.dim) {
        const auto basis = detail::orthonormal_basis(out.id_centers);
        for (int pass = 0; pass < 2; ++pass) {
          for (const auto& e : basis) {
            const double proj = dot(v, e);
            for (std::size_t i = 0; i < v.size(); ++i) v[i] -= proj * e[i];
          }
        }
      }
      out.ood_centers.push_back(normalize(v));
      continue;
    }
    // Rotate the ID centre by angle_deg towards a random orthogonal direction.
    const auto mu = out.id_centers.row(*q.confusable_with);
    FeatureVector u = detail::random_unit(rng, spec.dim);
    const double proj = dot(u, mu);
    for (std::size_t i = 0; i < u.size(); ++i) u[i] -= proj * mu[i];
    u = normalize(u);
    const double a = q.angle_deg * std::numbers::pi / 180.0;
    FeatureVector center(spec.dim);
    for (std::size_t i = 0; i < center.size(); ++i) center[i] = std::cos(a) * mu[i] + std::sin(a) * u[i];
    out.ood_centers.push_back(normalize(center));
  }

  out.train = FeatureMatrix(spec.dim);
  out.train_logits = FeatureMatrix(out.num_classes);
  for (std::size_t c = 0; c < spec.id_clusters.size(); ++c) {
    for (std::size_t i = 0; i < spec.id_clusters[c].train_count; ++i) {
      auto v = detail::sample_around(rng, out.id_centers.row(c), spec.id_clusters[c].spread);
      out.train_logits.push_back(detail::logits_for(v, out.id_centers, spec.logit_tau));
      out.train.push_back(v);
      out.train_labels.push_back(static_cast<std::int32_t>(c));
    }
  }
  out.test = FeatureMatrix(spec.dim);
  out.test_logits = FeatureMatrix(out.num_classes);
  out.source_names.push_back("id");
  for (std::size_t c = 0; c < spec.id_clusters.size(); ++c) {
    for (std::size_t i = 0; i < spec.id_clusters[c].test_count; ++i) {
      auto v = detail::sample_around(rng, out.id_centers.row(c), spec.id_clusters[c].spread);
      out.test_logits.push_back(detail::logits_for(v, out.id_centers, spec.logit_tau));
      out.test.push_back(v);
      out.test_labels.push_back(static_cast<std::int32_t>(c));
      out.test_sources.push_back(0);
    }
  }
  for (std::size_t q = 0; q < spec.ood_clusters.size(); ++q) {
    const auto& oc = spec.ood_clusters[q];
    out.source_names.push_back(oc.name.empty() ? "ood" + std::to_string(q) : oc.name);
    for (std::size_t i = 0; i < oc.count; ++i) {
      auto v = detail::sample_around(rng, out.ood_centers.row(q), oc.spread);
      out.test_logits.push_back(detail::logits_for(v, out.id_centers, spec.logit_tau));
      out.test.push_back(v);
      out.test_labels.push_back(-1);
      out.test_sources.push_back(static_cast<std::int32_t>(q + 1));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON helpers

inline nlohmann::json to_json(const SyntheticSpec& s) {
  nlohmann::json j;
  j["name"] = s.name;
  j["dim"] = s.dim;
  j["seed"] = s.seed;
  j["logit_tau"] = s.logit_tau;
  j["id_clusters"] = nlohmann::json::array();
  for (const auto& c : s.id_clusters) {
    j["id_clusters"].push_back({{"train_count", c.train_count}, {"test_count", c.test_count}, {"spread", c.spread}});
  }
  j["ood_clusters"] = nlohmann::json::array();
  for (const auto& c : s.ood_clusters) {
    nlohmann::json o{{"count", c.count}, {"spread", c.spread}, {"angle_deg", c.angle_deg}, {"name", c.name}};
    o["confusable_with"] = c.confusable_with ? nlohmann::json(*c.confusable_with) : nlohmann::json(nullptr);
    j["ood_clusters"].push_back(o);
  }
  return j;
}

inline SyntheticSpec synthetic_spec_from_json(const nlohmann::json& j) {
  try {
    SyntheticSpec s;
    s.name = j.value("name", std::string{});
    s.dim = j.at("dim").get<std::size_t>();
    s.seed = j.value("seed", std::uint64_t{7});
    s.logit_tau = j.value("logit_tau", 0.05);
    for (const auto& c : j.at("id_clusters")) {
      s.id_clusters.push_back({c.at("train_count").get<std::size_t>(), c.at("test_count").get<std::size_t>(),
                               c.at("spread").get<double>()});
    }
    for (const auto& c : j.value("ood_clusters", nlohmann::json::array())) {
      OodClusterSpec o;
      o.count = c.at("count").get<std::size_t>();
      o.spread = c.at("spread").get<double>();
      o.angle_deg = c.value("angle_deg", 25.0);
      o.name = c.value("name", std::string{});
      if (c.contains("confusable_with") && !c["confusable_with"].is_null()) {
        o.confusable_with = c["confusable_with"].get<std::size_t>();
      }
      s.ood_clusters.push_back(o);
    }
    s.validate();
    return s;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidSpec, e.what());
  }
}

inline nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IOFailure, "cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidSpec, path.string() + ": " + e.what());
  }
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::IOFailure, "cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
  if (!out) fail(ErrorCode::IOFailure, "write failed for " + path.string());
}

inline nlohmann::json prototypes_to_json(const std::vector<Prototype>& protos) {
  auto arr = nlohmann::json::array();
  for (const auto& p : protos) {
    arr.push_back({{"kind", p.kind == PrototypeKind::ID ? "id" : "ood"},
                   {"source_class", p.source_class},
                   {"member_count", p.member_count},
                   {"vector", p.vector}});
  }
  return arr;
}

inline std::vector<Prototype> prototypes_from_json(const nlohmann::json& arr) {
  std::vector<Prototype> out;
  for (const auto& j : arr) {
    Prototype p;
    p.kind = j.at("kind").get<std::string>() == "id" ? PrototypeKind::ID : PrototypeKind::OOD;
    p.source_class = j.at("source_class").get<int>();
    p.member_count = j.at("member_count").get<std::size_t>();
    p.vector = j.at("vector").get<std::vector<double>>();
    out.push_back(std::move(p));
  }
  return out;
}

/// Writes, for a SyntheticData, the standard file set into `dir`.
inline std::vector<std::filesystem::path> write_synthetic(const SyntheticData& d,
                                                          const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> files{dir / "train.dpft", dir / "train.labels",
                                           dir / "train_logits.dpft", dir / "test.dpft",
                                           dir / "test.labels", dir / "test.sources",
                                           dir / "test_logits.dpft"};
  write_features(files[0], d.train, true);
  write_labels(files[1], d.train_labels);
  write_features(files[2], d.train_logits, false);
  write_features(files[3], d.test, true);
  write_labels(files[4], d.test_labels);
  write_labels(files[5], d.test_sources);
  write_features(files[6], d.test_logits, false);
  return files;
}

}  // namespace dynproto
