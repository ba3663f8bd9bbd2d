#include "tsacl/checkpoint.hpp"

#include <zlib.h>

#include <cstring>
#include <string_view>

#include "binary_io.hpp"
#include "tsacl/error.hpp"
#include "tsacl/json_codec.hpp"

namespace tsacl::checkpoint {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::size_t kPreambleSize = sizeof(kMagic) + sizeof(std::uint32_t) + sizeof(std::uint64_t);
constexpr std::size_t kFooterSize = sizeof(std::uint32_t);

std::uint32_t crc32_of(std::span<const char> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size()));
  return static_cast<std::uint32_t>(crc);
}

void append_matrix(std::vector<char>& out, const Eigen::MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) io::append_pod(out, m(r, c));
}

json metadata_to_json(const PipelineMetadata& meta) {
  return {{"run_seed", meta.run_seed},
          {"encoder", meta.encoder ? codec::to_json(*meta.encoder) : json(nullptr)},
          {"normalization", encoder::normalization_name(meta.normalization)},
          {"feature_dim", meta.feature_dim},
          {"expansion_dim", meta.expansion_dim},
          {"expansion_scale", meta.expansion_scale},
          {"standardize_features", meta.standardize_features},
          {"rhl_seeds", meta.rhl_seeds},
          {"class_order", meta.class_order}};
}

PipelineMetadata metadata_from_json(const json& j) {
  PipelineMetadata meta;
  try {
    meta.run_seed = j.at("run_seed").get<std::uint64_t>();
    if (!j.at("encoder").is_null()) meta.encoder = codec::encoder_spec_from_json(j.at("encoder"));
    meta.normalization = encoder::parse_normalization(j.at("normalization").get<std::string>());
    meta.feature_dim = j.at("feature_dim").get<std::size_t>();
    meta.expansion_dim = j.at("expansion_dim").get<std::size_t>();
    meta.expansion_scale = j.at("expansion_scale").get<double>();
    meta.standardize_features = j.at("standardize_features").get<bool>();
    meta.rhl_seeds = j.at("rhl_seeds").get<std::vector<std::uint64_t>>();
    meta.class_order = j.at("class_order").get<std::vector<std::uint32_t>>();
  } catch (const json::exception& e) {
    fail(ErrorCode::kMissingField, std::string("checkpoint metadata: ") + e.what());
  }
  return meta;
}

struct Framed {
  std::vector<char> bytes;
  json header;
  std::size_t payload_offset = 0;
};

Framed read_framed(const fs::path& path) {
  Framed f;
  f.bytes = io::read_bytes(path);
  const auto& b = f.bytes;
  require(b.size() >= sizeof(kMagic), ErrorCode::kTruncated, "checkpoint: shorter than magic");
  require(std::memcmp(b.data(), kMagic, sizeof(kMagic)) == 0, ErrorCode::kBadMagic,
          "checkpoint: bad magic in " + path.string());
  require(b.size() >= kPreambleSize + kFooterSize, ErrorCode::kTruncated,
          "checkpoint: truncated preamble");
  const auto version = io::read_pod<std::uint32_t>(b, sizeof(kMagic));
  require(version == kFormatVersion, ErrorCode::kVersionMismatch,
          "checkpoint: version " + std::to_string(version) + ", expected " +
              std::to_string(kFormatVersion));
  const auto header_len = io::read_pod<std::uint64_t>(b, sizeof(kMagic) + sizeof(std::uint32_t));
  require(header_len <= b.size() - kPreambleSize - kFooterSize, ErrorCode::kTruncated,
          "checkpoint: header length exceeds file size");
  const std::string_view header_text(b.data() + kPreambleSize, header_len);
  try {
    f.header = json::parse(header_text);
  } catch (const json::exception&) {
    // A damaged header is reported as a checksum failure when the CRC disagrees.
    const auto stored = io::read_pod<std::uint32_t>(b, b.size() - kFooterSize);
    require(stored == crc32_of(std::span<const char>(b).first(b.size() - kFooterSize)),
            ErrorCode::kChecksum, "checkpoint: CRC mismatch");
    fail(ErrorCode::kInvalidArgument, "checkpoint: header is not valid JSON");
  }
  f.payload_offset = kPreambleSize + header_len;

  std::size_t payload = 0;
  try {
    for (const auto& m : f.header.at("matrices"))
      payload += m.at("rows").get<std::size_t>() * m.at("cols").get<std::size_t>() * sizeof(double);
  } catch (const json::exception& e) {
    fail(ErrorCode::kMissingField, std::string("checkpoint header: ") + e.what());
  }
  const std::size_t expected = f.payload_offset + payload + kFooterSize;
  require(b.size() >= expected, ErrorCode::kTruncated,
          "checkpoint: expected " + std::to_string(expected) + " bytes, got " +
              std::to_string(b.size()));
  require(b.size() == expected, ErrorCode::kSizeMismatch,
          "checkpoint: trailing bytes after footer");
  const auto stored = io::read_pod<std::uint32_t>(b, b.size() - kFooterSize);
  require(stored == crc32_of(std::span<const char>(b).first(b.size() - kFooterSize)),
          ErrorCode::kChecksum, "checkpoint: CRC mismatch");
  return f;
}

}  // namespace

void save_checkpoint(const fs::path& path, const Checkpoint& checkpoint) {
  const auto& meta = checkpoint.metadata;
  require(!checkpoint.members.empty(), ErrorCode::kInvalidArgument, "checkpoint: no members");
  require(checkpoint.members.size() == meta.rhl_seeds.size(), ErrorCode::kDimensionMismatch,
          "checkpoint: one RHL seed per member required");

  json members = json::array();
  json matrices = json::array();
  for (std::size_t i = 0; i < checkpoint.members.size(); ++i) {
    const auto& clf = checkpoint.members[i];
    members.push_back({{"gamma", clf.gamma()},
                       {"registry", clf.registry()},
                       {"tasks_seen", clf.tasks_seen()}});
    const std::string prefix = "member" + std::to_string(i) + ".";
    matrices.push_back({{"name", prefix + "psi"},
                        {"rows", clf.inverse_correlation().rows()},
                        {"cols", clf.inverse_correlation().cols()}});
    matrices.push_back({{"name", prefix + "weights"},
                        {"rows", clf.weights().rows()},
                        {"cols", clf.weights().cols()}});
  }
  const json header = {{"format", "tsacl-checkpoint"},
                       {"metadata", metadata_to_json(meta)},
                       {"members", members},
                       {"matrices", matrices}};
  const std::string header_text = header.dump();

  std::vector<char> out(kMagic, kMagic + sizeof(kMagic));
  io::append_pod(out, kFormatVersion);
  io::append_pod(out, static_cast<std::uint64_t>(header_text.size()));
  out.insert(out.end(), header_text.begin(), header_text.end());
  for (const auto& clf : checkpoint.members) {
    append_matrix(out, clf.inverse_correlation());
    append_matrix(out, clf.weights());
  }
  io::append_pod(out, crc32_of(out));
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  io::write_bytes(path, out);
}

json read_header(const fs::path& path) { return read_framed(path).header; }

Checkpoint load_checkpoint(const fs::path& path) {
  const Framed f = read_framed(path);
  Checkpoint ck;
  try {
    ck.metadata = metadata_from_json(f.header.at("metadata"));
    const auto& members = f.header.at("members");
    const auto& matrices = f.header.at("matrices");
    require(matrices.size() == 2 * members.size(), ErrorCode::kSizeMismatch,
            "checkpoint: expected two matrices per member");
    require(members.size() == ck.metadata.rhl_seeds.size(), ErrorCode::kSizeMismatch,
            "checkpoint: member count differs from rhl_seeds");
    std::size_t offset = f.payload_offset;
    const auto read_matrix = [&](const json& desc) {
      const auto rows = desc.at("rows").get<Eigen::Index>();
      const auto cols = desc.at("cols").get<Eigen::Index>();
      Eigen::MatrixXd m(rows, cols);
      for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) {
          m(r, c) = io::read_pod<double>(f.bytes, offset);
          offset += sizeof(double);
        }
      }
      return m;
    };
    for (std::size_t i = 0; i < members.size(); ++i) {
      Eigen::MatrixXd psi = read_matrix(matrices[2 * i]);
      Eigen::MatrixXd weights = read_matrix(matrices[2 * i + 1]);
      const auto& m = members[i];
      ck.members.push_back(analytic::AnalyticClassifier::from_state(
          std::move(weights), std::move(psi), m.at("gamma").get<double>(),
          m.at("registry").get<std::vector<std::uint32_t>>(),
          m.at("tasks_seen").get<std::size_t>()));
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::kMissingField, std::string("checkpoint header: ") + e.what());
  }
  return ck;
}

}  // namespace tsacl::checkpoint
