#include "tsacl/json_codec.hpp"

#include <algorithm>
#include <type_traits>

#include "tsacl/error.hpp"

namespace tsacl::codec {

using nlohmann::json;

void reject_unknown_keys(const json& object, std::initializer_list<std::string_view> allowed,
                         const std::string& where) {
  require(object.is_object(), ErrorCode::kConfig, where + " must be an object");
  for (const auto& [key, value] : object.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      fail(ErrorCode::kConfig, "unknown key " + where + "." + key);
    }
  }
}

namespace {

template <typename T>
void read_if_present(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  if constexpr (std::is_unsigned_v<T>) {
    const auto& v = j.at(key);
    require(v.is_number_integer() && v.get<long long>() >= 0, ErrorCode::kConfig,
            where + "." + key + " must be a non-negative integer");
  }
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    fail(ErrorCode::kConfig, where + "." + key + " has the wrong type");
  }
}

}  // namespace

json to_json(const encoder::EncoderSpec& spec) {
  json blocks = json::array();
  for (const auto& b : spec.blocks) {
    blocks.push_back({{"out_channels", b.out_channels},
                      {"kernel_size", b.kernel_size},
                      {"pool", b.pool}});
  }
  return {{"in_channels", spec.in_channels},
          {"blocks", blocks},
          {"seed", spec.seed},
          {"include_layers", spec.include_layers}};
}

encoder::EncoderSpec encoder_spec_from_json(const json& j) {
  reject_unknown_keys(j, {"in_channels", "blocks", "seed", "include_layers"}, "encoder");
  encoder::EncoderSpec spec = encoder::EncoderSpec::desk_default(1);
  read_if_present(j, "in_channels", spec.in_channels, "encoder");
  read_if_present(j, "seed", spec.seed, "encoder");
  if (j.contains("blocks")) {
    require(j.at("blocks").is_array(), ErrorCode::kConfig, "encoder.blocks must be an array");
    spec.blocks.clear();
    for (const auto& b : j.at("blocks")) {
      reject_unknown_keys(b, {"out_channels", "kernel_size", "pool"}, "encoder.blocks[]");
      encoder::ConvBlock block{0, 1, 1};
      read_if_present(b, "out_channels", block.out_channels, "encoder.blocks[]");
      read_if_present(b, "kernel_size", block.kernel_size, "encoder.blocks[]");
      read_if_present(b, "pool", block.pool, "encoder.blocks[]");
      spec.blocks.push_back(block);
    }
    spec.include_layers.clear();
    for (std::size_t k = 0; k < spec.blocks.size(); ++k) spec.include_layers.push_back(k);
  }
  read_if_present(j, "include_layers", spec.include_layers, "encoder");
  return spec;
}

json to_json(const data::SyntheticSpec& spec) {
  return {{"num_classes", spec.num_classes},
          {"subjects_per_class", spec.subjects_per_class},
          {"samples_per_subject", spec.samples_per_subject},
          {"test_samples_per_subject", spec.test_samples_per_subject},
          {"channels", spec.channels},
          {"length", spec.length},
          {"template_seed", spec.template_seed},
          {"subject_scale", spec.subject_scale},
          {"noise_scale", spec.noise_scale},
          {"seed", spec.seed}};
}

data::SyntheticSpec synthetic_spec_from_json(const json& j) {
  reject_unknown_keys(j,
                      {"num_classes", "subjects_per_class", "samples_per_subject",
                       "test_samples_per_subject", "channels", "length", "template_seed",
                       "subject_scale", "noise_scale", "seed"},
                      "synthetic");
  data::SyntheticSpec spec;
  read_if_present(j, "num_classes", spec.num_classes, "synthetic");
  read_if_present(j, "subjects_per_class", spec.subjects_per_class, "synthetic");
  read_if_present(j, "samples_per_subject", spec.samples_per_subject, "synthetic");
  read_if_present(j, "test_samples_per_subject", spec.test_samples_per_subject, "synthetic");
  read_if_present(j, "channels", spec.channels, "synthetic");
  read_if_present(j, "length", spec.length, "synthetic");
  read_if_present(j, "template_seed", spec.template_seed, "synthetic");
  read_if_present(j, "subject_scale", spec.subject_scale, "synthetic");
  read_if_present(j, "noise_scale", spec.noise_scale, "synthetic");
  read_if_present(j, "seed", spec.seed, "synthetic");
  spec.validate();
  return spec;
}

}  // namespace tsacl::codec
