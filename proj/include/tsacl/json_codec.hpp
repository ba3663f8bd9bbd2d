#pragma once

#include <initializer_list>
#include <string>
#include <string_view>

#include <json.hpp>

#include "tsacl/dataset.hpp"
#include "tsacl/encoder.hpp"

namespace tsacl::codec {

/// Rejects any key of `object` outside `allowed`; `where` prefixes the error.
void reject_unknown_keys(const nlohmann::json& object, std::initializer_list<std::string_view> allowed,
                         const std::string& where);

nlohmann::json to_json(const encoder::EncoderSpec& spec);
encoder::EncoderSpec encoder_spec_from_json(const nlohmann::json& j);

nlohmann::json to_json(const data::SyntheticSpec& spec);
data::SyntheticSpec synthetic_spec_from_json(const nlohmann::json& j);

}  // namespace tsacl::codec
