#pragma once

#include <string>

#include "json.hpp"

#include "dcsynth/linalg.h"
#include "dcsynth/system_model.h"

namespace dcsynth {

using Json = nlohmann::ordered_json;

/// Row-major nested arrays.
Json MatToJson(const Mat& m);
/// `path` names the field in error messages.
Mat MatFromJson(const Json& j, const std::string& path);

Json SystemToJson(const InterconnectedSystem& sys);
InterconnectedSystem SystemFromJson(const Json& j);

Json ControllerToJson(const DecentralizedController& k);
/// Accepts {"gains": [...]} with one matrix per subsystem.
DecentralizedController ControllerFromJson(const Json& j);

Json ReadJsonFile(const std::string& path);
void WriteJsonFile(const Json& j, const std::string& path);

}  // namespace dcsynth
