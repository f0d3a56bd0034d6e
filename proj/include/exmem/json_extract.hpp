#pragma once

#include <string>

#include <nlohmann/json.hpp>

namespace exmem {

// Finds the first balanced top-level {...} in `text` that parses as JSON and
// returns it. Model output often wraps the payload in code fences or prose;
// both are tolerated. Throws ProtocolViolation when no parseable object
// exists.
nlohmann::json extract_first_json_object(const std::string& text);

}  // namespace exmem
