#include "exmem/json_extract.hpp"

#include "exmem/errors.hpp"

namespace exmem {

namespace {

// Returns one past the closing brace of the balanced object starting at
// `start` (which must index a '{'), or npos if the text ends first. Strings
// and escapes are honored so braces inside values do not confuse the scan.
std::size_t balanced_end(const std::string& text, std::size_t start) {
    int depth = 0;
    bool in_string = false;
    for (std::size_t i = start; i < text.size(); i++) {
        char c = text[i];
        if (in_string) {
            if (c == '\\') {
                i++;  // skip the escaped character
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        if (c == '"') {
            in_string = true;
        } else if (c == '{') {
            depth++;
        } else if (c == '}') {
            depth--;
            if (depth == 0) return i + 1;
        }
    }
    return std::string::npos;
}

}  // namespace

nlohmann::json extract_first_json_object(const std::string& text) {
    for (std::size_t pos = text.find('{'); pos != std::string::npos;
         pos = text.find('{', pos + 1)) {
        std::size_t end = balanced_end(text, pos);
        if (end == std::string::npos) break;
        nlohmann::json doc =
            nlohmann::json::parse(text.substr(pos, end - pos), nullptr, false);
        if (!doc.is_discarded() && doc.is_object()) return doc;
    }
    throw Error(ErrorCode::ProtocolViolation, "no JSON object found in model output");
}

}  // namespace exmem
