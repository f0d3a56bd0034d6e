#include "exmem/prompts.hpp"

#include "prompt_templates.hpp"

namespace exmem {

namespace {

std::string trim_trailing(std::string text) {
    while (!text.empty() && (text.back() == '\n' || text.back() == '\r' || text.back() == ' ')) {
        text.pop_back();
    }
    return text;
}

}  // namespace

std::string memorize_system_prompt() { return std::string(prompts::kMemorizeSystem); }

std::string management_system_prompt() {
    std::string text(prompts::kManagementSystem);
    const std::string slot = "{examples}";
    std::size_t pos = text.find(slot);
    if (pos != std::string::npos) {
        text.replace(pos, slot.size(), trim_trailing(std::string(prompts::kManagementExamples)));
    }
    return text;
}

}  // namespace exmem
