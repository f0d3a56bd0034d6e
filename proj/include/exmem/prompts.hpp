#pragma once

#include <string>

namespace exmem {

// System prompt for the memorization (graph construction) call, verbatim
// from templates/memorize_system.txt.
std::string memorize_system_prompt();

// System prompt for the management call, from
// templates/management_system.txt with its {examples} slot filled from
// templates/management_examples.txt.
std::string management_system_prompt();

}  // namespace exmem
