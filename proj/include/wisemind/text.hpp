#pragma once

#include <string>
#include <string_view>
#include <vector>

// Small string helpers shared by the parser, retrieval scorer and safety layer.
namespace wisemind::text {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
bool iequals(std::string_view a, std::string_view b);

// Lower-cased alphanumeric tokens; everything else is a separator.
std::vector<std::string> tokenize(std::string_view s);

std::size_t word_count(std::string_view s);

// Replaces every "{key}" in `tmpl` with the matching value. Unknown keys are left as-is.
std::string fill(std::string_view tmpl,
                 const std::vector<std::pair<std::string, std::string>>& slots);

std::string truncate_words(std::string_view s, std::size_t max_words);

}  // namespace wisemind::text
