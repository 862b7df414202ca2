#include "wisemind/text.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace wisemind::text {

std::string trim(std::string_view s) {
    constexpr std::string_view ws = " \t\n\r\f\v";
    const auto start = s.find_first_not_of(ws);
    if (start == std::string_view::npos) return {};
    const auto end = s.find_last_not_of(ws);
    return std::string(s.substr(start, end - start + 1));
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

bool iequals(std::string_view a, std::string_view b) {
    return a.size() == b.size() &&
           std::equal(a.begin(), a.end(), b.begin(), [](unsigned char x, unsigned char y) {
               return std::tolower(x) == std::tolower(y);
           });
}

std::vector<std::string> tokenize(std::string_view s) {
    std::vector<std::string> tokens;
    std::string current;
    for (unsigned char c : s) {
        if (std::isalnum(c)) {
            current.push_back(static_cast<char>(std::tolower(c)));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

std::size_t word_count(std::string_view s) {
    std::size_t count = 0;
    bool in_word = false;
    for (unsigned char c : s) {
        if (std::isspace(c)) {
            in_word = false;
        } else if (!in_word) {
            in_word = true;
            ++count;
        }
    }
    return count;
}

std::string fill(std::string_view tmpl,
                 const std::vector<std::pair<std::string, std::string>>& slots) {
    std::string out;
    out.reserve(tmpl.size());
    std::size_t i = 0;
    while (i < tmpl.size()) {
        if (tmpl[i] == '{') {
            const auto close = tmpl.find('}', i + 1);
            if (close != std::string_view::npos) {
                const auto key = tmpl.substr(i + 1, close - i - 1);
                const auto it = std::find_if(slots.begin(), slots.end(),
                                             [&](const auto& kv) { return kv.first == key; });
                if (it != slots.end()) {
                    out += it->second;
                    i = close + 1;
                    continue;
                }
            }
        }
        out.push_back(tmpl[i++]);
    }
    return out;
}

std::string truncate_words(std::string_view s, std::size_t max_words) {
    std::istringstream in{std::string(s)};
    std::string word;
    std::string out;
    std::size_t n = 0;
    while (n < max_words && in >> word) {
        if (!out.empty()) out.push_back(' ');
        out += word;
        ++n;
    }
    return out;
}

}  // namespace wisemind::text
