#include "wisemind/tagged.hpp"

#include "wisemind/action.hpp"
#include "wisemind/error.hpp"
#include "wisemind/text.hpp"

#include <algorithm>
#include <optional>

namespace wisemind {

namespace {

struct Span {
    std::size_t begin;
    std::size_t end;
};

// Positions are found on the lower-cased copy; lengths match the original.
std::optional<Span> find_tag(const std::string& lower, std::string_view original, const std::string& tag,
                             const std::vector<std::string>& all_tags) {
    const auto name = text::to_lower(tag);
    const auto open = "<" + name + ">";
    const auto close = "</" + name + ">";

    const auto close_pos = lower.find(close);
    if (close_pos != std::string::npos) {
        const auto open_pos = lower.rfind(open, close_pos);
        if (open_pos == std::string::npos) return std::nullopt;
        return Span{open_pos + open.size(), close_pos};
    }

    // Unterminated: run to the next requested opening tag or the end of text.
    const auto open_pos = lower.rfind(open);
    if (open_pos == std::string::npos) return std::nullopt;
    const auto begin = open_pos + open.size();
    auto end = original.size();
    for (const auto& other : all_tags) {
        const auto pos = lower.find("<" + text::to_lower(other) + ">", begin);
        if (pos != std::string::npos && pos < end) end = pos;
    }
    return Span{begin, end};
}

}  // namespace

FieldMap parse_tagged(std::string_view text, const std::vector<std::string>& required,
                      const std::vector<std::string>& optional) {
    const auto lower = text::to_lower(text);
    std::vector<std::string> all = required;
    all.insert(all.end(), optional.begin(), optional.end());

    FieldMap fields;
    for (const auto& tag : all) {
        const bool is_required = std::find(required.begin(), required.end(), tag) != required.end();
        auto span = find_tag(lower, text, tag, all);
        if (!span) {
            if (is_required) throw MissingTag(tag);
            continue;
        }
        auto value = text::trim(text.substr(span->begin, span->end - span->begin));
        if (text::iequals(tag, "Action") && !action_from_string(value)) throw MalformedAction(value);
        fields.emplace(tag, std::move(value));
    }
    return fields;
}

std::string format_tagged(const FieldMap& fields) {
    std::string out;
    for (const auto& [tag, value] : fields) {
        out += "<" + tag + ">" + value + "</" + tag + ">\n";
    }
    return out;
}

std::string corrective_suffix(const std::vector<std::string>& required) {
    std::string tags;
    for (const auto& t : required) {
        if (!tags.empty()) tags += ", ";
        tags += "<" + t + ">...</" + t + ">";
    }
    return "\n\nYour previous reply could not be parsed. Reply again using exactly these tags: " + tags + ".";
}

ParsedCompletion complete_parsed(ChatBackend& backend, ChatRequest request, const std::vector<std::string>& required,
                                 const std::vector<std::string>& optional, const FieldValidator& validate) {
    if (request.config.retry_limit < 0) throw ConfigError("retry_limit must be >= 0");
    const auto original_human = request.human;
    std::string last_raw;
    std::string last_reason;
    for (int attempt = 0; attempt <= request.config.retry_limit; ++attempt) {
        if (attempt > 0) request.human = original_human + corrective_suffix(required);
        last_raw = backend.complete(request);
        try {
            auto fields = parse_tagged(last_raw, required, optional);
            if (validate) validate(fields);
            return {std::move(fields), std::move(last_raw), attempt + 1};
        } catch (const ParseError& e) {
            last_reason = e.what();
        }
    }
    throw ExhaustedRetries(std::move(last_raw), last_reason);
}

}  // namespace wisemind
