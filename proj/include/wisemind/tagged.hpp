#pragma once

#include "wisemind/backend.hpp"

#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace wisemind {

// Tag name (as requested by the caller) -> trimmed content.
using FieldMap = std::map<std::string, std::string>;

// Extracts <Tag>content</Tag> for each requested tag. Tag names match
// case-insensitively, surrounding prose is ignored, and when a tag is nested
// inside itself the innermost pair wins. A missing closing tag is tolerated:
// the content then runs to the next requested opening tag or the end.
//
// Throws MissingTag for an absent required tag and MalformedAction when an
// "Action" tag does not name one of the four diagnostic actions.
FieldMap parse_tagged(std::string_view text, const std::vector<std::string>& required,
                      const std::vector<std::string>& optional = {});

// Inverse of parse_tagged for well-formed maps: one "<Tag>value</Tag>" per line.
std::string format_tagged(const FieldMap& fields);

// Fixed one-line instruction appended when a reply cannot be parsed.
std::string corrective_suffix(const std::vector<std::string>& required);

// Extra semantic check run after a successful parse; throws ParseError to
// trigger a re-prompt.
using FieldValidator = std::function<void(const FieldMap&)>;

struct ParsedCompletion {
    FieldMap fields;
    std::string raw;
    int calls = 0;
};

// Calls the backend, re-prompting with corrective_suffix() up to
// request.config.retry_limit extra times. Backend errors propagate; parse
// failures past the limit raise ExhaustedRetries carrying the last raw text.
ParsedCompletion complete_parsed(ChatBackend& backend, ChatRequest request, const std::vector<std::string>& required,
                                 const std::vector<std::string>& optional = {},
                                 const FieldValidator& validate = {});

}  // namespace wisemind
