#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace moose::parsing {

struct NumberedItem {
    int number = 0;
    std::string text;
};

/// Extracts list items marked "1." / "1)" / "Hypothesis 1:" (also Title, Inspiration,
/// Suggestion; optional markdown bold). Items keep their order of appearance whatever
/// their numbering. Lines before the first marker are ignored; a blank line closes the
/// current item and unmarked lines after it are dropped as chatter.
std::vector<NumberedItem> parse_numbered_list(std::string_view text);

struct TitleChoice {
    std::string title;
    std::optional<std::string> reason;
};

/// Numbered titles with optional "(reason: ...)" or "- Reason: ..." suffixes.
std::vector<TitleChoice> parse_title_list(std::string_view text);

struct ParsedBackground {
    /// True when the model answered with the NONE sentinel.
    bool none = false;
    std::string text;
    std::optional<std::string> reason;
};

/// nullopt when the response has neither a "Background:" section nor the sentinel.
std::optional<ParsedBackground> parse_background(std::string_view text);

/// Text after an "Inspiration:" label, or the whole trimmed response.
std::string parse_inspiration(std::string_view text);

/// Last "Score: <1-5>" occurrence; nullopt when absent.
std::optional<int> parse_score(std::string_view text);

std::string trim(std::string_view text);

} // namespace moose::parsing
