#include "moose/parsing.hpp"

#include <algorithm>
#include <cctype>
#include <regex>

namespace moose::parsing {

namespace {

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        auto line = text.substr(pos, end - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
        if (end == text.size()) break;
        pos = end + 1;
    }
    return lines;
}

const std::regex& item_marker() {
    static const std::regex re(
        R"(^\s*(?:[-*]\s+)?\**\s*(?:(?:hypothesis|title|inspiration|suggestion)\s*#?\s*(\d+)\s*\**\s*[:.)\-]|(\d+)[.)](?=\s|\*|$))\**\s*)",
        std::regex::icase);
    return re;
}

} // namespace

std::string trim(std::string_view text) {
    auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
    while (!text.empty() && is_space(text.front())) text.remove_prefix(1);
    while (!text.empty() && is_space(text.back())) text.remove_suffix(1);
    return std::string(text);
}

std::vector<NumberedItem> parse_numbered_list(std::string_view text) {
    std::vector<NumberedItem> items;
    bool open = false;
    for (auto line_view : split_lines(text)) {
        std::string line(line_view);
        std::smatch m;
        if (std::regex_search(line, m, item_marker())) {
            NumberedItem item;
            item.number = std::stoi(m[1].matched ? m[1].str() : m[2].str());
            item.text = trim(line.substr(static_cast<std::size_t>(m.length(0))));
            items.push_back(std::move(item));
            open = true;
            continue;
        }
        auto content = trim(line);
        if (content.empty()) {
            open = false;
            continue;
        }
        if (open) {
            auto& current = items.back().text;
            if (!current.empty()) current.push_back(' ');
            current += content;
        }
    }
    items.erase(std::remove_if(items.begin(), items.end(), [](const NumberedItem& i) { return i.text.empty(); }),
                items.end());
    return items;
}

std::vector<TitleChoice> parse_title_list(std::string_view text) {
    static const std::regex paren_reason(R"(^(.*?)\s*\(\s*reason\s*:\s*(.*?)\s*\)\s*$)", std::regex::icase);
    static const std::regex dash_reason(R"(^(.*?)\s*(?:[-|;]|--)\s*reason\s*:\s*(.*)$)", std::regex::icase);
    std::vector<TitleChoice> out;
    for (auto& item : parse_numbered_list(text)) {
        TitleChoice choice;
        std::smatch m;
        if (std::regex_match(item.text, m, paren_reason) || std::regex_match(item.text, m, dash_reason)) {
            choice.title = trim(m[1].str());
            choice.reason = trim(m[2].str());
        } else {
            choice.title = item.text;
        }
        // Strip surrounding quotes or bold markers around the title.
        while (!choice.title.empty() && (choice.title.front() == '"' || choice.title.front() == '*')) choice.title.erase(0, 1);
        while (!choice.title.empty() && (choice.title.back() == '"' || choice.title.back() == '*')) choice.title.pop_back();
        choice.title = trim(choice.title);
        if (!choice.title.empty()) out.push_back(std::move(choice));
    }
    return out;
}

std::optional<ParsedBackground> parse_background(std::string_view text) {
    auto whole = trim(text);
    auto upper = whole;
    std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) { return std::toupper(c); });
    if (upper == "NONE" || upper == "NONE." || upper == "BACKGROUND: NONE") return ParsedBackground{true, {}, {}};

    static const std::regex label(R"(^\s*\**\s*(background|reason)\s*\**\s*:\s*\**\s*(.*)$)", std::regex::icase);
    std::string background;
    std::string reason;
    bool have_background = false;
    bool have_reason = false;
    std::string* current = nullptr;
    for (auto line_view : split_lines(text)) {
        std::string line(line_view);
        std::smatch m;
        if (std::regex_match(line, m, label)) {
            auto key = m[1].str();
            std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return std::tolower(c); });
            if (key == "background") {
                have_background = true;
                current = &background;
            } else {
                have_reason = true;
                current = &reason;
            }
            *current = trim(m[2].str());
            continue;
        }
        if (current != nullptr) {
            auto content = trim(line);
            if (content.empty()) continue;
            if (!current->empty()) current->push_back(' ');
            *current += content;
        }
    }
    if (!have_background) return std::nullopt;
    background = trim(background);
    auto bg_upper = background;
    std::transform(bg_upper.begin(), bg_upper.end(), bg_upper.begin(), [](unsigned char c) { return std::toupper(c); });
    if (bg_upper == "NONE" || bg_upper == "NONE.") return ParsedBackground{true, {}, {}};
    if (background.empty()) return std::nullopt;
    ParsedBackground parsed{false, background, std::nullopt};
    if (have_reason && !trim(reason).empty()) parsed.reason = trim(reason);
    return parsed;
}

std::string parse_inspiration(std::string_view text) {
    static const std::regex label(R"(\binspiration\s*\**\s*:\s*\**)", std::regex::icase);
    std::string s(text);
    std::smatch m;
    if (std::regex_search(s, m, label)) return trim(s.substr(static_cast<std::size_t>(m.position(0) + m.length(0))));
    return trim(s);
}

std::optional<int> parse_score(std::string_view text) {
    static const std::regex re(R"(score\s*\**\s*:\s*\**\s*([1-5])(?![0-9.]))", std::regex::icase);
    std::string s(text);
    std::optional<int> last;
    for (auto it = std::sregex_iterator(s.begin(), s.end(), re); it != std::sregex_iterator(); ++it) {
        last = std::stoi((*it)[1].str());
    }
    return last;
}

} // namespace moose::parsing
