#include "moose/prompts.hpp"

#include "moose/corpus.hpp"
#include "moose/errors.hpp"

#include <openssl/evp.h>

#include <array>
#include <cctype>
#include <cstdio>
#include <utility>
#include <vector>

namespace moose {

// Generated from prompts/*.txt at configure time.
const std::vector<std::pair<std::string, std::string>>& builtin_templates();

TemplateStore TemplateStore::defaults() {
    TemplateStore store;
    for (const auto& [name, text] : builtin_templates()) store.templates_.emplace(name, text);
    return store;
}

void TemplateStore::load_overrides(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw ConfigError("template directory '" + dir.string() + "' not found");
    for (auto& [name, text] : templates_) {
        auto file = dir / (name + ".txt");
        if (std::filesystem::exists(file)) text = read_text_file(file);
    }
}

const std::string& TemplateStore::get(std::string_view name) const {
    auto it = templates_.find(name);
    if (it == templates_.end()) throw ConfigError("unknown prompt template '" + std::string(name) + "'");
    return it->second;
}

void TemplateStore::set(std::string name, std::string text) { templates_[std::move(name)] = std::move(text); }

std::string TemplateStore::render(std::string_view name, const TemplateValues& values) const {
    return render_template(get(name), values, name);
}

std::map<std::string, std::string> TemplateStore::hashes() const {
    std::map<std::string, std::string> out;
    for (const auto& [name, text] : templates_) out[name] = sha256_hex(text);
    return out;
}

std::string render_template(std::string_view text, const TemplateValues& values, std::string_view name) {
    auto is_key_char = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_'; };
    std::string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        if (text[i] == '{') {
            std::size_t j = i + 1;
            while (j < text.size() && is_key_char(text[j])) ++j;
            if (j < text.size() && text[j] == '}' && j > i + 1) {
                auto key = text.substr(i + 1, j - i - 1);
                auto it = values.find(key);
                if (it == values.end()) {
                    throw ConfigError("template '" + std::string(name) + "' has no value for {" + std::string(key) + "}");
                }
                out += it->second;
                i = j + 1;
                continue;
            }
        }
        out.push_back(text[i++]);
    }
    return out;
}

std::string sha256_hex(std::string_view data) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
        throw Error("SHA-256 computation failed");
    }
    std::string hex;
    hex.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        char buf[3];
        std::snprintf(buf, sizeof buf, "%02x", digest[i]);
        hex += buf;
    }
    return hex;
}

} // namespace moose
