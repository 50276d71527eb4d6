#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace moose {

using TemplateValues = std::map<std::string, std::string, std::less<>>;

/// Named prompt templates with `{placeholder}` substitution.
///
/// Defaults are compiled in from prompts/*.txt; a directory of same-named files
/// overrides them at run time. Rendering fails on any placeholder left without
/// a value so that a typo in an edited template surfaces immediately.
class TemplateStore {
  public:
    static TemplateStore defaults();

    /// Replaces every template that has a `<name>.txt` file in `dir`.
    void load_overrides(const std::filesystem::path& dir);

    [[nodiscard]] const std::string& get(std::string_view name) const;
    void set(std::string name, std::string text);

    [[nodiscard]] std::string render(std::string_view name, const TemplateValues& values) const;

    /// SHA-256 of every template, keyed by name; recorded in run manifests.
    [[nodiscard]] std::map<std::string, std::string> hashes() const;

  private:
    std::map<std::string, std::string, std::less<>> templates_;
};

/// Substitutes `{key}` occurrences in one pass; substituted text is not rescanned.
std::string render_template(std::string_view text, const TemplateValues& values, std::string_view name = "<inline>");

std::string sha256_hex(std::string_view data);

} // namespace moose
