#pragma once

#include "moose/engine.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace moose {

enum class EngineMode { Baseline, Moose, Ablation };

struct ExperimentPreset {
    std::string name;
    EngineMode engine_mode = EngineMode::Moose;
    std::optional<AblationVariant> variant;
    /// PipelineConfig keys applied on top of the defaults.
    nlohmann::json overrides = nlohmann::json::object();
    std::string description;
};

struct ResolvedPreset {
    std::string name;
    EngineMode engine_mode = EngineMode::Moose;
    std::optional<AblationVariant> variant;
    PipelineConfig cfg;
};

class PresetRegistry {
  public:
    /// The comparison matrix: baseline, MOOSE variants and the retrieval ablations.
    static PresetRegistry builtin();

    /// Adds presets from a config object {"presets": {"name": {"engine_mode": ..., "overrides": {...}}}}.
    /// A user preset may name a "base" preset whose overrides it extends.
    void add_from_config(const nlohmann::json& config);
    void add(ExperimentPreset preset);

    [[nodiscard]] const ExperimentPreset* find(std::string_view name) const;
    [[nodiscard]] std::vector<std::string> names() const;
    [[nodiscard]] const std::vector<ExperimentPreset>& presets() const noexcept { return presets_; }

  private:
    std::vector<ExperimentPreset> presets_;
};

/// Throws ConfigError listing the registered presets when `name` is unknown.
ResolvedPreset resolve_preset(std::string_view name, const PresetRegistry& registry = PresetRegistry::builtin(),
                              const PipelineConfig& defaults = {});

std::string_view to_string(EngineMode mode);

} // namespace moose
