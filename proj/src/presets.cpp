#include "moose/presets.hpp"

#include <algorithm>

namespace moose {

using nlohmann::json;

std::string_view to_string(EngineMode mode) {
    switch (mode) {
    case EngineMode::Baseline: return "baseline";
    case EngineMode::Moose: return "moose";
    case EngineMode::Ablation: return "ablation";
    }
    return "moose";
}

namespace {

// Past feedback needs a second pass over the title finder; two passes with two
// proposals each keep four hypotheses per background.
const json kFull = {{"enable_ff1", true},        {"enable_ff2", true},
                    {"enable_past_feedback", true}, {"enable_survey_access", true},
                    {"past_iterations", 2},       {"proposals_per_call", 2}};

json with(json base, const json& changes) {
    for (const auto& [k, v] : changes.items()) base[k] = v;
    return base;
}

const json kNoFeedback = {{"enable_ff1", false}, {"enable_ff2", false}, {"enable_past_feedback", false}};

} // namespace

PresetRegistry PresetRegistry::builtin() {
    PresetRegistry r;
    r.add({"baseline", EngineMode::Baseline, std::nullopt, {{"past_iterations", 1}, {"present_iterations", 0}},
           "one call per corpus chunk that directly outputs hypotheses"});
    r.add({"moose-base", EngineMode::Moose, std::nullopt, kNoFeedback,
           "base module chain with the present-feedback loop; future and past feedback off"});
    r.add({"moose-ff", EngineMode::Moose, std::nullopt,
           {{"enable_ff1", true}, {"enable_ff2", true}, {"enable_past_feedback", false}},
           "moose-base plus future-feedback (justifications and hypothesis suggestor)"});
    r.add({"moose-full", EngineMode::Moose, std::nullopt, kFull, "future, past and present feedback"});
    r.add({"moose-no-ff2", EngineMode::Moose, std::nullopt, with(kFull, {{"enable_ff2", false}}),
           "moose-full without the hypothesis suggestor"});
    r.add({"moose-no-ff1", EngineMode::Moose, std::nullopt, with(kFull, {{"enable_ff1", false}}),
           "moose-full without justifications"});
    r.add({"moose-no-survey", EngineMode::Moose, std::nullopt, with(kFull, {{"enable_survey_access", false}}),
           "moose-full with the novelty checker cut off from survey chunks"});
    r.add({"moose-randomized-corpus", EngineMode::Moose, std::nullopt, with(kFull, {{"corpus_mode", "randomized"}}),
           "moose-full with backgrounds drawn from the inspiration corpus"});
    r.add({"moose-picked", EngineMode::Moose, std::nullopt, with(kNoFeedback, {{"present_iterations", 0}}),
           "model-picked background and inspirations, no feedback of any kind"});
    for (auto v : {AblationVariant::RandBackground, AblationVariant::RandBoth, AblationVariant::BM25Inspirations,
                   AblationVariant::GtBackgroundInspirations, AblationVariant::GtHypothesesPassthrough}) {
        r.add({std::string(to_string(v)), EngineMode::Ablation, v, with(kNoFeedback, {{"present_iterations", 0}}),
               "retrieval ablation, no feedback"});
    }
    return r;
}

void PresetRegistry::add(ExperimentPreset preset) {
    if (preset.name.empty()) throw ConfigError("preset name must be non-empty");
    if (find(preset.name) != nullptr) throw ConfigError("duplicate preset '" + preset.name + "'");
    if (preset.engine_mode == EngineMode::Ablation && !preset.variant) {
        throw ConfigError("ablation preset '" + preset.name + "' needs a variant");
    }
    // Reject presets whose overrides do not resolve.
    apply_overrides(PipelineConfig{}, preset.overrides).validate();
    presets_.push_back(std::move(preset));
}

void PresetRegistry::add_from_config(const json& config) {
    if (!config.contains("presets")) return;
    const auto& presets = config.at("presets");
    if (!presets.is_object()) throw ConfigError("'presets' must be an object");
    for (const auto& [name, spec] : presets.items()) {
        ExperimentPreset p;
        p.name = name;
        json overrides = json::object();
        if (spec.contains("base")) {
            const auto* base = find(spec.at("base").get<std::string>());
            if (base == nullptr) throw ConfigError("preset '" + name + "' extends unknown preset");
            p.engine_mode = base->engine_mode;
            p.variant = base->variant;
            overrides = base->overrides;
        }
        if (spec.contains("engine_mode")) {
            auto mode = spec.at("engine_mode").get<std::string>();
            if (mode == "baseline") {
                p.engine_mode = EngineMode::Baseline;
            } else if (mode == "moose") {
                p.engine_mode = EngineMode::Moose;
            } else if (mode.rfind("ablation:", 0) == 0) {
                p.engine_mode = EngineMode::Ablation;
                p.variant = ablation_from_string(mode.substr(9));
            } else {
                throw ConfigError("preset '" + name + "': unknown engine_mode '" + mode + "'");
            }
        }
        if (spec.contains("overrides")) overrides = with(overrides, spec.at("overrides"));
        p.overrides = std::move(overrides);
        p.description = spec.value("description", std::string("user preset"));
        add(std::move(p));
    }
}

const ExperimentPreset* PresetRegistry::find(std::string_view name) const {
    auto it = std::find_if(presets_.begin(), presets_.end(), [&](const ExperimentPreset& p) { return p.name == name; });
    return it == presets_.end() ? nullptr : &*it;
}

std::vector<std::string> PresetRegistry::names() const {
    std::vector<std::string> out;
    for (const auto& p : presets_) out.push_back(p.name);
    return out;
}

ResolvedPreset resolve_preset(std::string_view name, const PresetRegistry& registry, const PipelineConfig& defaults) {
    const auto* preset = registry.find(name);
    if (preset == nullptr) {
        std::string list;
        for (const auto& n : registry.names()) list += (list.empty() ? "" : ", ") + n;
        throw ConfigError("unknown preset '" + std::string(name) + "'; available: " + list);
    }
    ResolvedPreset resolved{preset->name, preset->engine_mode, preset->variant,
                            apply_overrides(defaults, preset->overrides)};
    resolved.cfg.validate();
    return resolved;
}

} // namespace moose
