#include "moose/cli.hpp"

#include "moose/corpus.hpp"
#include "moose/engine.hpp"
#include "moose/evaluation.hpp"
#include "moose/presets.hpp"
#include "moose/run_dir.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <iostream>
#include <optional>

namespace moose::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct BackendFlags {
    std::string backend = "scripted";
    std::string script;
    std::string model;
    std::string base_url;
    double rate_limit = 0.0;
    std::string templates;
};

void add_backend_flags(CLI::App& cmd, BackendFlags& flags) {
    cmd.add_option("--backend", flags.backend, "Generation backend")
        ->check(CLI::IsMember({"scripted", "provider-a", "provider-b"}));
    cmd.add_option("--script", flags.script, "JSONL script for the scripted backend");
    cmd.add_option("--model", flags.model, "Model name sent to remote backends");
    cmd.add_option("--base-url", flags.base_url, "Override the provider endpoint");
    cmd.add_option("--rate-limit", flags.rate_limit, "Maximum remote calls per second (0 = unlimited)");
    cmd.add_option("--templates", flags.templates, "Directory of prompt template overrides");
}

std::shared_ptr<Backend> make_backend(const BackendFlags& flags) {
    if (flags.backend == "scripted") {
        if (flags.script.empty()) throw ConfigError("--backend scripted requires --script");
        return std::make_shared<ScriptedBackend>(load_script(flags.script));
    }
    auto provider = flags.backend == "provider-a" ? Provider::OpenAiChat : Provider::AnthropicMessages;
    return make_remote_backend(provider, flags.base_url);
}

std::string default_model(const BackendFlags& flags) {
    if (!flags.model.empty()) return flags.model;
    if (flags.backend == "provider-a") return "gpt-3.5-turbo";
    if (flags.backend == "provider-b") return "claude-3-opus-20240229";
    return "scripted";
}

TemplateStore load_templates(const BackendFlags& flags) {
    auto store = TemplateStore::defaults();
    if (!flags.templates.empty()) store.load_overrides(flags.templates);
    return store;
}

std::unique_ptr<Gateway> make_gateway(const BackendFlags& flags, const TemplateStore& templates, std::int64_t seed) {
    auto gateway = std::make_unique<Gateway>(make_backend(flags));
    gateway->set_system_prompt(parsing::trim(templates.get("system")));
    gateway->set_jitter_seed(static_cast<std::uint64_t>(seed));
    if (flags.rate_limit > 0) gateway->set_rate_limit(flags.rate_limit);
    return gateway;
}

template <typename Map>
void print_histogram(std::ostream& out, const std::string& title, const Map& histogram) {
    out << title << ":\n";
    for (const auto& [key, count] : histogram) out << "  " << to_string(key) << ": " << count << "\n";
}

// ---------------------------------------------------------------- validate

struct ValidateArgs {
    std::string corpus;
    std::string benchmark;
};

int cmd_validate(const ValidateArgs& args, std::ostream& out, std::ostream& err) {
    auto corpus = load_corpus(args.corpus);
    auto roles = corpus->role_counts();
    out << "passages: " << corpus->size() << " (background " << roles[Role::Background] << ", inspiration "
        << roles[Role::Inspiration] << ", survey " << roles[Role::Survey] << ")\n";
    if (!args.benchmark.empty()) {
        auto benchmark = load_benchmark(args.benchmark, *corpus);
        for (const auto& w : benchmark.warnings) err << "warning: " << w << "\n";
        out << "benchmark entries: " << benchmark.entries.size() << "\n";
        print_histogram(out, "subjects", subject_histogram(benchmark));
        print_histogram(out, "reasoning complexity", reasoning_histogram(benchmark));
        print_histogram(out, "association complexity", association_histogram(benchmark));
    }
    return kOk;
}

// ---------------------------------------------------------------- run

struct RunArgs {
    std::string preset_positional;
    std::string preset;
    std::string corpus;
    std::string benchmark;
    std::string out;
    std::string run_id;
    std::string config;
    BackendFlags backend;
    std::optional<std::int64_t> seed;
    std::optional<std::size_t> workers;
    std::optional<std::size_t> present_iters;
    std::optional<std::size_t> past_iters;
    std::optional<std::size_t> proposals;
    std::optional<std::size_t> backgrounds;
    std::optional<std::size_t> title_topk;
    std::optional<std::size_t> survey_topk;
    std::optional<std::size_t> chunk_size;
};

json read_json_file(const std::string& path) {
    try {
        return json::parse(read_text_file(path));
    } catch (const json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

int cmd_run(const RunArgs& args, std::ostream& out, std::ostream& err) {
    std::string preset_name = !args.preset.empty() ? args.preset : args.preset_positional;
    if (preset_name.empty()) throw ConfigError("no preset given (positional or --preset)");

    auto registry = PresetRegistry::builtin();
    PipelineConfig defaults;
    json config_file;
    if (!args.config.empty()) {
        config_file = read_json_file(args.config);
        registry.add_from_config(config_file);
        if (config_file.contains("defaults")) defaults = apply_overrides(defaults, config_file.at("defaults"));
    }
    auto resolved = resolve_preset(preset_name, registry, defaults);
    auto& cfg = resolved.cfg;
    if (args.seed) cfg.seed = *args.seed;
    if (args.workers) cfg.workers = *args.workers;
    if (args.present_iters) cfg.present_iterations = *args.present_iters;
    if (args.past_iters) cfg.past_iterations = *args.past_iters;
    if (args.proposals) cfg.proposals_per_call = *args.proposals;
    if (args.backgrounds) cfg.background_limit = *args.backgrounds;
    if (args.title_topk) cfg.title_topk = *args.title_topk;
    if (args.survey_topk) cfg.survey_topk = *args.survey_topk;
    if (args.chunk_size) cfg.chunk_size_words = *args.chunk_size;
    cfg.model_name = default_model(args.backend);
    cfg.validate();

    auto corpus = load_corpus(args.corpus);
    std::optional<Benchmark> benchmark;
    if (!args.benchmark.empty()) {
        benchmark = load_benchmark(args.benchmark, *corpus);
        for (const auto& w : benchmark->warnings) err << "warning: " << w << "\n";
    }
    auto view = select_corpus_view(corpus, cfg.corpus_mode);
    bool needs_gt = resolved.variant && (*resolved.variant == AblationVariant::GtBackgroundInspirations ||
                                         *resolved.variant == AblationVariant::GtHypothesesPassthrough);
    if (needs_gt && !benchmark) throw ConfigError("preset '" + resolved.name + "' needs --benchmark");
    auto templates = load_templates(args.backend);
    auto gateway = make_gateway(args.backend, templates, cfg.seed);

    RunManifest manifest;
    manifest.run_id = args.run_id;
    if (manifest.run_id.empty()) {
        auto base = resolved.name + "-" + utc_stamp();
        manifest.run_id = base;
        for (int i = 2; fs::exists(fs::path(args.out) / manifest.run_id); ++i) manifest.run_id = base + "-" + std::to_string(i);
    }
    auto run_dir = create_run_dir(args.out, manifest.run_id);
    manifest.preset = resolved.name;
    manifest.engine_mode = std::string(to_string(resolved.engine_mode));
    if (resolved.variant) manifest.engine_mode += ":" + std::string(to_string(*resolved.variant));
    manifest.backend = args.backend.backend;
    manifest.config = to_json(cfg);
    manifest.seed = cfg.seed;
    manifest.template_hashes = templates.hashes();
    for (const auto& path : {args.corpus, args.benchmark, args.backend.script, args.config}) {
        if (!path.empty()) manifest.input_hashes[path] = sha256_hex(read_text_file(path));
    }
    manifest.started_at_ms = now_unix_ms();
    write_manifest(run_dir, manifest);

    std::optional<TitleIndex> survey_index;
    if (cfg.enable_survey_access) survey_index = build_survey_index(view.survey_pool, cfg.chunk_size_words);

    RunResult result;
    try {
        switch (resolved.engine_mode) {
        case EngineMode::Baseline:
            result = run_baseline(view, cfg, *gateway, templates, resolved.name);
            break;
        case EngineMode::Moose:
            result = run_pipeline(view, survey_index ? &*survey_index : nullptr, cfg, *gateway, templates, resolved.name);
            break;
        case EngineMode::Ablation:
            result = run_ablation(view, cfg, *gateway, templates, *resolved.variant, benchmark ? &*benchmark : nullptr,
                                  resolved.name);
            break;
        }
    } catch (const RunFailure& e) {
        RunResult failed;
        failed.method = resolved.name;
        failed.trace = gateway->shared_trace();
        write_run_outputs(run_dir, failed, manifest);
        err << "run failed: " << e.what() << "\n";
        return kRunFailed;
    }
    write_run_outputs(run_dir, result, manifest);
    out << "run " << manifest.run_id << ": " << result.records.size() << " hypotheses, "
        << result.failures.size() << " failed backgrounds, " << gateway->trace().size() << " calls\n";
    out << "wrote " << run_dir.string() << "\n";
    return kOk;
}

// ---------------------------------------------------------------- judge / report

struct JudgeArgs {
    std::string run_dir;
    std::string rubric_set = "standard";
    BackendFlags backend;
};

int cmd_judge(const JudgeArgs& args, std::ostream& out, std::ostream& err) {
    fs::path dir(args.run_dir);
    if (!fs::exists(dir / "hypotheses.jsonl")) {
        err << "no hypotheses.jsonl in " << dir.string() << "\n";
        return kMissingArtifacts;
    }
    auto records = read_hypotheses(dir);
    auto templates = load_templates(args.backend);
    auto gateway = make_gateway(args.backend, templates, 0);
    auto scores = eval::judge_records(records, *gateway, templates, GenParams::judge(default_model(args.backend)));
    write_text_file(dir / "scores.jsonl", eval::scores_to_jsonl(scores));
    write_text_file(dir / "judge_trace.jsonl", to_jsonl(gateway->trace().snapshot()));
    out << "judged " << scores.size() << " hypotheses in " << dir.string() << "\n";
    return kOk;
}

struct ReportArgs {
    std::vector<std::string> run_dirs;
    std::string group_by = "method-averaged";
    std::string expert;
    std::string format = "text";
};

int cmd_report(const ReportArgs& args, std::ostream& out, std::ostream& err) {
    auto group_by = eval::group_by_from_string(args.group_by);
    std::vector<eval::ScoredRecord> scores;
    for (const auto& d : args.run_dirs) {
        auto path = fs::path(d) / "scores.jsonl";
        if (!fs::exists(path)) {
            err << "missing scores: " << path.string() << " (run `moose judge` first)\n";
            return kMissingArtifacts;
        }
        auto loaded = eval::scores_from_jsonl(read_text_file(path), path.string());
        scores.insert(scores.end(), loaded.begin(), loaded.end());
    }
    if (scores.empty()) {
        err << "no scores to report\n";
        return kMissingArtifacts;
    }
    auto rows = eval::aggregate(scores, group_by);
    out << (args.format == "csv" ? eval::render_csv(rows) : eval::render_table(rows));

    if (!args.expert.empty()) {
        auto experts = eval::import_expert_scores(args.expert);
        out << "\n" << eval::render_consistency(eval::expert_vs_judge(experts, scores), "expert vs judge");
        try {
            auto raters = eval::between_raters(experts);
            out << "\n" << eval::render_consistency(raters, "between experts");
        } catch (const ValidationError&) {
            // Single-rater files have no pairwise agreement to report.
        }
    }
    return kOk;
}

void list_presets(std::ostream& out, const PresetRegistry& registry) {
    for (const auto& p : registry.presets()) out << "  " << p.name << "  - " << p.description << "\n";
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Hypothesis induction pipeline: runs, judging and reports"};
    app.name("moose");
    app.require_subcommand(1);

    ValidateArgs validate_args;
    auto* validate = app.add_subcommand("validate", "Load and validate a corpus and optional benchmark");
    validate->add_option("--corpus", validate_args.corpus, "Corpus JSONL")->required();
    validate->add_option("--benchmark", validate_args.benchmark, "Benchmark JSONL");

    RunArgs run_args;
    auto* run_cmd = app.add_subcommand("run", "Run a preset and write a run directory");
    run_cmd->add_option("preset_name", run_args.preset_positional, "Preset name");
    run_cmd->add_option("--preset", run_args.preset, "Preset name");
    run_cmd->add_option("--corpus", run_args.corpus, "Corpus JSONL")->required();
    run_cmd->add_option("--benchmark", run_args.benchmark, "Benchmark JSONL (ground-truth ablations)");
    run_cmd->add_option("--out", run_args.out, "Output directory")->required();
    run_cmd->add_option("--run-id", run_args.run_id, "Run directory name (default: preset and UTC time)");
    run_cmd->add_option("--config", run_args.config, "JSON config with defaults and user presets");
    run_cmd->add_option("--seed", run_args.seed, "Seed for sampling and retry jitter");
    run_cmd->add_option("--workers", run_args.workers, "Background worker threads");
    run_cmd->add_option("--present-iters", run_args.present_iters, "Present-feedback iterations N");
    run_cmd->add_option("--past-iters", run_args.past_iters, "Past-feedback iterations M");
    run_cmd->add_option("--proposals", run_args.proposals, "Hypotheses per proposer call");
    run_cmd->add_option("--backgrounds", run_args.backgrounds, "Limit on background chunks (0 = all)");
    run_cmd->add_option("--title-topk", run_args.title_topk, "Titles selected per background");
    run_cmd->add_option("--survey-topk", run_args.survey_topk, "Survey chunks shown to the novelty checker");
    run_cmd->add_option("--chunk-size", run_args.chunk_size, "Words per corpus chunk");
    add_backend_flags(*run_cmd, run_args.backend);

    JudgeArgs judge_args;
    auto* judge_cmd = app.add_subcommand("judge", "Score a run's hypotheses with the rubric judge");
    judge_cmd->add_option("run_dir", judge_args.run_dir, "Run directory")->required();
    judge_cmd->add_option("--rubric-set", judge_args.rubric_set, "Rubric set")->check(CLI::IsMember({"standard"}));
    add_backend_flags(*judge_cmd, judge_args.backend);

    ReportArgs report_args;
    auto* report_cmd = app.add_subcommand("report", "Aggregate scores over one or more runs");
    report_cmd->add_option("run_dirs", report_args.run_dirs, "Run directories")->required();
    report_cmd->add_option("--group-by", report_args.group_by, "method | present-iteration | method-averaged");
    report_cmd->add_option("--expert", report_args.expert, "Expert score CSV");
    report_cmd->add_option("--format", report_args.format, "text | csv")->check(CLI::IsMember({"text", "csv"}));

    auto* presets_cmd = app.add_subcommand("presets", "List experiment presets");
    std::string presets_config;
    presets_cmd->add_option("--config", presets_config, "JSON config with user presets");

    std::vector<std::string> argv_storage{"moose"};
    argv_storage.insert(argv_storage.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& a : argv_storage) argv.push_back(a.data());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*validate) return cmd_validate(validate_args, out, err);
        if (*run_cmd) return cmd_run(run_args, out, err);
        if (*judge_cmd) return cmd_judge(judge_args, out, err);
        if (*report_cmd) return cmd_report(report_args, out, err);
        if (*presets_cmd) {
            auto registry = PresetRegistry::builtin();
            if (!presets_config.empty()) registry.add_from_config(read_json_file(presets_config));
            list_presets(out, registry);
            return kOk;
        }
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kValidation;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return kValidation;
    } catch (const RunFailure& e) {
        err << "error: " << e.what() << "\n";
        return kRunFailed;
    } catch (const GatewayError& e) {
        err << "error: " << e.what() << "\n";
        return kRunFailed;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kValidation;
    }
    return kUsage;
}

} // namespace moose::cli
