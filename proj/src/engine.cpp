#include "moose/engine.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cctype>
#include <functional>
#include <thread>

namespace moose {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string bullet_list(const std::vector<std::string>& items) {
    std::string out;
    for (const auto& item : items) out += "- " + item + "\n";
    return out;
}

// Resolves a model-written title to a corpus title: exact (case-insensitive) first,
// then the longest corpus title contained in the answer, then the first corpus
// title containing the answer.
std::optional<std::string> match_title(const std::string& answer, const std::vector<std::string>& all_titles,
                                       const std::vector<std::string>& lowered) {
    auto wanted = lower(answer);
    if (wanted.empty()) return std::nullopt;
    for (std::size_t i = 0; i < all_titles.size(); ++i) {
        if (lowered[i] == wanted) return all_titles[i];
    }
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < all_titles.size(); ++i) {
        if (!lowered[i].empty() && wanted.find(lowered[i]) != std::string::npos) {
            if (!best || lowered[i].size() > lowered[*best].size()) best = i;
        }
    }
    if (best) return all_titles[*best];
    for (std::size_t i = 0; i < all_titles.size(); ++i) {
        if (lowered[i].find(wanted) != std::string::npos) return all_titles[i];
    }
    return std::nullopt;
}

} // namespace

std::string_view to_string(AblationVariant variant) {
    switch (variant) {
    case AblationVariant::RandBackground: return "rand-background";
    case AblationVariant::RandBoth: return "rand-both";
    case AblationVariant::BM25Inspirations: return "bm25-inspirations";
    case AblationVariant::GtBackgroundInspirations: return "gt-background-inspirations";
    case AblationVariant::GtHypothesesPassthrough: return "gt-hypotheses";
    }
    return "rand-background";
}

AblationVariant ablation_from_string(std::string_view text) {
    for (auto v : {AblationVariant::RandBackground, AblationVariant::RandBoth, AblationVariant::BM25Inspirations,
                   AblationVariant::GtBackgroundInspirations, AblationVariant::GtHypothesesPassthrough}) {
        if (to_string(v) == text) return v;
    }
    throw ConfigError("unknown ablation variant '" + std::string(text) + "'");
}

std::string_view to_string(PastFeedbackMode mode) { return mode == PastFeedbackMode::Heuristic ? "heuristic" : "model"; }

void PipelineConfig::validate() const {
    if (proposals_per_call == 0) throw ConfigError("proposals_per_call must be at least 1");
    if (title_topk == 0) throw ConfigError("title_topk must be at least 1");
    if (survey_topk == 0) throw ConfigError("survey_topk must be at least 1");
    if (chunk_size_words == 0) throw ConfigError("chunk_size_words must be at least 1");
    if (title_batch_size == 0) throw ConfigError("title_batch_size must be at least 1");
    if (workers == 0) throw ConfigError("workers must be at least 1");
    if (enable_past_feedback && past_iterations == 0) {
        throw ConfigError("past feedback needs at least one past iteration");
    }
}

std::string make_record_id(const ChunkRef& chunk, std::size_t past_iteration, std::size_t proposal_index,
                           std::size_t present_iteration) {
    return chunk.passage_id + "#" + std::to_string(chunk.chunk_index) + "/k" + std::to_string(past_iteration) + "/p" +
           std::to_string(proposal_index) + "/r" + std::to_string(present_iteration);
}

// ---------------------------------------------------------------- engine

Engine::Engine(Gateway& gateway, const TemplateStore& templates, PipelineConfig cfg)
    : gateway_(gateway), templates_(templates), cfg_(std::move(cfg)) {
    cfg_.validate();
}

void Engine::bump(std::string_view counter) {
    std::lock_guard lock(counter_mutex_);
    ++counters_[std::string(counter)];
}

std::map<std::string, std::size_t> Engine::counters() const {
    std::lock_guard lock(counter_mutex_);
    return counters_;
}

std::string Engine::reason_block(const std::optional<std::string>& reason) const {
    if (!cfg_.enable_ff1 || !reason) return {};
    return templates_.render("reason_block", {{"text", *reason}});
}

std::string Engine::render_inspirations(const InspirationSet& inspirations) const {
    std::string out;
    for (std::size_t i = 0; i < inspirations.inspirations.size(); ++i) {
        out += "Inspiration " + std::to_string(i + 1) + ": " + inspirations.inspirations[i].text + "\n";
    }
    return out.empty() ? "(none)\n" : out;
}

std::optional<Background> Engine::find_background(const Chunk& chunk) {
    if (normalize_whitespace(chunk.text).empty()) throw ConfigError("cannot find a background in an empty chunk");
    auto format = templates_.get(cfg_.enable_ff1 ? "background_format_ff1" : "background_format_plain");
    auto prompt = templates_.render("background_finder", {{"chunk", chunk.text}, {"format", format}});
    auto params = GenParams::generation(cfg_.model_name);
    ChunkRef ref{chunk.passage_id, chunk.index};
    auto subject = ref.passage_id + "#" + std::to_string(ref.chunk_index);

    auto response = gateway_.generate(prompt, params, tags::kBackgroundFinder, subject);
    auto parsed = parsing::parse_background(response);
    if (!parsed) {
        response = gateway_.generate(prompt + templates_.get("reask"), params, tags::kBackgroundFinder, subject);
        parsed = parsing::parse_background(response);
        if (!parsed) throw ParseError("background finder output unparseable after re-ask: " + response);
    }
    if (parsed->none) return std::nullopt;
    Background bg{parsed->text, std::nullopt, ref};
    if (cfg_.enable_ff1) bg.reason = parsed->reason;
    return bg;
}

std::vector<SelectedTitle> Engine::find_inspiration_titles(const std::vector<std::string>& all_titles,
                                                           const Background& bg,
                                                           const std::optional<std::string>& past_feedback) {
    if (all_titles.empty()) throw ConfigError("title list is empty");
    std::vector<std::string> lowered;
    lowered.reserve(all_titles.size());
    for (const auto& t : all_titles) lowered.push_back(lower(t));

    auto format = templates_.get(cfg_.enable_ff1 ? "title_format_ff1" : "title_format_plain");
    std::string feedback_block;
    if (past_feedback) feedback_block = templates_.render("past_feedback_block", {{"text", *past_feedback}});
    auto params = GenParams::generation(cfg_.model_name);
    auto subject = bg.source_chunk.passage_id + "#" + std::to_string(bg.source_chunk.chunk_index);

    auto run_batches = [&](bool reask) {
        std::vector<SelectedTitle> selected;
        for (std::size_t start = 0; start < all_titles.size(); start += cfg_.title_batch_size) {
            auto stop = std::min(all_titles.size(), start + cfg_.title_batch_size);
            std::vector<std::string> batch(all_titles.begin() + static_cast<std::ptrdiff_t>(start),
                                           all_titles.begin() + static_cast<std::ptrdiff_t>(stop));
            auto prompt = templates_.render("title_finder", {{"background", bg.text},
                                                              {"reason", reason_block(bg.reason)},
                                                              {"past_feedback", feedback_block},
                                                              {"titles", bullet_list(batch)},
                                                              {"count", std::to_string(cfg_.title_topk)},
                                                              {"format", format}});
            if (reask) prompt += templates_.get("reask");
            auto response = gateway_.generate(prompt, params, tags::kTitleFinder, subject);
            for (auto& choice : parsing::parse_title_list(response)) {
                auto matched = match_title(choice.title, all_titles, lowered);
                if (!matched) {
                    spdlog::warn("title finder returned unknown title '{}'; dropped", choice.title);
                    continue;
                }
                bool duplicate = std::any_of(selected.begin(), selected.end(),
                                             [&](const SelectedTitle& s) { return s.title == *matched; });
                if (duplicate) continue;
                SelectedTitle s{*matched, std::nullopt};
                if (cfg_.enable_ff1) s.reason = choice.reason;
                selected.push_back(std::move(s));
            }
        }
        if (selected.size() > cfg_.title_topk) selected.resize(cfg_.title_topk);
        return selected;
    };

    auto selected = run_batches(false);
    if (selected.empty()) selected = run_batches(true);
    if (selected.empty()) throw ParseError("inspiration title finder matched no corpus titles after re-ask");
    return selected;
}

InspirationSet Engine::find_inspirations(const Background& bg, const std::vector<SelectedTitle>& selected,
                                         const CorpusView& view) {
    std::vector<std::pair<const Passage*, std::optional<std::string>>> passages;
    for (const auto& s : selected) {
        // The pool is ordered by id, so the first hit is the smallest id.
        auto it = std::find_if(view.inspiration_pool.begin(), view.inspiration_pool.end(),
                               [&](const Passage* p) { return p->title == s.title; });
        if (it == view.inspiration_pool.end()) {
            spdlog::warn("title '{}' resolves to no inspiration passage; skipped", s.title);
            continue;
        }
        passages.emplace_back(*it, s.reason);
    }
    if (passages.empty()) throw Error("none of the selected titles resolves to an inspiration passage");
    return extract_inspirations(bg, passages);
}

InspirationSet Engine::extract_inspirations(
    const Background& bg, const std::vector<std::pair<const Passage*, std::optional<std::string>>>& passages) {
    InspirationSet set;
    auto params = GenParams::generation(cfg_.model_name);
    for (const auto& [passage, title_reason] : passages) {
        std::string title_block;
        if (cfg_.enable_ff1 && title_reason) title_block = templates_.render("title_reason_block", {{"text", *title_reason}});
        auto prompt = templates_.render("inspiration_finder", {{"background", bg.text},
                                                                {"reason", reason_block(bg.reason)},
                                                                {"title_reason", title_block},
                                                                {"title", passage->title},
                                                                {"passage", passage->body}});
        auto text = parsing::parse_inspiration(gateway_.generate(prompt, params, tags::kInspirationFinder, passage->id));
        if (text.empty()) {
            text = parsing::parse_inspiration(
                gateway_.generate(prompt + templates_.get("reask"), params, tags::kInspirationFinder, passage->id));
        }
        if (text.empty()) {
            spdlog::warn("no inspiration extracted from passage '{}'; skipped", passage->id);
            continue;
        }
        set.titles.push_back({passage->title, cfg_.enable_ff1 ? title_reason : std::nullopt});
        set.inspirations.push_back({std::move(text), passage->id});
    }
    if (set.inspirations.empty()) throw Error("no inspiration could be extracted from the selected passages");
    return set;
}

Suggestion Engine::suggest(const Background& bg, const InspirationSet& inspirations) {
    auto prompt = templates_.render("suggestor", {{"background", bg.text}, {"inspirations", render_inspirations(inspirations)}});
    auto subject = bg.source_chunk.passage_id + "#" + std::to_string(bg.source_chunk.chunk_index);
    return {parsing::trim(gateway_.generate(prompt, GenParams::generation(cfg_.model_name), tags::kSuggestor, subject))};
}

std::vector<HypothesisRecord> Engine::propose(const Background& bg, const InspirationSet& inspirations,
                                              const std::optional<Suggestion>& suggestion, std::optional<Prior> prior,
                                              std::size_t n_proposals) {
    if (n_proposals == 0) throw ConfigError("n_proposals must be at least 1");
    if (prior && (prior->record == nullptr || prior->feedback == nullptr)) throw ConfigError("incomplete prior");
    if (prior && n_proposals != 1) throw ConfigError("a refinement call proposes exactly one hypothesis");

    std::string suggestion_block;
    if (suggestion) suggestion_block = templates_.render("suggestion_block", {{"text", suggestion->text}});
    TemplateValues values{{"background", bg.text},
                          {"inspirations", render_inspirations(inspirations)},
                          {"suggestion", suggestion_block},
                          {"count", std::to_string(n_proposals)}};
    std::string prompt;
    std::string subject;
    if (prior) {
        values["hypothesis"] = prior->record->text;
        values["feedback_clarity"] = prior->feedback->clarity;
        values["feedback_reality"] = prior->feedback->reality;
        values["feedback_novelty"] = prior->feedback->novelty;
        prompt = templates_.render("proposer_refine", values);
        subject = prior->record->id;
    } else {
        prompt = templates_.render("proposer", values);
        subject = bg.source_chunk.passage_id + "#" + std::to_string(bg.source_chunk.chunk_index);
    }

    auto params = GenParams::generation(cfg_.model_name);
    auto items = parsing::parse_numbered_list(gateway_.generate(prompt, params, tags::kProposer, subject));
    if (items.size() < n_proposals) {
        auto retry = parsing::parse_numbered_list(
            gateway_.generate(prompt + templates_.get("reask"), params, tags::kProposer, subject));
        if (retry.size() > items.size()) items = std::move(retry);
        if (items.empty()) throw ParseError("hypothesis proposer returned no parseable hypotheses");
        if (items.size() < n_proposals) {
            spdlog::warn("proposer returned {} of {} hypotheses", items.size(), n_proposals);
        }
    }
    if (items.size() > n_proposals) items.resize(n_proposals);

    std::vector<HypothesisRecord> records;
    for (std::size_t j = 0; j < items.size(); ++j) {
        HypothesisRecord r;
        r.method = method_;
        r.text = items[j].text;
        r.background = bg;
        r.inspiration_set = inspirations;
        r.suggestion = suggestion;
        r.source_chunk = bg.source_chunk;
        if (prior) {
            r.present_iteration = prior->record->present_iteration + 1;
            r.parent_id = prior->record->id;
            r.feedback_used = *prior->feedback;
            r.proposal_index = prior->record->proposal_index;
        } else {
            r.proposal_index = j;
        }
        r.id = make_record_id(bg.source_chunk, inspirations.past_iteration, r.proposal_index, r.present_iteration);
        records.push_back(std::move(r));
    }
    return records;
}

FeedbackBundle Engine::check(const HypothesisRecord& hypothesis, const TitleIndex* survey_index) {
    auto params = GenParams::checker(cfg_.model_name);
    FeedbackBundle bundle;
    auto call = [&](std::string_view name, std::string_view tag, const TemplateValues& values) {
        try {
            auto text = parsing::trim(gateway_.generate(templates_.render(name, values), params, tag, hypothesis.id));
            return text;
        } catch (const Error& e) {
            throw Error(std::string(tag) + " failed: " + e.what());
        }
    };
    bundle.clarity = call("clarity_checker", tags::kClarityChecker, {{"hypothesis", hypothesis.text}});
    bundle.reality = call("reality_checker", tags::kRealityChecker, {{"hypothesis", hypothesis.text}});

    std::string literature;
    if (cfg_.enable_survey_access && survey_index != nullptr) {
        bump(counters::kSurveyRetrieval);
        auto hits = survey_chunks_topk(survey_index, hypothesis.text, cfg_.survey_topk);
        for (std::size_t i = 0; i < hits.size(); ++i) {
            literature += "[" + std::to_string(i + 1) + "] " + survey_index->text(hits[i].passage_id) + "\n";
        }
    }
    if (literature.empty()) literature = templates_.get("no_literature_notice");
    std::string inspirations = hypothesis.inspiration_set ? render_inspirations(*hypothesis.inspiration_set) : "(none)\n";
    bundle.novelty = call("novelty_checker", tags::kNoveltyChecker,
                          {{"hypothesis", hypothesis.text}, {"inspirations", inspirations}, {"survey_chunks", literature}});
    return bundle;
}

std::string Engine::past_feedback(const std::vector<SelectedTitle>& titles,
                                  const std::vector<HypothesisRecord>& hypotheses,
                                  const std::vector<FeedbackBundle>& bundles, PastFeedbackMode mode) {
    std::vector<std::string> names;
    for (const auto& t : titles) names.push_back(t.title);
    bump(counters::kInspirationFeedback);
    if (mode == PastFeedbackMode::Heuristic) {
        return templates_.render("past_feedback_heuristic", {{"titles", bullet_list(names)}});
    }
    std::string listing;
    for (std::size_t i = 0; i < hypotheses.size(); ++i) {
        listing += "Hypothesis " + std::to_string(i + 1) + ": " + hypotheses[i].text + "\n";
        listing += "Novelty feedback: " + (i < bundles.size() ? bundles[i].novelty : std::string("(none)")) + "\n\n";
    }
    if (listing.empty()) listing = "(none)\n";
    auto prompt = templates_.render("inspiration_feedback", {{"titles", bullet_list(names)}, {"hypotheses", listing}});
    std::string subject = hypotheses.empty() ? std::string() : hypotheses.front().id;
    return parsing::trim(gateway_.generate(prompt, GenParams::generation(cfg_.model_name), tags::kInspirationFeedback, subject));
}

std::vector<HypothesisRecord> Engine::run_background(const Chunk& chunk, const CorpusView& view,
                                                     const std::vector<std::string>& all_titles,
                                                     const TitleIndex* survey_index) {
    std::vector<HypothesisRecord> records;
    auto bg = find_background(chunk);
    if (!bg) return records;

    std::vector<SelectedTitle> prior_titles;
    std::vector<HypothesisRecord> prior_finals;
    for (std::size_t k = 0; k < cfg_.past_iterations; ++k) {
        std::optional<std::string> past_f;
        if (k != 0 && cfg_.enable_past_feedback) {
            std::vector<FeedbackBundle> bundles;
            for (const auto& h : prior_finals) {
                if (h.feedback_used) bundles.push_back(*h.feedback_used);
            }
            past_f = past_feedback(prior_titles, prior_finals, bundles, cfg_.past_feedback_mode);
        }
        auto titles = find_inspiration_titles(all_titles, *bg, past_f);
        auto inspirations = find_inspirations(*bg, titles, view);
        inspirations.past_iteration = k;
        std::optional<Suggestion> suggestion;
        if (cfg_.enable_ff2) suggestion = suggest(*bg, inspirations);

        prior_titles = inspirations.titles;
        prior_finals.clear();
        for (auto& h : propose(*bg, inspirations, suggestion, std::nullopt, cfg_.proposals_per_call)) {
            HypothesisRecord current = std::move(h);
            for (std::size_t t = 0; t < cfg_.present_iterations; ++t) {
                auto feedback = check(current, survey_index);
                auto refined = propose(*bg, inspirations, suggestion, Prior{&current, &feedback}, 1);
                current.is_final = false;
                records.push_back(std::move(current));
                current = std::move(refined.front());
            }
            current.is_final = true;
            prior_finals.push_back(current);
            records.push_back(std::move(current));
        }
    }
    return records;
}

// ---------------------------------------------------------------- runs

std::vector<Chunk> background_chunks(const CorpusView& view, const PipelineConfig& cfg) {
    std::vector<Chunk> chunks;
    for (const auto* p : view.background_pool) {
        auto pieces = chunk_passage(*p, cfg.chunk_size_words);
        if (pieces.empty()) spdlog::warn("passage '{}' has no text; skipped", p->id);
        for (auto& c : pieces) chunks.push_back(std::move(c));
    }
    if (cfg.background_limit > 0 && chunks.size() > cfg.background_limit) chunks.resize(cfg.background_limit);
    return chunks;
}

std::vector<std::string> inspiration_titles(const CorpusView& view) {
    std::vector<std::string> titles;
    for (const auto* p : view.inspiration_pool) {
        if (std::find(titles.begin(), titles.end(), p->title) == titles.end()) titles.push_back(p->title);
    }
    return titles;
}

namespace {

std::size_t effective_workers(const PipelineConfig& cfg, const Gateway& gateway) {
    // Scripted backends consume entries in call order; concurrency would reorder them.
    if (!gateway.backend().is_remote()) return 1;
    return std::max<std::size_t>(1, cfg.workers);
}

// Runs `task` for every unit on a worker pool, collecting results in unit order.
// Failed units are recorded and skipped; a RunFailure is raised when all fail.
template <typename Unit>
RunResult run_units(const std::vector<Unit>& units, std::size_t workers, std::string method, Gateway& gateway,
                    const std::function<std::vector<HypothesisRecord>(const Unit&)>& task,
                    const std::function<ChunkRef(const Unit&)>& ref) {
    RunResult result;
    result.method = std::move(method);
    result.trace = gateway.shared_trace();
    result.backgrounds_attempted = units.size();
    if (units.empty()) throw RunFailure("no backgrounds to process");

    std::vector<std::vector<HypothesisRecord>> slots(units.size());
    std::vector<std::optional<std::string>> errors(units.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < units.size(); i = next++) {
            try {
                slots[i] = task(units[i]);
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        }
    };
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < std::min(workers, units.size()); ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    for (std::size_t i = 0; i < units.size(); ++i) {
        if (errors[i]) {
            auto chunk = ref(units[i]);
            spdlog::warn("background {}#{} failed: {}", chunk.passage_id, chunk.chunk_index, *errors[i]);
            result.failures.push_back({chunk, *errors[i]});
            continue;
        }
        for (auto& r : slots[i]) result.records.push_back(std::move(r));
    }
    if (result.failures.size() == units.size()) {
        throw RunFailure("every background failed; first error: " + result.failures.front().message);
    }
    return result;
}

ChunkRef chunk_ref(const Chunk& c) { return {c.passage_id, c.index}; }

// One call that turns a raw chunk straight into hypotheses (no background or inspirations).
std::vector<HypothesisRecord> direct_hypotheses(const Chunk& c, std::size_t n, const std::string& method,
                                                std::string_view id_label, Gateway& gateway,
                                                const TemplateStore& templates, const GenParams& params) {
    auto prompt = templates.render("baseline", {{"chunk", c.text}, {"count", std::to_string(n)}});
    auto subject = c.passage_id + "#" + std::to_string(c.index);
    auto items = parsing::parse_numbered_list(gateway.generate(prompt, params, tags::kBaseline, subject));
    if (items.size() < n) {
        auto retry = parsing::parse_numbered_list(
            gateway.generate(prompt + templates.get("reask"), params, tags::kBaseline, subject));
        if (retry.size() > items.size()) items = std::move(retry);
        if (items.empty()) throw ParseError("no parseable hypotheses for chunk " + subject);
        if (items.size() < n) spdlog::warn("chunk {} yielded {} of {} hypotheses", subject, items.size(), n);
    }
    if (items.size() > n) items.resize(n);
    std::vector<HypothesisRecord> out;
    for (std::size_t j = 0; j < items.size(); ++j) {
        HypothesisRecord r;
        r.id = subject + "/" + std::string(id_label) + "/p" + std::to_string(j);
        r.method = method;
        r.text = items[j].text;
        r.proposal_index = j;
        r.source_chunk = ChunkRef{c.passage_id, c.index};
        out.push_back(std::move(r));
    }
    return out;
}

} // namespace

RunResult run_pipeline(const CorpusView& view, const TitleIndex* survey_index, const PipelineConfig& cfg,
                       Gateway& gateway, const TemplateStore& templates, std::string method) {
    cfg.validate();
    Engine engine(gateway, templates, cfg);
    engine.set_method(method);
    auto chunks = background_chunks(view, cfg);
    auto titles = inspiration_titles(view);
    const TitleIndex* surveys = cfg.enable_survey_access ? survey_index : nullptr;

    auto result = run_units<Chunk>(
        chunks, effective_workers(cfg, gateway), method, gateway,
        [&](const Chunk& c) { return engine.run_background(c, view, titles, surveys); }, chunk_ref);
    result.counters = engine.counters();
    return result;
}

RunResult run_baseline(const CorpusView& view, const PipelineConfig& cfg, Gateway& gateway,
                       const TemplateStore& templates, std::string method) {
    cfg.validate();
    auto chunks = background_chunks(view, cfg);
    auto params = GenParams::generation(cfg.model_name);
    auto task = [&](const Chunk& c) {
        return direct_hypotheses(c, cfg.proposals_per_call, method, "baseline", gateway, templates, params);
    };
    return run_units<Chunk>(chunks, effective_workers(cfg, gateway), method, gateway, task, chunk_ref);
}

RunResult run_ablation(const CorpusView& view, const PipelineConfig& cfg, Gateway& gateway,
                       const TemplateStore& templates, AblationVariant variant, const Benchmark* benchmark,
                       std::string method) {
    cfg.validate();
    if (method.empty()) method = std::string(to_string(variant));
    bool needs_gt = variant == AblationVariant::GtBackgroundInspirations ||
                    variant == AblationVariant::GtHypothesesPassthrough;
    if (needs_gt && (benchmark == nullptr || benchmark->entries.empty())) {
        throw ConfigError("ablation '" + std::string(to_string(variant)) + "' requires benchmark annotations");
    }

    if (variant == AblationVariant::GtHypothesesPassthrough) {
        RunResult result;
        result.method = method;
        result.trace = gateway.shared_trace();
        result.backgrounds_attempted = benchmark->entries.size();
        for (const auto& e : benchmark->entries) {
            HypothesisRecord r;
            r.id = "gt/" + e.paper_id;
            r.method = method;
            r.text = e.gt_hypothesis;
            r.paper_id = e.paper_id;
            result.records.push_back(std::move(r));
        }
        return result;
    }

    // Ablations isolate the selection stage, so every feedback mechanism is off.
    PipelineConfig plain = cfg;
    plain.enable_ff1 = false;
    plain.enable_ff2 = false;
    plain.enable_past_feedback = false;
    plain.enable_survey_access = false;
    plain.present_iterations = 0;
    plain.past_iterations = 1;
    Engine engine(gateway, templates, plain);
    engine.set_method(method);
    auto workers = effective_workers(cfg, gateway);

    if (variant == AblationVariant::GtBackgroundInspirations) {
        const auto& corpus = *view.corpus;
        auto task = [&](const BenchmarkEntry& e) {
            const auto* bg_passage = corpus.find(e.gt_background_passage_id);
            Background bg{normalize_whitespace(bg_passage->body), std::nullopt, {bg_passage->id, 0}};
            InspirationSet set;
            for (const auto& id : e.gt_inspiration_passage_ids) {
                const auto* p = corpus.find(id);
                set.titles.push_back({p->title, std::nullopt});
                set.inspirations.push_back({normalize_whitespace(p->body), p->id});
            }
            auto records = engine.propose(bg, set, std::nullopt, std::nullopt, plain.proposals_per_call);
            for (auto& r : records) r.paper_id = e.paper_id;
            return records;
        };
        return run_units<BenchmarkEntry>(benchmark->entries, workers, method, gateway, task,
                                         [](const BenchmarkEntry& e) { return ChunkRef{e.gt_background_passage_id, 0}; });
    }

    auto unlimited = plain;
    unlimited.background_limit = 0;
    auto all_chunks = background_chunks(view, unlimited);
    std::vector<std::string> chunk_ids;
    for (const auto& c : all_chunks) chunk_ids.push_back(chunk_doc_id(c));
    std::size_t count = cfg.background_limit == 0 ? chunk_ids.size() : std::min(cfg.background_limit, chunk_ids.size());
    auto picked = sample_random(chunk_ids, count, static_cast<std::uint64_t>(cfg.seed));
    std::vector<Chunk> chunks;
    for (const auto& id : picked) {
        auto it = std::find(chunk_ids.begin(), chunk_ids.end(), id);
        chunks.push_back(all_chunks[static_cast<std::size_t>(it - chunk_ids.begin())]);
    }

    if (variant == AblationVariant::RandBackground) {
        auto params = GenParams::generation(cfg.model_name);
        auto task = [&](const Chunk& c) {
            return direct_hypotheses(c, plain.proposals_per_call, method, "rand", gateway, templates, params);
        };
        return run_units<Chunk>(chunks, workers, method, gateway, task, chunk_ref);
    }

    std::vector<std::string> pool_ids;
    for (const auto* p : view.inspiration_pool) pool_ids.push_back(p->id);
    std::vector<std::pair<std::string, std::string>> title_docs;
    for (const auto* p : view.inspiration_pool) title_docs.emplace_back(p->id, p->title);
    auto title_index = build_index(title_docs);

    std::vector<std::size_t> ordinals(chunks.size());
    for (std::size_t i = 0; i < ordinals.size(); ++i) ordinals[i] = i;
    auto task = [&](const std::size_t& i) {
        const auto& c = chunks[i];
        Background bg{c.text, std::nullopt, {c.passage_id, c.index}};
        std::vector<std::string> ids;
        if (variant == AblationVariant::RandBoth) {
            auto n = std::min(plain.title_topk, pool_ids.size());
            ids = sample_random(pool_ids, n, static_cast<std::uint64_t>(cfg.seed) + 1 + i);
        } else {
            for (const auto& hit : bm25_topk(title_index, bg.text, plain.title_topk)) ids.push_back(hit.passage_id);
            if (ids.empty()) throw Error("BM25 found no inspiration title related to the background");
        }
        std::vector<std::pair<const Passage*, std::optional<std::string>>> passages;
        for (const auto& id : ids) passages.emplace_back(view.corpus->find(id), std::nullopt);
        auto set = engine.extract_inspirations(bg, passages);
        return engine.propose(bg, set, std::nullopt, std::nullopt, plain.proposals_per_call);
    };
    return run_units<std::size_t>(ordinals, workers, method, gateway, task,
                                  [&](const std::size_t& i) { return chunk_ref(chunks[i]); });
}

} // namespace moose
