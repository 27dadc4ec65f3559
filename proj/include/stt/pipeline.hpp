#pragma once

#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "stt/config.hpp"
#include "stt/synthesize.hpp"

namespace stt {

// ---------------------------------------------------------------------------
// Few-shot banks and seed samples

inline std::vector<std::string> translatable_fields(TaskKind task) {
    std::vector<std::string> fields;
    for (const auto& [field, tokens] : default_budgets(task)) fields.push_back(field);
    return fields;
}

struct FewShotAssets {
    BankMap banks;                    // one bank per translatable field
    std::vector<Sample> seed_samples; // target-side samples of the chosen pairs
};

// Loads the parallel pairs file and derives both the per-field banks and the
// target-language seed samples from the same deterministic selection.  QA
// seeds arrive with marked contexts (the banks need the tags); the tags are
// stripped back into a plain span before the sample is used as seed data.
inline FewShotAssets load_fewshot_assets(const PipelineConfig& config) {
    std::vector<ParallelPair> pairs = read_parallel_pairs(
        config.fewshot.path, config.task, config.src_lang.code, config.tgt_lang.code);
    if (pairs.empty())
        throw ValidationError("few-shot file " + config.fewshot.path + " is empty");

    FewShotAssets assets;
    for (const std::string& field : translatable_fields(config.task))
        assets.banks[field] =
            sample_few_shots(pairs, field, config.fewshot.k, config.fewshot.seed);

    for (size_t i : sample_indices(pairs.size(), config.fewshot.k, config.fewshot.seed)) {
        Sample seed = pairs[i].tgt;
        if (seed.task() == TaskKind::extractive_qa) {
            SpanExtraction cleaned = extract_marked_span(pairs[i].tgt.qa().context);
            if (cleaned.ok) {
                QASample qa = pairs[i].tgt.qa();
                qa.context = cleaned.clean_text;
                qa.answer_text = cleaned.span_text;
                qa.answer_start = static_cast<long long>(cleaned.new_start);
                seed.data = std::move(qa);
            }
        }
        seed.origin = Origin::fewshot_seed;
        seed.input_lang = config.tgt_lang.code;
        seed.output_lang = config.tgt_lang.code;
        assets.seed_samples.push_back(std::move(seed));
    }
    return assets;
}

// ---------------------------------------------------------------------------
// File-level pipeline steps.  Everything lands inside config.output_dir:
//
//   resolved_config.json  provenance copy of the effective configuration
//   candidates.jsonl      every translation candidate with its outcomes
//   kept.jsonl            pairs that passed the filter
//   rejections.jsonl      one rejection record per removed sample
//   manifest.json         per-field records, note counts, filter stats
//   d_tgt.jsonl d_cs.jsonl mix_*.jsonl train_*.jsonl   (synthesize)

namespace detail {

inline json pair_to_json(const ParallelPair& pair) {
    json j;
    j["src"] = sample_to_json(pair.src);
    j["tgt"] = sample_to_json(pair.tgt);
    return j;
}

inline json outcome_to_json(const TranslationOutcome& outcome) {
    json j;
    j["sample_id"] = outcome.sample_id;
    j["field"] = outcome.field_name;
    j["source_text"] = outcome.source_text;
    j["generated_text"] = outcome.generated_text;
    j["terminated_by_stop"] = outcome.terminated_by_stop;
    j["prompt_bytes"] = outcome.prompt_bytes;
    j["prompt_sha256"] = outcome.prompt_sha256;
    j["notes"] = outcome.notes;
    return j;
}

inline void write_lines(const std::string& path, const std::vector<json>& lines) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    for (const json& line : lines) out << line.dump() << '\n';
    if (!out) throw Error("I/O failure writing " + path);
}

inline void write_json_file(const std::string& path, const json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out << j.dump(2) << '\n';
}

}  // namespace detail

struct TranslateRunSummary {
    size_t samples = 0;
    size_t requests = 0;
    size_t gateway_errors = 0;
    FilterStats filter_stats;
};

inline Dataset load_input_dataset(const PipelineConfig& config) {
    Dataset dataset = read_dataset(config.dataset_path, config.task, config.src_lang);
    if (config.subset.enabled)
        dataset = take_subset(dataset, config.subset.n, config.subset.seed, config.subset.head);
    return dataset;
}

inline TranslateRunSummary run_translate(const PipelineConfig& config) {
    namespace fs = std::filesystem;
    validate_pipeline_config(config);
    fs::create_directories(config.output_dir);
    detail::write_json_file((fs::path(config.output_dir) / "resolved_config.json").string(),
                            pipeline_config_to_json(config));

    Dataset dataset = load_input_dataset(config);
    FewShotAssets assets = load_fewshot_assets(config);
    std::unique_ptr<Backend> backend = make_backend(config.backend);

    TranslateResult translated =
        translate_dataset(dataset, config.tgt_lang, assets.banks, config.budgets, *backend,
                          config.backend.max_in_flight);
    FilterResult filtered = filter_candidates(translated.candidates, config.filter);

    std::vector<json> candidate_lines;
    for (const TranslationCandidate& candidate : translated.candidates) {
        json j = detail::pair_to_json(candidate.pair);
        json outcomes = json::array();
        for (const TranslationOutcome& outcome : candidate.outcomes)
            outcomes.push_back(detail::outcome_to_json(outcome));
        j["outcomes"] = std::move(outcomes);
        j["notes"] = candidate.sample_notes;
        candidate_lines.push_back(std::move(j));
    }
    fs::path out(config.output_dir);
    detail::write_lines((out / "candidates.jsonl").string(), candidate_lines);

    std::vector<json> kept_lines;
    for (const ParallelPair& pair : filtered.kept)
        kept_lines.push_back(detail::pair_to_json(pair));
    detail::write_lines((out / "kept.jsonl").string(), kept_lines);

    std::vector<json> rejection_lines;
    for (const RejectionRecord& record : filtered.rejections)
        rejection_lines.push_back(rejection_to_json(record));
    detail::write_lines((out / "rejections.jsonl").string(), rejection_lines);

    json manifest = translated.manifest.to_json();
    manifest["filter"] = filter_stats_to_json(filtered.stats);
    for (const std::string& warning : filtered.warnings)
        manifest["warnings"].push_back(warning);
    detail::write_json_file((out / "manifest.json").string(), manifest);

    TranslateRunSummary summary;
    summary.samples = translated.manifest.sample_count;
    summary.requests = translated.manifest.request_count;
    summary.gateway_errors = translated.manifest.gateway_error_count;
    summary.filter_stats = filtered.stats;
    return summary;
}

enum class Arm { tgt, cs };

inline std::set<Arm> parse_arms(const std::string& list) {
    std::set<Arm> arms;
    size_t begin = 0;
    while (begin <= list.size()) {
        size_t end = list.find(',', begin);
        std::string item =
            trim(list.substr(begin, end == std::string::npos ? list.size() - begin
                                                             : end - begin));
        if (!item.empty()) {
            if (item == "tgt")
                arms.insert(Arm::tgt);
            else if (item == "cs")
                arms.insert(Arm::cs);
            else
                throw ValidationError("unknown arm '" + item + "' (use tgt and/or cs)");
        }
        if (end == std::string::npos) break;
        begin = end + 1;
    }
    return arms;
}

struct SynthesizeRunSummary {
    std::map<std::string, size_t> dataset_sizes;  // file stem -> sample count
    std::vector<std::string> warnings;
};

inline SynthesizeRunSummary run_synthesize(const PipelineConfig& config,
                                           const std::set<Arm>& arms) {
    namespace fs = std::filesystem;
    validate_pipeline_config(config);
    fs::path out(config.output_dir);
    std::string kept_path = (out / "kept.jsonl").string();
    if (!fs::exists(kept_path))
        throw ValidationError("no filtered candidates at " + kept_path +
                              " (run the translate step first)");

    std::vector<ParallelPair> kept = read_parallel_pairs(
        kept_path, config.task, config.src_lang.code, config.tgt_lang.code);
    Dataset d_src = load_input_dataset(config);
    FewShotAssets assets = load_fewshot_assets(config);

    SynthesizeRunSummary summary;
    std::optional<Dataset> d_tgt, d_cs;
    if (arms.count(Arm::tgt)) {
        d_tgt = build_target_dataset(kept);
        write_dataset(*d_tgt, (out / "d_tgt.jsonl").string());
        summary.dataset_sizes["d_tgt"] = d_tgt->size();
    }
    if (arms.count(Arm::cs)) {
        d_cs = build_code_switch(kept, config.instructions, &summary.warnings);
        write_dataset(*d_cs, (out / "d_cs.jsonl").string());
        summary.dataset_sizes["d_cs"] = d_cs->size();
    }

    json manifest;
    manifest["arms"] = json::array();
    auto emit_mix = [&](const std::string& name, const Dataset* tgt_part,
                        const Dataset* cs_part) {
        auto [mix, mix_manifest] = assemble_training_mix(
            d_src, tgt_part, cs_part, assets.seed_samples, config.shuffle_seed);
        write_dataset(mix, (out / ("mix_" + name + ".jsonl")).string());
        export_training_records(mix, (out / ("train_" + name + ".jsonl")).string());
        summary.dataset_sizes["mix_" + name] = mix.size();
        json arm;
        arm["name"] = name;
        arm["components"] = mix_manifest.component_counts;
        arm["total"] = mix_manifest.total;
        manifest["arms"].push_back(std::move(arm));
    };

    if (arms.empty()) {
        emit_mix("baseline", nullptr, nullptr);
    } else {
        if (arms.count(Arm::tgt)) emit_mix("src+tgt", &*d_tgt, nullptr);
        if (arms.count(Arm::cs) && !arms.count(Arm::tgt))
            emit_mix("src+cs", nullptr, &*d_cs);
        if (arms.count(Arm::tgt) && arms.count(Arm::cs))
            emit_mix("src+tgt+cs", &*d_tgt, &*d_cs);
    }
    manifest["warnings"] = summary.warnings;
    detail::write_json_file((out / "synthesize_manifest.json").string(), manifest);
    return summary;
}

}  // namespace stt
