#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stt/filter.hpp"
#include "stt/prompting.hpp"

namespace stt {

// ---------------------------------------------------------------------------
// Trainer-ready records

struct TrainingRecord {
    std::string input_text;   // rendered task prompt, instruction included
    std::string output_text;
    bool loss_on_output_only = true;
    std::string input_lang;
    std::string output_lang;
    Origin origin = Origin::src;
    bool non_extractable = false;  // QA records whose answer is absent from
                                   // the (cross-language) context
};

// Task prompt templates, frozen; every sample renders to one
// (input, output) pair of generation text.
inline std::pair<std::string, std::string> render_task_text(const Sample& sample) {
    switch (sample.task()) {
        case TaskKind::math:
            return {sample.math().question + "\n", sample.math().rationale};
        case TaskKind::extractive_qa:
            return {"Context: " + sample.qa().context + "\nQuestion: " +
                        sample.qa().question + "\n",
                    sample.qa().answer_text};
        case TaskKind::nli: {
            std::string label = to_string(sample.nli().label);
            label[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(label[0])));
            return {"Premise: " + sample.nli().premise + "\nHypothesis: " +
                        sample.nli().hypothesis +
                        "\nWhat is their logical relation? Entailment, Neutral or "
                        "Contradition.\n",
                    label};
        }
    }
    throw Error("unreachable task kind");
}

inline TrainingRecord render_training_record(const Sample& sample,
                                             const std::string& fallback_lang) {
    auto [input, output] = render_task_text(sample);
    TrainingRecord record;
    if (!sample.instruction.empty()) input = sample.instruction + "\n" + input;
    record.input_text = std::move(input);
    record.output_text = std::move(output);
    record.input_lang = sample.input_lang.empty() ? fallback_lang : sample.input_lang;
    record.output_lang = sample.output_lang.empty() ? fallback_lang : sample.output_lang;
    record.origin = sample.origin.value_or(Origin::src);
    if (sample.task() == TaskKind::extractive_qa)
        record.non_extractable = !sample.qa().extractable();
    if (record.output_text.empty())
        throw ValidationError("sample " + sample.id() + " renders an empty output");
    return record;
}

// ---------------------------------------------------------------------------
// Synthetic dataset construction

namespace detail {

inline void require_uniform_pairs(const std::vector<ParallelPair>& pairs) {
    for (size_t i = 1; i < pairs.size(); ++i) {
        if (pairs[i].src_lang != pairs[0].src_lang || pairs[i].tgt_lang != pairs[0].tgt_lang)
            throw ValidationError("parallel pairs mix language pairs");
        if (pairs[i].src.task() != pairs[0].src.task())
            throw ValidationError("parallel pairs mix task kinds");
    }
}

// Scalar offset of needle inside haystack, or -1.
inline long long scalar_find(std::string_view haystack, std::string_view needle) {
    if (needle.empty()) return -1;
    size_t byte_pos = haystack.find(needle);
    if (byte_pos == std::string::npos) return -1;
    return static_cast<long long>(utf8_length(haystack.substr(0, byte_pos)));
}

}  // namespace detail

// The target-side projection of the kept pairs, order preserved.
inline Dataset build_target_dataset(const std::vector<ParallelPair>& kept) {
    detail::require_uniform_pairs(kept);
    Dataset out;
    out.role = DatasetRole::target;
    if (!kept.empty()) {
        out.task = kept.front().src.task();
        out.language = make_language(kept.front().tgt_lang);
    }
    for (const ParallelPair& pair : kept) {
        Sample sample = pair.tgt;
        sample.origin = Origin::tgt;
        sample.input_lang = pair.tgt_lang;
        sample.output_lang = pair.tgt_lang;
        out.samples.push_back(std::move(sample));
    }
    return out;
}

namespace detail {

// One code-switched record: input projection from one side, output projection
// from the other.
inline Sample code_switch_sample(const Sample& input_side, const Sample& output_side,
                                 const std::string& input_lang, const std::string& output_lang,
                                 Origin origin, const std::string& instruction) {
    Sample sample;
    switch (input_side.task()) {
        case TaskKind::math: {
            MathSample m;
            m.question = input_side.math().question;
            m.rationale = output_side.math().rationale;
            m.final_answer = output_side.math().final_answer;
            sample.data = std::move(m);
            break;
        }
        case TaskKind::extractive_qa: {
            QASample q;
            q.context = input_side.qa().context;
            q.question = input_side.qa().question;
            q.answer_text = output_side.qa().answer_text;
            // the answer usually lives in the other language's context; keep
            // the record but flag it when the span cannot be located
            q.answer_start = scalar_find(q.context, q.answer_text);
            sample.data = std::move(q);
            break;
        }
        case TaskKind::nli: {
            NLISample n;
            n.premise = input_side.nli().premise;
            n.hypothesis = input_side.nli().hypothesis;
            n.label = output_side.nli().label;
            sample.data = std::move(n);
            break;
        }
    }
    sample.set_id(input_side.id() + (origin == Origin::cs_src_input ? "#cs-st" : "#cs-ts"));
    sample.instruction = instruction;
    sample.input_lang = input_lang;
    sample.output_lang = output_lang;
    sample.origin = origin;
    return sample;
}

}  // namespace detail

// Code-switched dataset over the kept pairs: {(x_src, y_tgt)} then
// {(x_tgt, y_src)}, cardinality exactly 2 * |kept|.  Tasks whose output is
// natural language (math, QA) get the output-language instruction prepended
// to the rendered input; NLI outputs a closed label and carries none.
inline Dataset build_code_switch(const std::vector<ParallelPair>& kept,
                                 const std::map<std::string, std::string>& instruction_table,
                                 std::vector<std::string>* warnings = nullptr) {
    detail::require_uniform_pairs(kept);
    Dataset out;
    out.role = DatasetRole::code_switched;
    if (kept.empty()) return out;

    out.task = kept.front().src.task();
    out.language = make_language(kept.front().tgt_lang);
    const bool natural_language_output = out.task != TaskKind::nli;
    const LanguageTag src_lang = make_language(kept.front().src_lang);
    const LanguageTag tgt_lang = make_language(kept.front().tgt_lang);
    std::string to_tgt_instruction, to_src_instruction;
    if (natural_language_output) {
        to_tgt_instruction = render_code_switch_instruction(tgt_lang, instruction_table, warnings);
        to_src_instruction = render_code_switch_instruction(src_lang, instruction_table, warnings);
    }
    for (const ParallelPair& pair : kept)
        out.samples.push_back(detail::code_switch_sample(pair.src, pair.tgt, pair.src_lang,
                                                         pair.tgt_lang, Origin::cs_src_input,
                                                         to_tgt_instruction));
    for (const ParallelPair& pair : kept)
        out.samples.push_back(detail::code_switch_sample(pair.tgt, pair.src, pair.tgt_lang,
                                                         pair.src_lang, Origin::cs_tgt_input,
                                                         to_src_instruction));
    return out;
}

struct MixManifest {
    std::map<std::string, size_t> component_counts;
    size_t total = 0;
};

// Concatenates the requested components plus the few-shot seed samples (every
// experimental arm sees the same data resources) and shuffles
// deterministically.
inline std::pair<Dataset, MixManifest> assemble_training_mix(
    const Dataset& d_src, const Dataset* d_tgt, const Dataset* d_cs,
    const std::vector<Sample>& fewshot_seed_samples, uint64_t shuffle_seed) {
    for (const Dataset* part : {d_tgt, d_cs})
        if (part && part->task != d_src.task && !part->samples.empty())
            throw ValidationError("training mix components disagree on the task kind");
    for (const Sample& seed : fewshot_seed_samples)
        if (seed.task() != d_src.task)
            throw ValidationError("few-shot seed sample task does not match the mix");

    Dataset mix;
    mix.task = d_src.task;
    mix.language = d_src.language;
    mix.role = DatasetRole::mixed;
    MixManifest manifest;

    auto add = [&](const Dataset& part, Origin default_origin, const char* name) {
        for (Sample sample : part.samples) {
            if (!sample.origin) sample.origin = default_origin;
            if (sample.input_lang.empty()) sample.input_lang = part.language.code;
            if (sample.output_lang.empty()) sample.output_lang = part.language.code;
            mix.samples.push_back(std::move(sample));
        }
        manifest.component_counts[name] = part.samples.size();
    };
    add(d_src, Origin::src, "src");
    if (d_tgt) add(*d_tgt, Origin::tgt, "tgt");
    if (d_cs) add(*d_cs, Origin::cs_src_input, "cs");
    for (Sample seed : fewshot_seed_samples) {
        if (!seed.origin) seed.origin = Origin::fewshot_seed;
        mix.samples.push_back(std::move(seed));
    }
    manifest.component_counts["fewshot_seed"] = fewshot_seed_samples.size();
    manifest.total = mix.samples.size();

    std::vector<Sample> shuffled;
    shuffled.reserve(mix.samples.size());
    for (size_t i : shuffled_indices(mix.samples.size(), shuffle_seed))
        shuffled.push_back(std::move(mix.samples[i]));
    mix.samples = std::move(shuffled);
    return {std::move(mix), std::move(manifest)};
}

// ---------------------------------------------------------------------------
// TrainingRecord JSON Lines

inline json training_record_to_json(const TrainingRecord& record) {
    json j;
    j["input"] = record.input_text;
    j["output"] = record.output_text;
    j["loss_on_output_only"] = record.loss_on_output_only;
    j["input_lang"] = record.input_lang;
    j["output_lang"] = record.output_lang;
    j["origin"] = to_string(record.origin);
    if (record.non_extractable) j["non_extractable"] = true;
    return j;
}

inline TrainingRecord training_record_from_json(const json& j, const std::string& where) {
    TrainingRecord record;
    record.input_text = detail::require_string(j, "input", where);
    record.output_text = detail::require_string(j, "output", where);
    if (auto it = j.find("loss_on_output_only"); it != j.end())
        record.loss_on_output_only = it->get<bool>();
    record.input_lang = detail::require_string(j, "input_lang", where);
    record.output_lang = detail::require_string(j, "output_lang", where);
    record.origin = origin_from_string(detail::require_string(j, "origin", where));
    if (auto it = j.find("non_extractable"); it != j.end())
        record.non_extractable = it->get<bool>();
    return record;
}

// Renders every sample through the task templates and writes one record per
// line; bytes are deterministic for a given dataset.
inline void export_training_records(const Dataset& dataset, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    for (const Sample& sample : dataset.samples) {
        TrainingRecord record = render_training_record(sample, dataset.language.code);
        out << training_record_to_json(record).dump() << '\n';
    }
    if (!out) throw Error("I/O failure writing " + path);
}

inline std::vector<TrainingRecord> read_training_records(const std::string& path) {
    std::vector<TrainingRecord> records;
    detail::for_each_jsonl_line(path, [&](size_t line_no, const std::string& line) {
        std::string where = path + ":" + std::to_string(line_no);
        records.push_back(training_record_from_json(
            detail::parse_jsonl_line(path, line_no, line), where));
    });
    return records;
}

}  // namespace stt
