#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "stt/corpus.hpp"
#include "stt/gateway.hpp"
#include "stt/prompting.hpp"
#include "stt/sha256.hpp"

namespace stt {

// ---------------------------------------------------------------------------
// Token budgets per translated field

using BudgetMap = std::map<std::string, int>;  // field name -> max_new_tokens

inline BudgetMap default_budgets(TaskKind task) {
    switch (task) {
        case TaskKind::math:
            return {{"question", 512}, {"answer", 512}};
        case TaskKind::extractive_qa:
            return {{"context", 512}, {"question", 256}};
        case TaskKind::nli:
            return {{"premise", 256}, {"hypothesis", 256}};
    }
    throw Error("unreachable task kind");
}

inline int budget_for(const BudgetMap& budgets, const std::string& field) {
    auto it = budgets.find(field);
    if (it == budgets.end())
        throw ValidationError("no token budget configured for field '" + field + "'");
    return it->second;
}

// ---------------------------------------------------------------------------
// Mark-then-translate span projection

constexpr std::string_view kOpenTag = "<answer>";
constexpr std::string_view kCloseTag = "</answer>";

struct SpanMarking {
    std::string marked_text;
    size_t span_start = 0;  // original scalar offsets
    size_t span_len = 0;
};

// Inserts the span tags at the scalar boundaries.  Removing the tags
// reproduces the input exactly.
inline SpanMarking mark_answer_span(std::string_view context, size_t answer_start,
                                    size_t answer_len) {
    size_t total = utf8_length(context);
    if (answer_len == 0 || answer_start + answer_len > total)
        throw ValidationError("answer span out of bounds");
    if (context.find(kOpenTag) != std::string_view::npos ||
        context.find(kCloseTag) != std::string_view::npos)
        throw ValidationError("context already contains a span tag; marking would be ambiguous");
    size_t open_byte = utf8_byte_offset(context, answer_start);
    size_t close_byte = utf8_byte_offset(context, answer_start + answer_len);
    std::string marked;
    marked.reserve(context.size() + kOpenTag.size() + kCloseTag.size());
    marked.append(context.substr(0, open_byte));
    marked.append(kOpenTag);
    marked.append(context.substr(open_byte, close_byte - open_byte));
    marked.append(kCloseTag);
    marked.append(context.substr(close_byte));
    return SpanMarking{std::move(marked), answer_start, answer_len};
}

struct SpanExtraction {
    bool ok = false;
    std::string clean_text;
    std::string span_text;
    size_t new_start = 0;  // scalar offset into clean_text
    std::string reason;    // span_missing_tag | span_duplicate_tag | span_crossed_tag
};

inline SpanExtraction extract_marked_span(std::string_view translated) {
    SpanExtraction out;
    size_t open_count = count_occurrences(translated, kOpenTag);
    size_t close_count = count_occurrences(translated, kCloseTag);
    if (open_count == 0 || close_count == 0) {
        out.reason = "span_missing_tag";
        return out;
    }
    if (open_count > 1 || close_count > 1) {
        out.reason = "span_duplicate_tag";
        return out;
    }
    size_t open = translated.find(kOpenTag);
    size_t close = translated.find(kCloseTag);
    if (close < open) {
        out.reason = "span_crossed_tag";
        return out;
    }
    std::string_view before = translated.substr(0, open);
    std::string_view inside = translated.substr(open + kOpenTag.size(),
                                                close - open - kOpenTag.size());
    std::string_view after = translated.substr(close + kCloseTag.size());
    out.ok = true;
    out.clean_text.reserve(translated.size());
    out.clean_text.append(before);
    out.clean_text.append(inside);
    out.clean_text.append(after);
    out.span_text = std::string(inside);
    out.new_start = utf8_length(before);
    return out;
}

// ---------------------------------------------------------------------------
// Rule-based sentence splitting
//
// Terminal punctuation (. ! ? and the CJK 。！？) ends a segment; an ASCII
// mark must be followed by whitespace or end-of-text, and a period does not
// split after a known abbreviation.  Segments come back whitespace-collapsed,
// so joining them with single spaces yields the whitespace-normalized text.

inline const std::set<std::string>& abbreviation_list() {
    static const std::set<std::string> abbreviations = {
        "dr.", "mr.", "mrs.", "ms.", "prof.", "st.", "jr.", "sr.", "vs.",
        "etc.", "e.g.", "i.e.", "cf.", "no.", "nr.", "fig.", "vol.", "inc.",
        "ltd.", "co.", "dept.", "approx.", "jan.", "feb.", "mar.", "apr.",
        "jun.", "jul.", "aug.", "sep.", "sept.", "oct.", "nov.", "dec.",
    };
    return abbreviations;
}

namespace detail {

inline bool is_space_cp(char32_t cp) {
    return cp == U' ' || cp == U'\t' || cp == U'\n' || cp == U'\r' || cp == U'\f' ||
           cp == U'\v';
}

inline std::string encode_range(const std::vector<char32_t>& cps, size_t begin, size_t end) {
    std::string out;
    for (size_t i = begin; i < end; ++i) utf8_append(out, cps[i]);
    return out;
}

// The whitespace-delimited token ending at (and including) position i.
inline std::string token_ending_at(const std::vector<char32_t>& cps, size_t i) {
    size_t begin = i;
    while (begin > 0 && !is_space_cp(cps[begin - 1])) --begin;
    std::string token = encode_range(cps, begin, i + 1);
    return to_lower(token);
}

// Scalar [start, end) ranges of the sentence segments.
inline std::vector<std::pair<size_t, size_t>> segment_ranges(const std::vector<char32_t>& cps) {
    std::vector<std::pair<size_t, size_t>> ranges;
    size_t begin = 0;
    for (size_t i = 0; i < cps.size(); ++i) {
        char32_t cp = cps[i];
        bool boundary = false;
        if (cp == U'。' || cp == U'！' || cp == U'？') {
            boundary = true;
        } else if (cp == U'!' || cp == U'?') {
            boundary = (i + 1 == cps.size()) || is_space_cp(cps[i + 1]);
        } else if (cp == U'.') {
            boundary = ((i + 1 == cps.size()) || is_space_cp(cps[i + 1])) &&
                       abbreviation_list().count(token_ending_at(cps, i)) == 0;
        }
        if (boundary) {
            ranges.emplace_back(begin, i + 1);
            begin = i + 1;
        }
    }
    if (begin < cps.size()) ranges.emplace_back(begin, cps.size());
    return ranges;
}

}  // namespace detail

inline std::vector<std::string> split_sentences(std::string_view text) {
    std::vector<char32_t> cps = utf8_decode(text);
    std::vector<std::string> segments;
    for (auto [begin, end] : detail::segment_ranges(cps)) {
        std::string segment = collapse_whitespace(detail::encode_range(cps, begin, end));
        if (!segment.empty()) segments.push_back(std::move(segment));
    }
    return segments;
}

// ---------------------------------------------------------------------------
// Translation outcomes and orchestration

struct TranslationOutcome {
    std::string sample_id;
    std::string field_name;
    std::string source_text;
    std::string generated_text;  // stop backtick excluded
    bool terminated_by_stop = false;
    size_t prompt_bytes = 0;
    std::string prompt_sha256;
    std::vector<std::string> notes;
};

struct TranslationCandidate {
    ParallelPair pair;
    std::vector<TranslationOutcome> outcomes;
    std::vector<std::string> sample_notes;  // sample-level defects (span extraction)
};

using BankMap = std::map<std::string, FewShotBank>;  // field name -> bank

namespace detail {

struct PlannedUnit {
    std::string field_name;
    std::string source_text;
    GenerationRequest request;
    std::string skip_note;  // non-empty: no gateway call is made
};

struct SamplePlan {
    std::vector<PlannedUnit> units;
    std::vector<std::string> notes;  // sample-level notes from planning
    bool span_expected = false;
};

inline const FewShotBank& bank_for(const BankMap& banks, const std::string& field) {
    auto it = banks.find(field);
    if (it == banks.end())
        throw ValidationError("no few-shot bank configured for field '" + field + "'");
    return it->second;
}

inline PlannedUnit plan_unit(const std::string& field, std::string source_text,
                             const BankMap& banks, const BudgetMap& budgets) {
    PlannedUnit unit;
    unit.field_name = field;
    unit.source_text = std::move(source_text);
    unit.request.max_new_tokens = budget_for(budgets, field);
    unit.request.stop = {"`"};
    try {
        RenderedPrompt prompt = build_translation_prompt(bank_for(banks, field),
                                                         unit.source_text);
        unit.request.prompt = std::move(prompt.text);
    } catch (const DelimiterCollision&) {
        unit.skip_note = "delimiter_collision";
    }
    return unit;
}

// Sentences of a QA context with the span-bearing sentence marked.  Sentences
// that the span crosses are merged into a single unit.
inline std::vector<PlannedUnit> plan_context_units(const QASample& qa, const BankMap& banks,
                                                   const BudgetMap& budgets,
                                                   SamplePlan& plan) {
    std::vector<char32_t> cps = utf8_decode(qa.context);
    auto ranges = segment_ranges(cps);
    if (ranges.empty()) ranges.emplace_back(0, cps.size());

    size_t span_begin = static_cast<size_t>(qa.answer_start);
    size_t span_end = span_begin + utf8_length(qa.answer_text);
    size_t first = SIZE_MAX, last = SIZE_MAX;
    for (size_t i = 0; i < ranges.size(); ++i) {
        if (span_begin < ranges[i].second && span_end > ranges[i].first) {
            if (first == SIZE_MAX) first = i;
            last = i;
        }
    }
    if (first == SIZE_MAX) {  // span falls into inter-segment whitespace
        first = last = ranges.size() - 1;
        for (size_t i = 0; i < ranges.size(); ++i)
            if (span_begin < ranges[i].second) {
                first = last = i;
                break;
            }
    }
    if (first != last) {  // merge the covered range into one unit
        ranges[first].second = ranges[last].second;
        ranges.erase(ranges.begin() + first + 1, ranges.begin() + last + 1);
    }

    std::vector<PlannedUnit> units;
    for (size_t i = 0; i < ranges.size(); ++i) {
        auto [begin, end] = ranges[i];
        std::string sentence = encode_range(cps, begin, end);
        if (trim_view(sentence).empty()) continue;
        if (i == first) {
            // re-anchor the span inside this sentence before trimming
            size_t lead = 0;
            while (begin + lead < end && is_space_cp(cps[begin + lead])) ++lead;
            size_t local_start = span_begin - begin - lead;
            std::string trimmed = trim(sentence);
            std::string marked;
            try {
                marked = mark_answer_span(trimmed, local_start, span_end - span_begin)
                             .marked_text;
            } catch (const ValidationError&) {
                plan.notes.push_back("span_duplicate_tag");
                marked = trimmed;
            }
            units.push_back(plan_unit("context", collapse_whitespace(marked), banks, budgets));
        } else {
            units.push_back(plan_unit("context", collapse_whitespace(sentence), banks, budgets));
        }
    }
    return units;
}

inline SamplePlan plan_sample(const Sample& sample, const BankMap& banks,
                              const BudgetMap& budgets) {
    SamplePlan plan;
    switch (sample.task()) {
        case TaskKind::math:
            plan.units.push_back(plan_unit("question", sample.math().question, banks, budgets));
            plan.units.push_back(plan_unit("answer", sample.math().rationale, banks, budgets));
            break;
        case TaskKind::extractive_qa: {
            const QASample& qa = sample.qa();
            if (qa.extractable()) {
                plan.span_expected = true;
                auto context_units = plan_context_units(qa, banks, budgets, plan);
                plan.units.insert(plan.units.end(), context_units.begin(), context_units.end());
            } else {
                for (const std::string& sentence : split_sentences(qa.context))
                    plan.units.push_back(plan_unit("context", sentence, banks, budgets));
            }
            plan.units.push_back(plan_unit("question", qa.question, banks, budgets));
            break;
        }
        case TaskKind::nli:
            plan.units.push_back(plan_unit("premise", sample.nli().premise, banks, budgets));
            plan.units.push_back(plan_unit("hypothesis", sample.nli().hypothesis, banks, budgets));
            break;
    }
    return plan;
}

inline TranslationOutcome outcome_from(const std::string& sample_id, const PlannedUnit& unit,
                                       const GenerationResult* result) {
    TranslationOutcome outcome;
    outcome.sample_id = sample_id;
    outcome.field_name = unit.field_name;
    outcome.source_text = unit.source_text;
    if (!unit.skip_note.empty()) {
        outcome.notes.push_back(unit.skip_note);
        return outcome;
    }
    outcome.prompt_bytes = unit.request.prompt.size();
    outcome.prompt_sha256 = sha256_hex(unit.request.prompt);
    if (!result || !result->ok()) {
        outcome.notes.push_back("gateway_error: " +
                                (result ? result->error : std::string("missing result")));
        return outcome;
    }
    outcome.generated_text = result->response.text;
    outcome.terminated_by_stop = result->response.terminated_by_stop;
    return outcome;
}

// Rebuilds the rationale tail so the final line is exactly
// "#### <final_answer>"; the numeric answer is language-invariant and the
// source value stays authoritative.
inline std::string restitch_final_answer(const std::string& translated,
                                         const std::string& final_answer, bool& damaged) {
    auto derived = final_answer_of(translated);
    if (derived && *derived == final_answer) {
        damaged = false;
        return translated;
    }
    damaged = true;
    size_t pos = translated.rfind(kAnswerMarker);
    std::string body = pos == std::string::npos ? translated : translated.substr(0, pos);
    while (!body.empty() && (body.back() == '\n' || body.back() == ' ')) body.pop_back();
    if (!body.empty()) body += '\n';
    body += kAnswerMarker;
    body += final_answer;
    return body;
}

struct AssembledSample {
    Sample candidate;
    std::vector<TranslationOutcome> outcomes;
    std::vector<std::string> sample_notes;
};

inline AssembledSample assemble_sample(const Sample& sample, const SamplePlan& plan,
                                       const std::vector<GenerationResult>& results) {
    AssembledSample out;
    out.sample_notes = plan.notes;
    std::vector<std::string> texts;  // per unit: generated or source fallback
    for (size_t i = 0; i < plan.units.size(); ++i) {
        const PlannedUnit& unit = plan.units[i];
        const GenerationResult* result =
            unit.skip_note.empty() && i < results.size() ? &results[i] : nullptr;
        TranslationOutcome outcome = outcome_from(sample.id(), unit, result);
        texts.push_back(outcome.generated_text.empty() ? unit.source_text
                                                       : outcome.generated_text);
        out.outcomes.push_back(std::move(outcome));
    }

    switch (sample.task()) {
        case TaskKind::math: {
            MathSample m = sample.math();
            m.question = texts[0];
            bool damaged = false;
            m.rationale = restitch_final_answer(texts[1], m.final_answer, damaged);
            if (damaged) out.outcomes[1].notes.push_back("final_answer_restitched");
            out.candidate.data = std::move(m);
            break;
        }
        case TaskKind::extractive_qa: {
            QASample q = sample.qa();
            size_t context_units = plan.units.size() - 1;  // question is last
            std::vector<std::string> sentences(texts.begin(),
                                               texts.begin() + context_units);
            std::string reassembled = join(sentences, " ");
            q.question = texts.back();
            if (plan.span_expected) {
                SpanExtraction extraction = extract_marked_span(reassembled);
                if (extraction.ok) {
                    q.context = extraction.clean_text;
                    q.answer_text = extraction.span_text;
                    q.answer_start = static_cast<long long>(extraction.new_start);
                } else {
                    out.sample_notes.push_back(extraction.reason);
                    // strip stray tags; the candidate is rejectable either way
                    std::string stripped = reassembled;
                    for (std::string_view tag : {kOpenTag, kCloseTag})
                        for (size_t pos = stripped.find(tag); pos != std::string::npos;
                             pos = stripped.find(tag, pos))
                            stripped.erase(pos, tag.size());
                    q.context = stripped;
                    q.answer_start = -1;
                }
            } else {
                q.context = reassembled;
            }
            out.candidate.data = std::move(q);
            break;
        }
        case TaskKind::nli: {
            NLISample n = sample.nli();
            n.premise = texts[0];
            n.hypothesis = texts[1];
            out.candidate.data = std::move(n);  // label copied unchanged
            break;
        }
    }
    out.candidate.set_id(sample.id());
    return out;
}

}  // namespace detail

// Translates one field of one sample; no filtering happens here.
inline TranslationOutcome translate_field(const std::string& text, const FewShotBank& bank,
                                          int max_new_tokens, Backend& backend,
                                          const std::string& sample_id = "") {
    detail::PlannedUnit unit;
    unit.field_name = bank.field_name;
    unit.source_text = text;
    unit.request.max_new_tokens = max_new_tokens;
    unit.request.stop = {"`"};
    try {
        unit.request.prompt = build_translation_prompt(bank, text).text;
    } catch (const DelimiterCollision&) {
        unit.skip_note = "delimiter_collision";
        return detail::outcome_from(sample_id, unit, nullptr);
    }
    GenerationResult result = backend.generate_batch({unit.request}, 1).front();
    return detail::outcome_from(sample_id, unit, &result);
}

// Translates every translatable field of the sample: math question and
// rationale separately with the answer value preserved, QA context
// sentence-by-sentence with the span marked and re-extracted, NLI premise and
// hypothesis with the label copied verbatim.
inline TranslationCandidate translate_sample(const Sample& sample, const BankMap& banks,
                                             const BudgetMap& budgets, Backend& backend,
                                             const std::string& src_lang,
                                             const std::string& tgt_lang,
                                             int max_in_flight = 1) {
    detail::SamplePlan plan = detail::plan_sample(sample, banks, budgets);
    std::vector<GenerationRequest> requests;
    for (const auto& unit : plan.units)
        if (unit.skip_note.empty()) requests.push_back(unit.request);
    std::vector<GenerationResult> results;
    if (!requests.empty()) results = backend.generate_batch(requests, max_in_flight);
    // scatter results back to unit positions (skipped units get none)
    std::vector<GenerationResult> aligned(plan.units.size());
    size_t r = 0;
    for (size_t i = 0; i < plan.units.size(); ++i)
        if (plan.units[i].skip_note.empty()) aligned[i] = results[r++];
    detail::AssembledSample assembled = detail::assemble_sample(sample, plan, aligned);

    TranslationCandidate candidate;
    candidate.pair.src = sample;
    candidate.pair.tgt = std::move(assembled.candidate);
    candidate.pair.src_lang = src_lang;
    candidate.pair.tgt_lang = tgt_lang;
    candidate.outcomes = std::move(assembled.outcomes);
    candidate.sample_notes = std::move(assembled.sample_notes);
    return candidate;
}

struct ManifestRecord {
    std::string sample_id;
    std::string field;
    std::string prompt_sha256;
    bool terminated_by_stop = false;
    std::vector<std::string> notes;
};

struct TranslationManifest {
    std::string task;
    std::string source_language;
    std::string target_language;
    size_t sample_count = 0;
    size_t request_count = 0;
    size_t gateway_error_count = 0;
    std::vector<ManifestRecord> records;
    std::map<std::string, size_t> note_counts;
    std::vector<std::string> warnings;

    json to_json() const {
        json j;
        j["task"] = task;
        j["source_language"] = source_language;
        j["target_language"] = target_language;
        j["samples"] = sample_count;
        j["requests"] = request_count;
        j["gateway_errors"] = gateway_error_count;
        json records_json = json::array();
        for (const auto& record : records) {
            json r;
            r["sample_id"] = record.sample_id;
            r["field"] = record.field;
            r["prompt_sha256"] = record.prompt_sha256;
            r["terminated_by_stop"] = record.terminated_by_stop;
            r["notes"] = record.notes;
            records_json.push_back(std::move(r));
        }
        j["records"] = std::move(records_json);
        j["note_counts"] = note_counts;
        j["warnings"] = warnings;
        return j;
    }
};

struct TranslateResult {
    std::vector<TranslationCandidate> candidates;
    TranslationManifest manifest;
};

// Translates a whole source dataset.  All per-field requests go through one
// bounded-concurrency batch, and results are assembled by input index, so the
// output bytes do not depend on max_in_flight.
inline TranslateResult translate_dataset(const Dataset& dataset, const LanguageTag& tgt,
                                         const BankMap& banks, const BudgetMap& budgets,
                                         Backend& backend, int max_in_flight = 1) {
    if (dataset.role != DatasetRole::source)
        throw ValidationError("translate_dataset expects a source-role dataset");

    TranslateResult out;
    out.manifest.task = to_string(dataset.task);
    out.manifest.source_language = dataset.language.code;
    out.manifest.target_language = tgt.code;
    out.manifest.sample_count = dataset.samples.size();

    std::vector<detail::SamplePlan> plans;
    plans.reserve(dataset.samples.size());
    std::vector<GenerationRequest> requests;
    for (const Sample& sample : dataset.samples) {
        plans.push_back(detail::plan_sample(sample, banks, budgets));
        for (const auto& unit : plans.back().units)
            if (unit.skip_note.empty()) requests.push_back(unit.request);
    }
    std::vector<GenerationResult> results;
    if (!requests.empty()) results = backend.generate_batch(requests, max_in_flight);
    out.manifest.request_count = requests.size();

    size_t r = 0;
    for (size_t s = 0; s < dataset.samples.size(); ++s) {
        const detail::SamplePlan& plan = plans[s];
        std::vector<GenerationResult> aligned(plan.units.size());
        for (size_t i = 0; i < plan.units.size(); ++i)
            if (plan.units[i].skip_note.empty()) aligned[i] = results[r++];
        detail::AssembledSample assembled =
            detail::assemble_sample(dataset.samples[s], plan, aligned);

        TranslationCandidate candidate;
        candidate.pair.src = dataset.samples[s];
        candidate.pair.tgt = std::move(assembled.candidate);
        candidate.pair.src_lang = dataset.language.code;
        candidate.pair.tgt_lang = tgt.code;
        candidate.outcomes = std::move(assembled.outcomes);
        candidate.sample_notes = std::move(assembled.sample_notes);

        for (const TranslationOutcome& outcome : candidate.outcomes) {
            ManifestRecord record;
            record.sample_id = outcome.sample_id;
            record.field = outcome.field_name;
            record.prompt_sha256 = outcome.prompt_sha256;
            record.terminated_by_stop = outcome.terminated_by_stop;
            record.notes = outcome.notes;
            for (const std::string& note : outcome.notes)
                out.manifest.note_counts[note.substr(0, note.find(':'))]++;
            out.manifest.records.push_back(std::move(record));
            if (!outcome.notes.empty() &&
                outcome.notes.front().rfind("gateway_error", 0) == 0)
                ++out.manifest.gateway_error_count;
        }
        for (const std::string& note : candidate.sample_notes)
            out.manifest.note_counts[note]++;
        out.candidates.push_back(std::move(candidate));
    }
    return out;
}

// Self-translate-test: translates only the input projection of an evaluation
// set and leaves every output untouched.  Extractive QA is rejected because
// its output is tied to the input language.
inline Dataset translate_test_inputs(const Dataset& dataset, const LanguageTag& to,
                                     const BankMap& banks, const BudgetMap& budgets,
                                     Backend& backend, int max_in_flight = 1) {
    if (dataset.task == TaskKind::extractive_qa)
        throw ValidationError(
            "translate-test is not supported for extractive QA: the answer span is "
            "tied to the context language");
    Dataset out;
    out.task = dataset.task;
    out.language = to;
    out.role = dataset.role;
    out.provenance = "translate-test";

    std::vector<GenerationRequest> requests;
    std::vector<std::vector<detail::PlannedUnit>> unit_lists;
    for (const Sample& sample : dataset.samples) {
        std::vector<detail::PlannedUnit> units;
        for (const Field& field : input_fields(sample))
            units.push_back(detail::plan_unit(field.name, field.text, banks, budgets));
        for (const auto& unit : units)
            if (unit.skip_note.empty()) requests.push_back(unit.request);
        unit_lists.push_back(std::move(units));
    }
    std::vector<GenerationResult> results;
    if (!requests.empty()) results = backend.generate_batch(requests, max_in_flight);

    size_t r = 0;
    for (size_t s = 0; s < dataset.samples.size(); ++s) {
        Sample sample = dataset.samples[s];
        for (const auto& unit : unit_lists[s]) {
            std::string text = unit.source_text;  // fallback: original input
            if (unit.skip_note.empty()) {
                const GenerationResult& result = results[r++];
                if (result.ok() && !result.response.text.empty())
                    text = result.response.text;
            }
            switch (sample.task()) {
                case TaskKind::math:
                    std::get<MathSample>(sample.data).question = text;
                    break;
                case TaskKind::nli:
                    if (unit.field_name == "premise")
                        std::get<NLISample>(sample.data).premise = text;
                    else
                        std::get<NLISample>(sample.data).hypothesis = text;
                    break;
                case TaskKind::extractive_qa:
                    break;  // unreachable, rejected above
            }
        }
        out.samples.push_back(std::move(sample));
    }
    return out;
}

}  // namespace stt
