#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "stt/util.hpp"

namespace stt {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Languages

struct LanguageTag {
    std::string code;          // short lowercase identifier ("en", "de", ...)
    std::string display_name;  // used verbatim in prompts
    Ratio char_weight{1, 1};   // length-normalization factor
};

// Built-in normalization factors: en/de/ru/th count as 1, zh as 3.
inline Ratio default_char_weight(std::string_view code) {
    return code == "zh" ? Ratio(3, 1) : Ratio(1, 1);
}

inline std::string default_display_name(std::string_view code) {
    static const std::map<std::string_view, std::string_view> names = {
        {"en", "English"}, {"de", "German"}, {"ru", "Russian"},
        {"th", "Thai"},    {"zh", "Chinese"},
    };
    auto it = names.find(code);
    return it != names.end() ? std::string(it->second) : std::string(code);
}

inline void validate_language(const LanguageTag& lang) {
    if (lang.code.empty()) throw ValidationError("language code must be non-empty");
    for (char c : lang.code) {
        unsigned char u = static_cast<unsigned char>(c);
        if (u >= 0x80 || std::isupper(u))
            throw ValidationError("language code must be lowercase ASCII: " + lang.code);
    }
    if (!lang.char_weight.positive())
        throw ValidationError("char_weight must be positive for " + lang.code);
}

inline LanguageTag make_language(std::string code, std::string display_name = "") {
    LanguageTag lang;
    lang.code = std::move(code);
    lang.display_name = display_name.empty() ? default_display_name(lang.code)
                                             : std::move(display_name);
    lang.char_weight = default_char_weight(lang.code);
    validate_language(lang);
    return lang;
}

// ---------------------------------------------------------------------------
// Tasks and samples

enum class TaskKind { math, extractive_qa, nli };

inline std::string to_string(TaskKind task) {
    switch (task) {
        case TaskKind::math: return "math";
        case TaskKind::extractive_qa: return "qa";
        case TaskKind::nli: return "nli";
    }
    throw Error("unreachable task kind");
}

inline TaskKind task_from_string(std::string_view s) {
    if (s == "math") return TaskKind::math;
    if (s == "qa") return TaskKind::extractive_qa;
    if (s == "nli") return TaskKind::nli;
    throw ValidationError("unknown task kind: " + std::string(s));
}

enum class NLILabel { entailment, neutral, contradiction };

inline std::string to_string(NLILabel label) {
    switch (label) {
        case NLILabel::entailment: return "entailment";
        case NLILabel::neutral: return "neutral";
        case NLILabel::contradiction: return "contradiction";
    }
    throw Error("unreachable NLI label");
}

// Readers accept any casing; the canonical stored form is lowercase.
inline NLILabel nli_label_from_string(std::string_view s) {
    std::string lower = to_lower(trim_view(s));
    if (lower == "entailment") return NLILabel::entailment;
    if (lower == "neutral") return NLILabel::neutral;
    if (lower == "contradiction") return NLILabel::contradiction;
    throw ValidationError("unknown NLI label: " + std::string(s));
}

constexpr std::string_view kAnswerMarker = "#### ";

struct MathSample {
    std::string id;
    std::string question;
    std::string rationale;     // step-by-step solution ending in "#### <number>"
    std::string final_answer;  // numeric literal after the last marker
};

struct QASample {
    std::string id;
    std::string context;
    std::string question;
    std::string answer_text;
    long long answer_start = 0;  // scalar-value offset into context; -1 marks a
                                 // non-extractable (cross-language) record

    bool extractable() const { return answer_start >= 0; }
};

struct NLISample {
    std::string id;
    std::string premise;
    std::string hypothesis;
    NLILabel label = NLILabel::neutral;
};

// Origin tag carried by samples that synthesis operations produce.
enum class Origin { src, tgt, cs_src_input, cs_tgt_input, fewshot_seed };

inline std::string to_string(Origin o) {
    switch (o) {
        case Origin::src: return "src";
        case Origin::tgt: return "tgt";
        case Origin::cs_src_input: return "cs_src_input";
        case Origin::cs_tgt_input: return "cs_tgt_input";
        case Origin::fewshot_seed: return "fewshot_seed";
    }
    throw Error("unreachable origin");
}

inline Origin origin_from_string(std::string_view s) {
    if (s == "src") return Origin::src;
    if (s == "tgt") return Origin::tgt;
    if (s == "cs_src_input") return Origin::cs_src_input;
    if (s == "cs_tgt_input") return Origin::cs_tgt_input;
    if (s == "fewshot_seed") return Origin::fewshot_seed;
    throw ValidationError("unknown origin: " + std::string(s));
}

struct Sample {
    std::variant<MathSample, QASample, NLISample> data;

    // Synthesis annotations.  Empty until an op sets them; code-switched
    // records carry the answer-language instruction here and it is prepended
    // to the rendered input at export time.
    std::string instruction;
    std::string input_lang;
    std::string output_lang;
    std::optional<Origin> origin;

    TaskKind task() const {
        if (std::holds_alternative<MathSample>(data)) return TaskKind::math;
        if (std::holds_alternative<QASample>(data)) return TaskKind::extractive_qa;
        return TaskKind::nli;
    }

    const std::string& id() const {
        return std::visit([](const auto& s) -> const std::string& { return s.id; }, data);
    }

    void set_id(std::string id) {
        std::visit([&](auto& s) { s.id = std::move(id); }, data);
    }

    const MathSample& math() const { return std::get<MathSample>(data); }
    const QASample& qa() const { return std::get<QASample>(data); }
    const NLISample& nli() const { return std::get<NLISample>(data); }
};

struct Field {
    std::string name;
    std::string text;
};

// The task input projection x: the fields shown to the model.
inline std::vector<Field> input_fields(const Sample& sample) {
    switch (sample.task()) {
        case TaskKind::math:
            return {{"question", sample.math().question}};
        case TaskKind::extractive_qa:
            return {{"context", sample.qa().context}, {"question", sample.qa().question}};
        case TaskKind::nli:
            return {{"premise", sample.nli().premise},
                    {"hypothesis", sample.nli().hypothesis}};
    }
    throw Error("unreachable task kind");
}

// The task output projection y.
inline Field output_field(const Sample& sample) {
    switch (sample.task()) {
        case TaskKind::math:
            return {"answer", sample.math().rationale};
        case TaskKind::extractive_qa:
            return {"answer_text", sample.qa().answer_text};
        case TaskKind::nli:
            return {"label", to_string(sample.nli().label)};
    }
    throw Error("unreachable task kind");
}

// Text of a named field, or nullopt when the task has no such field.
inline std::optional<std::string> field_text(const Sample& sample, std::string_view field) {
    switch (sample.task()) {
        case TaskKind::math:
            if (field == "question") return sample.math().question;
            if (field == "answer") return sample.math().rationale;
            return std::nullopt;
        case TaskKind::extractive_qa:
            if (field == "context") return sample.qa().context;
            if (field == "question") return sample.qa().question;
            if (field == "answer_text") return sample.qa().answer_text;
            return std::nullopt;
        case TaskKind::nli:
            if (field == "premise") return sample.nli().premise;
            if (field == "hypothesis") return sample.nli().hypothesis;
            return std::nullopt;
    }
    return std::nullopt;
}

// Final answer derived from a rationale: the text after the last "#### "
// marker, up to the end of that line.
inline std::optional<std::string> final_answer_of(std::string_view rationale) {
    size_t pos = rationale.rfind(kAnswerMarker);
    if (pos == std::string_view::npos) return std::nullopt;
    size_t begin = pos + kAnswerMarker.size();
    size_t end = rationale.find('\n', begin);
    if (end == std::string_view::npos) end = rationale.size();
    std::string answer = trim(rationale.substr(begin, end - begin));
    if (answer.empty()) return std::nullopt;
    return answer;
}

inline void validate_sample(const Sample& sample) {
    const std::string& id = sample.id();
    switch (sample.task()) {
        case TaskKind::math: {
            const auto& m = sample.math();
            auto derived = final_answer_of(m.rationale);
            if (!derived)
                throw ValidationError("sample " + id + ": rationale lacks a '#### ' answer marker");
            if (*derived != m.final_answer)
                throw ValidationError("sample " + id + ": final_answer '" + m.final_answer +
                                      "' does not match rationale marker '" + *derived + "'");
            break;
        }
        case TaskKind::extractive_qa: {
            const auto& q = sample.qa();
            if (!q.extractable()) break;  // cross-language record, span not meaningful
            size_t span_len = utf8_length(q.answer_text);
            std::string actual =
                utf8_substr(q.context, static_cast<size_t>(q.answer_start), span_len);
            if (actual != q.answer_text)
                throw ValidationError("sample " + id + ": answer span at offset " +
                                      std::to_string(q.answer_start) + " reads '" + actual +
                                      "', expected '" + q.answer_text + "'");
            break;
        }
        case TaskKind::nli:
            break;  // label validity is enforced by the enum
    }
}

// ---------------------------------------------------------------------------
// Datasets

enum class DatasetRole { source, target, code_switched, mixed };

inline std::string to_string(DatasetRole role) {
    switch (role) {
        case DatasetRole::source: return "source";
        case DatasetRole::target: return "target";
        case DatasetRole::code_switched: return "code_switched";
        case DatasetRole::mixed: return "mixed";
    }
    throw Error("unreachable dataset role");
}

struct Dataset {
    TaskKind task = TaskKind::math;
    LanguageTag language;
    DatasetRole role = DatasetRole::source;
    std::vector<Sample> samples;
    std::string provenance;  // free-form note, e.g. "translate-test"

    size_t size() const { return samples.size(); }
};

// Aligned source/target instance; same id and task, different languages.
struct ParallelPair {
    Sample src;
    Sample tgt;
    std::string src_lang;
    std::string tgt_lang;
};

// ---------------------------------------------------------------------------
// JSON Lines persistence
//
// Math: {"id": str?, "question": str, "answer": str}
//   ("answer" is the rationale including the "#### " marker line)
// QA:   {"id": str?, "context": str, "question": str, "answer_text": str,
//        "answer_start": int}
// NLI:  {"id": str?, "premise": str, "hypothesis": str, "label": str}
//
// Synthesis annotations round-trip through optional keys ("instruction",
// "input_lang", "output_lang", "origin") that plain corpus files never carry.

namespace detail {

inline std::string require_string(const json& j, const char* key, const std::string& where) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string())
        throw ValidationError(where + ": missing or non-string field '" + key + "'");
    return it->get<std::string>();
}

inline long long require_int(const json& j, const char* key, const std::string& where) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_number_integer())
        throw ValidationError(where + ": missing or non-integer field '" + key + "'");
    return it->get<long long>();
}

}  // namespace detail

inline json sample_to_json(const Sample& sample) {
    json j;
    j["id"] = sample.id();
    switch (sample.task()) {
        case TaskKind::math:
            j["question"] = sample.math().question;
            j["answer"] = sample.math().rationale;
            break;
        case TaskKind::extractive_qa:
            j["context"] = sample.qa().context;
            j["question"] = sample.qa().question;
            j["answer_text"] = sample.qa().answer_text;
            j["answer_start"] = sample.qa().answer_start;
            break;
        case TaskKind::nli:
            j["premise"] = sample.nli().premise;
            j["hypothesis"] = sample.nli().hypothesis;
            j["label"] = to_string(sample.nli().label);
            break;
    }
    if (!sample.instruction.empty()) j["instruction"] = sample.instruction;
    if (!sample.input_lang.empty()) j["input_lang"] = sample.input_lang;
    if (!sample.output_lang.empty()) j["output_lang"] = sample.output_lang;
    if (sample.origin) j["origin"] = to_string(*sample.origin);
    return j;
}

inline Sample sample_from_json(const json& j, TaskKind task, const std::string& where,
                               const std::string& fallback_id = "") {
    Sample sample;
    std::string id = fallback_id;
    if (auto it = j.find("id"); it != j.end()) {
        if (it->is_string())
            id = it->get<std::string>();
        else if (it->is_number_integer())
            id = std::to_string(it->get<long long>());
        else
            throw ValidationError(where + ": field 'id' must be a string");
    }
    switch (task) {
        case TaskKind::math: {
            MathSample m;
            m.id = id;
            m.question = detail::require_string(j, "question", where);
            m.rationale = detail::require_string(j, "answer", where);
            auto derived = final_answer_of(m.rationale);
            if (!derived)
                throw ValidationError(where + ": answer lacks a '#### ' marker (id " + id + ")");
            m.final_answer = *derived;
            sample.data = std::move(m);
            break;
        }
        case TaskKind::extractive_qa: {
            QASample q;
            q.id = id;
            q.context = detail::require_string(j, "context", where);
            q.question = detail::require_string(j, "question", where);
            q.answer_text = detail::require_string(j, "answer_text", where);
            q.answer_start = detail::require_int(j, "answer_start", where);
            sample.data = std::move(q);
            break;
        }
        case TaskKind::nli: {
            NLISample n;
            n.id = id;
            n.premise = detail::require_string(j, "premise", where);
            n.hypothesis = detail::require_string(j, "hypothesis", where);
            try {
                n.label = nli_label_from_string(detail::require_string(j, "label", where));
            } catch (const ValidationError& e) {
                throw ValidationError(where + " (id " + id + "): " + e.what());
            }
            sample.data = std::move(n);
            break;
        }
    }
    if (auto it = j.find("instruction"); it != j.end()) sample.instruction = it->get<std::string>();
    if (auto it = j.find("input_lang"); it != j.end()) sample.input_lang = it->get<std::string>();
    if (auto it = j.find("output_lang"); it != j.end()) sample.output_lang = it->get<std::string>();
    if (auto it = j.find("origin"); it != j.end())
        sample.origin = origin_from_string(it->get<std::string>());
    try {
        validate_sample(sample);
    } catch (const ValidationError& e) {
        throw ValidationError(where + ": " + e.what());
    }
    return sample;
}

namespace detail {

// Calls fn(line_number, line_text) for every non-blank line.
template <typename Fn>
inline void for_each_jsonl_line(const std::string& path, Fn&& fn) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + path);
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim_view(line).empty()) continue;
        fn(line_no, line);
    }
}

inline json parse_jsonl_line(const std::string& path, size_t line_no, const std::string& line) {
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw ValidationError(path + ":" + std::to_string(line_no) + ": malformed JSON line");
    return j;
}

}  // namespace detail

inline Dataset read_dataset(const std::string& path, TaskKind task, LanguageTag language,
                            DatasetRole role = DatasetRole::source) {
    Dataset ds;
    ds.task = task;
    ds.language = std::move(language);
    ds.role = role;
    std::set<std::string> seen_ids;
    detail::for_each_jsonl_line(path, [&](size_t line_no, const std::string& line) {
        std::string where = path + ":" + std::to_string(line_no);
        json j = detail::parse_jsonl_line(path, line_no, line);
        Sample sample = sample_from_json(j, task, where, std::to_string(line_no));
        if (!seen_ids.insert(sample.id()).second)
            throw ValidationError(where + ": duplicate sample id '" + sample.id() + "'");
        ds.samples.push_back(std::move(sample));
    });
    return ds;
}

inline std::vector<ParallelPair> read_parallel_pairs(const std::string& path, TaskKind task,
                                                     const std::string& src_lang,
                                                     const std::string& tgt_lang) {
    std::vector<ParallelPair> pairs;
    detail::for_each_jsonl_line(path, [&](size_t line_no, const std::string& line) {
        std::string where = path + ":" + std::to_string(line_no);
        json j = detail::parse_jsonl_line(path, line_no, line);
        if (!j.contains("src") || !j.contains("tgt"))
            throw ValidationError(where + ": expected 'src' and 'tgt' objects");
        ParallelPair pair;
        pair.src = sample_from_json(j["src"], task, where + " (src)", std::to_string(line_no));
        pair.tgt = sample_from_json(j["tgt"], task, where + " (tgt)", std::to_string(line_no));
        if (pair.src.id() != pair.tgt.id())
            throw ValidationError(where + ": src/tgt ids differ");
        pair.src_lang = src_lang;
        pair.tgt_lang = tgt_lang;
        pairs.push_back(std::move(pair));
    });
    return pairs;
}

inline void write_dataset(const Dataset& dataset, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    for (const Sample& sample : dataset.samples) out << sample_to_json(sample).dump() << '\n';
    if (!out) throw Error("I/O failure writing " + path);
}

// Deterministic subset without replacement.  n >= N returns the dataset
// unchanged; otherwise either the n first samples (head) or a seeded random
// selection, in original dataset order.
inline Dataset take_subset(const Dataset& dataset, size_t n, uint64_t seed, bool head = false) {
    if (n >= dataset.samples.size()) return dataset;
    Dataset out;
    out.task = dataset.task;
    out.language = dataset.language;
    out.role = dataset.role;
    out.provenance = dataset.provenance;
    if (head) {
        out.samples.assign(dataset.samples.begin(), dataset.samples.begin() + n);
        return out;
    }
    for (size_t i : sample_indices(dataset.samples.size(), n, seed))
        out.samples.push_back(dataset.samples[i]);
    return out;
}

}  // namespace stt
