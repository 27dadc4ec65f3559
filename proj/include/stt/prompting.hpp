#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "stt/corpus.hpp"

namespace stt {

// Raised when data contains the raw backtick delimiter.  The prompt grammar
// has no escape, so such samples are rejected rather than silently altered.
struct DelimiterCollision : Error {
    using Error::Error;
};

constexpr char kBacktick = '`';

// k aligned source/target text pairs for one field of one task.
struct FewShotBank {
    TaskKind task = TaskKind::math;
    std::string field_name;
    std::vector<std::pair<std::string, std::string>> pairs;  // (src, tgt)
    LanguageTag src_lang;
    LanguageTag tgt_lang;
};

inline void validate_bank(const FewShotBank& bank) {
    if (bank.pairs.empty()) throw ValidationError("few-shot bank has no pairs");
    for (const auto& [src, tgt] : bank.pairs)
        if (src.find(kBacktick) != std::string::npos ||
            tgt.find(kBacktick) != std::string::npos)
            throw DelimiterCollision("few-shot pair text contains a backtick");
}

struct RenderedPrompt {
    std::string text;
    std::string stop_sequence;  // always the closing backtick
};

// Few-shot translation prompt.  One block per pair,
//
//   <src>: `<src text>`
//   <tgt>: `<tgt text>`
//   <blank line>
//
// then the source block with a dangling open backtick for the model to
// complete.  Rendering is byte-stable: "\n" newlines on every platform.
inline RenderedPrompt build_translation_prompt(const FewShotBank& bank,
                                               std::string_view source_text) {
    validate_bank(bank);
    if (trim_view(source_text).empty())
        throw ValidationError("source text for translation is empty");
    if (source_text.find(kBacktick) != std::string_view::npos)
        throw DelimiterCollision("source text contains a backtick");

    const std::string& src = bank.src_lang.code;
    const std::string& tgt = bank.tgt_lang.code;
    std::string text;
    for (const auto& [src_text, tgt_text] : bank.pairs) {
        text += src;
        text += ": `";
        text += src_text;
        text += "`\n";
        text += tgt;
        text += ": `";
        text += tgt_text;
        text += "`\n\n";
    }
    text += src;
    text += ": `";
    text += source_text;
    text += "`\n";
    text += tgt;
    text += ": `";
    return RenderedPrompt{std::move(text), std::string(1, kBacktick)};
}

// Answer-language instruction for code-switched records: the configured
// per-language rendering, or the English fallback when the table has none.
inline std::string render_code_switch_instruction(
    const LanguageTag& tgt, const std::map<std::string, std::string>& table,
    std::vector<std::string>* warnings = nullptr) {
    if (auto it = table.find(tgt.code); it != table.end()) return it->second;
    if (warnings)
        warnings->push_back("instruction table has no entry for '" + tgt.code +
                            "', using the English fallback");
    return "Please answer in " + tgt.display_name + ".";
}

// Deterministically samples k pairs and extracts one field from both sides.
inline FewShotBank sample_few_shots(const std::vector<ParallelPair>& parallel,
                                    const std::string& field_name, size_t k, uint64_t seed) {
    if (k == 0) throw ValidationError("few-shot bank needs at least one pair");
    if (k > parallel.size())
        throw ValidationError("requested " + std::to_string(k) + " few-shot pairs but only " +
                              std::to_string(parallel.size()) + " are available");
    FewShotBank bank;
    bank.task = parallel.front().src.task();
    bank.field_name = field_name;
    bank.src_lang = make_language(parallel.front().src_lang);
    bank.tgt_lang = make_language(parallel.front().tgt_lang);
    for (size_t i : sample_indices(parallel.size(), k, seed)) {
        const ParallelPair& pair = parallel[i];
        auto src_text = field_text(pair.src, field_name);
        auto tgt_text = field_text(pair.tgt, field_name);
        if (!src_text || !tgt_text)
            throw ValidationError("task " + to_string(bank.task) + " has no field '" +
                                  field_name + "'");
        bank.pairs.emplace_back(std::move(*src_text), std::move(*tgt_text));
    }
    validate_bank(bank);
    return bank;
}

}  // namespace stt
