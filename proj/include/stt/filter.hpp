#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "stt/translate.hpp"

namespace stt {

struct FilterConfig {
    Ratio min_ratio{1, 3};
    Ratio max_ratio{3, 1};
    std::map<std::string, Ratio> weight_map;  // language code -> char weight
    bool boundary_inclusive = true;
};

inline void validate_filter_config(const FilterConfig& config) {
    if (!config.min_ratio.positive())
        throw ValidationError("min_ratio must be positive");
    if (!(config.min_ratio < config.max_ratio))
        throw ValidationError("min_ratio must be below max_ratio");
}

enum class RejectReason {
    ratio_low,
    ratio_high,
    incomplete_generation,
    span_missing_tag,
    span_duplicate_tag,
    span_crossed_tag,
    delimiter_collision,
};

inline std::string to_string(RejectReason reason) {
    switch (reason) {
        case RejectReason::ratio_low: return "ratio_low";
        case RejectReason::ratio_high: return "ratio_high";
        case RejectReason::incomplete_generation: return "incomplete_generation";
        case RejectReason::span_missing_tag: return "span_missing_tag";
        case RejectReason::span_duplicate_tag: return "span_duplicate_tag";
        case RejectReason::span_crossed_tag: return "span_crossed_tag";
        case RejectReason::delimiter_collision: return "delimiter_collision";
    }
    throw Error("unreachable rejection reason");
}

inline std::optional<RejectReason> reject_reason_from_note(std::string_view note) {
    if (note == "delimiter_collision") return RejectReason::delimiter_collision;
    if (note == "span_missing_tag") return RejectReason::span_missing_tag;
    if (note == "span_duplicate_tag") return RejectReason::span_duplicate_tag;
    if (note == "span_crossed_tag") return RejectReason::span_crossed_tag;
    return std::nullopt;
}

struct RejectionRecord {
    std::string sample_id;
    RejectReason reason = RejectReason::incomplete_generation;
    std::string field_name;
    std::optional<double> measured_ratio;
};

struct FilterStats {
    size_t total = 0;
    size_t kept = 0;
    std::map<std::string, size_t> rejected_by_reason;
    double removal_rate = 0.0;
    // per-field granularity, alongside the per-sample numbers above
    size_t fields_checked = 0;
    size_t fields_rejected = 0;

    size_t rejected() const { return total - kept; }
};

// Character weight for a language code: explicit map entry, else the built-in
// table; unknown codes fall back to weight 1 and are reported once.
inline Ratio resolve_char_weight(const FilterConfig& config, const std::string& code,
                                 std::vector<std::string>* warnings = nullptr) {
    if (auto it = config.weight_map.find(code); it != config.weight_map.end())
        return it->second;
    static const std::set<std::string_view> known = {"en", "de", "ru", "th", "zh"};
    if (!known.count(code) && warnings)
        warnings->push_back("no character weight for language '" + code +
                            "', defaulting to 1");
    return default_char_weight(code);
}

// Scalar count of the whitespace-trimmed text times the language weight.
inline Ratio weighted_length(std::string_view text, const Ratio& char_weight) {
    return Ratio::whole(static_cast<long long>(utf8_length(trim_view(text)))) * char_weight;
}

inline Ratio weighted_length(std::string_view text, const LanguageTag& lang) {
    return weighted_length(text, lang.char_weight);
}

struct RatioCheck {
    bool ok = false;
    Ratio ratio{0, 1};
};

// ratio = weighted target length / weighted source length; acceptable iff it
// lies in [min_ratio, max_ratio].  The boundaries survive by default: the
// rule removes strictly-outside pairs only.
inline RatioCheck length_ratio_ok(std::string_view src_text, const Ratio& src_weight,
                                  std::string_view tgt_text, const Ratio& tgt_weight,
                                  const FilterConfig& config) {
    Ratio src_len = weighted_length(src_text, src_weight);
    if (!src_len.positive())
        throw ValidationError("length ratio undefined for an empty source text");
    Ratio ratio = weighted_length(tgt_text, tgt_weight) / src_len;
    bool ok = config.boundary_inclusive
                  ? (config.min_ratio <= ratio && ratio <= config.max_ratio)
                  : (config.min_ratio < ratio && ratio < config.max_ratio);
    return RatioCheck{ok, ratio};
}

inline RatioCheck length_ratio_ok(std::string_view src_text, const LanguageTag& src_lang,
                                  std::string_view tgt_text, const LanguageTag& tgt_lang,
                                  const FilterConfig& config) {
    return length_ratio_ok(src_text, src_lang.char_weight, tgt_text, tgt_lang.char_weight,
                           config);
}

// Generation completeness: the only acceptable evidence is termination on the
// stop sequence; length-capped and failed generations are incomplete.
inline bool completeness_ok(const TranslationOutcome& outcome) {
    return outcome.terminated_by_stop;
}

struct FilterResult {
    std::vector<ParallelPair> kept;
    std::vector<RejectionRecord> rejections;
    FilterStats stats;
    std::vector<std::string> warnings;
};

// Applies the quality rules to translation candidates.  A sample survives
// only if every translated field is a complete generation with an acceptable
// length ratio and any span extraction succeeded; the first failing check
// decides the recorded reason.
inline FilterResult filter_candidates(const std::vector<TranslationCandidate>& candidates,
                                      const FilterConfig& config) {
    validate_filter_config(config);
    FilterResult out;
    out.stats.total = candidates.size();

    for (const TranslationCandidate& candidate : candidates) {
        std::optional<RejectionRecord> rejection;
        for (const TranslationOutcome& outcome : candidate.outcomes) {
            out.stats.fields_checked++;
            std::optional<RejectionRecord> field_rejection;

            for (const std::string& note : outcome.notes) {
                if (auto reason = reject_reason_from_note(note)) {
                    field_rejection = RejectionRecord{outcome.sample_id, *reason,
                                                      outcome.field_name, std::nullopt};
                    break;
                }
            }
            if (!field_rejection && !completeness_ok(outcome)) {
                field_rejection = RejectionRecord{outcome.sample_id,
                                                  RejectReason::incomplete_generation,
                                                  outcome.field_name, std::nullopt};
            }
            if (!field_rejection) {
                Ratio src_weight = resolve_char_weight(config, candidate.pair.src_lang,
                                                       &out.warnings);
                Ratio tgt_weight = resolve_char_weight(config, candidate.pair.tgt_lang,
                                                       &out.warnings);
                if (weighted_length(outcome.source_text, src_weight).positive()) {
                    RatioCheck check = length_ratio_ok(outcome.source_text, src_weight,
                                                       outcome.generated_text, tgt_weight,
                                                       config);
                    if (!check.ok) {
                        RejectReason reason = check.ratio < config.min_ratio
                                                  ? RejectReason::ratio_low
                                                  : RejectReason::ratio_high;
                        field_rejection = RejectionRecord{outcome.sample_id, reason,
                                                          outcome.field_name,
                                                          check.ratio.value()};
                    }
                }
            }
            if (field_rejection) {
                out.stats.fields_rejected++;
                if (!rejection) rejection = field_rejection;
            }
        }
        if (!rejection) {
            for (const std::string& note : candidate.sample_notes) {
                if (auto reason = reject_reason_from_note(note)) {
                    rejection = RejectionRecord{candidate.pair.src.id(), *reason, "context",
                                                std::nullopt};
                    break;
                }
            }
        }

        if (rejection) {
            out.stats.rejected_by_reason[to_string(rejection->reason)]++;
            out.rejections.push_back(std::move(*rejection));
        } else {
            out.stats.kept++;
            out.kept.push_back(candidate.pair);
        }
    }
    out.stats.removal_rate =
        out.stats.total == 0
            ? 0.0
            : static_cast<double>(out.stats.rejected()) / static_cast<double>(out.stats.total);
    return out;
}

inline json filter_stats_to_json(const FilterStats& stats) {
    json j;
    j["total"] = stats.total;
    j["kept"] = stats.kept;
    j["rejected"] = stats.rejected();
    j["rejected_by_reason"] = stats.rejected_by_reason;
    j["removal_rate"] = stats.removal_rate;
    j["fields_checked"] = stats.fields_checked;
    j["fields_rejected"] = stats.fields_rejected;
    return j;
}

inline json rejection_to_json(const RejectionRecord& record) {
    json j;
    j["sample_id"] = record.sample_id;
    j["reason"] = to_string(record.reason);
    j["field"] = record.field_name;
    if (record.measured_ratio) j["measured_ratio"] = *record.measured_ratio;
    return j;
}

}  // namespace stt
