#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "stt/corpus.hpp"

namespace stt {

// ---------------------------------------------------------------------------
// Tokenizers.  13a and zh re-implement the published WMT/SacreBLEU rules as
// ordered, non-overlapping substitution passes; byte-level processing is safe
// because every inserted space sits next to an ASCII punctuation byte, which
// never occurs inside a multi-byte UTF-8 sequence.

namespace detail {

// ASCII punctuation isolated unconditionally by 13a: everything except
// apostrophe, comma, hyphen and period.
inline bool is_13a_isolated(char c) {
    unsigned char u = static_cast<unsigned char>(c);
    return (u >= 0x20 && u <= 0x26) || (u >= 0x28 && u <= 0x2B) ||
           (u >= 0x3A && u <= 0x40) || (u >= 0x5B && u <= 0x60) ||
           (u >= 0x7B && u <= 0x7E) || u == 0x2F;
}

inline void replace_all(std::string& s, std::string_view from, std::string_view to) {
    size_t pos = 0;
    while ((pos = s.find(from, pos)) != std::string::npos) {
        s.replace(pos, from.size(), to);
        pos += to.size();
    }
}

// shared pre-normalization: placeholder removal, hyphenated line-break
// stitching, entity unescaping
inline std::string normalize_for_tokenization(std::string_view line) {
    std::string s(line);
    replace_all(s, "<skipped>", "");
    replace_all(s, "-\n", "");
    for (char& c : s)
        if (c == '\n') c = ' ';
    if (s.find('&') != std::string::npos) {
        replace_all(s, "&quot;", "\"");
        replace_all(s, "&amp;", "&");
        replace_all(s, "&lt;", "<");
        replace_all(s, "&gt;", ">");
    }
    return s;
}

// ([class]) -> " \1 "
inline std::string isolate_chars(const std::string& s) {
    std::string out;
    out.reserve(s.size() * 2);
    for (char c : s) {
        if (is_13a_isolated(c)) {
            out += ' ';
            out += c;
            out += ' ';
        } else {
            out += c;
        }
    }
    return out;
}

// (A)(B) -> spaces per flags; faithful left-to-right scan that resumes after
// each match, exactly like a sequential regex substitution
template <typename FirstPred, typename SecondPred>
inline std::string split_pairs(const std::string& s, FirstPred first_ok, SecondPred second_ok,
                               bool space_before, bool space_after) {
    std::string out;
    out.reserve(s.size() * 2);
    size_t i = 0;
    while (i < s.size()) {
        if (i + 1 < s.size() && first_ok(s[i]) && second_ok(s[i + 1])) {
            if (space_before) out += ' ';
            out += s[i];
            out += ' ';
            out += s[i + 1];
            if (space_after) out += ' ';
            i += 2;
        } else {
            out += s[i];
            ++i;
        }
    }
    return out;
}

inline std::vector<std::string> whitespace_tokens(const std::string& s) {
    std::vector<std::string> tokens;
    size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && is_ascii_space(s[i])) ++i;
        size_t begin = i;
        while (i < s.size() && !is_ascii_space(s[i])) ++i;
        if (i > begin) tokens.push_back(s.substr(begin, i - begin));
    }
    return tokens;
}

inline std::vector<std::string> regex_steps_tokenize(std::string s) {
    auto is_dot_or_comma = [](char c) { return c == '.' || c == ','; };
    auto is_digit = [](char c) { return is_ascii_digit(c); };
    auto is_non_digit = [](char c) { return !is_ascii_digit(c); };
    s = isolate_chars(s);
    s = split_pairs(s, is_non_digit, is_dot_or_comma, false, true);
    s = split_pairs(s, is_dot_or_comma, is_non_digit, true, false);
    s = split_pairs(s, is_digit, [](char c) { return c == '-'; }, false, true);
    return whitespace_tokens(s);
}

inline bool is_cjk(char32_t cp) {
    return (cp >= 0x4E00 && cp <= 0x9FFF) || (cp >= 0x3400 && cp <= 0x4DBF) ||
           (cp >= 0x20000 && cp <= 0x2A6DF) || (cp >= 0x2A700 && cp <= 0x2B73F) ||
           (cp >= 0x2B740 && cp <= 0x2B81F) || (cp >= 0x2B820 && cp <= 0x2CEAF) ||
           (cp >= 0xF900 && cp <= 0xFAFF) || (cp >= 0x2F800 && cp <= 0x2FA1F);
}

inline bool is_unicode_space(char32_t cp) {
    return cp == U' ' || cp == U'\t' || cp == U'\n' || cp == U'\r' || cp == U'\f' ||
           cp == U'\v' || cp == 0x85 || cp == 0xA0 || cp == 0x1680 ||
           (cp >= 0x2000 && cp <= 0x200A) || cp == 0x2028 || cp == 0x2029 ||
           cp == 0x202F || cp == 0x205F || cp == 0x3000;
}

}  // namespace detail

inline std::vector<std::string> tokenize_13a(std::string_view text) {
    return detail::regex_steps_tokenize(" " + detail::normalize_for_tokenization(text) + " ");
}

// Every CJK ideograph becomes its own token; the rest follows the 13a rules,
// including the space framing, so ASCII-only input tokenizes exactly as 13a.
inline std::vector<std::string> tokenize_zh(std::string_view text) {
    std::string normalized = detail::normalize_for_tokenization(text);
    std::string padded = " ";
    padded.reserve(normalized.size() * 2);
    size_t i = 0;
    while (i < normalized.size()) {
        size_t begin = i;
        char32_t cp = utf8_next(normalized, i);
        if (detail::is_cjk(cp)) {
            padded += ' ';
            padded.append(normalized, begin, i - begin);
            padded += ' ';
        } else {
            padded.append(normalized, begin, i - begin);
        }
    }
    padded += ' ';
    return detail::regex_steps_tokenize(std::move(padded));
}

// Character-level fallback for languages without a usable word tokenizer:
// every non-whitespace scalar is a token.
inline std::vector<std::string> tokenize_char(std::string_view text) {
    std::vector<std::string> tokens;
    size_t i = 0;
    while (i < text.size()) {
        size_t begin = i;
        char32_t cp = utf8_next(text, i);
        if (!detail::is_unicode_space(cp))
            tokens.emplace_back(text.substr(begin, i - begin));
    }
    return tokens;
}

enum class BleuTokenizer { thirteen_a, zh, character };

inline std::string to_string(BleuTokenizer tok) {
    switch (tok) {
        case BleuTokenizer::thirteen_a: return "13a";
        case BleuTokenizer::zh: return "zh";
        case BleuTokenizer::character: return "char";
    }
    throw Error("unreachable tokenizer");
}

inline BleuTokenizer bleu_tokenizer_from_string(std::string_view s) {
    if (s == "13a") return BleuTokenizer::thirteen_a;
    if (s == "zh") return BleuTokenizer::zh;
    if (s == "char") return BleuTokenizer::character;
    throw ValidationError("unknown tokenizer: " + std::string(s) + " (use 13a, zh or char)");
}

inline std::vector<std::string> tokenize(std::string_view text, BleuTokenizer tok) {
    switch (tok) {
        case BleuTokenizer::thirteen_a: return tokenize_13a(text);
        case BleuTokenizer::zh: return tokenize_zh(text);
        case BleuTokenizer::character: return tokenize_char(text);
    }
    throw Error("unreachable tokenizer");
}

// ---------------------------------------------------------------------------
// Corpus BLEU

struct BleuScore {
    double score = 0.0;                     // [0, 100]
    std::array<double, 4> precisions{};     // p_1..p_4 as fractions in [0, 1]
    double brevity_penalty = 1.0;
    size_t hyp_length = 0;
    size_t ref_length = 0;
};

enum class BleuSmoothing { exponential, none };

namespace detail {

inline void count_ngrams(const std::vector<std::string>& tokens, size_t n,
                         std::unordered_map<std::string, size_t>& counts) {
    if (tokens.size() < n) return;
    for (size_t i = 0; i + n <= tokens.size(); ++i) {
        std::string key;
        for (size_t k = 0; k < n; ++k) {
            if (k) key += '\x1f';
            key += tokens[i + k];
        }
        counts[key]++;
    }
}

}  // namespace detail

// Corpus-level BLEU: clipped n-gram matches summed over segments, geometric
// mean of p_1..p_4 up to the effective order, exponential smoothing for
// zero higher-order counts, brevity penalty exp(1 - ref/hyp) when the
// hypothesis is shorter.
inline BleuScore corpus_bleu(const std::vector<std::string>& hypotheses,
                             const std::vector<std::string>& references,
                             BleuTokenizer tok = BleuTokenizer::thirteen_a,
                             BleuSmoothing smoothing = BleuSmoothing::exponential) {
    if (hypotheses.size() != references.size())
        throw ValidationError("hypothesis/reference corpus size mismatch: " +
                              std::to_string(hypotheses.size()) + " vs " +
                              std::to_string(references.size()));
    if (hypotheses.empty()) throw ValidationError("empty corpus");

    std::array<size_t, 4> correct{}, total{};
    BleuScore result;
    for (size_t s = 0; s < hypotheses.size(); ++s) {
        std::vector<std::string> hyp = tokenize(hypotheses[s], tok);
        std::vector<std::string> ref = tokenize(references[s], tok);
        result.hyp_length += hyp.size();
        result.ref_length += ref.size();
        for (size_t n = 1; n <= 4; ++n) {
            std::unordered_map<std::string, size_t> hyp_counts, ref_counts;
            detail::count_ngrams(hyp, n, hyp_counts);
            detail::count_ngrams(ref, n, ref_counts);
            for (const auto& [gram, count] : hyp_counts) {
                total[n - 1] += count;
                auto it = ref_counts.find(gram);
                if (it != ref_counts.end()) correct[n - 1] += std::min(count, it->second);
            }
        }
    }

    if (result.hyp_length < result.ref_length) {
        result.brevity_penalty =
            result.hyp_length > 0
                ? std::exp(1.0 - static_cast<double>(result.ref_length) /
                                     static_cast<double>(result.hyp_length))
                : 0.0;
    }

    bool any_correct = false;
    for (size_t c : correct) any_correct |= c > 0;
    if (!any_correct) {
        result.score = 0.0;
        return result;
    }

    double smooth = 1.0;
    size_t effective_order = 0;
    for (size_t n = 1; n <= 4; ++n) {
        if (total[n - 1] == 0) break;
        effective_order = n;
        if (correct[n - 1] == 0) {
            if (smoothing == BleuSmoothing::exponential) {
                smooth *= 2.0;
                result.precisions[n - 1] = 1.0 / (smooth * static_cast<double>(total[n - 1]));
            }
        } else {
            result.precisions[n - 1] = static_cast<double>(correct[n - 1]) /
                                       static_cast<double>(total[n - 1]);
        }
    }

    double log_sum = 0.0;
    for (size_t n = 0; n < effective_order; ++n) {
        if (result.precisions[n] <= 0.0) {
            result.score = 0.0;
            return result;
        }
        log_sum += std::log(result.precisions[n]);
    }
    result.score = 100.0 * result.brevity_penalty *
                   std::exp(log_sum / static_cast<double>(effective_order));
    return result;
}

inline json bleu_to_json(const BleuScore& bleu) {
    json j;
    j["score"] = bleu.score;
    j["precisions"] = bleu.precisions;
    j["brevity_penalty"] = bleu.brevity_penalty;
    j["hypothesis_length"] = bleu.hyp_length;
    j["reference_length"] = bleu.ref_length;
    return j;
}

// ---------------------------------------------------------------------------
// Math answer extraction and accuracy

namespace detail {

struct NumberMatch {
    size_t begin = 0;
    size_t end = 0;
};

// Matches, at byte position i, an optional sign plus either a
// thousands-grouped number (d{1,3}(,ddd)+) or a plain digit run, each with an
// optional decimal part.  Mirrors the greedy, first-alternative-wins
// semantics of the reference pattern.
inline std::optional<NumberMatch> match_number_at(std::string_view s, size_t i) {
    size_t p = i;
    if (p < s.size() && (s[p] == '+' || s[p] == '-')) ++p;
    if (p >= s.size() || !is_ascii_digit(s[p])) return std::nullopt;
    size_t run = 0;
    while (p + run < s.size() && is_ascii_digit(s[p + run])) ++run;

    size_t end = 0;
    bool grouped = false;
    if (run <= 3 && p + run < s.size() && s[p + run] == ',') {
        size_t q = p + run;
        while (q + 4 <= s.size() && s[q] == ',' && is_ascii_digit(s[q + 1]) &&
               is_ascii_digit(s[q + 2]) && is_ascii_digit(s[q + 3])) {
            q += 4;
            grouped = true;
        }
        if (grouped) end = q;
    }
    if (!grouped) end = p + run;

    if (end + 1 < s.size() && s[end] == '.' && is_ascii_digit(s[end + 1])) {
        size_t q = end + 1;
        while (q < s.size() && is_ascii_digit(s[q])) ++q;
        end = q;
    }
    return NumberMatch{i, end};
}

}  // namespace detail

// Final numeric answer of a model output: the first number after the last
// "#### " marker when one is present, otherwise the last number in the text;
// thousands separators are stripped.
inline std::string extract_final_number(std::string_view output_text) {
    auto scan = [&](size_t from, bool want_first) -> std::optional<detail::NumberMatch> {
        std::optional<detail::NumberMatch> found;
        size_t i = from;
        while (i < output_text.size()) {
            if (auto m = detail::match_number_at(output_text, i)) {
                if (want_first) return m;
                found = m;
                i = m->end;
            } else {
                ++i;
            }
        }
        return found;
    };

    std::optional<detail::NumberMatch> match;
    size_t marker = output_text.rfind(kAnswerMarker);
    if (marker != std::string_view::npos)
        match = scan(marker + kAnswerMarker.size(), /*want_first=*/true);
    if (!match) match = scan(0, /*want_first=*/false);
    if (!match) throw Error("no number found in output");

    std::string number;
    for (size_t i = match->begin; i < match->end; ++i)
        if (output_text[i] != ',') number += output_text[i];
    return number;
}

// Canonical numeric form: sign, integer part without leading zeros, fraction
// without trailing zeros.  Non-numeric strings canonicalize to themselves.
inline std::string canonical_number(std::string_view s) {
    std::string t = trim(s);
    size_t i = 0;
    bool negative = false;
    if (i < t.size() && (t[i] == '+' || t[i] == '-')) {
        negative = t[i] == '-';
        ++i;
    }
    std::string int_part, frac_part;
    while (i < t.size() && (is_ascii_digit(t[i]) || t[i] == ',')) {
        if (t[i] != ',') int_part += t[i];
        ++i;
    }
    if (i < t.size() && t[i] == '.') {
        ++i;
        while (i < t.size() && is_ascii_digit(t[i])) frac_part += t[i++];
    }
    if (i != t.size() || int_part.empty()) return t;  // not purely numeric
    size_t first = int_part.find_first_not_of('0');
    int_part = first == std::string::npos ? "0" : int_part.substr(first);
    size_t last = frac_part.find_last_not_of('0');
    frac_part = last == std::string::npos ? "" : frac_part.substr(0, last + 1);
    if (negative && (int_part != "0" || !frac_part.empty()))
        int_part = "-" + int_part;
    return frac_part.empty() ? int_part : int_part + "." + frac_part;
}

inline bool numbers_equal(std::string_view a, std::string_view b) {
    return canonical_number(a) == canonical_number(b);
}

// Fraction of predictions equal to gold under numeric-aware comparison
// ("72" == "72.0").
inline double exact_match_accuracy(const std::vector<std::string>& predictions,
                                   const std::vector<std::string>& golds) {
    if (predictions.size() != golds.size())
        throw ValidationError("prediction/gold length mismatch");
    if (predictions.empty()) return 0.0;
    size_t hits = 0;
    for (size_t i = 0; i < predictions.size(); ++i)
        if (numbers_equal(predictions[i], golds[i])) ++hits;
    return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

// ---------------------------------------------------------------------------
// Extractive-QA EM / token F1

namespace detail {

inline bool is_ascii_punct(char c) {
    unsigned char u = static_cast<unsigned char>(c);
    return (u >= 0x21 && u <= 0x2F) || (u >= 0x3A && u <= 0x40) ||
           (u >= 0x5B && u <= 0x60) || (u >= 0x7B && u <= 0x7E);
}

inline std::string normalize_span(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s)
        out += is_ascii_punct(c) ? ' '
                                 : static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return collapse_whitespace(out);
}

}  // namespace detail

struct EmF1 {
    int em = 0;
    double f1 = 0.0;
};

// EM on whitespace/punctuation-normalized strings; F1 over the token bags of
// the normalized spans.
inline EmF1 qa_em_f1(std::string_view pred_span, std::string_view gold_span,
                     BleuTokenizer tok = BleuTokenizer::thirteen_a) {
    std::string pred = detail::normalize_span(pred_span);
    std::string gold = detail::normalize_span(gold_span);
    EmF1 out;
    out.em = pred == gold ? 1 : 0;
    std::vector<std::string> pred_tokens = tokenize(pred, tok);
    std::vector<std::string> gold_tokens = tokenize(gold, tok);
    if (pred_tokens.empty() || gold_tokens.empty()) {
        out.f1 = (pred_tokens.empty() && gold_tokens.empty()) ? 1.0 : 0.0;
        return out;
    }
    std::unordered_map<std::string, size_t> gold_counts;
    for (const std::string& t : gold_tokens) gold_counts[t]++;
    size_t common = 0;
    for (const std::string& t : pred_tokens) {
        auto it = gold_counts.find(t);
        if (it != gold_counts.end() && it->second > 0) {
            ++common;
            --it->second;
        }
    }
    if (common == 0) return out;
    double precision = static_cast<double>(common) / static_cast<double>(pred_tokens.size());
    double recall = static_cast<double>(common) / static_cast<double>(gold_tokens.size());
    out.f1 = 2.0 * precision * recall / (precision + recall);
    return out;
}

// First label keyword in the output, scanned case-insensitively.
inline NLILabel nli_label_parse(std::string_view output_text) {
    std::string lower = to_lower(output_text);
    size_t best_pos = std::string::npos;
    NLILabel best = NLILabel::neutral;
    for (NLILabel label :
         {NLILabel::entailment, NLILabel::neutral, NLILabel::contradiction}) {
        size_t pos = lower.find(to_string(label));
        if (pos != std::string::npos && pos < best_pos) {
            best_pos = pos;
            best = label;
        }
    }
    if (best_pos == std::string::npos)
        throw Error("no NLI label keyword found in output");
    return best;
}

// ---------------------------------------------------------------------------
// Welch's t-test

struct SignificanceResult {
    double t_statistic = 0.0;
    double degrees_of_freedom = 0.0;
    double p_value = 1.0;
};

namespace detail {

// Continued-fraction kernel of the regularized incomplete beta (modified
// Lentz); converges well below 1e-8 absolute error for the dof range of any
// realistic t-test.
inline double beta_continued_fraction(double a, double b, double x) {
    constexpr int max_iterations = 400;
    constexpr double eps = 3e-16;
    constexpr double tiny = 1e-300;
    double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iterations; ++m) {
        int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < eps) break;
    }
    return h;
}

}  // namespace detail

inline double regularized_incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) throw ValidationError("incomplete beta needs a, b > 0");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                       a * std::log(x) + b * std::log1p(-x);
    double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0))
        return front * detail::beta_continued_fraction(a, b, x) / a;
    return 1.0 - front * detail::beta_continued_fraction(b, a, 1.0 - x) / b;
}

// Two-sample t-test with unequal variances: Welch-Satterthwaite degrees of
// freedom, two-sided p from the Student-t distribution.
inline SignificanceResult welch_t_test(const std::vector<double>& a,
                                       const std::vector<double>& b) {
    if (a.size() < 2 || b.size() < 2)
        throw ValidationError("welch_t_test needs at least 2 observations per sample");
    auto mean = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x;
        return s / static_cast<double>(v.size());
    };
    auto variance = [&](const std::vector<double>& v, double m) {
        double s = 0.0;
        for (double x : v) s += (x - m) * (x - m);
        return s / static_cast<double>(v.size() - 1);
    };
    double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    double ma = mean(a), mb = mean(b);
    double va = variance(a, ma), vb = variance(b, mb);

    SignificanceResult result;
    if (va == 0.0 && vb == 0.0) {
        // degenerate by convention: identical constants are indistinguishable,
        // different constants are maximally distinguishable
        result.degrees_of_freedom = na + nb - 2.0;
        if (ma == mb) {
            result.t_statistic = 0.0;
            result.p_value = 1.0;
        } else {
            result.t_statistic = ma > mb ? std::numeric_limits<double>::infinity()
                                         : -std::numeric_limits<double>::infinity();
            result.p_value = 0.0;
        }
        return result;
    }

    double sa = va / na, sb = vb / nb;
    result.t_statistic = (ma - mb) / std::sqrt(sa + sb);
    result.degrees_of_freedom =
        (sa + sb) * (sa + sb) / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    double t = result.t_statistic;
    double dof = result.degrees_of_freedom;
    double x = dof / (dof + t * t);
    double p = regularized_incomplete_beta(dof / 2.0, 0.5, x);
    result.p_value = std::min(1.0, std::max(0.0, p));
    return result;
}

inline json significance_to_json(const SignificanceResult& result) {
    json j;
    if (std::isinf(result.t_statistic))
        j["t_statistic"] = result.t_statistic > 0 ? "inf" : "-inf";
    else
        j["t_statistic"] = result.t_statistic;
    j["degrees_of_freedom"] = result.degrees_of_freedom;
    j["p_value"] = result.p_value;
    return j;
}

}  // namespace stt
