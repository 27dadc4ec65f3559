// Acceptance suite: one line per criterion, nonzero exit when any fails.
// Everything runs offline against checked-in fixtures and the mock backend.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include "stt/evaluate.hpp"
#include "stt/pipeline.hpp"
#include "stt/synthesize.hpp"

using namespace stt;

namespace {

std::string testdata(const std::string& relative) {
    return std::string(STT_TESTDATA_DIR) + "/" + relative;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> read_segments(const std::string& path) {
    std::vector<std::string> lines;
    std::string content = read_file(path);
    size_t begin = 0;
    while (begin < content.size()) {
        size_t end = content.find('\n', begin);
        if (end == std::string::npos) end = content.size();
        lines.push_back(content.substr(begin, end - begin));
        begin = end + 1;
    }
    return lines;
}

struct Checker {
    std::vector<std::string> failures;

    void require(bool ok, const std::string& what) {
        if (!ok) failures.push_back(what);
    }
};

bool run_criterion(int number, const std::string& name, double budget_seconds,
                   const std::function<void(Checker&)>& body) {
    Checker checker;
    auto start = std::chrono::steady_clock::now();
    try {
        body(checker);
    } catch (const std::exception& e) {
        checker.failures.push_back(std::string("exception: ") + e.what());
    }
    double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (budget_seconds > 0 && elapsed >= budget_seconds)
        checker.failures.push_back("runtime " + std::to_string(elapsed) + "s exceeds " +
                                   std::to_string(budget_seconds) + "s");
    if (checker.failures.empty()) {
        std::printf("PASS  criterion %d: %s (%.2fs)\n", number, name.c_str(), elapsed);
        return true;
    }
    std::printf("FAIL  criterion %d: %s (%.2fs)\n", number, name.c_str(), elapsed);
    for (const std::string& failure : checker.failures)
        std::printf("      - %s\n", failure.c_str());
    return false;
}

// --- criterion 1: prompt fidelity against the golden files ---

void check_prompt_goldens(Checker& check) {
    const std::string source =
        "A farmer collects 9 eggs every day. How many eggs does he collect in one week?";
    for (const std::string code : {"de", "ru", "zh", "th"}) {
        auto pairs = read_parallel_pairs(testdata("banks/pairs_" + code + ".jsonl"),
                                         TaskKind::math, "en", code);
        FewShotBank bank = sample_few_shots(pairs, "question", 8, 7);
        RenderedPrompt prompt = build_translation_prompt(bank, source);
        std::string golden = read_file(testdata("golden/prompt_" + code + ".txt"));
        check.require(prompt.text == golden, code + " prompt differs from the golden file");
        check.require(prompt.stop_sequence == "`", code + " stop sequence is not a backtick");
    }
}

// --- criterion 2: filter rules property suite ---

TranslationCandidate make_candidate(const std::string& id, const std::string& src_lang,
                                    const std::string& tgt_lang, size_t src_len,
                                    size_t tgt_len, bool terminated) {
    TranslationCandidate c;
    MathSample m;
    m.id = id;
    m.question = "q";
    m.rationale = "#### 1";
    m.final_answer = "1";
    c.pair.src.data = m;
    c.pair.tgt.data = m;
    c.pair.src_lang = src_lang;
    c.pair.tgt_lang = tgt_lang;
    TranslationOutcome o;
    o.sample_id = id;
    o.field_name = "question";
    o.source_text = std::string(src_len, 's');
    o.generated_text = std::string(tgt_len, 't');
    o.terminated_by_stop = terminated;
    c.outcomes.push_back(std::move(o));
    return c;
}

void check_filter_property(Checker& check) {
    SplitMix64 rng(20240613);
    FilterConfig cfg;
    cfg.weight_map["aa"] = Ratio(1, 1);
    cfg.weight_map["bb"] = Ratio(1, 1);

    int cases = 0;
    for (int iter = 0; iter < 300; ++iter) {
        size_t src_len = 1 + rng.bounded(60);
        size_t tgt_len = 1 + rng.bounded(200);
        long long src_weight = 1 + static_cast<long long>(rng.bounded(3));
        long long tgt_weight = 1 + static_cast<long long>(rng.bounded(3));
        bool terminated = rng.bounded(4) > 0;
        cfg.weight_map["aa"] = Ratio(src_weight, 1);
        cfg.weight_map["bb"] = Ratio(tgt_weight, 1);

        auto candidate = make_candidate("c", "aa", "bb", src_len, tgt_len, terminated);
        FilterResult result = filter_candidates({candidate}, cfg);

        // independent arithmetic: strictly outside [1/3, 3] in exact integers
        __int128 lhs = static_cast<__int128>(tgt_len) * tgt_weight;
        __int128 rhs = static_cast<__int128>(src_len) * src_weight;
        bool ratio_outside = (3 * lhs < rhs) || (lhs > 3 * rhs);
        bool expect_reject = ratio_outside || !terminated;
        check.require(result.stats.kept == (expect_reject ? 0u : 1u),
                      "case " + std::to_string(iter) + ": kept/rejected disagrees with the rule");
        ++cases;
    }
    check.require(cases >= 200, "fewer than 200 randomized cases");

    // exact boundaries survive
    cfg.weight_map["aa"] = Ratio(1, 1);
    cfg.weight_map["bb"] = Ratio(1, 1);
    FilterResult third =
        filter_candidates({make_candidate("b1", "aa", "bb", 9, 3, true)}, cfg);
    check.require(third.stats.kept == 1, "ratio exactly 1/3 must be kept");
    FilterResult triple =
        filter_candidates({make_candidate("b2", "aa", "bb", 3, 9, true)}, cfg);
    check.require(triple.stats.kept == 1, "ratio exactly 3 must be kept");

    // hand-computed Chinese weight-3 cases
    FilterConfig zh_cfg;
    struct ZhCase {
        size_t en_len, zh_len;
        bool kept;
        const char* why;
    };
    const ZhCase zh_cases[] = {
        {12, 5, true, "15/12 = 1.25 inside"},
        {4, 5, false, "15/4 = 3.75 above"},
        {30, 3, false, "9/30 = 0.3 below"},
        {9, 1, true, "3/9 = 1/3 boundary"},
    };
    for (const ZhCase& zc : zh_cases) {
        auto candidate = make_candidate("zh", "en", "zh", zc.en_len, zc.zh_len, true);
        FilterResult result = filter_candidates({candidate}, zh_cfg);
        check.require(result.stats.kept == (zc.kept ? 1u : 0u),
                      std::string("zh case failed: ") + zc.why);
    }
}

// --- criterion 3: end-to-end determinism on the defect fixture ---

void check_pipeline_determinism(Checker& check) {
    namespace fs = std::filesystem;
    fs::path scratch = fs::temp_directory_path() / ("stt_acceptance_" +
                                                    std::to_string(::getpid()));
    fs::remove_all(scratch);
    fs::create_directories(scratch);

    auto run_at_cap = [&](int cap, const std::string& dir) {
        PipelineConfig config = load_pipeline_config(testdata("pipeline/config.json"));
        config.output_dir = (scratch / dir).string();
        config.backend.max_in_flight = cap;
        TranslateRunSummary summary = run_translate(config);
        run_synthesize(config, {Arm::tgt, Arm::cs});
        return summary;
    };
    TranslateRunSummary low = run_at_cap(1, "low");
    TranslateRunSummary high = run_at_cap(8, "high");

    check.require(low.filter_stats.total == 20, "fixture must contain 20 samples");
    check.require(low.filter_stats.kept == 17, "kept count is not 17");
    auto reason_count = [&](const char* reason) {
        auto it = low.filter_stats.rejected_by_reason.find(reason);
        return it == low.filter_stats.rejected_by_reason.end() ? size_t{0} : it->second;
    };
    check.require(reason_count("ratio_high") == 1, "ratio_high count is not 1");
    check.require(reason_count("incomplete_generation") == 1,
                  "incomplete_generation count is not 1");
    check.require(reason_count("span_missing_tag") == 1, "span_missing_tag count is not 1");
    check.require(low.filter_stats.rejected_by_reason.size() == 3,
                  "unexpected extra rejection reasons");
    check.require(high.filter_stats.kept == 17, "kept count differs at cap 8");

    for (const char* name :
         {"candidates.jsonl", "kept.jsonl", "rejections.jsonl", "manifest.json",
          "d_tgt.jsonl", "d_cs.jsonl", "mix_src+tgt.jsonl", "train_src+tgt.jsonl",
          "mix_src+tgt+cs.jsonl", "train_src+tgt+cs.jsonl"}) {
        check.require(read_file((scratch / "low" / name).string()) ==
                          read_file((scratch / "high" / name).string()),
                      std::string(name) + " differs between caps 1 and 8");
    }
    fs::remove_all(scratch);
}

// --- criterion 4: code-switch cardinality and shape ---

void check_code_switch(Checker& check) {
    const std::map<std::string, std::string> table = {
        {"de", "Bitte antworte auf Deutsch."}, {"en", "Please answer in English."}};
    SplitMix64 rng(99);

    for (int iter = 0; iter < 40; ++iter) {
        size_t n = rng.bounded(15);
        TaskKind task = static_cast<TaskKind>(rng.bounded(3));
        std::vector<ParallelPair> kept;
        for (size_t i = 0; i < n; ++i) {
            ParallelPair pair;
            pair.src_lang = "en";
            pair.tgt_lang = "de";
            std::string id = std::to_string(i);
            switch (task) {
                case TaskKind::math: {
                    MathSample m;
                    m.id = id;
                    m.question = "q" + id;
                    m.rationale = "r\n#### 1";
                    m.final_answer = "1";
                    pair.src.data = m;
                    pair.tgt.data = m;
                    break;
                }
                case TaskKind::extractive_qa: {
                    QASample q;
                    q.id = id;
                    q.context = "ctx " + id + " end";
                    q.question = "who?";
                    q.answer_text = id;
                    q.answer_start = 4;
                    pair.src.data = q;
                    pair.tgt.data = q;
                    break;
                }
                case TaskKind::nli: {
                    NLISample s;
                    s.id = id;
                    s.premise = "p" + id;
                    s.hypothesis = "h" + id;
                    s.label = NLILabel::neutral;
                    pair.src.data = s;
                    pair.tgt.data = s;
                    break;
                }
            }
            kept.push_back(std::move(pair));
        }
        Dataset d_cs = build_code_switch(kept, table);
        check.require(d_cs.size() == 2 * n, "cardinality is not 2*kept for n=" +
                                                std::to_string(n));
        for (const Sample& sample : d_cs.samples) {
            bool has_instruction = !sample.instruction.empty();
            if (task == TaskKind::nli)
                check.require(!has_instruction, "NLI record carries an instruction");
            else
                check.require(has_instruction, "math/QA record lacks the instruction");
        }
    }
}

// --- criterion 5: BLEU oracle equivalence ---

void check_bleu(Checker& check) {
    // frozen from tests/oracle/bleu_reference.py
    BleuScore de = corpus_bleu(read_segments(testdata("bleu/hyp_de.txt")),
                               read_segments(testdata("bleu/ref_de.txt")),
                               BleuTokenizer::thirteen_a);
    check.require(std::fabs(de.score - 58.380211) <= 0.1,
                  "de fixture: got " + std::to_string(de.score) + ", oracle 58.380211");
    BleuScore zh = corpus_bleu(read_segments(testdata("bleu/hyp_zh.txt")),
                               read_segments(testdata("bleu/ref_zh.txt")),
                               BleuTokenizer::zh);
    check.require(std::fabs(zh.score - 69.039272) <= 0.1,
                  "zh fixture: got " + std::to_string(zh.score) + ", oracle 69.039272");

    auto refs = read_segments(testdata("bleu/ref_de.txt"));
    BleuScore identity = corpus_bleu(refs, refs, BleuTokenizer::thirteen_a);
    check.require(identity.score == 100.0, "identity corpus must score exactly 100");

    std::vector<std::string> empty_hyps(refs.size(), "");
    BleuScore empty = corpus_bleu(empty_hyps, refs, BleuTokenizer::thirteen_a);
    check.require(empty.score == 0.0, "empty hypotheses must score 0");
}

// --- criterion 6: Welch's t-test fixtures and properties ---

void check_welch(Checker& check) {
    struct Fixture {
        std::vector<double> a, b;
        double t, dof, p;
    };
    // frozen from tests/oracle/welch_reference.py (mpmath, 50 digits)
    const Fixture fixtures[] = {
        {{2, 4, 6}, {1, 3, 5}, 0.612372435696, 4.0, 0.573392253825},
        {{30.1, 29.8, 30.5, 30.9}, {36.4, 35.2, 37.0, 36.1},
         -13.1496647946, 5.09647058824, 3.97444519404e-5},
        {{8.1, 7.7, 10.4, 8.7, 9.0}, {3.3, 2.8, 3.4},
         11.2301610382, 5.11972499912, 8.43483748422e-5},
        {{0.5, 0.4, 0.6, 0.45, 0.55, 0.52}, {0.49, 0.51, 0.47, 0.53},
         0.104828483672, 6.73142578443, 0.919566773541},
        {{101.2, 99.8, 100.5, 100.1, 99.9, 100.4, 100.0}, {100.3, 100.2, 99.7, 100.6},
         0.273519592682, 7.85606616773, 0.791506916388},
    };
    int index = 0;
    for (const Fixture& f : fixtures) {
        SignificanceResult r = welch_t_test(f.a, f.b);
        check.require(std::fabs(r.t_statistic - f.t) <= 1e-6,
                      "fixture " + std::to_string(index) + ": |dt| > 1e-6");
        check.require(std::fabs(r.p_value - f.p) <= 1e-4,
                      "fixture " + std::to_string(index) + ": |dp| > 1e-4");
        SignificanceResult swapped = welch_t_test(f.b, f.a);
        check.require(std::fabs(swapped.t_statistic + r.t_statistic) <= 1e-12,
                      "fixture " + std::to_string(index) + ": symmetry broken for t");
        check.require(std::fabs(swapped.p_value - r.p_value) <= 1e-12,
                      "fixture " + std::to_string(index) + ": symmetry broken for p");
        ++index;
    }
    SignificanceResult equal = welch_t_test({1, 2, 3}, {1, 2, 3});
    check.require(equal.t_statistic == 0.0 && equal.p_value == 1.0,
                  "equal samples must give t=0, p=1");
}

// --- criterion 7: QA span round-trip ---

void check_span_round_trip(Checker& check) {
    SplitMix64 rng(777);
    const std::string alphabet[] = {"a", "b", "c", "d", " ", "ä", "ö", "你", "好",
                                    "ก", "ข", ".", ",", "1", "x"};
    size_t failures = 0;
    for (int iter = 0; iter < 600; ++iter) {
        std::string context;
        size_t len = 3 + rng.bounded(80);
        for (size_t i = 0; i < len; ++i) context += alphabet[rng.bounded(15)];
        size_t total = utf8_length(context);
        size_t start = rng.bounded(total);
        size_t span_len = 1 + rng.bounded(total - start);
        std::string answer = utf8_substr(context, start, span_len);

        SpanMarking marked = mark_answer_span(context, start, span_len);
        SpanExtraction extracted = extract_marked_span(marked.marked_text);
        if (!extracted.ok || extracted.clean_text != context ||
            extracted.span_text != answer || extracted.new_start != start)
            ++failures;
    }
    check.require(failures == 0,
                  std::to_string(failures) + " of 600 round trips failed");
}

// --- criterion 8: answer extraction ---

void check_answer_extraction(Checker& check) {
    std::string gsm8k_style =
        "They sold 48 clips in April and 24 in May, so 48+24 = 72 clips.\n#### 72";
    check.require(extract_final_number(gsm8k_style) == "72",
                  "marker-line extraction does not yield 72");

    size_t cases = 0;
    for (const std::string& line : read_segments(testdata("numbers/cases.jsonl"))) {
        if (line.empty()) continue;
        json j = json::parse(line);
        std::string text = j["text"].get<std::string>();
        ++cases;
        if (j["expected"].is_null()) {
            try {
                extract_final_number(text);
                check.require(false, "expected an error for: " + text);
            } catch (const Error&) {
            }
        } else {
            std::string expected = j["expected"].get<std::string>();
            std::string got;
            try {
                got = extract_final_number(text);
            } catch (const Error& e) {
                got = std::string("<error: ") + e.what() + ">";
            }
            check.require(got == expected,
                          "case '" + text + "': got " + got + ", oracle " + expected);
        }
    }
    check.require(cases >= 30, "fixture must hold at least 30 cases");
}

}  // namespace

int main() {
    bool all_ok = true;
    all_ok &= run_criterion(1, "prompt fidelity against golden files", 1.0,
                            check_prompt_goldens);
    all_ok &= run_criterion(2, "filter rules property suite", 5.0, check_filter_property);
    all_ok &= run_criterion(3, "end-to-end determinism with injected defects", 10.0,
                            check_pipeline_determinism);
    all_ok &= run_criterion(4, "code-switch cardinality and shape", 0, check_code_switch);
    all_ok &= run_criterion(5, "BLEU oracle equivalence", 1.0, check_bleu);
    all_ok &= run_criterion(6, "Welch's t-test oracle equivalence", 0, check_welch);
    all_ok &= run_criterion(7, "QA span round-trip", 0, check_span_round_trip);
    all_ok &= run_criterion(8, "final answer extraction", 0, check_answer_extraction);
    return all_ok ? 0 : 1;
}
