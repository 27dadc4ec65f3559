// Command-line front end: translate / synthesize / stats / bleu / eval /
// ttest / run.  Exit codes: 0 success, 1 validation error, 2 runtime or
// backend error.

#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stt/evaluate.hpp"
#include "stt/pipeline.hpp"

namespace {

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw stt::ValidationError("cannot open " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

std::vector<double> read_scores(const std::string& path) {
    std::vector<double> values;
    for (const std::string& line : read_lines(path)) {
        std::string t = stt::trim(line);
        if (t.empty()) continue;
        try {
            values.push_back(std::stod(t));
        } catch (const std::exception&) {
            throw stt::ValidationError(path + ": not a number: '" + t + "'");
        }
    }
    return values;
}

struct PipelineFlags {
    std::string config_path;
    std::string output_dir;
    std::string arms = "tgt,cs";
    int in_flight = 0;       // 0: keep config value
    long long seed = -1;     // <0: keep config value
};

stt::PipelineConfig load_config(const PipelineFlags& flags) {
    stt::PipelineConfig config = stt::load_pipeline_config(flags.config_path);
    if (!flags.output_dir.empty()) config.output_dir = flags.output_dir;
    if (flags.in_flight > 0) config.backend.max_in_flight = flags.in_flight;
    if (flags.seed >= 0) config.shuffle_seed = static_cast<uint64_t>(flags.seed);
    return config;
}

int cmd_translate(const PipelineFlags& flags) {
    stt::PipelineConfig config = load_config(flags);
    stt::TranslateRunSummary summary = stt::run_translate(config);
    stt::json j;
    j["samples"] = summary.samples;
    j["requests"] = summary.requests;
    j["gateway_errors"] = summary.gateway_errors;
    j["filter"] = stt::filter_stats_to_json(summary.filter_stats);
    j["output_dir"] = config.output_dir;
    std::cout << j.dump(2) << "\n";
    if (summary.gateway_errors > 0)
        std::cerr << "warning: " << summary.gateway_errors
                  << " gateway errors recorded in the manifest\n";
    return 0;
}

int cmd_synthesize(const PipelineFlags& flags) {
    stt::PipelineConfig config = load_config(flags);
    stt::SynthesizeRunSummary summary =
        stt::run_synthesize(config, stt::parse_arms(flags.arms));
    stt::json j;
    j["datasets"] = summary.dataset_sizes;
    j["warnings"] = summary.warnings;
    j["output_dir"] = config.output_dir;
    std::cout << j.dump(2) << "\n";
    return 0;
}

int cmd_stats(const std::vector<std::string>& manifest_paths) {
    stt::json all = stt::json::array();
    std::vector<std::string> reasons;
    std::vector<stt::json> manifests;
    for (const std::string& path : manifest_paths) {
        std::ifstream in(path);
        if (!in) throw stt::ValidationError("cannot open manifest " + path);
        stt::json m = stt::json::parse(in, nullptr, false);
        if (m.is_discarded() || !m.contains("filter"))
            throw stt::ValidationError(path + " is not a translation manifest");
        manifests.push_back(std::move(m));
    }
    for (const auto& m : manifests)
        for (const auto& [reason, count] : m["filter"]["rejected_by_reason"].items())
            if (std::find(reasons.begin(), reasons.end(), reason) == reasons.end())
                reasons.push_back(reason);
    std::sort(reasons.begin(), reasons.end());

    std::cout << "language  total  kept  removed  removal_rate";
    for (const std::string& reason : reasons) std::cout << "  " << reason;
    std::cout << "\n";
    for (const auto& m : manifests) {
        const auto& f = m["filter"];
        char rate[32];
        std::snprintf(rate, sizeof rate, "%.4f", f["removal_rate"].get<double>());
        std::cout << m["target_language"].get<std::string>() << "  "
                  << f["total"].get<size_t>() << "  " << f["kept"].get<size_t>() << "  "
                  << f["rejected"].get<size_t>() << "  " << rate;
        for (const std::string& reason : reasons) {
            size_t count = f["rejected_by_reason"].contains(reason)
                               ? f["rejected_by_reason"][reason].get<size_t>()
                               : 0;
            std::cout << "  " << count;
        }
        std::cout << "\n";
        stt::json row;
        row["target_language"] = m["target_language"];
        row["filter"] = f;
        all.push_back(std::move(row));
    }
    std::cout << all.dump(2) << "\n";
    return 0;
}

int cmd_bleu(const std::string& hyp_path, const std::string& ref_path,
             const std::string& tokenizer) {
    stt::BleuTokenizer tok = stt::bleu_tokenizer_from_string(tokenizer);
    stt::BleuScore bleu = stt::corpus_bleu(read_lines(hyp_path), read_lines(ref_path), tok);
    stt::json j = stt::bleu_to_json(bleu);
    j["tokenizer"] = stt::to_string(tok);
    std::cout << j.dump(2) << "\n";
    return 0;
}

int cmd_eval(const std::string& pred_path, const std::string& gold_path,
             const std::string& task_name, const std::string& tokenizer) {
    stt::TaskKind task = stt::task_from_string(task_name);
    stt::BleuTokenizer tok = stt::bleu_tokenizer_from_string(tokenizer);
    stt::Dataset gold = stt::read_dataset(gold_path, task, stt::make_language("en"));
    std::map<std::string, const stt::Sample*> by_id;
    for (const stt::Sample& sample : gold.samples) by_id[sample.id()] = &sample;

    std::map<std::string, std::string> predictions;  // id -> output text
    stt::detail::for_each_jsonl_line(pred_path, [&](size_t line_no, const std::string& line) {
        std::string where = pred_path + ":" + std::to_string(line_no);
        stt::json j = stt::detail::parse_jsonl_line(pred_path, line_no, line);
        predictions[stt::detail::require_string(j, "id", where)] =
            stt::detail::require_string(j, "output", where);
    });

    size_t n = 0, parse_failures = 0;
    double accuracy_hits = 0, em_sum = 0, f1_sum = 0;
    for (const auto& [id, output] : predictions) {
        auto it = by_id.find(id);
        if (it == by_id.end())
            throw stt::ValidationError("prediction id '" + id + "' not in the gold dataset");
        const stt::Sample& sample = *it->second;
        ++n;
        switch (task) {
            case stt::TaskKind::math:
                try {
                    if (stt::numbers_equal(stt::extract_final_number(output),
                                           sample.math().final_answer))
                        accuracy_hits += 1;
                } catch (const stt::Error&) {
                    ++parse_failures;
                }
                break;
            case stt::TaskKind::nli:
                try {
                    if (stt::nli_label_parse(output) == sample.nli().label) accuracy_hits += 1;
                } catch (const stt::Error&) {
                    ++parse_failures;
                }
                break;
            case stt::TaskKind::extractive_qa: {
                stt::EmF1 scores = stt::qa_em_f1(output, sample.qa().answer_text, tok);
                em_sum += scores.em;
                f1_sum += scores.f1;
                break;
            }
        }
    }
    stt::json j;
    j["task"] = stt::to_string(task);
    j["n"] = n;
    if (task == stt::TaskKind::extractive_qa) {
        j["em"] = n ? em_sum / static_cast<double>(n) : 0.0;
        j["f1"] = n ? f1_sum / static_cast<double>(n) : 0.0;
        j["tokenizer"] = stt::to_string(tok);
    } else {
        j["accuracy"] = n ? accuracy_hits / static_cast<double>(n) : 0.0;
        j["parse_failures"] = parse_failures;
    }
    std::cout << j.dump(2) << "\n";
    return 0;
}

int cmd_ttest(const std::string& a_path, const std::string& b_path) {
    stt::SignificanceResult result = stt::welch_t_test(read_scores(a_path), read_scores(b_path));
    std::cout << stt::significance_to_json(result).dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"self-translate-train data pipeline"};
    app.require_subcommand(1);

    PipelineFlags flags;
    std::vector<std::string> manifest_paths;
    std::string hyp_path, ref_path, tokenizer = "13a";
    std::string pred_path, gold_path, task_name = "math";
    std::string scores_a, scores_b;

    auto add_pipeline_flags = [&](CLI::App* cmd, bool with_arms) {
        cmd->add_option("--config", flags.config_path, "pipeline configuration file")
            ->required();
        cmd->add_option("--output-dir", flags.output_dir, "override the configured output dir");
        cmd->add_option("--in-flight", flags.in_flight,
                        "override the gateway concurrency cap");
        cmd->add_option("--seed", flags.seed, "override the shuffle seed");
        if (with_arms)
            cmd->add_option("--arms", flags.arms,
                            "synthetic arms to build: comma list of tgt,cs (empty for the "
                            "baseline mix only)");
    };

    CLI::App* translate = app.add_subcommand("translate", "translate and filter a dataset");
    add_pipeline_flags(translate, false);
    CLI::App* synthesize =
        app.add_subcommand("synthesize", "build synthetic datasets and training mixes");
    add_pipeline_flags(synthesize, true);
    CLI::App* run = app.add_subcommand("run", "translate, filter and synthesize in one go");
    add_pipeline_flags(run, true);

    CLI::App* stats = app.add_subcommand("stats", "summarize filter statistics from manifests");
    stats->add_option("manifests", manifest_paths, "manifest.json files")->required();

    CLI::App* bleu = app.add_subcommand("bleu", "corpus BLEU between two parallel text files");
    bleu->add_option("--hyp", hyp_path, "hypothesis file, one segment per line")->required();
    bleu->add_option("--ref", ref_path, "reference file, one segment per line")->required();
    bleu->add_option("--tokenizer", tokenizer, "13a, zh or char (default 13a)");

    CLI::App* eval = app.add_subcommand("eval", "score predictions against a gold dataset");
    eval->add_option("--pred", pred_path, "JSON Lines of {id, output}")->required();
    eval->add_option("--gold", gold_path, "gold dataset (task schema)")->required();
    eval->add_option("--task", task_name, "math, qa or nli")->required();
    eval->add_option("--tokenizer", tokenizer, "token F1 tokenizer for qa (default 13a)");

    CLI::App* ttest = app.add_subcommand("ttest", "Welch's t-test between two score lists");
    ttest->add_option("--a", scores_a, "file with one score per line")->required();
    ttest->add_option("--b", scores_b, "file with one score per line")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;  // flag and argument problems are validation errors
    }

    try {
        if (translate->parsed()) return cmd_translate(flags);
        if (synthesize->parsed()) return cmd_synthesize(flags);
        if (run->parsed()) {
            int rc = cmd_translate(flags);
            if (rc != 0) return rc;
            return cmd_synthesize(flags);
        }
        if (stats->parsed()) return cmd_stats(manifest_paths);
        if (bleu->parsed()) return cmd_bleu(hyp_path, ref_path, tokenizer);
        if (eval->parsed()) return cmd_eval(pred_path, gold_path, task_name, tokenizer);
        if (ttest->parsed()) return cmd_ttest(scores_a, scores_b);
    } catch (const stt::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
