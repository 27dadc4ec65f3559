#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>

#include "stt/corpus.hpp"
#include "stt/filter.hpp"
#include "stt/gateway.hpp"
#include "stt/translate.hpp"

namespace stt {

struct SubsetConfig {
    bool enabled = false;
    size_t n = 0;
    uint64_t seed = 0;
    bool head = false;  // first n samples instead of a seeded random draw
};

struct FewShotConfig {
    std::string path;
    size_t k = 8;
    uint64_t seed = 0;
};

// One structured configuration file drives a pipeline run; every run copies
// its resolved form into the output directory for provenance.
struct PipelineConfig {
    TaskKind task = TaskKind::math;
    LanguageTag src_lang;
    LanguageTag tgt_lang;
    std::string dataset_path;
    std::string output_dir;
    BackendConfig backend;
    SubsetConfig subset;
    FewShotConfig fewshot;
    BudgetMap budgets;  // defaults per task, overridable per field
    FilterConfig filter;
    std::map<std::string, std::string> instructions;  // lang code -> instruction
    uint64_t shuffle_seed = 0;
};

namespace detail {

inline Ratio ratio_from_json(const json& j, const std::string& what) {
    if (j.is_number_integer()) return Ratio::whole(j.get<long long>());
    if (j.is_number_float()) {
        // scaled to nanos; exact boundaries should use the [num, den] form
        return Ratio(static_cast<long long>(std::llround(j.get<double>() * 1e9)),
                     1000000000LL);
    }
    if (j.is_array() && j.size() == 2 && j[0].is_number_integer() && j[1].is_number_integer())
        return Ratio(j[0].get<long long>(), j[1].get<long long>());
    if (j.is_string()) {
        std::string s = j.get<std::string>();
        size_t slash = s.find('/');
        try {
            if (slash == std::string::npos) return Ratio::whole(std::stoll(s));
            return Ratio(std::stoll(s.substr(0, slash)), std::stoll(s.substr(slash + 1)));
        } catch (const std::exception&) {
            throw ValidationError(what + ": cannot parse ratio '" + s + "'");
        }
    }
    throw ValidationError(what + ": expected an integer, [num, den] pair or \"a/b\" string");
}

inline LanguageTag language_from_json(const json& j, const std::string& what) {
    if (j.is_string()) return make_language(j.get<std::string>());
    if (!j.is_object()) throw ValidationError(what + ": expected a string or object");
    LanguageTag lang = make_language(require_string(j, "code", what));
    if (auto it = j.find("display_name"); it != j.end())
        lang.display_name = it->get<std::string>();
    if (auto it = j.find("char_weight"); it != j.end())
        lang.char_weight = ratio_from_json(*it, what + ".char_weight");
    validate_language(lang);
    return lang;
}

inline std::string resolve_path(const std::filesystem::path& base, const std::string& path) {
    if (path.empty()) return path;
    std::filesystem::path p(path);
    if (p.is_absolute()) return p.string();
    return (base / p).lexically_normal().string();
}

inline uint64_t require_seed(const json& j, const char* key, const std::string& what) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_number_integer())
        throw ValidationError(what + ": '" + key +
                              "' must be set explicitly (seeds have no implicit default)");
    return it->get<uint64_t>();
}

}  // namespace detail

inline PipelineConfig load_pipeline_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config " + path);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw ValidationError("config " + path + " is not a JSON object");
    const std::filesystem::path base = std::filesystem::path(path).parent_path();

    PipelineConfig config;
    config.task = task_from_string(detail::require_string(j, "task", path));
    config.src_lang = detail::language_from_json(j.at("source_language"), path);
    config.tgt_lang = detail::language_from_json(j.at("target_language"), path);
    config.dataset_path =
        detail::resolve_path(base, detail::require_string(j, "dataset_path", path));
    config.output_dir = j.contains("output_dir")
                            ? detail::resolve_path(base, j["output_dir"].get<std::string>())
                            : "";

    if (auto it = j.find("backend"); it != j.end()) {
        const json& b = *it;
        std::string kind = b.contains("kind") ? b["kind"].get<std::string>() : "mock";
        if (kind == "mock")
            config.backend.kind = BackendConfig::Kind::mock;
        else if (kind == "remote")
            config.backend.kind = BackendConfig::Kind::remote;
        else
            throw ValidationError(path + ": backend.kind must be 'mock' or 'remote'");
        if (b.contains("endpoint")) config.backend.endpoint = b["endpoint"].get<std::string>();
        if (b.contains("model")) config.backend.model = b["model"].get<std::string>();
        if (b.contains("auth_env")) config.backend.auth_env = b["auth_env"].get<std::string>();
        if (b.contains("timeout_seconds"))
            config.backend.timeout_seconds = b["timeout_seconds"].get<double>();
        if (b.contains("max_retries")) config.backend.max_retries = b["max_retries"].get<int>();
        if (b.contains("max_in_flight"))
            config.backend.max_in_flight = b["max_in_flight"].get<int>();
        if (b.contains("retry_base_ms"))
            config.backend.retry_base_ms = b["retry_base_ms"].get<int>();
        if (b.contains("script_path"))
            config.backend.script_path =
                detail::resolve_path(base, b["script_path"].get<std::string>());
        if (b.contains("echo_prefix"))
            config.backend.echo_prefix = b["echo_prefix"].get<std::string>();
    }

    if (auto it = j.find("subset"); it != j.end()) {
        config.subset.enabled = true;
        config.subset.n = it->at("n").get<size_t>();
        std::string mode = it->contains("mode") ? (*it)["mode"].get<std::string>() : "random";
        if (mode == "head")
            config.subset.head = true;
        else if (mode != "random")
            throw ValidationError(path + ": subset.mode must be 'random' or 'head'");
        if (!config.subset.head)
            config.subset.seed = detail::require_seed(*it, "seed", path + ": subset");
    }

    {
        const json& f = j.at("fewshot");
        config.fewshot.path = detail::resolve_path(base, detail::require_string(f, "path", path));
        if (f.contains("k")) config.fewshot.k = f["k"].get<size_t>();
        config.fewshot.seed = detail::require_seed(f, "seed", path + ": fewshot");
    }

    config.budgets = default_budgets(config.task);
    if (auto it = j.find("budgets"); it != j.end()) {
        for (const auto& [field, tokens] : it->items()) {
            if (!config.budgets.count(field))
                throw ValidationError(path + ": task " + to_string(config.task) +
                                      " has no translatable field '" + field + "'");
            config.budgets[field] = tokens.get<int>();
        }
    }

    if (auto it = j.find("filter"); it != j.end()) {
        const json& f = *it;
        if (f.contains("min_ratio"))
            config.filter.min_ratio = detail::ratio_from_json(f["min_ratio"], path);
        if (f.contains("max_ratio"))
            config.filter.max_ratio = detail::ratio_from_json(f["max_ratio"], path);
        if (f.contains("boundary_inclusive"))
            config.filter.boundary_inclusive = f["boundary_inclusive"].get<bool>();
        if (f.contains("char_weights"))
            for (const auto& [code, weight] : f["char_weights"].items())
                config.filter.weight_map[code] =
                    detail::ratio_from_json(weight, path + ": char_weights." + code);
    }
    validate_filter_config(config.filter);

    if (auto it = j.find("instructions"); it != j.end())
        for (const auto& [code, text] : it->items())
            config.instructions[code] = text.get<std::string>();

    config.shuffle_seed = detail::require_seed(j, "shuffle_seed", path);
    return config;
}

// Checks that every referenced path resolves before any work starts.
inline void validate_pipeline_config(const PipelineConfig& config) {
    namespace fs = std::filesystem;
    if (!fs::exists(config.dataset_path))
        throw ValidationError("dataset file not found: " + config.dataset_path);
    if (!fs::exists(config.fewshot.path))
        throw ValidationError("few-shot file not found: " + config.fewshot.path);
    if (config.backend.kind == BackendConfig::Kind::mock &&
        !config.backend.script_path.empty() && !fs::exists(config.backend.script_path))
        throw ValidationError("mock script not found: " + config.backend.script_path);
    if (config.output_dir.empty())
        throw ValidationError("output_dir must be set (config key or --output-dir)");
    if (config.fewshot.k == 0) throw ValidationError("fewshot.k must be at least 1");
    validate_backend_config(config.backend);
    validate_language(config.src_lang);
    validate_language(config.tgt_lang);
    if (config.src_lang.code == config.tgt_lang.code)
        throw ValidationError("source and target language must differ");
}

inline json pipeline_config_to_json(const PipelineConfig& config) {
    json j;
    j["task"] = to_string(config.task);
    auto lang_json = [](const LanguageTag& lang) {
        json l;
        l["code"] = lang.code;
        l["display_name"] = lang.display_name;
        l["char_weight"] = {lang.char_weight.num, lang.char_weight.den};
        return l;
    };
    j["source_language"] = lang_json(config.src_lang);
    j["target_language"] = lang_json(config.tgt_lang);
    j["dataset_path"] = config.dataset_path;
    j["output_dir"] = config.output_dir;
    json b;
    b["kind"] = config.backend.kind == BackendConfig::Kind::mock ? "mock" : "remote";
    b["endpoint"] = config.backend.endpoint;
    b["model"] = config.backend.model;
    b["auth_env"] = config.backend.auth_env;  // the variable name, never its value
    b["timeout_seconds"] = config.backend.timeout_seconds;
    b["max_retries"] = config.backend.max_retries;
    b["max_in_flight"] = config.backend.max_in_flight;
    b["script_path"] = config.backend.script_path;
    b["echo_prefix"] = config.backend.echo_prefix;
    j["backend"] = std::move(b);
    if (config.subset.enabled) {
        json s;
        s["n"] = config.subset.n;
        s["mode"] = config.subset.head ? "head" : "random";
        if (!config.subset.head) s["seed"] = config.subset.seed;
        j["subset"] = std::move(s);
    }
    json f;
    f["path"] = config.fewshot.path;
    f["k"] = config.fewshot.k;
    f["seed"] = config.fewshot.seed;
    j["fewshot"] = std::move(f);
    j["budgets"] = config.budgets;
    json flt;
    flt["min_ratio"] = {config.filter.min_ratio.num, config.filter.min_ratio.den};
    flt["max_ratio"] = {config.filter.max_ratio.num, config.filter.max_ratio.den};
    flt["boundary_inclusive"] = config.filter.boundary_inclusive;
    json weights = json::object();
    for (const auto& [code, weight] : config.filter.weight_map)
        weights[code] = {weight.num, weight.den};
    flt["char_weights"] = std::move(weights);
    j["filter"] = std::move(flt);
    j["instructions"] = config.instructions;
    j["shuffle_seed"] = config.shuffle_seed;
    return j;
}

}  // namespace stt
