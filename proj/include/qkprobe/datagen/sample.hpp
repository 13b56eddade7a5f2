#pragma once

//! Dataset records and their on-disk formats.
//!
//! A split is a directory holding `calibration.jsonl`, `evaluation.jsonl`
//! (one record per line) and `manifest.json` (generation config, seed,
//! content hash).  Formulas travel in canonical prefix text and parse back
//! losslessly, so every consumer can re-verify a sample from the file alone.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "qkprobe/common.hpp"
#include "qkprobe/logic/formula.hpp"

namespace qkprobe::datagen {

using logic::Formula;

struct Premise {
    std::string text;
    Formula formula;
};

struct LogicSample {
    std::string id;
    std::string family;        // pronto | pararule | mle
    int depth = 0;             // chained-rule count certified at generation
    int distractors = 0;       // irrelevant context premises mixed in
    std::string polarity;      // positive | negative statement surface form
    int gold = 0;              // winning option index: 0 = a0, 1 = a1
    std::vector<Premise> context;
    std::string statement_text;
    Formula statement;
    std::vector<std::string> rule_tags;  // inference-rule tags used, sorted
    std::string counterpart_id;          // empty when the sample has none

    std::vector<Formula> context_formulas() const {
        std::vector<Formula> out;
        out.reserve(context.size());
        for (const auto& p : context) out.push_back(p.formula);
        return out;
    }
};

/// Split-disjointness key: the context formula set plus the statement.
inline std::string dedupe_key(const LogicSample& s) {
    std::set<std::string> ctx;
    for (const auto& p : s.context) ctx.insert(print(p.formula));
    std::string key;
    for (const auto& c : ctx) {
        key += c;
        key += '\n';
    }
    key += "=> ";
    key += print(s.statement);
    return key;
}

inline nlohmann::json to_json(const LogicSample& s) {
    nlohmann::json ctx = nlohmann::json::array();
    for (const auto& p : s.context) ctx.push_back({{"text", p.text}, {"formula", print(p.formula)}});
    nlohmann::json j{
        {"id", s.id},
        {"family", s.family},
        {"depth", s.depth},
        {"distractors", s.distractors},
        {"polarity", s.polarity},
        {"gold", s.gold},
        {"context", std::move(ctx)},
        {"statement", {{"text", s.statement_text}, {"formula", print(s.statement)}}},
        {"rule_tags", s.rule_tags},
    };
    if (s.counterpart_id.empty())
        j["counterpart_id"] = nullptr;
    else
        j["counterpart_id"] = s.counterpart_id;
    return j;
}

inline LogicSample sample_from_json(const nlohmann::json& j) {
    LogicSample s;
    try {
        s.id = j.at("id").get<std::string>();
        s.family = j.at("family").get<std::string>();
        s.depth = j.at("depth").get<int>();
        s.distractors = j.at("distractors").get<int>();
        s.polarity = j.at("polarity").get<std::string>();
        s.gold = j.at("gold").get<int>();
        for (const auto& p : j.at("context")) {
            s.context.push_back(
                {p.at("text").get<std::string>(), logic::parse(p.at("formula").get<std::string>())});
        }
        s.statement_text = j.at("statement").at("text").get<std::string>();
        s.statement = logic::parse(j.at("statement").at("formula").get<std::string>());
        s.rule_tags = j.at("rule_tags").get<std::vector<std::string>>();
        if (!j.at("counterpart_id").is_null())
            s.counterpart_id = j.at("counterpart_id").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed sample record: ") + e.what());
    }
    if (s.gold != 0 && s.gold != 1) throw FormatError("sample gold must be 0 or 1: " + s.id);
    return s;
}

struct GenConfig {
    std::string family;          // pronto | pararule | mle
    std::string rule_mode;       // mp_only | composed | scheme
    int hops_min = 1;            // reasoning depth range
    int hops_max = 1;
    int distractors_min = 0;
    int distractors_max = 0;
    int n_calibration = 600;
    int n_evaluation = 1000;
    uint64_t seed = 0;
    int category_count = 64;     // ontology breadth available to one sample stream
    std::string lexicon = "default";
    int per_scheme = 100;        // samples per inference scheme (mle)

    void validate() const {
        if (family != "pronto" && family != "pararule" && family != "mle")
            throw ConfigError("unknown family: " + family);
        if (rule_mode != "mp_only" && rule_mode != "composed" && rule_mode != "scheme")
            throw ConfigError("unknown rule mode: " + rule_mode);
        if (n_calibration <= 0 || n_calibration % 2 != 0)
            throw ConfigError("n_calibration must be positive and even");
        if (n_evaluation <= 0) throw ConfigError("n_evaluation must be positive");
        if (hops_min < 1 || hops_max > 5 || hops_min > hops_max)
            throw ConfigError("hops must lie within 1..5");
        if (distractors_min < 0 || distractors_max > 5 || distractors_min > distractors_max)
            throw ConfigError("distractors must lie within 0..5");
        if (category_count < 4) throw ConfigError("category_count must be at least 4");
        if (per_scheme <= 0 || per_scheme % 2 != 0)
            throw ConfigError("per_scheme must be positive and even");
        if (family == "pronto" && n_evaluation % 2 != 0)
            throw ConfigError("pronto needs an even n_evaluation: counterpart pairs stay together");
        if (family == "pararule" && (hops_min < 2 || hops_max > 5))
            throw ConfigError("pararule depths lie within 2..5");
        if (family == "mle" && (hops_min < 1 || hops_max > 4))
            throw ConfigError("mle scheme depths lie within 1..4");
    }
};

inline nlohmann::json to_json(const GenConfig& c) {
    return nlohmann::json{
        {"family", c.family},
        {"rule_mode", c.rule_mode},
        {"hops", {c.hops_min, c.hops_max}},
        {"distractors", {c.distractors_min, c.distractors_max}},
        {"n_calibration", c.n_calibration},
        {"n_evaluation", c.n_evaluation},
        {"seed", c.seed},
        {"category_count", c.category_count},
        {"lexicon", c.lexicon},
        {"per_scheme", c.per_scheme},
    };
}

inline GenConfig config_from_json(const nlohmann::json& j) {
    GenConfig c;
    try {
        c.family = j.at("family").get<std::string>();
        c.rule_mode = j.at("rule_mode").get<std::string>();
        c.hops_min = j.at("hops").at(0).get<int>();
        c.hops_max = j.at("hops").at(1).get<int>();
        c.distractors_min = j.at("distractors").at(0).get<int>();
        c.distractors_max = j.at("distractors").at(1).get<int>();
        c.n_calibration = j.at("n_calibration").get<int>();
        c.n_evaluation = j.at("n_evaluation").get<int>();
        c.seed = j.at("seed").get<uint64_t>();
        c.category_count = j.at("category_count").get<int>();
        c.lexicon = j.at("lexicon").get<std::string>();
        c.per_scheme = j.at("per_scheme").get<int>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed generation config: ") + e.what());
    }
    return c;
}

struct DatasetSplit {
    std::vector<LogicSample> calibration;
    std::vector<LogicSample> evaluation;
    GenConfig config;
};

inline std::string to_jsonl(const std::vector<LogicSample>& samples) {
    std::string out;
    for (const auto& s : samples) {
        out += to_json(s).dump();
        out += '\n';
    }
    return out;
}

inline std::vector<LogicSample> from_jsonl(const std::string& text) {
    std::vector<LogicSample> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) throw FormatError("dataset line is not valid JSON: " + line);
        out.push_back(sample_from_json(j));
    }
    return out;
}

inline constexpr const char* kDatasetVersion = "qkds-v1";

/// Hash of the serialized sample content; the manifest records it and
/// score tables carry it so downstream artifacts can name their input.
inline std::string split_content_hash(const DatasetSplit& split) {
    return hex64(fnv1a64(to_jsonl(split.calibration) + to_jsonl(split.evaluation)));
}

inline void write_split(const std::filesystem::path& dir, const DatasetSplit& split) {
    std::filesystem::create_directories(dir);
    std::string cal = to_jsonl(split.calibration);
    std::string ev = to_jsonl(split.evaluation);
    write_text_file(dir / "calibration.jsonl", cal);
    write_text_file(dir / "evaluation.jsonl", ev);
    nlohmann::json manifest{
        {"version", kDatasetVersion},
        {"config", to_json(split.config)},
        {"seed", split.config.seed},
        {"content_hash", hex64(fnv1a64(cal + ev))},
        {"counts",
         {{"calibration", split.calibration.size()}, {"evaluation", split.evaluation.size()}}},
    };
    write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

inline DatasetSplit read_split(const std::filesystem::path& dir) {
    nlohmann::json manifest = nlohmann::json::parse(read_text_file(dir / "manifest.json"),
                                                    nullptr, false);
    if (manifest.is_discarded()) throw FormatError("manifest.json is not valid JSON");
    if (manifest.value("version", "") != kDatasetVersion)
        throw VersionMismatch("dataset version " + manifest.value("version", "<missing>") +
                              ", expected " + kDatasetVersion);
    std::string cal = read_text_file(dir / "calibration.jsonl");
    std::string ev = read_text_file(dir / "evaluation.jsonl");
    std::string expect = manifest.at("content_hash").get<std::string>();
    if (hex64(fnv1a64(cal + ev)) != expect)
        throw DigestMismatch("dataset content does not match its manifest hash");
    DatasetSplit split;
    split.config = config_from_json(manifest.at("config"));
    split.calibration = from_jsonl(cal);
    split.evaluation = from_jsonl(ev);
    return split;
}

}  // namespace qkprobe::datagen
