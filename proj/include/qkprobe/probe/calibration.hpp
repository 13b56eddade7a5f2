#pragma once

//! Head ranking and selection over calibration score tables.
//!
//! Calibration measures, for every head, how often its QK-score decision
//! matches gold on the calibration split.  Heads are ranked by that
//! accuracy; the best head (ties to the lexicographically smallest
//! (layer, head)) answers for a single setup, and a small cross-setup
//! cover is picked greedily from the per-setup top pools.  Heads scoring
//! below chance are flagged as reversed but never silently flipped.

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "qkprobe/common.hpp"
#include "qkprobe/probe/score.hpp"

namespace qkprobe::probe {

/// One experimental condition a calibration ran under.
struct Setup {
    std::string family;     // pronto | pararule | mle
    std::string rule_mode;  // mp_only | composed | scheme
    int hops_min = 1;
    int hops_max = 1;
    int distractors_min = 0;
    int distractors_max = 0;

    std::string label() const {
        return family + ":" + rule_mode + ":h" + std::to_string(hops_min) + "-" +
               std::to_string(hops_max) + ":d" + std::to_string(distractors_min) + "-" +
               std::to_string(distractors_max);
    }
};

inline Orientation detect_orientation(double accuracy, double threshold = 0.5) {
    return accuracy < threshold ? Orientation::Reversed : Orientation::Direct;
}

/// Fraction of samples, per head, where the direct QK decision matches gold.
inline std::map<HeadId, double> head_accuracy(const ScoreTable& table) {
    if (table.sample_ids.empty() || table.records.empty())
        throw EmptyTable("score table holds no samples");
    std::map<HeadId, int> correct;
    for (size_t i = 0; i < table.sample_ids.size(); ++i) {
        int g = table.gold.at(table.sample_ids[i]);
        for (size_t j = 0; j < table.grid_width(); ++j) {
            const ScoreRecord& r = table.records[i * table.grid_width() + j];
            correct[r.head] += decide_from_scores(r.s0, r.s1, Orientation::Direct) == g ? 1 : 0;
        }
    }
    std::map<HeadId, double> acc;
    for (const auto& [head, n] : correct)
        acc[head] = static_cast<double>(n) / static_cast<double>(table.sample_ids.size());
    return acc;
}

/// Fraction of samples where the model's own two-option argmax matches gold.
inline double baseline_accuracy(const ScoreTable& table) {
    if (table.sample_ids.empty()) throw EmptyTable("score table holds no samples");
    int correct = 0;
    for (const std::string& id : table.sample_ids)
        correct += table.baseline.at(id) == table.gold.at(id) ? 1 : 0;
    return static_cast<double>(correct) / static_cast<double>(table.sample_ids.size());
}

struct HeadResult {
    HeadId head;
    double accuracy = 0.0;  // raw, direct orientation
    double flipped = 0.0;   // 1 - accuracy
    Orientation orientation = Orientation::Direct;
    int rank = 0;           // 1-based position in the ranking
};

struct CalibrationReport {
    Setup setup;
    std::string calibration_digest;
    int n_samples = 0;
    bool low_sample_warning = false;   // fewer than 400 calibration samples
    std::vector<HeadResult> ranking;   // accuracy descending, ties by (layer, head)
    HeadId best_head;
    std::vector<HeadId> top_heads;     // first min(pool, heads) of the ranking
};

inline constexpr int kCalibrationFloor = 400;

inline CalibrationReport calibrate(const ScoreTable& table, const Setup& setup, int pool = 10) {
    if (pool < 1) throw ConfigError("top pool size must be positive");
    CalibrationReport rep;
    rep.setup = setup;
    rep.calibration_digest = table.dataset_digest;
    rep.n_samples = static_cast<int>(table.sample_ids.size());
    rep.low_sample_warning = rep.n_samples < kCalibrationFloor;

    // map order is (layer, head) ascending; a stable sort on accuracy alone
    // therefore leaves ties in exactly the documented order
    for (const auto& [head, acc] : head_accuracy(table))
        rep.ranking.push_back({head, acc, 1.0 - acc, detect_orientation(acc), 0});
    std::stable_sort(rep.ranking.begin(), rep.ranking.end(),
                     [](const HeadResult& a, const HeadResult& b) { return a.accuracy > b.accuracy; });
    for (size_t i = 0; i < rep.ranking.size(); ++i) rep.ranking[i].rank = static_cast<int>(i) + 1;

    rep.best_head = rep.ranking.front().head;
    size_t take = std::min<size_t>(static_cast<size_t>(pool), rep.ranking.size());
    for (size_t i = 0; i < take; ++i) rep.top_heads.push_back(rep.ranking[i].head);
    return rep;
}

inline HeadId select_best_head(const CalibrationReport& rep) {
    if (rep.ranking.empty()) throw EmptyTable("calibration report ranks no heads");
    const HeadResult* best = &rep.ranking.front();
    for (const HeadResult& r : rep.ranking)
        if (r.accuracy > best->accuracy ||
            (r.accuracy == best->accuracy && r.head < best->head))
            best = &r;
    return best->head;
}

struct HeadCover {
    std::vector<HeadId> heads;
    std::map<HeadId, std::vector<std::string>> coverage;  // head -> setups where it is top-pool
};

/// Greedy maximum coverage over the per-setup top pools: repeatedly take
/// the head present in the most not-yet-covered setups' pools, breaking
/// ties by higher mean calibration accuracy, then lexicographically.
inline HeadCover select_cover_heads(const std::vector<CalibrationReport>& reports, int k = 5) {
    if (k < 1) throw ConfigError("cover size must be positive");

    std::map<HeadId, std::set<size_t>> pool_of;  // candidate -> setups whose pool holds it
    for (size_t i = 0; i < reports.size(); ++i)
        for (const HeadId& h : reports[i].top_heads) pool_of[h].insert(i);
    if (pool_of.size() < static_cast<size_t>(k))
        throw InsufficientHeads("only " + std::to_string(pool_of.size()) +
                                " distinct heads reach the top pools, need " + std::to_string(k));

    std::map<HeadId, double> mean_acc;
    {
        std::map<HeadId, std::pair<double, int>> sums;
        for (const CalibrationReport& rep : reports)
            for (const HeadResult& r : rep.ranking)
                if (pool_of.count(r.head)) {
                    sums[r.head].first += r.accuracy;
                    sums[r.head].second += 1;
                }
        for (const auto& [head, s] : sums) mean_acc[head] = s.first / s.second;
    }

    HeadCover out;
    std::set<HeadId> chosen;
    std::set<size_t> covered;
    for (int round = 0; round < k; ++round) {
        const HeadId* pick = nullptr;
        size_t pick_gain = 0;
        double pick_acc = 0.0;
        for (const auto& [head, setups] : pool_of) {
            if (chosen.count(head)) continue;
            size_t gain = 0;
            for (size_t s : setups) gain += covered.count(s) ? 0 : 1;
            bool better;
            if (pick == nullptr)
                better = true;
            else if (gain != pick_gain)
                better = gain > pick_gain;
            else if (mean_acc[head] != pick_acc)
                better = mean_acc[head] > pick_acc;
            else
                better = false;  // map order already visited the smaller head first
            if (better) {
                pick = &head;
                pick_gain = gain;
                pick_acc = mean_acc[head];
            }
        }
        chosen.insert(*pick);
        out.heads.push_back(*pick);
        for (size_t s : pool_of[*pick]) covered.insert(s);
    }
    for (const HeadId& h : out.heads)
        for (size_t s : pool_of[h]) out.coverage[h].push_back(reports[s].setup.label());
    return out;
}

inline nlohmann::json to_json(const Setup& s) {
    return {{"family", s.family},
            {"rule_mode", s.rule_mode},
            {"hops", {s.hops_min, s.hops_max}},
            {"distractors", {s.distractors_min, s.distractors_max}}};
}

inline Setup setup_from_json(const nlohmann::json& j) {
    try {
        Setup s;
        s.family = j.at("family").get<std::string>();
        s.rule_mode = j.at("rule_mode").get<std::string>();
        s.hops_min = j.at("hops").at(0).get<int>();
        s.hops_max = j.at("hops").at(1).get<int>();
        s.distractors_min = j.at("distractors").at(0).get<int>();
        s.distractors_max = j.at("distractors").at(1).get<int>();
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed setup descriptor: ") + e.what());
    }
}

inline nlohmann::json to_json(const CalibrationReport& rep) {
    nlohmann::json ranking = nlohmann::json::array();
    for (const HeadResult& r : rep.ranking)
        ranking.push_back({{"layer", r.head.layer},
                           {"head", r.head.head},
                           {"accuracy", r.accuracy},
                           {"flipped", r.flipped},
                           {"rank", r.rank},
                           {"orientation", to_string(r.orientation)}});
    nlohmann::json top = nlohmann::json::array();
    for (const HeadId& h : rep.top_heads) top.push_back({h.layer, h.head});
    return {{"setup", to_json(rep.setup)},
            {"calibration_digest", rep.calibration_digest},
            {"n_samples", rep.n_samples},
            {"low_sample_warning", rep.low_sample_warning},
            {"ranking", std::move(ranking)},
            {"best_head", {rep.best_head.layer, rep.best_head.head}},
            {"top_heads", std::move(top)}};
}

inline CalibrationReport calibration_report_from_json(const nlohmann::json& j) {
    try {
        CalibrationReport rep;
        rep.setup = setup_from_json(j.at("setup"));
        rep.calibration_digest = j.at("calibration_digest").get<std::string>();
        rep.n_samples = j.at("n_samples").get<int>();
        rep.low_sample_warning = j.at("low_sample_warning").get<bool>();
        for (const auto& r : j.at("ranking"))
            rep.ranking.push_back({{r.at("layer").get<int>(), r.at("head").get<int>()},
                                   r.at("accuracy").get<double>(),
                                   r.at("flipped").get<double>(),
                                   orientation_from_string(r.at("orientation").get<std::string>()),
                                   r.at("rank").get<int>()});
        rep.best_head = {j.at("best_head").at(0).get<int>(), j.at("best_head").at(1).get<int>()};
        for (const auto& h : j.at("top_heads"))
            rep.top_heads.push_back({h.at(0).get<int>(), h.at(1).get<int>()});
        return rep;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed calibration report: ") + e.what());
    }
}

inline void write_calibration_report(const std::filesystem::path& path,
                                     const CalibrationReport& rep) {
    write_text_file(path, to_json(rep).dump(2) + "\n");
}

inline CalibrationReport read_calibration_report(const std::filesystem::path& path) {
    nlohmann::json j = nlohmann::json::parse(read_text_file(path), nullptr, false);
    if (j.is_discarded()) throw FormatError("calibration report is not valid JSON");
    return calibration_report_from_json(j);
}

/// Tabular export: one ranked row per head, then summary lines naming the
/// best head and the top pool.
inline std::string calibration_csv(const CalibrationReport& rep) {
    std::string out;
    out += "# setup " + rep.setup.label() + "\n";
    out += "# dataset " + (rep.calibration_digest.empty() ? "-" : rep.calibration_digest) + "\n";
    out += "# samples " + std::to_string(rep.n_samples) +
           (rep.low_sample_warning ? " (warning: below the 400-sample calibration floor)" : "") +
           "\n";
    out += "layer,head,accuracy,flipped_accuracy,rank,orientation\n";
    for (const HeadResult& r : rep.ranking)
        out += std::to_string(r.head.layer) + "," + std::to_string(r.head.head) + "," +
               fmt_double(r.accuracy) + "," + fmt_double(r.flipped) + "," +
               std::to_string(r.rank) + "," + to_string(r.orientation) + "\n";
    out += "# best_head " + runtime::to_string(rep.best_head) + "\n";
    out += "# top_heads";
    for (const HeadId& h : rep.top_heads) out += " " + runtime::to_string(h);
    out += "\n";
    return out;
}

}  // namespace qkprobe::probe
