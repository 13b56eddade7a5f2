#pragma once

//! QK-scores and the two decision rules built on them.
//!
//! The QK-score of a head for an answer option is the raw dot product
//! between the query vector captured at that option's token and the key
//! vector captured at the statement end-of-line token: no 1/sqrt(d)
//! scaling, no mask, no softmax.  A head answers by comparing the two
//! option scores; the model's own answer (the baseline) compares the two
//! option logits at the final position.  Exact ties resolve to option a0
//! in both rules so every decision is defined.
//!
//! A ScoreTable is the complete (samples x heads) grid of scores for one
//! capture set, plus the per-sample gold labels and baseline decisions.
//! Tables export to a tabular text file that parses back losslessly, so
//! calibration can run from the file alone.

#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "qkprobe/common.hpp"
#include "qkprobe/runtime/forward.hpp"
#include "qkprobe/runtime/spec.hpp"

namespace qkprobe::probe {

using runtime::HeadId;
using runtime::QKCapture;
using runtime::Variant;

/// Whether a head's score comparison is used as-is or flipped.  Reversed
/// heads separate the classes with inverted polarity; flipping is only
/// ever applied when explicitly requested, never silently.
enum class Orientation { Direct, Reversed };

inline std::string to_string(Orientation o) {
    return o == Orientation::Direct ? "direct" : "reversed";
}

inline Orientation orientation_from_string(const std::string& s) {
    if (s == "direct") return Orientation::Direct;
    if (s == "reversed") return Orientation::Reversed;
    throw FormatError("unknown orientation: " + s);
}

inline double qk_score(const QKCapture& cap, const HeadId& head, int option, Variant variant) {
    if (option != 0 && option != 1) throw ConfigError("answer option must be 0 or 1");
    const runtime::HeadVectors& hv = cap.at(variant, head);
    const std::vector<float>& q = option == 0 ? hv.q_a0 : hv.q_a1;
    double acc = 0.0;
    for (size_t c = 0; c < q.size(); ++c) acc += static_cast<double>(q[c]) * hv.k_s[c];
    return acc;
}

/// The comparison rule shared by every consumer of a score pair.
inline int decide_from_scores(double s0, double s1, Orientation o) {
    int pick = s1 > s0 ? 1 : 0;
    return o == Orientation::Reversed ? 1 - pick : pick;
}

inline int decide_qk(const QKCapture& cap, const HeadId& head, Orientation o, Variant variant) {
    return decide_from_scores(qk_score(cap, head, 0, variant), qk_score(cap, head, 1, variant), o);
}

/// The model's own answer: argmax over the two option logits at the final
/// position.  Softmax is monotone, so comparing logits equals comparing
/// probabilities.  Captures ingested without output logits mark them NaN,
/// which this rule refuses to resolve.
inline int decide_baseline(const QKCapture& cap) {
    float l0 = cap.option_logits[0], l1 = cap.option_logits[1];
    if (!std::isfinite(l0) || !std::isfinite(l1))
        throw MissingLogits("capture " + cap.sample_id + " carries no usable option logits");
    return l1 > l0 ? 1 : 0;
}

struct ScoreRecord {
    std::string sample_id;
    HeadId head;
    double s0 = 0.0;
    double s1 = 0.0;
    Variant variant = Variant::PostPositional;
};

struct ScoreTable {
    int n_layers = 0;
    int n_heads = 0;
    Variant variant = Variant::PostPositional;
    std::string dataset_digest;
    std::vector<std::string> sample_ids;       // row order of the grid
    std::map<std::string, int> gold;           // sample id -> winning option
    std::map<std::string, int> baseline;       // sample id -> baseline decision
    std::vector<ScoreRecord> records;          // sample-major, heads row-major

    size_t grid_width() const { return static_cast<size_t>(n_layers) * n_heads; }

    const ScoreRecord& at(size_t sample_index, const HeadId& h) const {
        if (h.layer < 0 || h.layer >= n_layers || h.head < 0 || h.head >= n_heads)
            throw HeadOutOfRange("head " + runtime::to_string(h) + " outside table grid of " +
                                 std::to_string(n_layers) + "x" + std::to_string(n_heads));
        return records[sample_index * grid_width() + h.layer * n_heads + h.head];
    }
};

inline ScoreTable score_table(const std::vector<QKCapture>& captures,
                              const std::map<std::string, int>& gold, Variant variant,
                              const std::string& dataset_digest = "") {
    if (captures.empty()) throw IncompleteCaptures("no captures to score");

    ScoreTable table;
    table.n_layers = captures.front().n_layers;
    table.n_heads = captures.front().n_heads;
    table.variant = variant;
    table.dataset_digest = dataset_digest;

    for (const QKCapture& cap : captures) {
        if (cap.n_layers != table.n_layers || cap.n_heads != table.n_heads)
            throw IncompleteCaptures("capture " + cap.sample_id +
                                     " comes from a different head grid");
        if (table.gold.count(cap.sample_id))
            throw IncompleteCaptures("duplicate capture for sample " + cap.sample_id);
        auto g = gold.find(cap.sample_id);
        if (g == gold.end())
            throw IncompleteCaptures("no gold label for sample " + cap.sample_id);

        table.sample_ids.push_back(cap.sample_id);
        table.gold[cap.sample_id] = g->second;
        table.baseline[cap.sample_id] = decide_baseline(cap);
        for (int l = 0; l < table.n_layers; ++l)
            for (int h = 0; h < table.n_heads; ++h) {
                HeadId head{l, h};
                table.records.push_back({cap.sample_id, head,
                                         qk_score(cap, head, 0, variant),
                                         qk_score(cap, head, 1, variant), variant});
            }
    }
    return table;
}

namespace detail {

// full round-trip precision: 17 significant digits reproduce any double
inline std::string fmt_score(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
}

}  // namespace detail

/// Tabular export, one row per (sample, head).  Lines starting with '#'
/// carry the table-level fields so the file parses back to an identical
/// table.
inline std::string score_table_csv(const ScoreTable& table) {
    std::string out;
    out += "# grid " + std::to_string(table.n_layers) + " " + std::to_string(table.n_heads) + "\n";
    out += "# variant " + runtime::to_string(table.variant) + "\n";
    out += "# dataset " + (table.dataset_digest.empty() ? "-" : table.dataset_digest) + "\n";
    out += "sample_id,layer,head,s0,s1,gold,qk_decision,baseline_decision\n";
    for (size_t i = 0; i < table.sample_ids.size(); ++i) {
        const std::string& id = table.sample_ids[i];
        for (size_t j = 0; j < table.grid_width(); ++j) {
            const ScoreRecord& r = table.records[i * table.grid_width() + j];
            out += id + "," + std::to_string(r.head.layer) + "," + std::to_string(r.head.head) +
                   "," + detail::fmt_score(r.s0) + "," + detail::fmt_score(r.s1) + "," +
                   std::to_string(table.gold.at(id)) + "," +
                   std::to_string(decide_from_scores(r.s0, r.s1, Orientation::Direct)) + "," +
                   std::to_string(table.baseline.at(id)) + "\n";
        }
    }
    return out;
}

inline void write_score_table(const std::filesystem::path& path, const ScoreTable& table) {
    write_text_file(path, score_table_csv(table));
}

inline ScoreTable read_score_table(const std::filesystem::path& path) {
    std::string raw = read_text_file(path);
    ScoreTable table;
    size_t at = 0;
    bool header_seen = false;
    while (at < raw.size()) {
        size_t end = raw.find('\n', at);
        if (end == std::string::npos) throw FormatError("score table has an unterminated line");
        std::string line = raw.substr(at, end - at);
        at = end + 1;
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream ls(line.substr(1));
            std::string key;
            ls >> key;
            if (key == "grid") {
                ls >> table.n_layers >> table.n_heads;
                if (ls.fail()) throw FormatError("malformed grid line: " + line);
            } else if (key == "variant") {
                std::string v;
                ls >> v;
                table.variant = runtime::variant_from_string(v);
            } else if (key == "dataset") {
                ls >> table.dataset_digest;
                if (table.dataset_digest == "-") table.dataset_digest.clear();
            } else {
                throw FormatError("unknown score table field: " + line);
            }
            continue;
        }
        if (!header_seen) {
            if (line != "sample_id,layer,head,s0,s1,gold,qk_decision,baseline_decision")
                throw FormatError("unexpected score table header: " + line);
            header_seen = true;
            continue;
        }
        std::vector<std::string> cells;
        size_t field = 0;
        while (true) {
            size_t comma = line.find(',', field);
            cells.push_back(line.substr(field, comma - field));
            if (comma == std::string::npos) break;
            field = comma + 1;
        }
        if (cells.size() != 8) throw FormatError("score table row needs 8 fields: " + line);
        ScoreRecord r;
        r.sample_id = cells[0];
        try {
            r.head = {std::stoi(cells[1]), std::stoi(cells[2])};
            r.s0 = std::stod(cells[3]);
            r.s1 = std::stod(cells[4]);
            if (table.sample_ids.empty() || table.sample_ids.back() != r.sample_id) {
                table.sample_ids.push_back(r.sample_id);
                table.gold[r.sample_id] = std::stoi(cells[5]);
                table.baseline[r.sample_id] = std::stoi(cells[7]);
            }
        } catch (const std::exception&) {
            throw FormatError("malformed score table row: " + line);
        }
        r.variant = table.variant;
        table.records.push_back(std::move(r));
    }
    if (table.n_layers < 1 || table.n_heads < 1)
        throw FormatError("score table is missing its grid line");
    if (!header_seen) throw FormatError("score table is missing its header row");
    if (table.records.size() != table.sample_ids.size() * table.grid_width())
        throw IncompleteCaptures("score table grid is incomplete");
    for (size_t i = 0; i < table.sample_ids.size(); ++i)
        for (int l = 0; l < table.n_layers; ++l)
            for (int h = 0; h < table.n_heads; ++h) {
                const ScoreRecord& r = table.records[i * table.grid_width() + l * table.n_heads + h];
                if (r.sample_id != table.sample_ids[i] || r.head.layer != l || r.head.head != h)
                    throw IncompleteCaptures("score table rows are not a complete ordered grid");
            }
    return table;
}

}  // namespace qkprobe::probe
