#pragma once

//! End-to-end experiment driver.
//!
//! One run walks a list of setups (dataset configurations): for each it
//! obtains the dataset (generated or loaded), renders and tokenizes the
//! prompts, runs the model over both splits, builds calibration and
//! evaluation score tables, and calibrates head rankings on the
//! calibration split only.  Probe heads are then chosen (best per setup,
//! greedy cover, or given explicitly) and every chosen head is evaluated
//! on every setup's evaluation split, next to the option-logit baseline,
//! producing a complete accuracy grid.
//!
//! A head is scored on a setup under the orientation detected on that
//! setup's calibration split, so evaluation never reads its own labels
//! and a reversed head still transfers across setups.
//!
//! Instead of running a model, a setup may ingest a capture file produced
//! elsewhere; samples are joined by id, so file order does not matter,
//! but missing, repeated, or extra samples fail loudly.
//!
//! Every run persists its artifacts under out_dir: run.json (the
//! configuration), report.json (the grid), and per-setup dataset copies,
//! score tables, and calibration reports under setups/NN/.

#include <algorithm>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "qkprobe/common.hpp"
#include "qkprobe/datagen/mle.hpp"
#include "qkprobe/datagen/pararule.hpp"
#include "qkprobe/datagen/pronto.hpp"
#include "qkprobe/datagen/sample.hpp"
#include "qkprobe/probe/calibration.hpp"
#include "qkprobe/probe/score.hpp"
#include "qkprobe/runtime/capture_io.hpp"
#include "qkprobe/runtime/forward.hpp"
#include "qkprobe/runtime/model.hpp"
#include "qkprobe/runtime/prompt.hpp"
#include "qkprobe/runtime/tokenizer.hpp"

namespace qkprobe::harness {

using runtime::HeadId;
using runtime::Variant;

enum class HeadChoice { BestPerSetup, Cover, Explicit };

inline std::string to_string(HeadChoice c) {
    switch (c) {
        case HeadChoice::BestPerSetup: return "best";
        case HeadChoice::Cover: return "cover";
        default: return "explicit";
    }
}

inline HeadChoice head_choice_from_string(const std::string& s) {
    if (s == "best") return HeadChoice::BestPerSetup;
    if (s == "cover") return HeadChoice::Cover;
    if (s == "explicit") return HeadChoice::Explicit;
    throw ConfigError("unknown head choice: " + s + " (want best, cover, or explicit)");
}

/// One dataset configuration inside a run.  Exactly one source applies:
/// `gen` when both paths are empty, a stored dataset via dataset_dir, and
/// capture_path additionally replaces the model's forward passes.
struct SetupSpec {
    datagen::GenConfig gen;
    std::filesystem::path dataset_dir;
    std::filesystem::path capture_path;
};

struct ExperimentConfig {
    std::vector<SetupSpec> setups;
    std::filesystem::path model_path;
    Variant variant = Variant::PrePositional;
    HeadChoice head_choice = HeadChoice::BestPerSetup;
    std::vector<HeadId> explicit_heads;
    int cover_k = 5;
    int top_pool = 10;
    std::filesystem::path out_dir;
    uint64_t seed = 0;
    bool planted_markers = false;  // statement eol carries the gold marker token
    bool persist_captures = false;
    std::string timestamp;  // empty: wall clock when the run starts

    void validate() const {
        if (setups.empty()) throw ConfigError("experiment needs at least one setup");
        bool any_capture = false, all_capture = true;
        for (const SetupSpec& s : setups) {
            bool c = !s.capture_path.empty();
            any_capture = any_capture || c;
            all_capture = all_capture && c;
        }
        if (model_path.empty() && !all_capture)
            throw ConfigError("without a model, every setup needs a capture file");
        if (!model_path.empty() && any_capture)
            throw ConfigError("a model and external captures cannot be mixed in one run");
        if (head_choice == HeadChoice::Explicit && explicit_heads.empty())
            throw ConfigError("explicit head choice needs at least one head");
        if (cover_k < 1) throw ConfigError("cover size must be positive");
        if (top_pool < 1) throw ConfigError("top pool size must be positive");
        if (out_dir.empty()) throw ConfigError("experiment needs an output directory");
        if (planted_markers && model_path.empty())
            throw ConfigError("planted markers only apply when running a model");
    }
};

inline nlohmann::json to_json(const ExperimentConfig& c) {
    nlohmann::json setups = nlohmann::json::array();
    for (const SetupSpec& s : c.setups)
        setups.push_back({{"gen", datagen::to_json(s.gen)},
                          {"dataset_dir", s.dataset_dir.string()},
                          {"capture_path", s.capture_path.string()}});
    nlohmann::json heads = nlohmann::json::array();
    for (const HeadId& h : c.explicit_heads) heads.push_back({h.layer, h.head});
    return {{"setups", setups},
            {"model_path", c.model_path.string()},
            {"variant", runtime::to_string(c.variant)},
            {"head_choice", to_string(c.head_choice)},
            {"explicit_heads", heads},
            {"cover_k", c.cover_k},
            {"top_pool", c.top_pool},
            {"seed", c.seed},
            {"planted_markers", c.planted_markers},
            {"persist_captures", c.persist_captures}};
}

// ---------------------------------------------------------------------------
// Capture production
// ---------------------------------------------------------------------------

/// Worker thread count for forward passes, from QKPROBE_WORKERS.
inline int worker_count() {
    const char* env = std::getenv("QKPROBE_WORKERS");
    if (env == nullptr || *env == '\0') return 1;
    int n = std::atoi(env);
    return n < 1 ? 1 : n;
}

/// Renders, tokenizes, and runs every sample.  The work fans out over
/// worker_count() threads into pre-sized slots, so the result (order and
/// content) is byte-identical for any worker count.  In planted mode the
/// statement end-of-line token is replaced by the marker encoding the
/// sample's gold answer.
inline std::vector<runtime::QKCapture> capture_samples(
    const runtime::Model& model, const runtime::Tokenizer& tokenizer,
    const std::vector<datagen::LogicSample>& samples, bool planted_markers = false) {
    std::vector<runtime::QKCapture> out(samples.size());
    auto run_range = [&](size_t begin, size_t end) {
        for (size_t i = begin; i < end; ++i) {
            const datagen::LogicSample& s = samples[i];
            runtime::RenderedPrompt prompt =
                runtime::render_prompt(s, runtime::default_template_id(s.family));
            if (!runtime::is_zero_shot(prompt.text))
                throw ConfigError("rendered prompt is not zero-shot: " + s.id);
            std::string marker;
            if (planted_markers)
                marker = s.gold == 0 ? runtime::kMarkerA0Token : runtime::kMarkerA1Token;
            runtime::PromptLayout layout =
                tokenizer.tokenize(prompt.text, prompt.spans, prompt.template_id, marker);
            runtime::QKCapture cap = runtime::forward_capture(model, layout);
            cap.sample_id = s.id;
            out[i] = std::move(cap);
        }
    };

    size_t workers = static_cast<size_t>(worker_count());
    if (workers <= 1 || samples.size() < 2) {
        run_range(0, out.size());
        return out;
    }
    workers = std::min(workers, samples.size());
    size_t chunk = (samples.size() + workers - 1) / workers;
    std::vector<std::thread> threads;
    std::vector<std::exception_ptr> errors(workers);
    for (size_t w = 0; w < workers; ++w) {
        size_t begin = w * chunk;
        size_t end = std::min(samples.size(), begin + chunk);
        threads.emplace_back([&run_range, &errors, w, begin, end] {
            try {
                run_range(begin, end);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (std::thread& t : threads) t.join();
    for (const std::exception_ptr& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

// ---------------------------------------------------------------------------
// External capture ingestion
// ---------------------------------------------------------------------------

struct IngestedCaptures {
    std::vector<runtime::QKCapture> calibration;
    std::vector<runtime::QKCapture> evaluation;
    std::string spec_digest;
    int n_layers = 0, n_heads = 0, head_dim = 0;
};

/// Keyed join of an externally produced capture file against a dataset.
/// Every dataset sample must appear exactly once and no extra capture may
/// remain; capture file order is irrelevant and the outputs follow
/// dataset order, so a shuffled file yields identical results.
inline IngestedCaptures ingest_external_capture(const std::filesystem::path& capture_path,
                                                const datagen::DatasetSplit& split,
                                                const std::string& expected_digest = "") {
    runtime::CaptureFile file = runtime::read_capture(capture_path);
    if (!expected_digest.empty() && file.spec_digest != expected_digest)
        throw DigestMismatch("capture file " + capture_path.string() + " reports spec digest " +
                             file.spec_digest + ", expected " + expected_digest);

    std::map<std::string, size_t> by_id;
    for (size_t i = 0; i < file.captures.size(); ++i) {
        auto [it, fresh] = by_id.emplace(file.captures[i].sample_id, i);
        if (!fresh) throw IdMismatch("capture file repeats sample " + file.captures[i].sample_id);
    }

    IngestedCaptures out;
    out.spec_digest = file.spec_digest;
    out.n_layers = file.n_layers;
    out.n_heads = file.n_heads;
    out.head_dim = file.head_dim;

    std::set<std::string> claimed;
    auto take = [&](const std::vector<datagen::LogicSample>& samples,
                    std::vector<runtime::QKCapture>& dst) {
        dst.reserve(samples.size());
        for (const datagen::LogicSample& s : samples) {
            auto it = by_id.find(s.id);
            if (it == by_id.end()) throw IdMismatch("capture file lacks sample " + s.id);
            dst.push_back(file.captures[it->second]);
            claimed.insert(s.id);
        }
    };
    take(split.calibration, out.calibration);
    take(split.evaluation, out.evaluation);
    if (claimed.size() != by_id.size())
        for (const auto& [id, idx] : by_id)
            if (!claimed.count(id))
                throw IdMismatch("capture file holds a sample the dataset does not: " + id);
    return out;
}

// ---------------------------------------------------------------------------
// Evaluation grid
// ---------------------------------------------------------------------------

struct EvalCell {
    std::string source;  // "qk (l,h)" or "baseline"
    HeadId head;
    bool is_baseline = false;
    probe::Orientation orientation = probe::Orientation::Direct;
    double accuracy = 0.0;
    int correct = 0;
    int total = 0;
};

struct SetupResult {
    probe::Setup setup;
    std::string dataset_digest;
    int n_calibration = 0;
    int n_evaluation = 0;
    probe::CalibrationReport calibration;
    std::vector<EvalCell> cells;  // chosen heads in report order, then the baseline
};

struct EvalReport {
    std::string model_digest;
    Variant variant = Variant::PrePositional;
    uint64_t seed = 0;
    std::string timestamp;
    std::string head_mode;       // best | cover | explicit
    std::vector<HeadId> heads;   // evaluated probe heads, row order of the grid
    std::vector<SetupResult> setups;
};

inline std::map<std::string, int> gold_of(const std::vector<datagen::LogicSample>& samples) {
    std::map<std::string, int> gold;
    for (const datagen::LogicSample& s : samples) gold[s.id] = s.gold;
    return gold;
}

/// Orientation a setup's calibration detected for one head.
inline probe::Orientation calibrated_orientation(const probe::CalibrationReport& rep,
                                                 const HeadId& head) {
    for (const probe::HeadResult& r : rep.ranking)
        if (r.head == head) return r.orientation;
    throw HeadOutOfRange("head " + runtime::to_string(head) + " missing from calibration ranking");
}

inline EvalCell evaluate_head(const probe::ScoreTable& table, const HeadId& head,
                              probe::Orientation orientation) {
    if (table.sample_ids.empty()) throw EmptyTable("score table holds no samples");
    EvalCell cell;
    cell.source = "qk " + runtime::to_string(head);
    cell.head = head;
    cell.orientation = orientation;
    cell.total = static_cast<int>(table.sample_ids.size());
    for (size_t i = 0; i < table.sample_ids.size(); ++i) {
        const probe::ScoreRecord& rec = table.at(i, head);
        int want = table.gold.at(table.sample_ids[i]);
        cell.correct += probe::decide_from_scores(rec.s0, rec.s1, orientation) == want ? 1 : 0;
    }
    cell.accuracy = static_cast<double>(cell.correct) / static_cast<double>(cell.total);
    return cell;
}

inline EvalCell evaluate_baseline(const probe::ScoreTable& table) {
    if (table.sample_ids.empty()) throw EmptyTable("score table holds no samples");
    EvalCell cell;
    cell.source = "baseline";
    cell.is_baseline = true;
    cell.total = static_cast<int>(table.sample_ids.size());
    for (const std::string& id : table.sample_ids)
        cell.correct += table.baseline.at(id) == table.gold.at(id) ? 1 : 0;
    cell.accuracy = static_cast<double>(cell.correct) / static_cast<double>(cell.total);
    return cell;
}

// ---------------------------------------------------------------------------
// Report serialization
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const EvalCell& c) {
    return {{"source", c.source},
            {"head", {c.head.layer, c.head.head}},
            {"baseline", c.is_baseline},
            {"orientation", probe::to_string(c.orientation)},
            {"accuracy", c.accuracy},
            {"correct", c.correct},
            {"total", c.total}};
}

inline nlohmann::json to_json(const SetupResult& r) {
    nlohmann::json cells = nlohmann::json::array();
    for (const EvalCell& c : r.cells) cells.push_back(to_json(c));
    return {{"setup", probe::to_json(r.setup)},
            {"dataset_digest", r.dataset_digest},
            {"n_calibration", r.n_calibration},
            {"n_evaluation", r.n_evaluation},
            {"calibration", probe::to_json(r.calibration)},
            {"cells", cells}};
}

inline nlohmann::json to_json(const EvalReport& r) {
    nlohmann::json heads = nlohmann::json::array();
    for (const HeadId& h : r.heads) heads.push_back({h.layer, h.head});
    nlohmann::json setups = nlohmann::json::array();
    for (const SetupResult& s : r.setups) setups.push_back(to_json(s));
    return {{"model_digest", r.model_digest},
            {"variant", runtime::to_string(r.variant)},
            {"seed", r.seed},
            {"timestamp", r.timestamp},
            {"head_mode", r.head_mode},
            {"heads", heads},
            {"setups", setups}};
}

inline EvalReport eval_report_from_json(const nlohmann::json& j) {
    try {
        EvalReport r;
        r.model_digest = j.at("model_digest").get<std::string>();
        r.variant = runtime::variant_from_string(j.at("variant").get<std::string>());
        r.seed = j.at("seed").get<uint64_t>();
        r.timestamp = j.at("timestamp").get<std::string>();
        r.head_mode = j.at("head_mode").get<std::string>();
        for (const auto& h : j.at("heads"))
            r.heads.push_back({h.at(0).get<int>(), h.at(1).get<int>()});
        for (const auto& s : j.at("setups")) {
            SetupResult res;
            res.setup = probe::setup_from_json(s.at("setup"));
            res.dataset_digest = s.at("dataset_digest").get<std::string>();
            res.n_calibration = s.at("n_calibration").get<int>();
            res.n_evaluation = s.at("n_evaluation").get<int>();
            res.calibration = probe::calibration_report_from_json(s.at("calibration"));
            for (const auto& c : s.at("cells")) {
                EvalCell cell;
                cell.source = c.at("source").get<std::string>();
                cell.head = {c.at("head").at(0).get<int>(), c.at("head").at(1).get<int>()};
                cell.is_baseline = c.at("baseline").get<bool>();
                cell.orientation =
                    probe::orientation_from_string(c.at("orientation").get<std::string>());
                cell.accuracy = c.at("accuracy").get<double>();
                cell.correct = c.at("correct").get<int>();
                cell.total = c.at("total").get<int>();
                res.cells.push_back(std::move(cell));
            }
            r.setups.push_back(std::move(res));
        }
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed evaluation report: ") + e.what());
    }
}

inline void write_eval_report(const std::filesystem::path& path, const EvalReport& r) {
    write_text_file(path, to_json(r).dump(2) + "\n");
}

inline EvalReport read_eval_report(const std::filesystem::path& path) {
    nlohmann::json j = nlohmann::json::parse(read_text_file(path), nullptr, false);
    if (j.is_discarded()) throw FormatError("evaluation report is not valid JSON");
    return eval_report_from_json(j);
}

// ---------------------------------------------------------------------------
// The run itself
// ---------------------------------------------------------------------------

namespace detail {

inline datagen::DatasetSplit obtain_split(const SetupSpec& spec) {
    if (!spec.dataset_dir.empty()) return datagen::read_split(spec.dataset_dir);
    const datagen::GenConfig& g = spec.gen;
    if (g.family == "pronto") return datagen::gen_prontoqa(g);
    if (g.family == "pararule") return datagen::gen_pararule(g);
    if (g.family == "mle") return datagen::gen_multilogieval(g);
    throw ConfigError("unknown dataset family: " + g.family);
}

inline void check_split_hygiene(const datagen::DatasetSplit& split) {
    std::set<std::string> seen;
    for (const auto* part : {&split.calibration, &split.evaluation})
        for (const datagen::LogicSample& s : *part)
            if (!seen.insert(s.id).second)
                throw ConfigError("sample id appears twice across the splits: " + s.id);
}

inline std::string setup_dir_name(size_t index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%02zu", index);
    return std::string(buf);
}

inline std::string now_utc() {
    std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return std::string(buf);
}

}  // namespace detail

inline EvalReport run_experiment(const ExperimentConfig& config) {
    config.validate();
    const bool have_model = !config.model_path.empty();

    runtime::Model model;
    std::optional<runtime::Tokenizer> tokenizer;
    if (have_model) {
        model = runtime::load_model(config.model_path);
        tokenizer.emplace(model.vocabulary);
    }

    EvalReport report;
    report.variant = config.variant;
    report.seed = config.seed;
    report.head_mode = to_string(config.head_choice);
    report.timestamp = config.timestamp.empty() ? detail::now_utc() : config.timestamp;
    if (have_model) report.model_digest = model.spec.digest();

    struct SetupState {
        std::string digest;
        probe::ScoreTable cal_table;
        probe::ScoreTable eval_table;
        probe::CalibrationReport calibration;
    };
    std::vector<SetupState> states;

    for (size_t i = 0; i < config.setups.size(); ++i) {
        const SetupSpec& su = config.setups[i];
        datagen::DatasetSplit split = detail::obtain_split(su);
        detail::check_split_hygiene(split);

        std::filesystem::path sdir = config.out_dir / "setups" / detail::setup_dir_name(i);
        std::filesystem::create_directories(sdir);
        datagen::write_split(sdir / "dataset", split);

        SetupState st;
        st.digest = datagen::split_content_hash(split);

        std::vector<runtime::QKCapture> cal_caps, eval_caps;
        if (have_model) {
            cal_caps = capture_samples(model, *tokenizer, split.calibration,
                                       config.planted_markers);
            eval_caps = capture_samples(model, *tokenizer, split.evaluation,
                                        config.planted_markers);
            if (config.persist_captures) {
                std::vector<runtime::QKCapture> all = cal_caps;
                all.insert(all.end(), eval_caps.begin(), eval_caps.end());
                runtime::write_capture(all, model.spec, sdir / "captures.qkcap");
            }
        } else {
            IngestedCaptures ing = ingest_external_capture(su.capture_path, split);
            if (report.model_digest.empty())
                report.model_digest = ing.spec_digest;
            else if (report.model_digest != ing.spec_digest)
                throw DigestMismatch("capture files disagree on the model spec digest");
            cal_caps = std::move(ing.calibration);
            eval_caps = std::move(ing.evaluation);
        }

        st.cal_table =
            probe::score_table(cal_caps, gold_of(split.calibration), config.variant, st.digest);
        st.eval_table =
            probe::score_table(eval_caps, gold_of(split.evaluation), config.variant, st.digest);
        probe::write_score_table(sdir / "scores-cal.csv", st.cal_table);
        probe::write_score_table(sdir / "scores-eval.csv", st.eval_table);

        probe::Setup setup{split.config.family,          split.config.rule_mode,
                           split.config.hops_min,        split.config.hops_max,
                           split.config.distractors_min, split.config.distractors_max};
        st.calibration = probe::calibrate(st.cal_table, setup, config.top_pool);
        probe::write_calibration_report(sdir / "calibration.json", st.calibration);
        states.push_back(std::move(st));
    }

    for (size_t i = 1; i < states.size(); ++i)
        if (states[i].cal_table.n_layers != states[0].cal_table.n_layers ||
            states[i].cal_table.n_heads != states[0].cal_table.n_heads)
            throw ShapeMismatch("setups come from different head grids");

    std::vector<HeadId> heads;
    auto add_unique = [&heads](const HeadId& h) {
        if (std::find(heads.begin(), heads.end(), h) == heads.end()) heads.push_back(h);
    };
    switch (config.head_choice) {
        case HeadChoice::BestPerSetup:
            for (const SetupState& st : states) add_unique(st.calibration.best_head);
            break;
        case HeadChoice::Cover: {
            std::vector<probe::CalibrationReport> reports;
            for (const SetupState& st : states) reports.push_back(st.calibration);
            probe::HeadCover cover = probe::select_cover_heads(reports, config.cover_k);
            for (const HeadId& h : cover.heads) add_unique(h);
            break;
        }
        case HeadChoice::Explicit:
            for (const HeadId& h : config.explicit_heads) add_unique(h);
            break;
    }
    report.heads = heads;

    for (const SetupState& st : states) {
        SetupResult res;
        res.setup = st.calibration.setup;
        res.dataset_digest = st.digest;
        res.n_calibration = static_cast<int>(st.cal_table.sample_ids.size());
        res.n_evaluation = static_cast<int>(st.eval_table.sample_ids.size());
        res.calibration = st.calibration;
        for (const HeadId& h : heads)
            res.cells.push_back(
                evaluate_head(st.eval_table, h, calibrated_orientation(st.calibration, h)));
        res.cells.push_back(evaluate_baseline(st.eval_table));
        report.setups.push_back(std::move(res));
    }

    nlohmann::json run = to_json(config);
    run["timestamp"] = report.timestamp;
    write_text_file(config.out_dir / "run.json", run.dump(2) + "\n");
    write_eval_report(config.out_dir / "report.json", report);
    return report;
}

}  // namespace qkprobe::harness
