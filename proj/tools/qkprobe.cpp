// Command-line front end for the probe toolkit.
//
// Subcommands mirror the pipeline stages: gen synthesizes a dataset,
// plant builds a diagnostic model with one engineered head, run drives
// capture -> score -> calibrate -> evaluate -> render in one go, and
// calibrate / eval / report replay the later stages from persisted
// artifacts so external captures and scores plug into the same flow.

#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qkprobe/datagen/mle.hpp"
#include "qkprobe/datagen/pararule.hpp"
#include "qkprobe/datagen/pronto.hpp"
#include "qkprobe/harness/experiment.hpp"
#include "qkprobe/harness/planted.hpp"
#include "qkprobe/harness/report.hpp"
#include "qkprobe/runtime/model.hpp"
#include "qkprobe/runtime/prompt.hpp"

namespace {

using namespace qkprobe;

runtime::HeadId parse_head(const std::string& s) {
    int l = 0, h = 0;
    char tail = 0;
    if (std::sscanf(s.c_str(), "%d,%d%c", &l, &h, &tail) != 2)
        throw ConfigError("head must look like LAYER,HEAD: " + s);
    return {l, h};
}

probe::Setup setup_of(const datagen::GenConfig& c) {
    return {c.family,          c.rule_mode,       c.hops_min,
            c.hops_max,        c.distractors_min, c.distractors_max};
}

// ---------------------------------------------------------------- gen

struct GenArgs {
    std::string family;
    std::string rule_mode;  // empty: mp_only, or scheme for mle
    int hops = -1;          // sets both bounds when given
    int hops_min = -1, hops_max = -1;
    int distractors = -1;
    int distractors_min = -1, distractors_max = -1;
    int n_cal = -1, n_eval = -1;  // mle fills these from the scheme registry
    int per_scheme = 100;
    int category_count = 64;
    std::string lexicon = "default";
    uint64_t seed = 0;
    std::string out;
};

datagen::GenConfig resolve_gen(const GenArgs& a) {
    datagen::GenConfig c;
    c.family = a.family;
    c.rule_mode = !a.rule_mode.empty() ? a.rule_mode
                  : a.family == "mle"  ? "scheme"
                                       : "mp_only";

    int floor = a.family == "pararule" ? 2 : 1;
    c.hops_min = a.hops >= 0 ? a.hops : a.hops_min >= 0 ? a.hops_min : floor;
    c.hops_max = a.hops >= 0 ? a.hops : a.hops_max >= 0 ? a.hops_max : c.hops_min;
    c.distractors_min = a.distractors >= 0 ? a.distractors
                        : a.distractors_min >= 0 ? a.distractors_min : 0;
    c.distractors_max = a.distractors >= 0 ? a.distractors
                        : a.distractors_max >= 0 ? a.distractors_max : c.distractors_min;

    c.per_scheme = a.per_scheme;
    c.category_count = a.category_count;
    c.lexicon = a.lexicon;
    c.seed = a.seed;

    if (a.family == "mle") {
        // scheme registry fixes the total; fill whichever counts are open
        int schemes = 0;
        for (const auto& s : datagen::mle_schemes())
            if (s.depth() >= c.hops_min && s.depth() <= c.hops_max) ++schemes;
        int total = schemes * c.per_scheme;
        if (a.n_cal < 0 && a.n_eval < 0) {
            c.n_calibration = total / 2 - (total / 2) % 2;
            c.n_evaluation = total - c.n_calibration;
        } else if (a.n_cal < 0) {
            c.n_evaluation = a.n_eval;
            c.n_calibration = total - a.n_eval;
        } else if (a.n_eval < 0) {
            c.n_calibration = a.n_cal;
            c.n_evaluation = total - a.n_cal;
        } else {
            c.n_calibration = a.n_cal;
            c.n_evaluation = a.n_eval;
        }
    } else {
        if (a.n_cal >= 0) c.n_calibration = a.n_cal;
        if (a.n_eval >= 0) c.n_evaluation = a.n_eval;
    }
    return c;
}

void run_gen(const GenArgs& a) {
    datagen::GenConfig config = resolve_gen(a);
    datagen::DatasetSplit split;
    if (config.family == "pronto")
        split = datagen::gen_prontoqa(config);
    else if (config.family == "pararule")
        split = datagen::gen_pararule(config);
    else
        split = datagen::gen_multilogieval(config);
    datagen::write_split(a.out, split);
    std::printf("wrote %zu calibration + %zu evaluation samples (%s) to %s\n",
                split.calibration.size(), split.evaluation.size(),
                setup_of(config).label().c_str(), a.out.c_str());
}

// -------------------------------------------------------------- plant

struct PlantArgs {
    std::vector<std::string> data;
    int layer = 0, head = 0;
    int n_layers = 2, n_heads = 4, head_dim = 8;
    uint64_t seed = 0;
    std::string out;
};

void run_plant(const PlantArgs& a) {
    std::vector<std::string> texts;
    std::array<std::string, 2> options;
    bool have_options = false;
    for (const std::string& dir : a.data) {
        datagen::DatasetSplit split = datagen::read_split(dir);
        for (const auto* part : {&split.calibration, &split.evaluation})
            for (const datagen::LogicSample& s : *part) {
                runtime::RenderedPrompt p =
                    runtime::render_prompt(s, runtime::default_template_id(s.family));
                if (!have_options) {
                    options = p.options;
                    have_options = true;
                } else if (p.options != options) {
                    throw ConfigError("datasets disagree on answer options: " + options[0] +
                                      "/" + options[1] + " vs " + p.options[0] + "/" +
                                      p.options[1]);
                }
                texts.push_back(std::move(p.text));
            }
    }
    if (!have_options) throw ConfigError("no samples found under the given dataset dirs");

    runtime::ModelSpec spec;
    spec.n_layers = a.n_layers;
    spec.n_heads = a.n_heads;
    spec.n_kv_heads = a.n_heads;
    spec.head_dim = a.head_dim;
    spec.d_model = a.n_heads * a.head_dim;
    spec.d_ff = 2 * spec.d_model;

    std::vector<std::string> vocab = runtime::build_vocabulary(texts);
    spec.vocab_size = static_cast<int>(vocab.size());

    runtime::Model model = harness::build_planted_model(
        spec, vocab, {a.layer, a.head}, options, a.seed);
    runtime::save_model(model, a.out);
    std::printf("planted head (%d,%d) in a %dx%d grid, vocab %d, spec %s\n", a.layer, a.head,
                spec.n_layers, spec.n_heads, spec.vocab_size, spec.digest().c_str());
    std::printf("wrote %s\n", a.out.c_str());
}

// ---------------------------------------------------------- run / ingest

struct RunArgs {
    std::string model;
    std::vector<std::string> captures;
    std::vector<std::string> data;
    std::string out;
    std::string variant = "pre";
    std::string head_mode = "best";
    std::vector<std::string> heads;
    int cover_k = 5, pool = 10;
    uint64_t seed = 0;
    bool planted = false, save_captures = false;
    std::string timestamp;
    std::vector<std::string> formats = {"csv", "markdown", "svg-heatmap"};
};

void run_run(const RunArgs& a) {
    if (!a.captures.empty() && a.captures.size() != a.data.size())
        throw ConfigError("need one --captures file per --data dir (got " +
                          std::to_string(a.captures.size()) + " for " +
                          std::to_string(a.data.size()) + ")");

    harness::ExperimentConfig config;
    for (size_t i = 0; i < a.data.size(); ++i) {
        harness::SetupSpec s;
        s.dataset_dir = a.data[i];
        if (!a.captures.empty()) s.capture_path = a.captures[i];
        config.setups.push_back(std::move(s));
    }
    config.model_path = a.model;
    config.variant = runtime::variant_from_string(a.variant);
    config.head_choice = harness::head_choice_from_string(a.head_mode);
    for (const std::string& h : a.heads) config.explicit_heads.push_back(parse_head(h));
    config.cover_k = a.cover_k;
    config.top_pool = a.pool;
    config.out_dir = a.out;
    config.seed = a.seed;
    config.planted_markers = a.planted;
    config.persist_captures = a.save_captures;
    config.timestamp = a.timestamp;

    harness::EvalReport report = harness::run_experiment(config);

    std::string heads;
    for (const runtime::HeadId& h : report.heads) {
        if (!heads.empty()) heads += " ";
        heads += runtime::to_string(h);
    }
    std::printf("model %s  variant %s  heads %s: %s\n", report.model_digest.c_str(),
                runtime::to_string(report.variant).c_str(), report.head_mode.c_str(),
                heads.c_str());
    for (size_t i = 0; i < report.setups.size(); ++i) {
        const harness::SetupResult& r = report.setups[i];
        const harness::EvalCell& base = r.cells.back();
        std::printf("setup %s  %s  n=%d+%d  best %s @cal %s  baseline %s\n",
                    harness::detail::setup_dir_name(i).c_str(), r.setup.label().c_str(),
                    r.n_calibration, r.n_evaluation,
                    runtime::to_string(r.calibration.best_head).c_str(),
                    fmt_double(r.calibration.ranking.front().accuracy, 4).c_str(),
                    fmt_double(base.accuracy, 4).c_str());
    }
    std::printf("wrote %s\n", (std::filesystem::path(a.out) / "report.json").string().c_str());
    for (const auto& p : harness::emit_report(report, a.formats, a.out))
        std::printf("wrote %s\n", p.string().c_str());
}

// ---------------------------------------------------------- calibrate

struct CalibrateArgs {
    std::string scores;
    std::string data;
    int pool = 10;
    std::string out;
};

void run_calibrate(const CalibrateArgs& a) {
    probe::ScoreTable table = probe::read_score_table(a.scores);
    datagen::DatasetSplit split = datagen::read_split(a.data);
    probe::CalibrationReport rep = probe::calibrate(table, setup_of(split.config), a.pool);
    probe::write_calibration_report(a.out, rep);
    const probe::HeadResult& best = rep.ranking.front();
    std::printf("ranked %zu heads over %d samples: best %s accuracy %s (%s)\n",
                rep.ranking.size(), rep.n_samples, runtime::to_string(best.head).c_str(),
                fmt_double(best.accuracy, 4).c_str(),
                probe::to_string(best.orientation).c_str());
    if (rep.low_sample_warning)
        std::printf("warning: fewer than %d calibration samples\n", probe::kCalibrationFloor);
    std::printf("wrote %s\n", a.out.c_str());
}

// --------------------------------------------------------------- eval

struct EvalArgs {
    std::string scores;
    std::string heads_file;
    std::vector<std::string> extra_heads;
    std::string model_digest;
    std::string timestamp;
    std::string out;
};

void run_eval(const EvalArgs& a) {
    probe::ScoreTable table = probe::read_score_table(a.scores);
    probe::CalibrationReport crep = probe::read_calibration_report(a.heads_file);
    if (!crep.calibration_digest.empty() && !table.dataset_digest.empty() &&
        crep.calibration_digest != table.dataset_digest)
        throw DigestMismatch("calibration ran on dataset " + crep.calibration_digest +
                             " but the score table came from " + table.dataset_digest);

    std::vector<runtime::HeadId> heads{crep.best_head};
    for (const std::string& h : a.extra_heads) {
        runtime::HeadId id = parse_head(h);
        if (std::find(heads.begin(), heads.end(), id) == heads.end()) heads.push_back(id);
    }

    harness::SetupResult result;
    result.setup = crep.setup;
    result.dataset_digest = table.dataset_digest;
    result.n_calibration = crep.n_samples;
    result.n_evaluation = static_cast<int>(table.sample_ids.size());
    result.calibration = crep;
    for (const runtime::HeadId& h : heads)
        result.cells.push_back(
            harness::evaluate_head(table, h, harness::calibrated_orientation(crep, h)));
    result.cells.push_back(harness::evaluate_baseline(table));

    harness::EvalReport report;
    report.model_digest = a.model_digest;
    report.variant = table.variant;
    report.timestamp = a.timestamp;
    report.head_mode = a.extra_heads.empty() ? "best" : "explicit";
    report.heads = heads;
    report.setups.push_back(std::move(result));
    harness::write_eval_report(a.out, report);

    for (const harness::EvalCell& c : report.setups.front().cells)
        std::printf("%-12s accuracy %s (%d/%d)\n", c.source.c_str(),
                    fmt_double(c.accuracy, 4).c_str(), c.correct, c.total);
    std::printf("wrote %s\n", a.out.c_str());
}

// -------------------------------------------------------------- report

struct ReportArgs {
    std::string in;
    std::string out;
    std::vector<std::string> formats = {"csv", "markdown", "svg-heatmap"};
};

void run_report(const ReportArgs& a) {
    harness::EvalReport report = harness::read_eval_report(a.in);
    for (const auto& p : harness::emit_report(report, a.formats, a.out))
        std::printf("wrote %s\n", p.string().c_str());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"per-head QK-score probe toolkit"};
    app.require_subcommand(1);

    GenArgs gen;
    CLI::App* cgen = app.add_subcommand("gen", "synthesize a dataset split");
    cgen->add_option("--family", gen.family, "pronto | pararule | mle")->required();
    cgen->add_option("--rule-mode", gen.rule_mode, "mp_only | composed | scheme");
    cgen->add_option("--hops", gen.hops, "reasoning depth (sets both bounds)");
    cgen->add_option("--min-hops", gen.hops_min, "lower depth bound");
    cgen->add_option("--max-hops", gen.hops_max, "upper depth bound");
    cgen->add_option("--distractors", gen.distractors, "inserted distractors (sets both bounds)");
    cgen->add_option("--min-distractors", gen.distractors_min, "lower distractor bound");
    cgen->add_option("--max-distractors", gen.distractors_max, "upper distractor bound");
    cgen->add_option("--n-cal", gen.n_cal, "calibration sample count");
    cgen->add_option("--n-eval", gen.n_eval, "evaluation sample count");
    cgen->add_option("--per-scheme", gen.per_scheme, "samples per inference scheme (mle)");
    cgen->add_option("--category-count", gen.category_count, "ontology breadth per sample");
    cgen->add_option("--lexicon", gen.lexicon, "surface lexicon name");
    cgen->add_option("--seed", gen.seed, "generation seed");
    cgen->add_option("--out", gen.out, "output dataset directory")->required();
    cgen->callback([&] { run_gen(gen); });

    PlantArgs plant;
    CLI::App* cplant = app.add_subcommand("plant", "build a planted-head diagnostic model");
    cplant->add_option("--data", plant.data, "dataset dir the vocabulary must cover (repeatable)")
        ->required();
    cplant->add_option("--layer", plant.layer, "planted layer");
    cplant->add_option("--head", plant.head, "planted head");
    cplant->add_option("--layers", plant.n_layers, "model layer count");
    cplant->add_option("--heads", plant.n_heads, "heads per layer");
    cplant->add_option("--head-dim", plant.head_dim, "per-head dimension");
    cplant->add_option("--seed", plant.seed, "weight noise seed");
    cplant->add_option("--out", plant.out, "output model file")->required();
    cplant->callback([&] { run_plant(plant); });

    RunArgs run;
    CLI::App* crun = app.add_subcommand(
        "run", "capture, score, calibrate, evaluate, and render in one pass");
    crun->add_option("--model", run.model, "model file to run forward");
    crun->add_option("--captures", run.captures,
                     "externally captured q/k file per dataset (instead of --model)");
    crun->add_option("--data", run.data, "dataset dir (repeatable, one setup each)")->required();
    crun->add_option("--out", run.out, "output directory")->required();
    crun->add_option("--variant", run.variant, "pre | post q/k capture side");
    crun->add_option("--heads", run.head_mode, "best | cover | explicit");
    crun->add_option("--head", run.heads, "explicit head as LAYER,HEAD (repeatable)");
    crun->add_option("--cover-k", run.cover_k, "cover size for --heads cover");
    crun->add_option("--pool", run.pool, "per-setup top pool size");
    crun->add_option("--seed", run.seed, "experiment seed (recorded in artifacts)");
    crun->add_flag("--planted", run.planted, "mark statement eol with the gold marker token");
    crun->add_flag("--save-captures", run.save_captures, "persist q/k captures per setup");
    crun->add_option("--timestamp", run.timestamp, "fixed run timestamp (default: wall clock)");
    crun->add_option("--formats", run.formats, "report renderings: csv, markdown, svg-heatmap")
        ->delimiter(',');
    crun->callback([&] { run_run(run); });

    CalibrateArgs cal;
    CLI::App* ccal = app.add_subcommand("calibrate", "rank heads from a calibration score table");
    ccal->add_option("--scores", cal.scores, "calibration score table (scores-cal.csv)")
        ->required();
    ccal->add_option("--data", cal.data, "dataset dir the scores came from")->required();
    ccal->add_option("--pool", cal.pool, "top pool size");
    ccal->add_option("--out", cal.out, "output calibration json")->required();
    ccal->callback([&] { run_calibrate(cal); });

    EvalArgs eval;
    CLI::App* ceval = app.add_subcommand("eval", "evaluate calibrated heads on held-out scores");
    ceval->add_option("--scores", eval.scores, "evaluation score table (scores-eval.csv)")
        ->required();
    ceval->add_option("--heads", eval.heads_file, "calibration json naming the heads")->required();
    ceval->add_option("--head", eval.extra_heads, "extra head as LAYER,HEAD (repeatable)");
    ceval->add_option("--model-digest", eval.model_digest, "model digest recorded in the report");
    ceval->add_option("--timestamp", eval.timestamp, "timestamp recorded in the report");
    ceval->add_option("--out", eval.out, "output report json")->required();
    ceval->callback([&] { run_eval(eval); });

    ReportArgs rep;
    CLI::App* crep = app.add_subcommand("report", "render an evaluation report");
    crep->add_option("--in", rep.in, "report json")->required();
    crep->add_option("--out", rep.out, "output directory")->required();
    crep->add_option("--formats", rep.formats, "csv, markdown, svg-heatmap")->delimiter(',');
    crep->callback([&] { run_report(rep); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const qkprobe::Error& e) {
        std::fprintf(stderr, "qkprobe: %s\n", e.what());
        return 1;
    }
    return 0;
}
