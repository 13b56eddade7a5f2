#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "qkprobe/harness/report.hpp"

using namespace qkprobe;
using namespace qkprobe::harness;
using Catch::Matchers::ContainsSubstring;
using runtime::HeadId;
using runtime::Variant;

namespace {

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& name) {
        path = std::filesystem::temp_directory_path() / name;
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

EvalCell qk_cell(const HeadId& head, probe::Orientation o, int correct, int total) {
    EvalCell c;
    c.source = "qk " + runtime::to_string(head);
    c.head = head;
    c.orientation = o;
    c.correct = correct;
    c.total = total;
    c.accuracy = static_cast<double>(correct) / static_cast<double>(total);
    return c;
}

EvalCell baseline_cell(int correct, int total) {
    EvalCell c;
    c.source = "baseline";
    c.is_baseline = true;
    c.correct = correct;
    c.total = total;
    c.accuracy = static_cast<double>(correct) / static_cast<double>(total);
    return c;
}

// Two setups, two probe heads, hand-dialed accuracies: head (0,1) wins
// setup 0 outright; head (1,0) wins setup 1 while (0,1) only ties the
// baseline there.
EvalReport fixture_report() {
    EvalReport r;
    r.model_digest = "abcdef0123456789";
    r.variant = Variant::PrePositional;
    r.seed = 42;
    r.timestamp = "2026-02-03T04:05:06Z";
    r.head_mode = "best";
    r.heads = {{0, 1}, {1, 0}};

    SetupResult s0;
    s0.setup = {"pronto", "mp_only", 1, 1, 0, 0};
    s0.dataset_digest = "0123456789abcdef";
    s0.n_calibration = 600;
    s0.n_evaluation = 1000;
    s0.calibration.setup = s0.setup;
    s0.calibration.calibration_digest = s0.dataset_digest;
    s0.calibration.n_samples = 600;
    s0.calibration.ranking = {
        {{0, 1}, 0.97, 0.03, probe::Orientation::Direct, 1},
        {{0, 0}, 0.55, 0.45, probe::Orientation::Direct, 2},
        {{1, 1}, 0.50, 0.50, probe::Orientation::Direct, 3},
        {{1, 0}, 0.25, 0.75, probe::Orientation::Reversed, 4},
    };
    s0.calibration.best_head = {0, 1};
    s0.calibration.top_heads = {{0, 1}, {0, 0}};
    s0.cells = {qk_cell({0, 1}, probe::Orientation::Direct, 970, 1000),
                qk_cell({1, 0}, probe::Orientation::Direct, 250, 1000),
                baseline_cell(500, 1000)};

    SetupResult s1 = s0;
    s1.setup = {"pararule", "mp_only", 1, 2, 0, 0};
    s1.calibration.setup = s1.setup;
    s1.cells = {qk_cell({0, 1}, probe::Orientation::Direct, 620, 1000),
                qk_cell({1, 0}, probe::Orientation::Reversed, 700, 1000),
                baseline_cell(620, 1000)};

    r.setups = {s0, s1};
    return r;
}

}  // namespace

TEST_CASE("the csv grid is flat, complete, and exact") {
    std::string expected =
        "setup,source,layer,head,orientation,accuracy,correct,total\n"
        "pronto:mp_only:h1-1:d0-0,qk,0,1,direct,0.970000,970,1000\n"
        "pronto:mp_only:h1-1:d0-0,qk,1,0,direct,0.250000,250,1000\n"
        "pronto:mp_only:h1-1:d0-0,baseline,,,,0.500000,500,1000\n"
        "pararule:mp_only:h1-2:d0-0,qk,0,1,direct,0.620000,620,1000\n"
        "pararule:mp_only:h1-2:d0-0,qk,1,0,reversed,0.700000,700,1000\n"
        "pararule:mp_only:h1-2:d0-0,baseline,,,,0.620000,620,1000\n";
    CHECK(report_csv(fixture_report()) == expected);
}

TEST_CASE("the markdown grid bolds column winners and underlines baseline beats") {
    std::string expected =
        "# probe evaluation grid\n"
        "\n"
        "- model: abcdef0123456789\n"
        "- variant: pre\n"
        "- head mode: best\n"
        "- seed: 42\n"
        "\n"
        "| decision source | pronto:mp_only:h1-1:d0-0 | pararule:mp_only:h1-2:d0-0 |\n"
        "|---|---|---|\n"
        "| qk (0,1) | **<u>0.9700</u>** | 0.6200 |\n"
        "| qk (1,0) | 0.2500 | **<u>0.7000</u>** |\n"
        "| baseline | 0.5000 | 0.6200 |\n";
    CHECK(report_markdown(fixture_report()) == expected);
}

TEST_CASE("accuracy ties are all bold and never underlined") {
    EvalReport r;
    r.head_mode = "explicit";
    r.heads = {{0, 0}};
    SetupResult s;
    s.setup = {"pronto", "mp_only", 1, 1, 0, 0};
    s.calibration.ranking = {{{0, 0}, 0.5, 0.5, probe::Orientation::Direct, 1}};
    s.calibration.best_head = {0, 0};
    s.cells = {qk_cell({0, 0}, probe::Orientation::Direct, 50, 100), baseline_cell(50, 100)};
    r.setups = {s};

    std::string md = report_markdown(r);
    CHECK_THAT(md, ContainsSubstring("| qk (0,0) | **0.5000** |"));
    CHECK_THAT(md, ContainsSubstring("| baseline | **0.5000** |"));
    CHECK(md.find("<u>") == std::string::npos);
}

TEST_CASE("the diverging palette is anchored at chance") {
    CHECK(detail::heat_color(0.5) == "#ffffff");
    CHECK(detail::heat_color(1.0) == "#3273ff");
    CHECK(detail::heat_color(0.0) == "#ff7332");
    CHECK(detail::heat_color(2.0) == detail::heat_color(1.0));  // clamped
    CHECK(detail::heat_color(-1.0) == detail::heat_color(0.0));
}

TEST_CASE("the heatmap draws one cell per ranked head") {
    const EvalReport report = fixture_report();
    std::string svg = heatmap_svg(report.setups[0]);

    size_t rects = 0;
    for (size_t at = svg.find("<rect"); at != std::string::npos; at = svg.find("<rect", at + 1))
        ++rects;
    CHECK(rects == 4);

    CHECK_THAT(svg, ContainsSubstring("calibration accuracy: pronto:mp_only:h1-1:d0-0"));
    CHECK_THAT(svg, ContainsSubstring(">H0<"));
    CHECK_THAT(svg, ContainsSubstring(">H1<"));
    CHECK_THAT(svg, ContainsSubstring(">L0<"));
    CHECK_THAT(svg, ContainsSubstring(">L1<"));
    CHECK_THAT(svg, ContainsSubstring(detail::heat_color(0.97)));
    CHECK_THAT(svg, ContainsSubstring(detail::heat_color(0.25)));
    CHECK_THAT(svg, ContainsSubstring(">0.97<"));
    CHECK_THAT(svg, ContainsSubstring("(0,1) 0.9700"));
    // saturated cells switch to light text for contrast
    CHECK_THAT(svg, ContainsSubstring("#ffffff\">0.97<"));
    CHECK_THAT(svg, ContainsSubstring("#1a1a1a\">0.55<"));

    CHECK(heatmap_svg(report.setups[0]) == svg);
}

TEST_CASE("emit_report writes exactly the requested formats") {
    TempDir dir("qkp-report-emit");
    EvalReport report = fixture_report();

    SECTION("single format") {
        auto written = emit_report(report, {"csv"}, dir.path);
        REQUIRE(written.size() == 1);
        CHECK(written[0].filename() == "report.csv");
        CHECK(read_text_file(written[0]) == report_csv(report));
        CHECK_FALSE(std::filesystem::exists(dir.path / "report.md"));
    }
    SECTION("all formats, canonical emission order") {
        auto written = emit_report(report, {"svg-heatmap", "markdown", "csv"}, dir.path);
        REQUIRE(written.size() == 4);
        CHECK(written[0].filename() == "report.csv");
        CHECK(written[1].filename() == "report.md");
        CHECK(written[2].filename() == "heatmap-00.svg");
        CHECK(written[3].filename() == "heatmap-01.svg");
        for (const auto& p : written) CHECK(std::filesystem::exists(p));
        CHECK(read_text_file(dir.path / "heatmap-01.svg") == heatmap_svg(report.setups[1]));
    }
    SECTION("emission is byte deterministic") {
        emit_report(report, {"csv", "markdown", "svg-heatmap"}, dir.path / "a");
        emit_report(report, {"csv", "markdown", "svg-heatmap"}, dir.path / "b");
        for (const char* f : {"report.csv", "report.md", "heatmap-00.svg", "heatmap-01.svg"})
            CHECK(read_text_file(dir.path / "a" / f) == read_text_file(dir.path / "b" / f));
    }
    SECTION("unknown formats are refused before anything is written") {
        CHECK_THROWS_AS(emit_report(report, {"csv", "pdf"}, dir.path / "c"), UnsupportedFormat);
        CHECK_FALSE(std::filesystem::exists(dir.path / "c" / "report.csv"));
    }
}

TEST_CASE("emitted artifacts never carry the run timestamp") {
    EvalReport report = fixture_report();
    CHECK(report_csv(report).find("2026-02-03") == std::string::npos);
    CHECK(report_markdown(report).find("2026-02-03") == std::string::npos);
    for (const SetupResult& s : report.setups)
        CHECK(heatmap_svg(s).find("2026-02-03") == std::string::npos);
}
