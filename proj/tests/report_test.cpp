#include "greenprompt/report.hpp"

#include "greenprompt/run_record.hpp"
#include "greenprompt/runner.hpp"

#include "testutil.hpp"

#include <doctest.h>
#include <json.hpp>

#include <string>
#include <vector>

using namespace greenprompt;
using nlohmann::json;

namespace {

SummaryCell cell(PetKind pet, ConfigId config, double energy, double duration,
                 std::size_t exact, std::optional<double> edit_distance,
                 std::size_t n_runs = 5, std::size_t n_excluded = 0) {
    SummaryCell c;
    c.pet = pet;
    c.config = config;
    c.n_runs = n_runs;
    c.n_excluded = n_excluded;
    c.mean_gpu_energy_kwh = energy;
    c.mean_duration_s = duration;
    c.exact_matches = exact;
    c.mean_edit_distance = edit_distance;
    return c;
}

RunRecord ok_record(const std::string& snippet_id, PetKind pet, ConfigId config, int rep,
                    double energy, double duration, std::size_t distance, bool exact,
                    bool uncontrolled) {
    RunRecord r;
    r.snippet_id = snippet_id;
    r.pet = {pet, pet == PetKind::zero_shot ? 0 : (pet == PetKind::one_shot ? 1 : 5)};
    r.config = config;
    r.repetition = rep;
    r.answer = "answer";
    r.measurement.gpu_energy_kwh = energy;
    r.measurement.duration_s = duration;
    r.scored.raw = r.answer;
    r.scored.normalized = "answer";
    r.scored.distance = distance;
    r.scored.exact = exact;
    r.scored.uncontrolled = uncontrolled;
    r.status = RunStatus::ok;
    r.latency_s = duration * 0.9;
    r.dispatched_at = "2026-01-05T10:00:00Z";
    r.completed_at = "2026-01-05T10:00:01Z";
    return r;
}

std::filesystem::path write_synthetic_run(const testutil::TempDir& dir,
                                          const std::vector<RunRecord>& records) {
    const auto run_dir = dir.file("run");
    std::string lines;
    for (const auto& r : records) lines += to_json(r).dump() + "\n";
    testutil::write_file(run_dir / "records" / "0000_synthetic.jsonl", lines);
    return run_dir;
}

std::size_t count_occurrences(const std::string& haystack, const std::string& needle) {
    std::size_t count = 0;
    for (auto pos = haystack.find(needle); pos != std::string::npos;
         pos = haystack.find(needle, pos + needle.size())) {
        ++count;
    }
    return count;
}

} // namespace

TEST_SUITE("report") {

TEST_CASE("report format names parse") {
    CHECK(report_format_from_string("csv") == ReportFormat::csv);
    CHECK(report_format_from_string("json") == ReportFormat::json);
    CHECK_THROWS_AS(report_format_from_string("yaml"), ReportError);
}

TEST_CASE("summary CSV has one row per cell in order") {
    const std::vector<SummaryCell> cells{
        cell(PetKind::zero_shot, ConfigId::C0, 0.0000347, 1.5, 4, 2.4),
        cell(PetKind::zero_shot, ConfigId::C4, 0.00001, 0.5, 0, std::nullopt, 5, 5),
    };
    const std::string csv = render_summary(cells, ReportFormat::csv);
    CHECK(csv ==
          "pet,config,n_runs,n_excluded,gpu_energy,duration,exact_matches,mean_edit_distance\n"
          "zero_shot,C0,5,0,3.47e-05,1.5,4,2.4\n"
          "zero_shot,C4,5,5,1e-05,0.5,0,NA\n");
    CHECK(render_summary(cells, ReportFormat::csv) == csv); // deterministic bytes
}

TEST_CASE("summary JSON uses null for an unset edit distance") {
    const std::vector<SummaryCell> cells{
        cell(PetKind::one_shot, ConfigId::C1, 2e-05, 1.0, 3, 1.25),
        cell(PetKind::one_shot, ConfigId::C4, 3e-05, 2.0, 0, std::nullopt),
    };
    const json parsed = json::parse(render_summary(cells, ReportFormat::json));
    REQUIRE(parsed.size() == 2);
    CHECK(parsed[0]["pet"] == "one_shot");
    CHECK(parsed[0]["config"] == "C1");
    CHECK(parsed[0]["mean_edit_distance"] == doctest::Approx(1.25));
    CHECK(parsed[0]["gpu_energy"] == doctest::Approx(2e-05));
    CHECK(parsed[1]["mean_edit_distance"].is_null());
}

TEST_CASE("delta rows render with NA/null holes") {
    DeltaRow row;
    row.pet = PetKind::few_shot;
    row.config = ConfigId::C2;
    row.gpu_energy_pct = -49.86;
    row.duration_pct = 12.5;
    row.exact_matches_pct = std::nullopt;
    row.edit_distance_pct = std::nullopt;
    const std::vector<DeltaRow> rows{row};

    CHECK(render_deltas(rows, ReportFormat::csv) ==
          "pet,config,gpu_energy_pct,duration_pct,exact_matches_pct,edit_distance_pct\n"
          "few_shot,C2,-49.86,12.5,NA,NA\n");

    const json parsed = json::parse(render_deltas(rows, ReportFormat::json));
    REQUIRE(parsed.size() == 1);
    CHECK(parsed[0]["gpu_energy_pct"] == doctest::Approx(-49.86));
    CHECK(parsed[0]["exact_matches_pct"].is_null());
    CHECK(parsed[0]["edit_distance_pct"].is_null());
}

TEST_CASE("summarize_run names the directory when it holds no records") {
    testutil::TempDir dir;
    const auto run_dir = dir.file("empty-run");
    std::filesystem::create_directories(run_dir);
    CHECK_THROWS_WITH_AS(summarize_run(run_dir),
                         doctest::Contains(run_dir.string().c_str()), ReportError);
}

TEST_CASE("charts keep energy bars for cells omitted from accuracy charts") {
    const std::vector<SummaryCell> cells{
        cell(PetKind::zero_shot, ConfigId::C0, 1e-05, 1.0, 4, 2.0),
        cell(PetKind::zero_shot, ConfigId::C4, 2e-05, 2.0, 0, std::nullopt),
        cell(PetKind::one_shot, ConfigId::C0, 3e-05, 3.0, 5, 0.5),
        cell(PetKind::one_shot, ConfigId::C4, 4e-05, 4.0, 2, 3.5),
    };

    const std::string energy = render_chart_svg(cells, ChartMetric::gpu_energy);
    CHECK(count_occurrences(energy, "data-cell=") == 4);
    CHECK(energy.find("data-cell=\"zero_shot:C4\"") != std::string::npos);
    CHECK(energy.find("data-value=\"2e-05\"") != std::string::npos);
    CHECK(energy.find("omitted") == std::string::npos);

    const std::string duration = render_chart_svg(cells, ChartMetric::duration);
    CHECK(count_occurrences(duration, "data-cell=") == 4);

    for (ChartMetric metric : {ChartMetric::exact_match, ChartMetric::edit_distance}) {
        const std::string svg = render_chart_svg(cells, metric);
        CHECK(count_occurrences(svg, "data-cell=") == 3);
        CHECK(svg.find("data-cell=\"zero_shot:C4\"") == std::string::npos);
        CHECK(svg.find("data-cell=\"zero_shot:C0\"") != std::string::npos);
        CHECK(svg.find("data-cell=\"one_shot:C4\"") != std::string::npos);
        CHECK(svg.find("omitted (all responses uncontrolled): zero_shot:C4") !=
              std::string::npos);
    }
}

TEST_CASE("chart with a single cell is still a complete SVG") {
    const std::vector<SummaryCell> cells{
        cell(PetKind::few_shot, ConfigId::C3, 5e-05, 1.0, 1, 1.0),
    };
    const std::string svg = render_chart_svg(cells, ChartMetric::gpu_energy);
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("</svg>") != std::string::npos);
    CHECK(count_occurrences(svg, "data-cell=") == 1);
    CHECK(svg.find("data-cell=\"few_shot:C3\"") != std::string::npos);
    CHECK(render_chart_svg(cells, ChartMetric::gpu_energy) == svg);
}

TEST_CASE("accuracy chart with every cell uncontrolled has no bars") {
    const std::vector<SummaryCell> cells{
        cell(PetKind::zero_shot, ConfigId::C0, 1e-05, 1.0, 0, std::nullopt),
        cell(PetKind::zero_shot, ConfigId::C1, 2e-05, 2.0, 0, std::nullopt),
    };
    const std::string svg = render_chart_svg(cells, ChartMetric::edit_distance);
    CHECK(count_occurrences(svg, "data-cell=") == 0);
    CHECK(svg.find("omitted (all responses uncontrolled): zero_shot:C0, zero_shot:C1") !=
          std::string::npos);
}

TEST_CASE("emit functions write report files into the run directory") {
    testutil::TempDir dir;
    std::vector<RunRecord> records;
    records.push_back(ok_record("snip", PetKind::zero_shot, ConfigId::C0, 0, 1e-05, 1.0, 0,
                                true, false));
    records.push_back(ok_record("snip", PetKind::zero_shot, ConfigId::C0, 1, 3e-05, 2.0, 4,
                                false, false));
    records.push_back(ok_record("snip", PetKind::zero_shot, ConfigId::C4, 0, 2e-05, 1.5, 0,
                                false, true));
    records.push_back(ok_record("snip", PetKind::zero_shot, ConfigId::C4, 1, 4e-05, 2.5, 0,
                                false, true));
    RunRecord failed;
    failed.snippet_id = "snip";
    failed.pet = Pet::zero_shot();
    failed.config = ConfigId::C0;
    failed.repetition = 2;
    failed.status = RunStatus::failed;
    failed.error = "boom";
    records.push_back(failed);

    const auto run_dir = write_synthetic_run(dir, records);

    const auto summary_path = emit_summary(run_dir, ReportFormat::csv);
    CHECK(summary_path == run_dir / "report" / "summary.csv");
    const std::string summary = testutil::read_file(summary_path);
    CHECK(summary.find("zero_shot,C0,2,0,2e-05,1.5,1,2\n") != std::string::npos);
    CHECK(summary.find("zero_shot,C4,2,2,3e-05,2,0,NA\n") != std::string::npos);

    const auto deltas_path = emit_deltas(run_dir, ConfigId::C0, ReportFormat::csv);
    CHECK(deltas_path == run_dir / "report" / "deltas.csv");
    const std::string deltas = testutil::read_file(deltas_path);
    CHECK(deltas.find("zero_shot,C4,50,") != std::string::npos); // 3e-05 vs 2e-05
    CHECK(deltas.find(",-100,NA\n") != std::string::npos);

    const auto chart_paths = emit_charts(run_dir);
    REQUIRE(chart_paths.size() == 4);
    CHECK(chart_paths[0].filename() == "gpu_energy.svg");
    CHECK(chart_paths[1].filename() == "duration.svg");
    CHECK(chart_paths[2].filename() == "exact_match.svg");
    CHECK(chart_paths[3].filename() == "edit_distance.svg");
    for (const auto& p : chart_paths) CHECK(!testutil::read_file(p).empty());
    CHECK(testutil::read_file(chart_paths[2]).find("zero_shot:C4") != std::string::npos);
    CHECK(testutil::read_file(chart_paths[2]).find("data-cell=\"zero_shot:C4\"") ==
          std::string::npos);

    const auto custom_dir = dir.file("elsewhere");
    const auto custom_path = emit_summary(run_dir, ReportFormat::json, custom_dir);
    CHECK(custom_path == custom_dir / "summary.json");
    CHECK(json::parse(testutil::read_file(custom_path)).size() == 2);
}

} // TEST_SUITE
