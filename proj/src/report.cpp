#include "greenprompt/report.hpp"

#include "greenprompt/run_record.hpp"
#include "greenprompt/runner.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>

#include <json.hpp>

namespace greenprompt {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", value);
    return buf;
}

std::string fmt2(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f", value);
    return buf;
}

std::string cell_label(PetKind pet, ConfigId config) {
    return std::string(to_string(pet)) + ":" + to_string(config);
}

void write_report_file(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    if (!out) throw ReportError("cannot write " + path.string());
    out << content;
}

fs::path resolve_report_dir(const fs::path& run_dir, const fs::path& report_dir) {
    return report_dir.empty() ? run_dir / "report" : report_dir;
}

const char* metric_title(ChartMetric metric) {
    switch (metric) {
        case ChartMetric::gpu_energy: return "Mean GPU energy per run (kWh)";
        case ChartMetric::duration: return "Mean duration per run (s)";
        case ChartMetric::exact_match: return "Exact matches";
        case ChartMetric::edit_distance: return "Mean edit distance";
    }
    return "";
}

const char* metric_filename(ChartMetric metric) {
    switch (metric) {
        case ChartMetric::gpu_energy: return "gpu_energy.svg";
        case ChartMetric::duration: return "duration.svg";
        case ChartMetric::exact_match: return "exact_match.svg";
        case ChartMetric::edit_distance: return "edit_distance.svg";
    }
    return "chart.svg";
}

bool is_accuracy_metric(ChartMetric metric) {
    return metric == ChartMetric::exact_match || metric == ChartMetric::edit_distance;
}

/// The bar value for a cell, or nullopt when the chart omits the bar.
std::optional<double> metric_value(const SummaryCell& cell, ChartMetric metric) {
    if (is_accuracy_metric(metric) && !cell.mean_edit_distance.has_value()) {
        return std::nullopt;
    }
    switch (metric) {
        case ChartMetric::gpu_energy: return cell.mean_gpu_energy_kwh;
        case ChartMetric::duration: return cell.mean_duration_s;
        case ChartMetric::exact_match: return static_cast<double>(cell.exact_matches);
        case ChartMetric::edit_distance: return cell.mean_edit_distance;
    }
    return std::nullopt;
}

const char* pet_color(PetKind pet) {
    switch (pet) {
        case PetKind::zero_shot: return "#4e79a7";
        case PetKind::one_shot: return "#f28e2b";
        case PetKind::few_shot: return "#59a14f";
    }
    return "#888888";
}

} // namespace

ReportFormat report_format_from_string(const std::string& name) {
    if (name == "csv") return ReportFormat::csv;
    if (name == "json") return ReportFormat::json;
    throw ReportError("unknown report format '" + name + "' (expected csv or json)");
}

std::vector<SummaryCell> summarize_run(const fs::path& run_dir) {
    const std::vector<RunRecord> records = load_records(run_dir);
    if (records.empty()) {
        throw ReportError("run directory holds no records: " + run_dir.string());
    }
    return aggregate(records);
}

std::string render_summary(std::span<const SummaryCell> cells, ReportFormat format) {
    if (format == ReportFormat::csv) {
        std::string out =
            "pet,config,n_runs,n_excluded,gpu_energy,duration,exact_matches,mean_edit_distance\n";
        for (const auto& c : cells) {
            out += to_string(c.pet);
            out += ',';
            out += to_string(c.config);
            out += ',' + std::to_string(c.n_runs);
            out += ',' + std::to_string(c.n_excluded);
            out += ',' + fmt(c.mean_gpu_energy_kwh);
            out += ',' + fmt(c.mean_duration_s);
            out += ',' + std::to_string(c.exact_matches);
            out += ',';
            out += c.mean_edit_distance ? fmt(*c.mean_edit_distance) : "NA";
            out += '\n';
        }
        return out;
    }

    json rows = json::array();
    for (const auto& c : cells) {
        json row{{"pet", to_string(c.pet)},
                 {"config", to_string(c.config)},
                 {"n_runs", c.n_runs},
                 {"n_excluded", c.n_excluded},
                 {"gpu_energy", c.mean_gpu_energy_kwh},
                 {"duration", c.mean_duration_s},
                 {"exact_matches", c.exact_matches}};
        if (c.mean_edit_distance) {
            row["mean_edit_distance"] = *c.mean_edit_distance;
        } else {
            row["mean_edit_distance"] = nullptr;
        }
        rows.push_back(std::move(row));
    }
    return rows.dump(2) + "\n";
}

std::string render_deltas(std::span<const DeltaRow> rows, ReportFormat format) {
    if (format == ReportFormat::csv) {
        std::string out =
            "pet,config,gpu_energy_pct,duration_pct,exact_matches_pct,edit_distance_pct\n";
        for (const auto& r : rows) {
            out += to_string(r.pet);
            out += ',';
            out += to_string(r.config);
            for (const auto& v : {r.gpu_energy_pct, r.duration_pct, r.exact_matches_pct,
                                  r.edit_distance_pct}) {
                out += ',';
                out += v ? fmt(*v) : "NA";
            }
            out += '\n';
        }
        return out;
    }

    json arr = json::array();
    for (const auto& r : rows) {
        json row{{"pet", to_string(r.pet)}, {"config", to_string(r.config)}};
        const std::pair<const char*, const std::optional<double>*> fields[] = {
            {"gpu_energy_pct", &r.gpu_energy_pct},
            {"duration_pct", &r.duration_pct},
            {"exact_matches_pct", &r.exact_matches_pct},
            {"edit_distance_pct", &r.edit_distance_pct}};
        for (const auto& [name, value] : fields) {
            if (*value) {
                row[name] = **value;
            } else {
                row[name] = nullptr;
            }
        }
        arr.push_back(std::move(row));
    }
    return arr.dump(2) + "\n";
}

std::string render_chart_svg(std::span<const SummaryCell> cells, ChartMetric metric) {
    std::vector<PetKind> pets;
    std::vector<ConfigId> configs;
    {
        std::set<int> pet_set, config_set;
        for (const auto& c : cells) {
            pet_set.insert(static_cast<int>(c.pet));
            config_set.insert(static_cast<int>(c.config));
        }
        for (int p : pet_set) pets.push_back(static_cast<PetKind>(p));
        for (int c : config_set) configs.push_back(static_cast<ConfigId>(c));
    }

    std::map<std::pair<int, int>, const SummaryCell*> by_key;
    for (const auto& c : cells) {
        by_key[{static_cast<int>(c.pet), static_cast<int>(c.config)}] = &c;
    }

    double max_value = 0.0;
    std::vector<std::string> omitted;
    for (const auto& config : configs) {
        for (const auto& pet : pets) {
            auto it = by_key.find({static_cast<int>(pet), static_cast<int>(config)});
            if (it == by_key.end()) continue;
            const auto value = metric_value(*it->second, metric);
            if (value) {
                max_value = std::max(max_value, *value);
            } else {
                omitted.push_back(cell_label(pet, config));
            }
        }
    }
    if (max_value <= 0.0) max_value = 1.0;
    const double y_top = max_value * 1.08;

    const double width = 760.0, height = 440.0;
    const double ml = 84.0, mr = 24.0, mt = 48.0, mb = 72.0;
    const double plot_w = width - ml - mr;
    const double plot_h = height - mt - mb;
    const auto y_of = [&](double v) { return mt + plot_h * (1.0 - v / y_top); };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt2(width) +
           "\" height=\"" + fmt2(height) + "\" viewBox=\"0 0 " + fmt2(width) + " " +
           fmt2(height) + "\" font-family=\"sans-serif\">\n";
    svg += "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg += "  <text x=\"" + fmt2(ml) + "\" y=\"28\" font-size=\"16\">" +
           std::string(metric_title(metric)) + "</text>\n";

    for (int i = 0; i <= 4; ++i) {
        const double v = y_top * i / 4.0;
        const double y = y_of(v);
        svg += "  <line x1=\"" + fmt2(ml) + "\" y1=\"" + fmt2(y) + "\" x2=\"" +
               fmt2(ml + plot_w) + "\" y2=\"" + fmt2(y) +
               "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
        char label[32];
        std::snprintf(label, sizeof(label), "%.3g", v);
        svg += "  <text x=\"" + fmt2(ml - 8) + "\" y=\"" + fmt2(y + 4) +
               "\" font-size=\"11\" text-anchor=\"end\">" + label + "</text>\n";
    }

    const double group_w = plot_w / static_cast<double>(configs.size());
    const double bar_w = group_w * 0.8 / static_cast<double>(pets.size());
    for (std::size_t ci = 0; ci < configs.size(); ++ci) {
        const double group_x = ml + group_w * static_cast<double>(ci);
        svg += "  <text x=\"" + fmt2(group_x + group_w / 2) + "\" y=\"" +
               fmt2(mt + plot_h + 20) + "\" font-size=\"13\" text-anchor=\"middle\">" +
               to_string(configs[ci]) + "</text>\n";
        for (std::size_t pi = 0; pi < pets.size(); ++pi) {
            auto it = by_key.find({static_cast<int>(pets[pi]), static_cast<int>(configs[ci])});
            if (it == by_key.end()) continue;
            const auto value = metric_value(*it->second, metric);
            if (!value) continue;
            const double x = group_x + group_w * 0.1 + bar_w * static_cast<double>(pi);
            const double y = y_of(*value);
            svg += "  <rect data-cell=\"" + cell_label(pets[pi], configs[ci]) +
                   "\" data-value=\"" + fmt(*value) + "\" x=\"" + fmt2(x) + "\" y=\"" +
                   fmt2(y) + "\" width=\"" + fmt2(bar_w) + "\" height=\"" +
                   fmt2(mt + plot_h - y) + "\" fill=\"" + pet_color(pets[pi]) + "\"/>\n";
        }
    }

    double legend_x = ml;
    const double legend_y = mt + plot_h + 44;
    for (const auto& pet : pets) {
        svg += "  <rect x=\"" + fmt2(legend_x) + "\" y=\"" + fmt2(legend_y - 10) +
               "\" width=\"12\" height=\"12\" fill=\"" + pet_color(pet) + "\"/>\n";
        svg += "  <text x=\"" + fmt2(legend_x + 18) + "\" y=\"" + fmt2(legend_y) +
               "\" font-size=\"12\">" + to_string(pet) + "</text>\n";
        legend_x += 110;
    }
    if (!omitted.empty()) {
        std::string note = "omitted (all responses uncontrolled): ";
        for (std::size_t i = 0; i < omitted.size(); ++i) {
            if (i) note += ", ";
            note += omitted[i];
        }
        svg += "  <text x=\"" + fmt2(legend_x + 12) + "\" y=\"" + fmt2(legend_y) +
               "\" font-size=\"11\" fill=\"#666666\">" + note + "</text>\n";
    }
    svg += "</svg>\n";
    return svg;
}

fs::path emit_summary(const fs::path& run_dir, ReportFormat format, const fs::path& report_dir) {
    const auto cells = summarize_run(run_dir);
    const fs::path dir = resolve_report_dir(run_dir, report_dir);
    const fs::path path = dir / (format == ReportFormat::csv ? "summary.csv" : "summary.json");
    write_report_file(path, render_summary(cells, format));
    return path;
}

fs::path emit_deltas(const fs::path& run_dir, ConfigId baseline, ReportFormat format,
                     const fs::path& report_dir) {
    const auto cells = summarize_run(run_dir);
    std::vector<DeltaRow> rows;
    try {
        rows = delta_vs_baseline(cells, baseline);
    } catch (const std::invalid_argument& e) {
        throw ReportError(e.what());
    }
    const fs::path dir = resolve_report_dir(run_dir, report_dir);
    const fs::path path = dir / (format == ReportFormat::csv ? "deltas.csv" : "deltas.json");
    write_report_file(path, render_deltas(rows, format));
    return path;
}

std::vector<fs::path> emit_charts(const fs::path& run_dir, const fs::path& report_dir) {
    const auto cells = summarize_run(run_dir);
    const fs::path dir = resolve_report_dir(run_dir, report_dir);
    std::vector<fs::path> paths;
    for (ChartMetric metric : {ChartMetric::gpu_energy, ChartMetric::duration,
                               ChartMetric::exact_match, ChartMetric::edit_distance}) {
        const fs::path path = dir / metric_filename(metric);
        write_report_file(path, render_chart_svg(cells, metric));
        paths.push_back(path);
    }
    return paths;
}

} // namespace greenprompt
