#pragma once

#include "greenprompt/metrics.hpp"

#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace greenprompt {

struct ReportError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class ReportFormat { csv, json };

ReportFormat report_format_from_string(const std::string& name);

enum class ChartMetric { gpu_energy, duration, exact_match, edit_distance };

/// Loads and aggregates a run directory's records. Throws ReportError naming
/// the directory when it holds no records.
std::vector<SummaryCell> summarize_run(const std::filesystem::path& run_dir);

/// Pure renderers. Output is deterministic: same cells, same bytes.
std::string render_summary(std::span<const SummaryCell> cells, ReportFormat format);
std::string render_deltas(std::span<const DeltaRow> rows, ReportFormat format);

/// Grouped-bar SVG: one group per configuration, one bar per PET. In the
/// accuracy charts a cell whose every answer was uncontrolled gets no bar
/// and a legend note instead. Bars carry data-cell="<pet>:<config>".
std::string render_chart_svg(std::span<const SummaryCell> cells, ChartMetric metric);

/// File-emitting wrappers over the renderers; report files land in
/// run_dir/report unless report_dir overrides it. Each returns the paths it
/// wrote.
std::filesystem::path emit_summary(const std::filesystem::path& run_dir, ReportFormat format,
                                   const std::filesystem::path& report_dir = {});
std::filesystem::path emit_deltas(const std::filesystem::path& run_dir, ConfigId baseline,
                                  ReportFormat format,
                                  const std::filesystem::path& report_dir = {});
std::vector<std::filesystem::path> emit_charts(const std::filesystem::path& run_dir,
                                               const std::filesystem::path& report_dir = {});

} // namespace greenprompt
