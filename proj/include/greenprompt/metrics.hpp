#pragma once

#include "greenprompt/prompt_engine.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace greenprompt {

struct RunRecord;

/// Which normalization steps run before scoring. The active set is recorded
/// in the run manifest since accuracy counts are sensitive to it.
struct NormalizeOptions {
    bool strip_fences = true;
    bool first_line_only = true;
    bool collapse_whitespace = true;
    bool strip_quotes = true;

    bool operator==(const NormalizeOptions&) const = default;
};

/// Cleans a raw completion into a single candidate line: code-fence removal,
/// first non-empty line, outer-whitespace trim, inner-whitespace collapse,
/// enclosing quote-pair removal. Idempotent.
std::string normalize_answer(const std::string& raw, const NormalizeOptions& opts = {});

/// Levenshtein distance over bytes, unit cost for insert/delete/substitute.
std::size_t edit_distance(const std::string& a, const std::string& b);

constexpr int kExactMatchThreshold = 2;

/// An answer counts as an exact match when its edit distance to the ground
/// truth stays at or below the threshold (default 2, absorbing stray quotes,
/// spaces, and semicolons the model likes to add).
bool is_exact_match(std::size_t distance, int threshold = kExactMatchThreshold);

/// Caps beyond which an answer is treated as uncontrolled (code plus
/// explanatory prose) and excluded from the accuracy aggregates.
struct UncontrolledThresholds {
    int max_answer_lines = 5;     // non-empty lines in the raw answer
    double length_ratio = 4.0;    // normalized length vs. ground-truth length

    bool operator==(const UncontrolledThresholds&) const = default;
};

/// True when the raw answer has more than max_answer_lines non-empty lines
/// or the normalized candidate is longer than length_ratio times the ground
/// truth. Both comparisons are strict: an answer exactly at a cap passes.
bool classify_uncontrolled(const std::string& raw, const std::string& normalized,
                           const std::string& ground_truth,
                           const UncontrolledThresholds& thresholds = {});

struct ScoredAnswer {
    std::string raw;
    std::string normalized;
    std::size_t distance = 0;
    bool exact = false;
    bool uncontrolled = false;

    bool operator==(const ScoredAnswer&) const = default;
};

/// Runs the full scoring pipeline for one answer.
ScoredAnswer score_answer(const std::string& raw, const std::string& ground_truth,
                          const NormalizeOptions& norm_opts = {},
                          const UncontrolledThresholds& thresholds = {},
                          int exact_threshold = kExactMatchThreshold);

/// Aggregated statistics for one (PET, configuration) cell. Energy and
/// duration means cover every successful run; the accuracy fields skip
/// uncontrolled answers, and mean_edit_distance is unset when no controlled
/// answer exists in the cell.
struct SummaryCell {
    PetKind pet = PetKind::zero_shot;
    ConfigId config = ConfigId::C0;
    std::size_t n_runs = 0;
    std::size_t n_excluded = 0;
    double mean_gpu_energy_kwh = 0.0;
    double mean_duration_s = 0.0;
    std::size_t exact_matches = 0;
    std::optional<double> mean_edit_distance;
};

/// One summary cell per (pet, config) present among the records, ordered by
/// pet then config. Failed runs contribute nothing. Records are grouped and
/// accumulated in a fixed key order, so the means are bit-identical under
/// input permutation.
std::vector<SummaryCell> aggregate(std::span<const RunRecord> records);

/// Percentage change of every cell against the baseline configuration's
/// cell for the same PET. Unset when the metric is undefined on either side
/// or the baseline value is zero.
struct DeltaRow {
    PetKind pet = PetKind::zero_shot;
    ConfigId config = ConfigId::C0;
    std::optional<double> gpu_energy_pct;
    std::optional<double> duration_pct;
    std::optional<double> exact_matches_pct;
    std::optional<double> edit_distance_pct;
};

/// (cell - baseline) / baseline * 100 per metric for every non-baseline
/// cell. Throws when a PET present in `cells` has no baseline cell.
std::vector<DeltaRow> delta_vs_baseline(const std::vector<SummaryCell>& cells,
                                        ConfigId baseline = ConfigId::C0);

} // namespace greenprompt
