#include "greenprompt/metrics.hpp"

#include "greenprompt/run_record.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>
#include <stdexcept>

namespace greenprompt {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return s.substr(b, e - b);
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::string current;
    for (char c : text) {
        if (c == '\n') {
            lines.push_back(std::move(current));
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    lines.push_back(std::move(current));
    return lines;
}

/// Drops a leading ``` line and its matching trailing ``` line, if present.
std::string strip_code_fences(const std::string& text) {
    std::vector<std::string> lines = split_lines(text);

    std::size_t first = 0;
    while (first < lines.size() && trim(lines[first]).empty()) ++first;
    if (first == lines.size() || trim(lines[first]).rfind("```", 0) != 0) {
        return text;
    }

    std::size_t last = lines.size();
    while (last > first + 1 && trim(lines[last - 1]).empty()) --last;
    if (last > first + 1 && trim(lines[last - 1]).rfind("```", 0) == 0) {
        --last;
    }

    std::string out;
    for (std::size_t i = first + 1; i < last; ++i) {
        if (i > first + 1) out.push_back('\n');
        out += lines[i];
    }
    return out;
}

std::string first_non_empty_line(const std::string& text) {
    for (const auto& line : split_lines(text)) {
        if (!trim(line).empty()) return line;
    }
    return "";
}

std::string collapse_whitespace(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    bool in_run = false;
    for (char c : s) {
        if (is_space(c)) {
            in_run = true;
        } else {
            if (in_run && !out.empty()) out.push_back(' ');
            in_run = false;
            out.push_back(c);
        }
    }
    return out;
}

bool has_enclosing_quote_pair(const std::string& s) {
    return s.size() >= 2 && (s.front() == '\'' || s.front() == '"') && s.back() == s.front();
}

std::size_t count_non_empty_lines(const std::string& text) {
    std::size_t n = 0;
    for (const auto& line : split_lines(text)) {
        if (!trim(line).empty()) ++n;
    }
    return n;
}

} // namespace

std::string normalize_answer(const std::string& raw, const NormalizeOptions& opts) {
    std::string s = raw;
    if (opts.strip_fences) s = strip_code_fences(s);
    if (opts.first_line_only) s = first_non_empty_line(s);
    s = trim(s);
    if (opts.strip_quotes) {
        while (has_enclosing_quote_pair(s)) {
            s = trim(s.substr(1, s.size() - 2));
        }
    }
    if (opts.collapse_whitespace) s = collapse_whitespace(s);
    return s;
}

std::size_t edit_distance(const std::string& a, const std::string& b) {
    const std::size_t m = a.size();
    const std::size_t n = b.size();
    if (m == 0) return n;
    if (n == 0) return m;

    // Two-row dynamic program.
    std::vector<std::size_t> prev(n + 1);
    std::vector<std::size_t> curr(n + 1);
    for (std::size_t j = 0; j <= n; ++j) prev[j] = j;

    for (std::size_t i = 1; i <= m; ++i) {
        curr[0] = i;
        for (std::size_t j = 1; j <= n; ++j) {
            const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            curr[j] = std::min({prev[j] + 1, curr[j - 1] + 1, sub});
        }
        std::swap(prev, curr);
    }
    return prev[n];
}

bool is_exact_match(std::size_t distance, int threshold) {
    return distance <= static_cast<std::size_t>(threshold);
}

bool classify_uncontrolled(const std::string& raw, const std::string& normalized,
                           const std::string& ground_truth,
                           const UncontrolledThresholds& thresholds) {
    if (count_non_empty_lines(raw) > static_cast<std::size_t>(thresholds.max_answer_lines)) {
        return true;
    }
    const double cap = thresholds.length_ratio * static_cast<double>(ground_truth.size());
    return static_cast<double>(normalized.size()) > cap;
}

ScoredAnswer score_answer(const std::string& raw, const std::string& ground_truth,
                          const NormalizeOptions& norm_opts,
                          const UncontrolledThresholds& thresholds, int exact_threshold) {
    ScoredAnswer scored;
    scored.raw = raw;
    scored.normalized = normalize_answer(raw, norm_opts);
    scored.distance = edit_distance(scored.normalized, ground_truth);
    scored.uncontrolled = classify_uncontrolled(raw, scored.normalized, ground_truth, thresholds);
    scored.exact = !scored.uncontrolled && is_exact_match(scored.distance, exact_threshold);
    return scored;
}

std::vector<SummaryCell> aggregate(std::span<const RunRecord> records) {
    struct Accum {
        std::size_t n_runs = 0;
        std::size_t n_excluded = 0;
        double energy_sum = 0.0;
        double duration_sum = 0.0;
        std::size_t exact = 0;
        double distance_sum = 0.0;
        std::size_t distance_n = 0;
    };

    // Keyed map gives a fixed accumulation order regardless of record order,
    // so floating-point means are reproducible bit for bit.
    std::map<std::pair<int, int>, std::vector<const RunRecord*>> groups;
    for (const auto& r : records) {
        if (r.status != RunStatus::ok) continue;
        groups[{static_cast<int>(r.pet.kind), static_cast<int>(r.config)}].push_back(&r);
    }

    std::vector<SummaryCell> cells;
    for (auto& [key, group] : groups) {
        std::sort(group.begin(), group.end(), [](const RunRecord* a, const RunRecord* b) {
            if (a->snippet_id != b->snippet_id) return a->snippet_id < b->snippet_id;
            return a->repetition < b->repetition;
        });

        Accum acc;
        for (const RunRecord* r : group) {
            acc.n_runs++;
            acc.energy_sum += r->measurement.gpu_energy_kwh;
            acc.duration_sum += r->measurement.duration_s;
            if (r->scored.uncontrolled) {
                acc.n_excluded++;
            } else {
                acc.distance_sum += static_cast<double>(r->scored.distance);
                acc.distance_n++;
                if (r->scored.exact) acc.exact++;
            }
        }

        SummaryCell cell;
        cell.pet = static_cast<PetKind>(key.first);
        cell.config = static_cast<ConfigId>(key.second);
        cell.n_runs = acc.n_runs;
        cell.n_excluded = acc.n_excluded;
        cell.mean_gpu_energy_kwh = acc.energy_sum / static_cast<double>(acc.n_runs);
        cell.mean_duration_s = acc.duration_sum / static_cast<double>(acc.n_runs);
        cell.exact_matches = acc.exact;
        if (acc.distance_n > 0) {
            cell.mean_edit_distance = acc.distance_sum / static_cast<double>(acc.distance_n);
        }
        cells.push_back(cell);
    }
    return cells;
}

std::vector<DeltaRow> delta_vs_baseline(const std::vector<SummaryCell>& cells, ConfigId baseline) {
    std::map<int, const SummaryCell*> baselines;
    for (const auto& c : cells) {
        if (c.config == baseline) baselines[static_cast<int>(c.pet)] = &c;
    }

    auto pct = [](std::optional<double> value, std::optional<double> base) -> std::optional<double> {
        if (!value || !base || *base == 0.0) return std::nullopt;
        return (*value - *base) / *base * 100.0;
    };

    std::vector<DeltaRow> rows;
    for (const auto& c : cells) {
        if (c.config == baseline) continue;
        auto it = baselines.find(static_cast<int>(c.pet));
        if (it == baselines.end()) {
            throw std::invalid_argument(std::string("no ") + to_string(baseline) +
                                        " baseline cell for pet " + to_string(c.pet));
        }
        const SummaryCell& base = *it->second;

        DeltaRow row;
        row.pet = c.pet;
        row.config = c.config;
        row.gpu_energy_pct = pct(c.mean_gpu_energy_kwh, base.mean_gpu_energy_kwh);
        row.duration_pct = pct(c.mean_duration_s, base.mean_duration_s);
        row.exact_matches_pct = pct(static_cast<double>(c.exact_matches),
                                    static_cast<double>(base.exact_matches));
        row.edit_distance_pct = pct(c.mean_edit_distance, base.mean_edit_distance);
        rows.push_back(row);
    }
    return rows;
}

} // namespace greenprompt
