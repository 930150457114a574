#include "greenprompt/corpus.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <numeric>
#include <unordered_set>

namespace greenprompt {

using nlohmann::json;

namespace {

bool is_blank(const std::string& s) {
    return std::all_of(s.begin(), s.end(),
                       [](unsigned char c) { return std::isspace(c) != 0; });
}

std::string require_string_field(const json& obj, const char* field, std::size_t line_no) {
    auto it = obj.find(field);
    if (it == obj.end() || !it->is_string()) {
        throw CorpusError("line " + std::to_string(line_no) + ": missing or non-string field '" +
                          field + "'");
    }
    return it->get<std::string>();
}

} // namespace

namespace detail {

std::uint64_t SplitMix64::bounded(std::uint64_t n) {
    // threshold = 2^64 mod n; values below it would bias the modulo.
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
        const std::uint64_t r = next();
        if (r >= threshold) return r % n;
    }
}

} // namespace detail

std::vector<Snippet> load_corpus(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw CorpusError("cannot open corpus file: " + path.string());
    }

    std::vector<Snippet> snippets;
    std::unordered_set<std::string> seen_ids;
    std::string line;
    std::size_t line_no = 0;

    while (std::getline(in, line)) {
        ++line_no;
        if (is_blank(line)) continue;

        json obj = json::parse(line, nullptr, false);
        if (obj.is_discarded() || !obj.is_object()) {
            throw CorpusError("line " + std::to_string(line_no) + ": malformed JSON record");
        }

        Snippet s;
        s.id = require_string_field(obj, "id", line_no);
        s.context = require_string_field(obj, "context", line_no);
        s.incomplete = require_string_field(obj, "incomplete", line_no);
        s.ground_truth = require_string_field(obj, "ground_truth", line_no);

        if (is_blank(s.ground_truth)) {
            throw CorpusError("line " + std::to_string(line_no) + ": ground_truth is empty");
        }
        if (!seen_ids.insert(s.id).second) {
            throw CorpusError("line " + std::to_string(line_no) + ": duplicate id '" + s.id + "'");
        }
        snippets.push_back(std::move(s));
    }
    return snippets;
}

std::string to_jsonl_line(const Snippet& snippet) {
    json obj{{"id", snippet.id},
             {"context", snippet.context},
             {"incomplete", snippet.incomplete},
             {"ground_truth", snippet.ground_truth}};
    return obj.dump();
}

void save_corpus(const std::filesystem::path& path, const std::vector<Snippet>& snippets) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw CorpusError("cannot open file for writing: " + path.string());
    }
    for (const auto& s : snippets) {
        out << to_jsonl_line(s) << '\n';
    }
    if (!out) {
        throw CorpusError("write failed: " + path.string());
    }
}

std::vector<Snippet> sample_eval_set(const std::vector<Snippet>& corpus, std::size_t n,
                                     std::uint64_t seed) {
    if (n > corpus.size()) {
        throw std::invalid_argument("sample size " + std::to_string(n) +
                                    " exceeds corpus size " + std::to_string(corpus.size()));
    }

    std::vector<std::size_t> indices(corpus.size());
    std::iota(indices.begin(), indices.end(), std::size_t{0});

    detail::SplitMix64 rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.bounded(indices.size() - i));
        std::swap(indices[i], indices[j]);
    }

    std::vector<Snippet> result;
    result.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        result.push_back(corpus[indices[i]]);
    }
    return result;
}

CorpusSplit split_example_pool(const std::vector<Snippet>& corpus,
                               const std::vector<Snippet>& eval_set, std::size_t k,
                               std::uint64_t seed) {
    std::unordered_set<std::string> eval_ids;
    for (const auto& s : eval_set) eval_ids.insert(s.id);

    std::vector<Snippet> remaining;
    for (const auto& s : corpus) {
        if (!eval_ids.count(s.id)) remaining.push_back(s);
    }
    if (k > remaining.size()) {
        throw std::invalid_argument("example pool needs " + std::to_string(k) +
                                    " snippets but only " + std::to_string(remaining.size()) +
                                    " remain outside the eval set");
    }

    // Distinct stream from the eval sampling: same documented scheme, seed
    // xored with a fixed tag ("pool" in ASCII).
    CorpusSplit split;
    split.eval_set = eval_set;
    split.example_pool = sample_eval_set(remaining, k, seed ^ 0x706F6F6CULL);
    return split;
}

std::pair<std::string, std::string> split_truncated_input(const std::string& raw,
                                                          std::size_t tail_segments) {
    auto is_ws = [](unsigned char c) { return std::isspace(c) != 0; };

    // Walk backwards over `tail_segments` runs of non-whitespace, then over
    // the whitespace run before them so the separator travels with the tail.
    std::size_t pos = raw.size();
    while (pos > 0 && is_ws(static_cast<unsigned char>(raw[pos - 1]))) --pos;

    for (std::size_t seg = 0; seg < tail_segments && pos > 0; ++seg) {
        while (pos > 0 && !is_ws(static_cast<unsigned char>(raw[pos - 1]))) --pos;
        if (seg + 1 < tail_segments) {
            while (pos > 0 && is_ws(static_cast<unsigned char>(raw[pos - 1]))) --pos;
        }
    }
    while (pos > 0 && is_ws(static_cast<unsigned char>(raw[pos - 1]))) --pos;

    return {raw.substr(0, pos), raw.substr(pos)};
}

} // namespace greenprompt
