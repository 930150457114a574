#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace greenprompt {

/// One code-completion evaluation unit. `context` followed by `incomplete`
/// reproduces the original truncated input byte-for-byte; `ground_truth` is
/// the line the model is expected to produce.
struct Snippet {
    std::string id;
    std::string context;
    std::string incomplete;
    std::string ground_truth;

    bool operator==(const Snippet&) const = default;
};

/// Disjoint partition of a corpus: the snippets under evaluation and the
/// pool that one-shot/few-shot examples are drawn from.
struct CorpusSplit {
    std::vector<Snippet> eval_set;
    std::vector<Snippet> example_pool;
};

struct CorpusError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Loads a UTF-8 line-delimited JSON corpus. Each line is an object with
/// string fields id, context, incomplete, ground_truth. Rejects malformed
/// lines, missing fields, empty-after-trim ground truths, and duplicate ids,
/// always naming the offending line number. An empty file yields an empty
/// corpus.
std::vector<Snippet> load_corpus(const std::filesystem::path& path);

/// Writes snippets back to the line-delimited JSON format accepted by
/// load_corpus. load(save(load(x))) is identity on all fields.
void save_corpus(const std::filesystem::path& path, const std::vector<Snippet>& snippets);

/// One JSONL line (no trailing newline) for a snippet.
std::string to_jsonl_line(const Snippet& snippet);

/// Deterministic pseudo-random subset of size n. The algorithm is pinned so
/// runs replicate across machines and standard libraries: a SplitMix64
/// stream seeded with `seed` drives a partial Fisher-Yates shuffle over the
/// corpus indices; bounded draws use unbiased rejection sampling. Equal
/// (corpus, n, seed) always yields the same snippets in the same order.
std::vector<Snippet> sample_eval_set(const std::vector<Snippet>& corpus, std::size_t n,
                                     std::uint64_t seed);

/// Draws exactly k shot examples from `corpus` excluding every id in
/// `eval_set`, using the same pinned sampling scheme on a seed derived from
/// `seed` (so pool and eval selections are distinct streams). k = 0 gives an
/// empty pool for the zero-shot case.
CorpusSplit split_example_pool(const std::vector<Snippet>& corpus,
                               const std::vector<Snippet>& eval_set, std::size_t k,
                               std::uint64_t seed);

/// Splits a single truncated input string into (context, incomplete) by
/// assigning the final `tail_segments` whitespace-delimited segments, plus
/// the whitespace immediately preceding them, to `incomplete`. The two parts
/// concatenate back to the input byte-for-byte. Used by the dataset
/// conversion subcommand; documented in the README conversion guide.
std::pair<std::string, std::string> split_truncated_input(const std::string& raw,
                                                          std::size_t tail_segments = 2);

namespace detail {

/// SplitMix64 (Steele, Lea, Vigna). Fully specified, stable across
/// platforms; used for all corpus sampling.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Unbiased draw from [0, n) via rejection sampling.
    std::uint64_t bounded(std::uint64_t n);

private:
    std::uint64_t state_;
};

} // namespace detail

} // namespace greenprompt
