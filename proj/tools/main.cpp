#include "greenprompt/corpus.hpp"
#include "greenprompt/report.hpp"
#include "greenprompt/runner.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

namespace {

using namespace greenprompt;

std::vector<std::string> split_csv(const std::string& list) {
    std::vector<std::string> out;
    std::string item;
    for (char c : list) {
        if (c == ',') {
            if (!item.empty()) out.push_back(item);
            item.clear();
        } else if (!std::isspace(static_cast<unsigned char>(c))) {
            item.push_back(c);
        }
    }
    if (!item.empty()) out.push_back(item);
    return out;
}

std::vector<Pet> parse_pets(const std::string& list) {
    std::vector<Pet> pets;
    for (const auto& name : split_csv(list)) {
        switch (pet_kind_from_string(name)) {
            case PetKind::zero_shot: pets.push_back(Pet::zero_shot()); break;
            case PetKind::one_shot: pets.push_back(Pet::one_shot()); break;
            case PetKind::few_shot: pets.push_back(Pet::few_shot()); break;
        }
    }
    if (pets.empty()) throw CLI::ValidationError("--pets", "no prompting techniques given");
    return pets;
}

std::vector<ConfigId> parse_configs(const std::string& list) {
    std::vector<ConfigId> configs;
    for (const auto& name : split_csv(list)) configs.push_back(config_id_from_string(name));
    if (configs.empty()) throw CLI::ValidationError("--configs", "no configurations given");
    return configs;
}

MeterConfig parse_meter(const std::string& spec, long interval_ms) {
    MeterConfig meter;
    meter.interval = std::chrono::milliseconds(interval_ms);
    if (spec == "gpu") {
        meter.backend = MeterBackend::gpu;
        return meter;
    }
    const std::string prefix = "simulated:";
    if (spec.rfind(prefix, 0) == 0 && spec.size() > prefix.size()) {
        meter.backend = MeterBackend::simulated;
        meter.trace_path = spec.substr(prefix.size());
        return meter;
    }
    throw CLI::ValidationError("--meter", "expected gpu or simulated:<trace.csv>");
}

void apply_env_overrides(EndpointConfig& endpoint) {
    if (const char* url = std::getenv("GREENPROMPT_ENDPOINT_URL"); url && *url) {
        endpoint.base_url = url;
    }
    if (const char* key = std::getenv("GREENPROMPT_API_KEY"); key && *key) {
        endpoint.api_key = key;
    }
}

void print_progress(const RunRecord& record, std::size_t done, std::size_t total) {
    std::printf("[%zu/%zu] %s %s %s rep %d ", done, total, record.snippet_id.c_str(),
                to_string(record.pet.kind), to_string(record.config), record.repetition);
    if (record.status == RunStatus::ok) {
        std::printf("ok dist=%zu%s %.4g kWh %.3f s\n", record.scored.distance,
                    record.scored.uncontrolled ? " (uncontrolled)" : "",
                    record.measurement.gpu_energy_kwh, record.measurement.duration_s);
    } else {
        std::printf("failed: %s\n", record.error.c_str());
    }
    std::fflush(stdout);
}

int cmd_run(const std::string& dataset, std::size_t n_snippets, std::uint64_t seed,
            const std::string& pets_list, const std::string& configs_list, int reps,
            double pause, const EndpointConfig& endpoint_flags, const std::string& meter_spec,
            long interval_ms, const std::string& out) {
    ExperimentPlan plan;
    plan.pets = parse_pets(pets_list);
    plan.configs = parse_configs(configs_list);
    plan.repetitions = reps;
    plan.pause_s = pause;
    plan.endpoint = endpoint_flags;
    apply_env_overrides(plan.endpoint);
    plan.meter = parse_meter(meter_spec, interval_ms);
    if (plan.meter.backend == MeterBackend::simulated) {
        plan.meter.trace_path = std::filesystem::absolute(plan.meter.trace_path);
    }
    plan.seed = seed;

    const std::vector<Snippet> corpus = load_corpus(dataset);
    if (corpus.empty()) {
        std::cerr << "dataset is empty: " << dataset << "\n";
        return 1;
    }
    const std::size_t n = n_snippets == 0 ? corpus.size() : n_snippets;
    const std::vector<Snippet> eval_set = sample_eval_set(corpus, n, seed);

    std::size_t max_shots = 0;
    for (const auto& pet : plan.pets) {
        max_shots = std::max(max_shots, static_cast<std::size_t>(pet.shot_count));
    }
    const CorpusSplit split = split_example_pool(corpus, eval_set, max_shots, seed);
    plan.snippets = split.eval_set;
    plan.example_pool = split.example_pool;

    std::printf("plan: %zu snippets x %zu pets x %zu configs x %d reps = %zu runs\n",
                plan.snippets.size(), plan.pets.size(), plan.configs.size(), plan.repetitions,
                plan.total_runs());
    const RunManifest manifest =
        run_experiment(plan, std::filesystem::absolute(out), print_progress);
    std::printf("run %s: %zu runs recorded in %s\n", manifest.status.c_str(),
                plan.total_runs(), out.c_str());
    return 0;
}

int cmd_resume(const std::string& out) {
    std::optional<std::string> api_key;
    if (const char* key = std::getenv("GREENPROMPT_API_KEY"); key && *key) api_key = key;
    const RunManifest manifest =
        resume(std::filesystem::absolute(out), api_key, print_progress);
    std::printf("run %s: %zu runs total in %s\n", manifest.status.c_str(),
                manifest.plan.total_runs(), out.c_str());
    return 0;
}

int cmd_report(const std::string& out, const std::string& baseline, const std::string& format) {
    const std::filesystem::path run_dir = std::filesystem::absolute(out);
    const ReportFormat fmt = report_format_from_string(format);
    const ConfigId base = config_id_from_string(baseline);
    std::cout << "wrote " << emit_summary(run_dir, fmt).string() << "\n";
    std::cout << "wrote " << emit_deltas(run_dir, base, fmt).string() << "\n";
    for (const auto& path : emit_charts(run_dir)) {
        std::cout << "wrote " << path.string() << "\n";
    }
    return 0;
}

int cmd_score(const std::string& out, const NormalizeOptions& normalize,
              const UncontrolledThresholds& uncontrolled) {
    const std::size_t n =
        rescore_run(std::filesystem::absolute(out), normalize, uncontrolled);
    std::printf("re-scored %zu records in %s\n", n, out.c_str());
    return 0;
}

int cmd_convert(const std::string& input, const std::string& output,
                std::size_t tail_segments) {
    std::ifstream in(input);
    if (!in) {
        std::cerr << "cannot read " << input << "\n";
        return 1;
    }
    std::vector<Snippet> snippets;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.contains("id") || !j.contains("input") ||
            !j.contains("ground_truth")) {
            std::cerr << input << ":" << line_no
                      << ": expected {\"id\", \"input\", \"ground_truth\"}\n";
            return 1;
        }
        const auto [context, incomplete] =
            split_truncated_input(j.at("input").get<std::string>(), tail_segments);
        snippets.push_back(Snippet{j.at("id").get<std::string>(), context, incomplete,
                                   j.at("ground_truth").get<std::string>()});
    }
    save_corpus(output, snippets);
    std::printf("converted %zu snippets to %s\n", snippets.size(), output.c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Benchmark energy use and accuracy of LLM code completion under "
                 "different prompt configurations"};
    app.require_subcommand(1);

    std::string dataset, out;
    std::size_t n_snippets = 0;
    std::uint64_t seed = 42;
    std::string pets_list = "zero,one,few";
    std::string configs_list = "C0,C1,C2,C3,C4";
    int reps = 5;
    double pause = 10.0;
    EndpointConfig endpoint;
    std::string api_key;
    std::string meter_spec = "gpu";
    long interval_ms = 50;

    auto* run = app.add_subcommand("run", "Execute a fresh experiment grid");
    run->add_option("--dataset", dataset, "Corpus JSONL (id, context, incomplete, ground_truth)")
        ->required()
        ->check(CLI::ExistingFile);
    run->add_option("--snippets", n_snippets, "Evaluation set size (0 = whole corpus)");
    run->add_option("--seed", seed, "Sampling seed");
    run->add_option("--pets", pets_list, "Prompting techniques (zero,one,few)");
    run->add_option("--configs", configs_list, "Prompt configurations (C0..C4)");
    run->add_option("--reps", reps, "Repetitions per cell")->check(CLI::PositiveNumber);
    run->add_option("--pause", pause, "Seconds between runs")->check(CLI::NonNegativeNumber);
    run->add_option("--endpoint-url", endpoint.base_url, "Chat-completion endpoint base URL");
    run->add_option("--model", endpoint.model_name, "Model name the endpoint serves");
    run->add_option("--api-key", api_key, "Bearer token (GREENPROMPT_API_KEY overrides)");
    run->add_option("--temperature", endpoint.temperature, "Sampling temperature");
    run->add_option("--max-tokens", endpoint.max_output_tokens, "Completion token cap");
    run->add_option("--timeout", endpoint.request_timeout_s, "Per-request timeout (s)");
    run->add_option("--meter", meter_spec, "gpu or simulated:<trace.csv>");
    run->add_option("--interval-ms", interval_ms, "Power sampling interval")
        ->check(CLI::PositiveNumber);
    run->add_option("--out", out, "Run directory to create")->required();

    auto* res = app.add_subcommand("resume", "Finish an interrupted run");
    res->add_option("--out", out, "Run directory holding manifest.json")->required();

    std::string baseline = "C0", format = "csv";
    auto* rep = app.add_subcommand("report", "Emit summary, baseline deltas, and charts");
    rep->add_option("--out", out, "Run directory holding records")->required();
    rep->add_option("--baseline", baseline, "Baseline configuration for deltas");
    rep->add_option("--format", format, "csv or json");

    NormalizeOptions normalize;
    UncontrolledThresholds uncontrolled;
    auto* score = app.add_subcommand("score",
                                     "Re-score stored answers after rule changes");
    score->add_option("--out", out, "Run directory holding records")->required();
    score->add_flag("!--no-strip-fences", normalize.strip_fences, "Keep code fences");
    score->add_flag("!--no-first-line", normalize.first_line_only, "Score the whole answer");
    score->add_flag("!--no-collapse-whitespace", normalize.collapse_whitespace,
                    "Keep inner whitespace");
    score->add_flag("!--no-strip-quotes", normalize.strip_quotes, "Keep enclosing quotes");
    score->add_option("--max-answer-lines", uncontrolled.max_answer_lines,
                      "Uncontrolled beyond this many non-empty lines");
    score->add_option("--length-ratio", uncontrolled.length_ratio,
                      "Uncontrolled beyond this multiple of the ground-truth length");

    std::string conv_in, conv_out;
    std::size_t tail_segments = 2;
    auto* conv = app.add_subcommand("convert",
                                    "Split truncated inputs into a corpus JSONL");
    conv->add_option("--input", conv_in, "JSONL with id, input, ground_truth")
        ->required()
        ->check(CLI::ExistingFile);
    conv->add_option("--output", conv_out, "Corpus JSONL to write")->required();
    conv->add_option("--tail-segments", tail_segments,
                     "Trailing segments forming the incomplete part");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            if (!api_key.empty()) endpoint.api_key = api_key;
            return cmd_run(dataset, n_snippets, seed, pets_list, configs_list, reps, pause,
                           endpoint, meter_spec, interval_ms, out);
        }
        if (res->parsed()) return cmd_resume(out);
        if (rep->parsed()) return cmd_report(out, baseline, format);
        if (score->parsed()) return cmd_score(out, normalize, uncontrolled);
        if (conv->parsed()) return cmd_convert(conv_in, conv_out, tail_segments);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
