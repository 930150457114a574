#include "greenprompt/runner.hpp"

#include <sys/utsname.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

namespace greenprompt {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kManifestFormat = "greenprompt-run-v1";
constexpr int kMaxConsecutiveFailures = 5;

std::string now_iso8601_utc() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

double monotonic_now_s() {
    static const auto origin = std::chrono::steady_clock::now();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - origin).count();
}

std::string sanitize_for_filename(const std::string& id) {
    std::string out;
    out.reserve(id.size());
    for (char c : id) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                        (c >= '0' && c <= '9') || c == '.' || c == '_' || c == '-';
        out.push_back(ok ? c : '_');
    }
    return out.empty() ? "snippet" : out;
}

struct CellKey {
    std::string snippet_id;
    PetKind pet;
    ConfigId config;
    int repetition;

    auto tie() const { return std::tie(snippet_id, pet, config, repetition); }
    bool operator<(const CellKey& other) const { return tie() < other.tie(); }
};

json snippet_to_json(const Snippet& s) {
    return json{{"id", s.id},
                {"context", s.context},
                {"incomplete", s.incomplete},
                {"ground_truth", s.ground_truth}};
}

Snippet snippet_from_json(const json& j) {
    return Snippet{j.at("id").get<std::string>(), j.at("context").get<std::string>(),
                   j.at("incomplete").get<std::string>(),
                   j.at("ground_truth").get<std::string>()};
}

json meter_to_json(const MeterConfig& m) {
    return json{{"backend", m.backend == MeterBackend::gpu ? "gpu" : "simulated"},
                {"trace", m.trace_path.string()},
                {"interval_ms", m.interval.count()},
                {"gpu_index", m.gpu_index},
                {"read_cpu_energy", m.read_cpu_energy}};
}

MeterConfig meter_from_json(const json& j) {
    MeterConfig m;
    m.backend = j.at("backend").get<std::string>() == "gpu" ? MeterBackend::gpu
                                                            : MeterBackend::simulated;
    m.trace_path = j.at("trace").get<std::string>();
    m.interval = std::chrono::milliseconds(j.at("interval_ms").get<long>());
    m.gpu_index = j.at("gpu_index").get<unsigned>();
    m.read_cpu_energy = j.at("read_cpu_energy").get<bool>();
    return m;
}

json endpoint_to_json(const EndpointConfig& e) {
    // The api key is deliberately never persisted.
    return json{{"base_url", e.base_url},
                {"model", e.model_name},
                {"temperature", e.temperature},
                {"max_tokens", e.max_output_tokens},
                {"timeout_s", e.request_timeout_s}};
}

EndpointConfig endpoint_from_json(const json& j) {
    EndpointConfig e;
    e.base_url = j.at("base_url").get<std::string>();
    e.model_name = j.at("model").get<std::string>();
    e.temperature = j.at("temperature").get<double>();
    e.max_output_tokens = j.at("max_tokens").get<int>();
    e.request_timeout_s = j.at("timeout_s").get<double>();
    return e;
}

json environment_descriptor() {
    json env;
    char host[256] = {0};
    if (gethostname(host, sizeof(host) - 1) == 0) env["hostname"] = host;
    utsname uts{};
    if (uname(&uts) == 0) {
        env["os"] = std::string(uts.sysname) + " " + uts.release + " " + uts.machine;
    }
    env["captured_at"] = now_iso8601_utc();
    return env;
}

void write_text_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    if (!out) throw RunError("cannot open for writing: " + path.string());
    out << content;
    out.flush();
    if (!out) throw RunError("write failed: " + path.string());
}

/// Atomic replace: write to a sibling temp file, then rename over.
void write_file_atomic(const fs::path& path, const std::string& content) {
    const fs::path tmp = path.string() + ".tmp";
    write_text_file(tmp, content);
    fs::rename(tmp, path);
}

std::vector<CellKey> plan_grid(const ExperimentPlan& plan) {
    std::vector<CellKey> grid;
    grid.reserve(plan.total_runs());
    for (const auto& snippet : plan.snippets) {
        for (const auto& pet : plan.pets) {
            for (const auto& config : plan.configs) {
                for (int rep = 0; rep < plan.repetitions; ++rep) {
                    grid.push_back({snippet.id, pet.kind, config, rep});
                }
            }
        }
    }
    return grid;
}

} // namespace

json to_json(const ExperimentPlan& plan) {
    json snippets = json::array();
    for (const auto& s : plan.snippets) snippets.push_back(snippet_to_json(s));
    json pool = json::array();
    for (const auto& s : plan.example_pool) pool.push_back(snippet_to_json(s));
    json pets = json::array();
    for (const auto& p : plan.pets) pets.push_back(to_json(p));
    json configs = json::array();
    for (const auto& c : plan.configs) configs.push_back(to_string(c));

    return json{{"snippets", std::move(snippets)},
                {"example_pool", std::move(pool)},
                {"pets", std::move(pets)},
                {"configs", std::move(configs)},
                {"repetitions", plan.repetitions},
                {"pause_s", plan.pause_s},
                {"endpoint", endpoint_to_json(plan.endpoint)},
                {"meter", meter_to_json(plan.meter)},
                {"seed", plan.seed},
                {"normalize",
                 {{"strip_fences", plan.normalize.strip_fences},
                  {"first_line_only", plan.normalize.first_line_only},
                  {"collapse_whitespace", plan.normalize.collapse_whitespace},
                  {"strip_quotes", plan.normalize.strip_quotes}}},
                {"uncontrolled",
                 {{"max_answer_lines", plan.uncontrolled.max_answer_lines},
                  {"length_ratio", plan.uncontrolled.length_ratio}}}};
}

ExperimentPlan plan_from_json(const json& j) {
    ExperimentPlan plan;
    for (const auto& s : j.at("snippets")) plan.snippets.push_back(snippet_from_json(s));
    for (const auto& s : j.at("example_pool")) plan.example_pool.push_back(snippet_from_json(s));
    for (const auto& p : j.at("pets")) plan.pets.push_back(pet_from_json(p));
    for (const auto& c : j.at("configs")) {
        plan.configs.push_back(config_id_from_string(c.get<std::string>()));
    }
    plan.repetitions = j.at("repetitions").get<int>();
    plan.pause_s = j.at("pause_s").get<double>();
    plan.endpoint = endpoint_from_json(j.at("endpoint"));
    plan.meter = meter_from_json(j.at("meter"));
    plan.seed = j.at("seed").get<std::uint64_t>();
    const json& n = j.at("normalize");
    plan.normalize.strip_fences = n.at("strip_fences").get<bool>();
    plan.normalize.first_line_only = n.at("first_line_only").get<bool>();
    plan.normalize.collapse_whitespace = n.at("collapse_whitespace").get<bool>();
    plan.normalize.strip_quotes = n.at("strip_quotes").get<bool>();
    const json& u = j.at("uncontrolled");
    plan.uncontrolled.max_answer_lines = u.at("max_answer_lines").get<int>();
    plan.uncontrolled.length_ratio = u.at("length_ratio").get<double>();
    return plan;
}

std::string plan_fingerprint(const ExperimentPlan& plan) {
    const std::string canonical = to_json(plan).dump();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : canonical) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void write_manifest(const fs::path& out_dir, const RunManifest& manifest) {
    json j{{"format", kManifestFormat},
           {"plan", to_json(manifest.plan)},
           {"plan_fingerprint", plan_fingerprint(manifest.plan)},
           {"environment", manifest.environment},
           {"started_at", manifest.started_at},
           {"status", manifest.status},
           {"warmup_performed", manifest.warmup_performed},
           {"resumed_at", manifest.resumed_at}};
    write_file_atomic(out_dir / "manifest.json", j.dump(2) + "\n");
}

RunManifest load_manifest(const fs::path& out_dir) {
    const fs::path path = out_dir / "manifest.json";
    std::ifstream in(path);
    if (!in) throw RunError("no manifest at " + path.string());
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded() || j.value("format", std::string{}) != kManifestFormat) {
        throw RunError("manifest at " + path.string() + " is not a " + kManifestFormat +
                       " document");
    }

    RunManifest manifest;
    manifest.plan = plan_from_json(j.at("plan"));
    if (plan_fingerprint(manifest.plan) != j.at("plan_fingerprint").get<std::string>()) {
        throw RunError("plan fingerprint mismatch in " + path.string() +
                       "; the manifest was modified after the run started");
    }
    manifest.environment = j.value("environment", json::object());
    manifest.started_at = j.value("started_at", std::string{});
    manifest.status = j.value("status", std::string{});
    manifest.warmup_performed = j.value("warmup_performed", false);
    for (const auto& r : j.value("resumed_at", json::array())) {
        manifest.resumed_at.push_back(r.get<std::string>());
    }
    return manifest;
}

LoadedRecords load_records_detailed(const fs::path& out_dir) {
    LoadedRecords loaded;
    const fs::path records_dir = out_dir / "records";
    std::error_code ec;
    if (!fs::exists(records_dir, ec)) return loaded;

    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(records_dir)) {
        if (entry.path().extension() == ".jsonl") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());

    for (const auto& file : files) {
        std::ifstream in(file);
        if (!in) throw RunError("cannot read " + file.string());
        std::string line;
        std::size_t line_no = 0;
        bool torn = false;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            json j = json::parse(line, nullptr, false);
            if (j.is_discarded()) {
                // Only a crash-torn final line is tolerable.
                if (in.peek() == EOF) {
                    torn = true;
                    break;
                }
                throw RunError(file.string() + ":" + std::to_string(line_no) +
                               ": malformed record line");
            }
            loaded.records.push_back(run_record_from_json(j));
        }
        if (torn) loaded.torn_files.push_back(file);
    }
    return loaded;
}

std::vector<RunRecord> load_records(const fs::path& out_dir) {
    return load_records_detailed(out_dir).records;
}

namespace {

/// Drops a torn trailing line by rewriting the file from its parsed records.
void truncate_torn_file(const fs::path& file) {
    std::ifstream in(file);
    std::string line;
    std::vector<std::string> good;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) break;
        good.push_back(line);
    }
    in.close();
    std::string content;
    for (const auto& l : good) content += l + "\n";
    write_file_atomic(file, content);
    std::cerr << "repaired torn record file " << file << " (" << good.size()
              << " records kept)\n";
}

class RecordWriter {
public:
    RecordWriter(fs::path out_dir, const ExperimentPlan& plan) : out_dir_(std::move(out_dir)) {
        fs::create_directories(out_dir_ / "records");
        fs::create_directories(out_dir_ / "raw_answers");
        for (std::size_t i = 0; i < plan.snippets.size(); ++i) {
            char prefix[16];
            std::snprintf(prefix, sizeof(prefix), "%04zu_", i);
            file_for_[plan.snippets[i].id] =
                out_dir_ / "records" / (prefix + sanitize_for_filename(plan.snippets[i].id) + ".jsonl");
        }
    }

    void append(const RunRecord& record) {
        const fs::path& path = file_for_.at(record.snippet_id);
        std::ofstream out(path, std::ios::app | std::ios::binary);
        if (!out) throw RunError("cannot append to " + path.string());
        out << to_json(record).dump() << "\n";
        out.flush();
        if (!out) throw RunError("write failed (disk full?): " + path.string());

        if (record.status == RunStatus::ok) {
            char rep[16];
            std::snprintf(rep, sizeof(rep), "r%d", record.repetition);
            const fs::path raw = out_dir_ / "raw_answers" /
                                 (sanitize_for_filename(record.snippet_id) + "__" +
                                  to_string(record.pet.kind) + "__" + to_string(record.config) +
                                  "__" + rep + ".txt");
            write_text_file(raw, record.answer);
        }
    }

private:
    fs::path out_dir_;
    std::map<std::string, fs::path> file_for_;
};

/// Runs every cell in `todo`, in order. Shared by fresh runs and resume.
void execute_cells(const ExperimentPlan& plan, const std::vector<CellKey>& todo,
                   const fs::path& out_dir, int epoch, const std::optional<std::string>& api_key,
                   const ProgressFn& progress) {
    if (todo.empty()) return;

    std::map<std::string, const Snippet*> by_id;
    for (const auto& s : plan.snippets) by_id[s.id] = &s;

    EndpointConfig endpoint = plan.endpoint;
    if (api_key) endpoint.api_key = api_key;
    LlmClient client(endpoint);
    EnergyMeter meter(plan.meter);
    RecordWriter writer(out_dir, plan);

    // Warm-up: one unrecorded completion so first-touch model residency
    // never lands inside a measured window.
    {
        const CellKey& first = todo.front();
        const Snippet& snippet = *by_id.at(first.snippet_id);
        Pet pet;
        for (const auto& p : plan.pets) {
            if (p.kind == first.pet) pet = p;
        }
        const ChatPrompt prompt =
            render_prompt(snippet, pet, PromptConfig::for_id(first.config), plan.example_pool);
        try {
            client.complete(prompt);
        } catch (const std::exception& e) {
            std::cerr << "warm-up completion failed: " << e.what() << "\n";
        }
        if (plan.pause_s > 0) {
            std::this_thread::sleep_for(std::chrono::duration<double>(plan.pause_s));
        }
    }

    const std::size_t total = plan.total_runs();
    std::size_t done = total - todo.size();
    int consecutive_failures = 0;

    for (std::size_t i = 0; i < todo.size(); ++i) {
        const CellKey& cell = todo[i];
        const Snippet& snippet = *by_id.at(cell.snippet_id);
        Pet pet;
        for (const auto& p : plan.pets) {
            if (p.kind == cell.pet) pet = p;
        }

        RunRecord record;
        record.snippet_id = cell.snippet_id;
        record.pet = pet;
        record.config = cell.config;
        record.repetition = cell.repetition;
        record.question = render_prompt(snippet, pet, PromptConfig::for_id(cell.config),
                                        plan.example_pool);
        record.epoch = epoch;
        record.dispatched_at = now_iso8601_utc();
        record.dispatch_monotonic_s = monotonic_now_s();

        WindowHandle window = meter.start_window();
        try {
            const CompletionResult result = client.complete(record.question);
            record.measurement = meter.stop_window(window);
            record.answer = result.text;
            record.latency_s = result.latency_s;
            record.scored = score_answer(result.text, snippet.ground_truth, plan.normalize,
                                         plan.uncontrolled);
            record.status = RunStatus::ok;
            consecutive_failures = 0;
        } catch (const std::exception& e) {
            if (window.open()) meter.stop_window(window);
            record.status = RunStatus::failed;
            record.error = e.what();
            ++consecutive_failures;
        }
        record.completed_at = now_iso8601_utc();

        writer.append(record);
        ++done;
        if (progress) progress(record, done, total);

        if (consecutive_failures >= kMaxConsecutiveFailures) {
            throw RunError("aborting after " + std::to_string(consecutive_failures) +
                           " consecutive failed completions; partial results kept in " +
                           out_dir.string());
        }
        const bool last = i + 1 == todo.size();
        if (!last && plan.pause_s > 0) {
            std::this_thread::sleep_for(std::chrono::duration<double>(plan.pause_s));
        }
    }
}

std::set<CellKey> existing_cells(const std::vector<RunRecord>& records) {
    std::set<CellKey> cells;
    for (const auto& r : records) {
        cells.insert({r.snippet_id, r.pet.kind, r.config, r.repetition});
    }
    return cells;
}

} // namespace

RunManifest run_experiment(const ExperimentPlan& plan, const fs::path& out_dir,
                           const ProgressFn& progress) {
    if (plan.snippets.empty() || plan.pets.empty() || plan.configs.empty() ||
        plan.repetitions < 1) {
        throw RunError("plan is empty: needs snippets, pets, configs, and repetitions >= 1");
    }
    for (const auto& pet : plan.pets) {
        if (plan.example_pool.size() < static_cast<std::size_t>(pet.shot_count)) {
            throw RunError(std::string("example pool too small for ") + to_string(pet.kind));
        }
    }
    if (fs::exists(out_dir / "manifest.json")) {
        throw RunError("run directory already holds a manifest; use resume: " +
                       out_dir.string());
    }
    fs::create_directories(out_dir);

    EndpointConfig endpoint = plan.endpoint;
    LlmClient client(endpoint);
    const json model_descriptor = client.health_check();

    RunManifest manifest;
    manifest.plan = plan;
    manifest.environment = environment_descriptor();
    manifest.environment["model_descriptor"] = model_descriptor;
    {
        EnergyMeter meter(plan.meter);
        manifest.environment["meter"] = meter.describe();
    }
    manifest.started_at = now_iso8601_utc();
    manifest.status = "running";
    manifest.warmup_performed = true;
    write_manifest(out_dir, manifest);

    execute_cells(plan, plan_grid(plan), out_dir, 0, plan.endpoint.api_key, progress);

    manifest.status = "complete";
    write_manifest(out_dir, manifest);
    return manifest;
}

RunManifest resume(const fs::path& out_dir, const std::optional<std::string>& api_key,
                   const ProgressFn& progress) {
    RunManifest manifest = load_manifest(out_dir);
    const ExperimentPlan& plan = manifest.plan;

    LoadedRecords loaded = load_records_detailed(out_dir);
    for (const auto& file : loaded.torn_files) truncate_torn_file(file);

    const std::vector<CellKey> grid = plan_grid(plan);
    const std::set<CellKey> valid(grid.begin(), grid.end());
    const std::set<CellKey> have = existing_cells(loaded.records);
    for (const auto& cell : have) {
        if (!valid.count(cell)) {
            throw RunError("record for snippet '" + cell.snippet_id +
                           "' does not belong to the manifest plan; refusing to resume");
        }
    }

    std::vector<CellKey> todo;
    for (const auto& cell : grid) {
        if (!have.count(cell)) todo.push_back(cell);
    }

    if (!todo.empty()) {
        LlmClient client([&] {
            EndpointConfig e = plan.endpoint;
            if (api_key) e.api_key = api_key;
            return e;
        }());
        const json descriptor = client.health_check();
        if (manifest.environment.contains("model_descriptor") &&
            manifest.environment["model_descriptor"] != descriptor) {
            std::cerr << "warning: endpoint model descriptor changed since the original run\n";
        }
        manifest.resumed_at.push_back(now_iso8601_utc());
        manifest.status = "running";
        write_manifest(out_dir, manifest);
        execute_cells(plan, todo, out_dir, static_cast<int>(manifest.resumed_at.size()), api_key,
                      progress);
    }

    manifest.status = "complete";
    write_manifest(out_dir, manifest);
    return manifest;
}

std::size_t rescore_run(const fs::path& out_dir, const NormalizeOptions& normalize,
                        const UncontrolledThresholds& uncontrolled) {
    RunManifest manifest = load_manifest(out_dir);
    std::map<std::string, std::string> truth;
    for (const auto& s : manifest.plan.snippets) truth[s.id] = s.ground_truth;

    const fs::path records_dir = out_dir / "records";
    if (!fs::exists(records_dir)) throw RunError("no records under " + out_dir.string());

    std::size_t rescored = 0;
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(records_dir)) {
        if (entry.path().extension() == ".jsonl") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());

    for (const auto& file : files) {
        std::ifstream in(file);
        std::string line;
        std::string rewritten;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            json j = json::parse(line, nullptr, false);
            if (j.is_discarded()) continue; // torn tail
            RunRecord r = run_record_from_json(j);
            if (r.status == RunStatus::ok) {
                auto it = truth.find(r.snippet_id);
                if (it == truth.end()) {
                    throw RunError("record snippet '" + r.snippet_id + "' missing from manifest");
                }
                r.scored = score_answer(r.answer, it->second, normalize, uncontrolled);
                ++rescored;
            }
            rewritten += to_json(r).dump() + "\n";
        }
        in.close();
        write_file_atomic(file, rewritten);
    }

    manifest.plan.normalize = normalize;
    manifest.plan.uncontrolled = uncontrolled;
    write_manifest(out_dir, manifest);
    return rescored;
}

} // namespace greenprompt
