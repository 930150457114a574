#include "greenprompt/energy_meter.hpp"

#include <dlfcn.h>

#include <algorithm>
#include <cmath>
#include <condition_variable>
#include <fstream>
#include <sstream>

namespace greenprompt {

double integrate(std::span<const PowerSample> samples, double window_start, double window_end) {
    if (window_end < window_start) {
        throw std::invalid_argument("window end precedes window start");
    }
    if (samples.empty()) return 0.0;

    for (std::size_t i = 1; i < samples.size(); ++i) {
        if (!(samples[i].t_s > samples[i - 1].t_s)) {
            throw std::invalid_argument("sample timestamps not strictly increasing at index " +
                                        std::to_string(i));
        }
    }
    if (samples.front().t_s < window_start || samples.back().t_s > window_end) {
        throw std::invalid_argument("samples fall outside the integration window");
    }

    // Edge extension: constant power from the window edges to the outermost
    // samples, trapezoids in between.
    double mw_seconds = samples.front().power_mw * (samples.front().t_s - window_start);
    for (std::size_t i = 1; i < samples.size(); ++i) {
        const double dt = samples[i].t_s - samples[i - 1].t_s;
        mw_seconds += 0.5 * (samples[i].power_mw + samples[i - 1].power_mw) * dt;
    }
    mw_seconds += samples.back().power_mw * (window_end - samples.back().t_s);

    return mw_seconds / kMilliwattSecondsPerKwh;
}

// ---------------------------------------------------------------------------
// Simulated source

SimulatedPowerSource::SimulatedPowerSource(std::vector<std::pair<double, double>> trace)
    : trace_(std::move(trace)) {
    if (trace_.empty()) {
        throw MeterError("simulated power trace is empty");
    }
    if (!std::is_sorted(trace_.begin(), trace_.end(),
                        [](const auto& a, const auto& b) { return a.first < b.first; })) {
        throw MeterError("simulated power trace offsets must be non-decreasing");
    }
}

SimulatedPowerSource SimulatedPowerSource::from_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw MeterError("cannot open power trace: " + path.string());
    }
    std::vector<std::pair<double, double>> trace;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream ss(line);
        double offset = 0.0;
        double mw = 0.0;
        char comma = 0;
        if (!(ss >> offset >> comma >> mw) || comma != ',') {
            throw MeterError("trace line " + std::to_string(line_no) + " is not 'offset_s,mw': " +
                             line);
        }
        if (mw < 0.0) {
            throw MeterError("trace line " + std::to_string(line_no) + ": negative power");
        }
        trace.emplace_back(offset, mw);
    }
    return SimulatedPowerSource(std::move(trace));
}

double SimulatedPowerSource::power_at(double offset_s) const {
    if (offset_s <= trace_.front().first) return trace_.front().second;
    if (offset_s >= trace_.back().first) return trace_.back().second;
    auto hi = std::upper_bound(trace_.begin(), trace_.end(), offset_s,
                               [](double v, const auto& p) { return v < p.first; });
    auto lo = hi - 1;
    const double span = hi->first - lo->first;
    if (span <= 0.0) return hi->second;
    const double f = (offset_s - lo->first) / span;
    return lo->second + f * (hi->second - lo->second);
}

std::optional<double> SimulatedPowerSource::read_power_mw(double elapsed_s) {
    return power_at(elapsed_s);
}

std::string SimulatedPowerSource::describe() const {
    return "simulated trace (" + std::to_string(trace_.size()) + " points)";
}

// ---------------------------------------------------------------------------
// NVML through dlopen, so there is no build-time driver dependency.

namespace {

using nvml_init_fn = int (*)();
using nvml_shutdown_fn = int (*)();
using nvml_get_handle_fn = int (*)(unsigned, void**);
using nvml_get_power_fn = int (*)(void*, unsigned*);
using nvml_get_name_fn = int (*)(void*, char*, unsigned);

struct NvmlApi {
    nvml_init_fn init = nullptr;
    nvml_shutdown_fn shutdown = nullptr;
    nvml_get_handle_fn get_handle = nullptr;
    nvml_get_power_fn get_power = nullptr;
    nvml_get_name_fn get_name = nullptr;
};

NvmlApi load_nvml_api(void* lib) {
    NvmlApi api;
    api.init = reinterpret_cast<nvml_init_fn>(dlsym(lib, "nvmlInit_v2"));
    if (!api.init) api.init = reinterpret_cast<nvml_init_fn>(dlsym(lib, "nvmlInit"));
    api.shutdown = reinterpret_cast<nvml_shutdown_fn>(dlsym(lib, "nvmlShutdown"));
    api.get_handle =
        reinterpret_cast<nvml_get_handle_fn>(dlsym(lib, "nvmlDeviceGetHandleByIndex_v2"));
    if (!api.get_handle) {
        api.get_handle = reinterpret_cast<nvml_get_handle_fn>(dlsym(lib, "nvmlDeviceGetHandleByIndex"));
    }
    api.get_power = reinterpret_cast<nvml_get_power_fn>(dlsym(lib, "nvmlDeviceGetPowerUsage"));
    api.get_name = reinterpret_cast<nvml_get_name_fn>(dlsym(lib, "nvmlDeviceGetName"));
    return api;
}

NvmlApi g_nvml_api;

} // namespace

NvmlPowerSource::NvmlPowerSource(unsigned gpu_index) : gpu_index_(gpu_index) {
    lib_ = dlopen("libnvidia-ml.so.1", RTLD_NOW);
    if (!lib_) lib_ = dlopen("libnvidia-ml.so", RTLD_NOW);
    if (!lib_) return;

    g_nvml_api = load_nvml_api(lib_);
    if (!g_nvml_api.init || !g_nvml_api.get_handle || !g_nvml_api.get_power) return;
    if (g_nvml_api.init() != 0) return;
    if (g_nvml_api.get_handle(gpu_index_, &device_) != 0) {
        device_ = nullptr;
        return;
    }
    if (g_nvml_api.get_name) {
        char name[96] = {0};
        if (g_nvml_api.get_name(device_, name, sizeof(name) - 1) == 0) {
            device_name_ = name;
        }
    }
}

NvmlPowerSource::~NvmlPowerSource() {
    if (lib_) {
        if (g_nvml_api.shutdown) g_nvml_api.shutdown();
        dlclose(lib_);
    }
}

std::optional<double> NvmlPowerSource::read_power_mw(double) {
    if (!device_) return std::nullopt;
    unsigned mw = 0;
    if (g_nvml_api.get_power(device_, &mw) != 0) return std::nullopt;
    return static_cast<double>(mw);
}

std::string NvmlPowerSource::describe() const {
    if (!device_) return "nvml (unavailable)";
    return "nvml gpu " + std::to_string(gpu_index_) +
           (device_name_.empty() ? "" : " (" + device_name_ + ")");
}

// ---------------------------------------------------------------------------
// CPU package energy via powercap.

namespace {

std::optional<std::uint64_t> read_u64_file(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::uint64_t v = 0;
    if (!(in >> v)) return std::nullopt;
    return v;
}

} // namespace

CpuEnergyCounter::CpuEnergyCounter(const std::filesystem::path& root) {
    namespace fs = std::filesystem;
    std::error_code ec;
    if (!fs::exists(root, ec)) return;

    for (const auto& entry : fs::directory_iterator(root, ec)) {
        const std::string name = entry.path().filename().string();
        // Package-level zones only: "intel-rapl:N" with no subzone suffix.
        if (name.rfind("intel-rapl:", 0) != 0 || name.find(':', 11) != std::string::npos) {
            continue;
        }
        Zone zone;
        zone.energy_file = entry.path() / "energy_uj";
        auto max_range = read_u64_file(entry.path() / "max_energy_range_uj");
        auto probe = read_u64_file(zone.energy_file);
        if (!max_range || !probe) continue;
        zone.max_range_uj = *max_range;
        total_max_range_uj_ += zone.max_range_uj;
        zones_.push_back(std::move(zone));
    }
}

std::string CpuEnergyCounter::describe() const {
    if (zones_.empty()) return "rapl (unavailable)";
    return "rapl (" + std::to_string(zones_.size()) + " package zone" +
           (zones_.size() == 1 ? "" : "s") + ")";
}

std::optional<std::uint64_t> CpuEnergyCounter::read_microjoules() const {
    if (zones_.empty()) return std::nullopt;
    std::uint64_t total = 0;
    for (const auto& zone : zones_) {
        auto v = read_u64_file(zone.energy_file);
        if (!v) return std::nullopt;
        total += *v;
    }
    return total;
}

std::optional<std::uint64_t> CpuEnergyCounter::delta_microjoules(std::uint64_t start,
                                                                 std::uint64_t end) const {
    if (end >= start) return end - start;
    // Single wraparound against the summed range.
    if (total_max_range_uj_ == 0) return std::nullopt;
    return (total_max_range_uj_ - start) + end;
}

// ---------------------------------------------------------------------------
// Meter

namespace {

double seconds_since(std::chrono::steady_clock::time_point origin,
                     std::chrono::steady_clock::time_point now) {
    return std::chrono::duration<double>(now - origin).count();
}

} // namespace

EnergyMeter::EnergyMeter(std::unique_ptr<PowerSource> source, const MeterConfig& config)
    : config_(config), source_(std::move(source)) {
    if (config_.interval < std::chrono::milliseconds(1)) {
        throw MeterError("sampling interval must be at least 1 ms");
    }
    if (!source_) throw MeterError("null power source");
}

EnergyMeter::EnergyMeter(const MeterConfig& config) : config_(config) {
    if (config_.interval < std::chrono::milliseconds(1)) {
        throw MeterError("sampling interval must be at least 1 ms");
    }
    switch (config_.backend) {
        case MeterBackend::simulated:
            source_ = std::make_unique<SimulatedPowerSource>(
                SimulatedPowerSource::from_csv(config_.trace_path));
            break;
        case MeterBackend::gpu: {
            auto nvml = std::make_unique<NvmlPowerSource>(config_.gpu_index);
            if (!nvml->available()) {
                throw MeterError("gpu power counters unavailable (" + nvml->describe() +
                                 "); use --meter simulated:<trace> on machines without one");
            }
            source_ = std::move(nvml);
            break;
        }
    }
}

EnergyMeter::~EnergyMeter() {
    if (sampler_.joinable()) {
        {
            std::lock_guard<std::mutex> lock(mutex_);
            stop_requested_ = true;
        }
        sampler_.join();
    }
}

std::string EnergyMeter::describe() const {
    std::string desc = source_->describe() + ", interval " +
                       std::to_string(config_.interval.count()) + " ms";
    if (config_.read_cpu_energy) {
        desc += ", cpu " + cpu_counter_.describe();
    }
    return desc;
}

void EnergyMeter::sampler_loop() {
    for (;;) {
        {
            std::lock_guard<std::mutex> lock(mutex_);
            if (stop_requested_) return;
        }
        std::this_thread::sleep_for(config_.interval);

        const auto now = std::chrono::steady_clock::now();
        std::lock_guard<std::mutex> lock(mutex_);
        if (stop_requested_) return;
        const double t = seconds_since(window_start_, now);
        if (auto mw = source_->read_power_mw(t)) {
            if (samples_.empty() || t > samples_.back().t_s) {
                samples_.push_back({t, *mw});
            }
        }
    }
}

WindowHandle EnergyMeter::start_window() {
    std::unique_lock<std::mutex> lock(mutex_);
    if (window_open_) {
        throw MeterError("a measurement window is already open");
    }
    window_open_ = true;
    open_window_id_ = next_window_id_++;
    samples_.clear();
    stop_requested_ = false;
    window_start_ = std::chrono::steady_clock::now();

    if (auto mw = source_->read_power_mw(0.0)) {
        samples_.push_back({0.0, *mw});
    }
    cpu_start_uj_ = config_.read_cpu_energy ? cpu_counter_.read_microjoules() : std::nullopt;

    WindowHandle handle(open_window_id_);
    lock.unlock();
    sampler_ = std::thread(&EnergyMeter::sampler_loop, this);
    return handle;
}

Measurement EnergyMeter::stop_window(WindowHandle& handle) {
    {
        std::lock_guard<std::mutex> lock(mutex_);
        if (!window_open_ || !handle.open() || handle.id() != open_window_id_) {
            throw MeterError("stop_window called without a matching open window");
        }
        stop_requested_ = true;
    }
    sampler_.join();

    std::lock_guard<std::mutex> lock(mutex_);
    const auto now = std::chrono::steady_clock::now();
    const double end_t = seconds_since(window_start_, now);

    // Final reading at the window edge captures the tail of the draw.
    const double t = end_t;
    if (auto mw = source_->read_power_mw(t)) {
        if (samples_.empty() || t > samples_.back().t_s) {
            samples_.push_back({t, *mw});
        }
    }

    Measurement m;
    m.duration_s = std::max(end_t, 1e-9);
    if (samples_.size() >= 2) {
        m.gpu_energy_kwh = integrate(samples_, 0.0, std::max(end_t, samples_.back().t_s));
    }

    if (cpu_start_uj_) {
        if (auto cpu_end = cpu_counter_.read_microjoules()) {
            if (auto delta = cpu_counter_.delta_microjoules(*cpu_start_uj_, *cpu_end)) {
                m.cpu_energy_kwh = static_cast<double>(*delta) / kMicrojoulesPerKwh;
            }
        }
    }

    window_open_ = false;
    handle.invalidate();
    return m;
}

} // namespace greenprompt
