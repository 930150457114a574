#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace greenprompt {

struct MeterError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// One instantaneous accelerator power reading. Timestamps come from a
/// monotonic clock with sub-millisecond resolution.
struct PowerSample {
    double t_s = 0.0;
    double power_mw = 0.0;
};

/// Integrated energy and wall-clock duration for one inference window.
struct Measurement {
    double gpu_energy_kwh = 0.0;
    std::optional<double> cpu_energy_kwh;
    double duration_s = 0.0;
};

/// Trapezoidal integration of power samples over [window_start, window_end],
/// the first sample's power extended back to the window start and the last
/// sample's forward to the window end. mW*s divides by 3.6e9 to kWh. Empty
/// sample list integrates to zero. Throws on unordered timestamps or samples
/// outside the window.
double integrate(std::span<const PowerSample> samples, double window_start, double window_end);

constexpr double kMilliwattSecondsPerKwh = 3.6e9;
constexpr double kMicrojoulesPerKwh = 3.6e12;

/// Instantaneous power source polled by the meter. `elapsed_s` is time since
/// the current window opened; hardware sources ignore it.
class PowerSource {
public:
    virtual ~PowerSource() = default;
    virtual std::optional<double> read_power_mw(double elapsed_s) = 0;
    virtual std::string describe() const = 0;
    virtual bool available() const = 0;
};

/// Scripted power trace: (offset_seconds, milliwatts) points, linearly
/// interpolated, held constant before the first and after the last point.
/// Makes the whole pipeline runnable and testable without an accelerator.
class SimulatedPowerSource : public PowerSource {
public:
    explicit SimulatedPowerSource(std::vector<std::pair<double, double>> trace);
    static SimulatedPowerSource from_csv(const std::filesystem::path& path);

    std::optional<double> read_power_mw(double elapsed_s) override;
    std::string describe() const override;
    bool available() const override { return true; }

    /// Trace value at an offset, for direct (non-sampled) evaluation.
    double power_at(double offset_s) const;

private:
    std::vector<std::pair<double, double>> trace_;
};

/// Accelerator power through the NVIDIA management library, loaded at
/// runtime so the binary builds and runs on machines without the driver.
class NvmlPowerSource : public PowerSource {
public:
    explicit NvmlPowerSource(unsigned gpu_index = 0);
    ~NvmlPowerSource() override;

    NvmlPowerSource(const NvmlPowerSource&) = delete;
    NvmlPowerSource& operator=(const NvmlPowerSource&) = delete;

    std::optional<double> read_power_mw(double elapsed_s) override;
    std::string describe() const override;
    bool available() const override { return device_ != nullptr; }

private:
    void* lib_ = nullptr;
    void* device_ = nullptr;
    std::string device_name_;
    unsigned gpu_index_ = 0;
};

/// Cumulative CPU package energy in microjoules from the powercap sysfs
/// interface, when readable without elevated privileges.
class CpuEnergyCounter {
public:
    /// Scans `root` for package-level zones; the default is the live sysfs
    /// tree, an alternate root supports testing the counter arithmetic.
    explicit CpuEnergyCounter(const std::filesystem::path& root = "/sys/class/powercap");

    bool available() const { return !zones_.empty(); }
    std::string describe() const;

    /// Sum of the package counters right now.
    std::optional<std::uint64_t> read_microjoules() const;

    /// Counter delta handling one wraparound per zone against its published
    /// maximum range.
    std::optional<std::uint64_t> delta_microjoules(std::uint64_t start, std::uint64_t end) const;

private:
    struct Zone {
        std::filesystem::path energy_file;
        std::uint64_t max_range_uj = 0;
    };
    std::vector<Zone> zones_;
    std::uint64_t total_max_range_uj_ = 0;
};

enum class MeterBackend { gpu, simulated };

struct MeterConfig {
    MeterBackend backend = MeterBackend::simulated;
    std::filesystem::path trace_path;           // simulated backend
    std::chrono::milliseconds interval{50};
    unsigned gpu_index = 0;
    bool read_cpu_energy = true;
};

/// Move-only token for an open measurement window.
class WindowHandle {
public:
    WindowHandle() = default;
    explicit WindowHandle(std::uint64_t id) : id_(id), open_(true) {}
    WindowHandle(WindowHandle&& other) noexcept { *this = std::move(other); }
    WindowHandle& operator=(WindowHandle&& other) noexcept {
        id_ = other.id_;
        open_ = other.open_;
        other.open_ = false;
        return *this;
    }
    WindowHandle(const WindowHandle&) = delete;
    WindowHandle& operator=(const WindowHandle&) = delete;

    std::uint64_t id() const { return id_; }
    bool open() const { return open_; }
    void invalidate() { open_ = false; }

private:
    std::uint64_t id_ = 0;
    bool open_ = false;
};

/// Samples a power source on a background thread while one inference request
/// is in flight. At most one window may be open at a time; windows wrap only
/// the completion call, so model loading and process startup never enter a
/// measurement.
class EnergyMeter {
public:
    explicit EnergyMeter(const MeterConfig& config);

    /// Wraps a caller-supplied source; config still sets the interval and
    /// the CPU-counter switch.
    EnergyMeter(std::unique_ptr<PowerSource> source, const MeterConfig& config);

    ~EnergyMeter();

    EnergyMeter(const EnergyMeter&) = delete;
    EnergyMeter& operator=(const EnergyMeter&) = delete;

    /// Begins sampling. Takes one sample synchronously so even the shortest
    /// window observes the source. Throws if a window is already open.
    WindowHandle start_window();

    /// Stops sampling and integrates. Windows with fewer than two samples
    /// report zero energy. Throws when the handle is not the open window.
    Measurement stop_window(WindowHandle& handle);

    /// Backend description for the run manifest.
    std::string describe() const;

    bool cpu_energy_available() const { return cpu_counter_.available(); }

private:
    void sampler_loop();

    MeterConfig config_;
    std::unique_ptr<PowerSource> source_;
    CpuEnergyCounter cpu_counter_;

    std::mutex mutex_;
    bool window_open_ = false;
    std::uint64_t next_window_id_ = 1;
    std::uint64_t open_window_id_ = 0;
    std::chrono::steady_clock::time_point window_start_{};
    std::vector<PowerSample> samples_;
    std::optional<std::uint64_t> cpu_start_uj_;

    std::thread sampler_;
    bool stop_requested_ = false;
};

} // namespace greenprompt
