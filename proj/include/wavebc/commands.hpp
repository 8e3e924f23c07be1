#ifndef WAVEBC_COMMANDS_HPP
#define WAVEBC_COMMANDS_HPP

#include <optional>
#include <string>

namespace wavebc {

// Exit codes: 0 success/pass, 1 usage, 2 data invalid, 3 characterization fail,
// 4 numerical abort.
enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 1,
    kExitDataInvalid = 2,
    kExitCheckFailed = 3,
    kExitNumericalAbort = 4,
};

struct SimulateOptions {
    std::string config_path;
    std::string out_path;
    std::optional<double> noise;          // overrides noise.level
    bool nonlocal = false;                // overrides nonlocal.enabled
    std::optional<std::uint64_t> seed;    // overrides noise.seed
    bool deterministic = false;
};

struct InvertOptions {
    std::string data_path;
    std::string out_dir;
    std::optional<double> spectral_floor;
    std::optional<int> partition_step;
};

struct CheckOptions {
    std::string data_path;
    std::string report_path;
    bool json = false;
};

struct OracleOptions {
    std::string config_path;
    std::string out_path;
    bool deterministic = false;
};

struct PlotOptions {
    std::string result_dir;
    std::string out_dir;
};

int cmd_simulate(const SimulateOptions& opt);
int cmd_invert(const InvertOptions& opt);
int cmd_check(const CheckOptions& opt);
int cmd_oracle(const OracleOptions& opt);
int cmd_plot(const PlotOptions& opt);

}  // namespace wavebc

#endif
