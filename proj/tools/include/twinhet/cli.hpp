#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace twinhet::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitIo = 4;
inline constexpr int kExitInvalidPlan = 5;

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Every knob of every subcommand. NaN / -1 mean "derive".
struct RunConfig {
    // detector; NaN picks 0 for completeness-check and verify-interaction, 0.6 elsewhere
    double lambda = std::numeric_limits<double>::quiet_NaN();
    double eta = 1.0;
    double state_lambda = std::numeric_limits<double>::quiet_NaN();  // defaults to lambda
    double w_re = 1.0;
    double w_im = 0.0;
    double z_re = std::numeric_limits<double>::quiet_NaN();  // grid center, defaults to w
    double z_im = std::numeric_limits<double>::quiet_NaN();
    double n_bar = std::numeric_limits<double>::quiet_NaN();  // phase-density: optimal state
    int n_max = -1;
    int steps = 20;
    int samples = 1;
    std::uint64_t seed = 0;
    double grid_halfwidth = 6.0;
    int grid_nodes = -1;
    int phi_nodes = 360;
    std::string method = "frame";
    std::vector<double> n_bars = {10, 20, 40};
    std::vector<double> mus = {0.0, 0.5, 1.0};
    double omega_a = 1.0;
    double omega_b = 3.0;
    double omega_c = 4.5;
    double tol = 1e-9;
    int radial_nodes = 201;
    int angular_nodes = 201;
    double threshold = -1.0;
    std::string out = "-";
    std::string format = "csv";
};

// Flags win over the config file: the file only seeds defaults.
void apply_config_file(const std::string& path, RunConfig& cfg);

// temp file in the same directory, then rename; "-" writes to `console`
void write_atomic(const std::string& path, const std::string& content, std::ostream& console);

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace twinhet::cli
