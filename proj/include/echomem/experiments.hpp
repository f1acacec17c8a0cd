#ifndef ECHOMEM_EXPERIMENTS_HPP
#define ECHOMEM_EXPERIMENTS_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "echomem/config.hpp"
#include "echomem/echo.hpp"
#include "echomem/interferometer.hpp"

namespace echomem {

struct EchoRun {
    ArmResult arm;
};

struct DecayPoint {
    double storage_time = 0.0;
    double energy_arm1 = 0.0;
    double energy_arm2 = 0.0;
    double visibility = 0.0;
    double visibility_err = 0.0;
    double overlap_visibility = 0.0;
};

struct DecayRun {
    std::vector<DecayPoint> points;
    DecayFit fit_arm1;
    DecayFit fit_arm2;
};

/// Single-arm trace (first configured arm) and its echo records.
EchoRun run_echo(const ExperimentConfig& config);

/// Dual-arm fringe scan on the configured sequence; also used for
/// multimode runs.
DualArmResult run_fringe(const ExperimentConfig& config);

/// Storage-time sweep: one dual-arm run per t_s, each with its own grid.
DecayRun run_decay(const ExperimentConfig& config);

/// Runs `cmd`, writes its CSV files into `out_dir`, and returns the
/// one-line summary.
std::string run_subcommand(Subcommand cmd, const ExperimentConfig& config, const std::filesystem::path& out_dir);

/// Column layouts of the tables written by run_subcommand.
void write_trace_csv(std::ostream& out, const ComplexEnvelope& drive, const ComplexEnvelope& output);
void write_visibility_csv(std::ostream& out, const std::vector<ModeResult>& modes);
void write_decay_csv(std::ostream& out, const std::vector<DecayPoint>& points);

}  // namespace echomem

#endif
