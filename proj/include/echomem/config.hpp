#ifndef ECHOMEM_CONFIG_HPP
#define ECHOMEM_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "echomem/echo.hpp"
#include "echomem/interferometer.hpp"

namespace echomem {

enum class Subcommand { echo, fringe, decay, multimode };

const char* to_string(Subcommand cmd);
Subcommand parse_subcommand(const std::string& name);

struct ArmConfig {
    std::string name;
    EnsembleSpec ensemble;
    /// 0 selects the minimum slice count for the optical depth.
    std::size_t n_slices = 0;
    double amplitude_scale = 1.0;
    Jones jones;
};

/// In-memory form of the JSON experiment file; see docs/config_schema.md.
struct ExperimentConfig {
    std::uint64_t seed = 0;
    double t_start = 0.0;
    double t_end = 0.0;
    double dt = 0.0002;
    QuadratureSpec quadrature;
    EchoSequence sequence;
    std::vector<ArmConfig> arms;
    PhaseNoiseSpec noise;
    std::vector<double> phases;
    std::vector<double> storage_times;
    bool balance = true;
    Jones polarizer_axis;
    double half_width = 0.0;
    bool incoherent_background = false;
    std::string output_dir;

    TimeGrid grid() const { return build_time_grid(t_start, t_end, dt); }
    double effective_half_width() const;
    /// Calibrated arm for the given detuning quadrature.
    ArmSpec arm_spec(std::size_t index) const;
    /// Dual-arm experiment on the configured grid and sequence.
    DualArmConfig dual_arm(const TimeGrid& grid, const EchoSequence& seq) const;
};

/// Parses JSON text. Throws ConfigError naming the offending field, or the
/// line and column of a syntax error.
ExperimentConfig parse_config(const std::string& text);

ExperimentConfig load_config(const std::filesystem::path& path);

struct ValidationReport {
    std::vector<std::string> violations;
    std::vector<std::string> warnings;

    bool valid() const { return violations.empty(); }
};

/// Every violation that would stop `cmd` (all subcommands when empty).
ValidationReport check_config(const ExperimentConfig& config, std::optional<Subcommand> cmd = std::nullopt);

/// load_config + check_config, with parse failures reported as violations.
ValidationReport validate_config(const std::filesystem::path& path, std::optional<Subcommand> cmd = std::nullopt);

/// Sequence for one point of a storage-time sweep: the first data pulse is
/// kept and the read pulse moves to t_data + t_s/2.
EchoSequence sequence_for_storage_time(const EchoSequence& base, double storage_time);

/// Grid for one sweep point: t_start and dt from the config, ending one
/// window plus a margin after the echo.
TimeGrid grid_for_storage_time(const ExperimentConfig& config, double storage_time);

}  // namespace echomem

#endif
