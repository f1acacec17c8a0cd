#ifndef ECHOMEM_INTERFEROMETER_HPP
#define ECHOMEM_INTERFEROMETER_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "echomem/bloch.hpp"
#include "echomem/core.hpp"
#include "echomem/echo.hpp"
#include "echomem/propagation.hpp"

namespace echomem {

/// Two-component polarization state (horizontal, vertical).
struct Jones {
    cplx h{1.0, 0.0};
    cplx v{0.0, 0.0};

    double norm() const { return std::sqrt(std::norm(h) + std::norm(v)); }
    /// <other|this>
    cplx overlap_with(const Jones& other) const { return std::conj(other.h) * h + std::conj(other.v) * v; }
    static Jones linear(double angle) { return {{std::cos(angle), 0.0}, {std::sin(angle), 0.0}}; }
};

struct ArmSpec {
    MediumSpec medium;
    /// Amplitude factor of the arm's coupling losses, applied to the field
    /// leaving the memory.
    double amplitude_scale = 1.0;
    Jones jones;

    void validate() const;
};

struct PhaseNoiseSpec {
    double sigma = 0.0;
    std::size_t shots_per_point = 1;
    std::uint64_t seed = 0;

    void validate() const;
};

struct FringeFit {
    double visibility = 0.0;
    double phase_offset = 0.0;
    double mean_level = 0.0;
};

struct FringeScan {
    std::vector<double> phases;
    std::vector<double> signals;
    std::vector<double> signal_std;
    FringeFit fitted;
    double visibility_uncertainty = 0.0;
    /// Set when the raw fitted visibility fell outside [0, 1] and was clipped.
    bool clipped = false;
    double raw_visibility = 0.0;
};

class FitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Output port of two balanced couplers: (E1 + exp(i*phase) E2) / 2.
ComplexEnvelope combine_arms(const ComplexEnvelope& e1, const ComplexEnvelope& e2, double phase);

/// Both output ports of the final coupler: (E1 +/- exp(i*phase) E2) / 2.
std::pair<ComplexEnvelope, ComplexEnvelope> combine_arms_ports(const ComplexEnvelope& e1, const ComplexEnvelope& e2,
                                                               double phase);

/// Scales E by <axis|jones>.
ComplexEnvelope project_polarization(const ComplexEnvelope& e, const Jones& jones, const Jones& axis);

/// Sum of conj(E1) * E2 * dt.
cplx inner_product(const ComplexEnvelope& e1, const ComplexEnvelope& e2);

/// Noiseless fringe visibility 2|<E1,E2>| / (|E1|^2 + |E2|^2).
double overlap_visibility(const ComplexEnvelope& e1, const ComplexEnvelope& e2);

/// Least-squares fit of signal = A + B cos(phase - phi0). V = B / A.
FringeScan fit_fringe(std::vector<double> phases, std::vector<double> signals, std::vector<double> signal_std);

/// Integrated output energy per phase point, averaged over shots with
/// Gaussian phase jitter drawn from a counter-based stream keyed by
/// (noise.seed, stream, phase index, shot). `incoherent_energy` is a
/// phase-independent background added to every shot.
FringeScan scan_fringe(const ComplexEnvelope& e1, const ComplexEnvelope& e2, std::span<const double> phases,
                       const PhaseNoiseSpec& noise, std::uint64_t stream = 0, double incoherent_energy = 0.0);

/// Gaussian jitter washes the fringe out by exp(-sigma^2 / 2).
double expected_noise_visibility(double sigma);

/// Collective-to-incoherent emission ratio (N - N')^2 / N.
double collective_snr(double n_atoms, double n_decohered);

/// `count` phases uniformly covering [start, start + span).
std::vector<double> phase_range(double start, double span, std::size_t count);

struct QuadratureSpec {
    std::size_t points = kDefaultQuadraturePoints;
    double span = kDefaultQuadratureSpan;
};

struct DualArmConfig {
    TimeGrid grid{0.0, 0.0002, 2};
    EchoSequence sequence;
    std::array<ArmSpec, 2> arms;
    PhaseNoiseSpec noise;
    std::vector<double> phases;
    QuadratureSpec quadrature;
    bool balance = true;
    Jones polarizer_axis;
    /// Echo window half-width; 0 selects 3 read-pulse durations.
    double half_width = 0.0;
    /// Adds the incoherent forward emission implied by collective_snr to
    /// every fringe point.
    bool incoherent_background = false;

    double effective_half_width() const;
    void validate() const;
};

struct ArmResult {
    ComplexEnvelope input{TimeGrid(0.0, 1.0, 2)};
    ComplexEnvelope output{TimeGrid(0.0, 1.0, 2)};
    std::vector<EchoRecord> echoes;
};

struct ModeResult {
    int mode_index = 0;
    double storage_time = 0.0;
    double energy_arm1 = 0.0;
    double energy_arm2 = 0.0;
    double overlap_visibility = 0.0;
    FringeScan scan;
};

struct DualArmResult {
    std::array<ArmResult, 2> arms;
    /// Sorted by echo time.
    std::vector<ModeResult> modes;
};

/// Simulates one memory: drive -> Maxwell-Bloch -> coupling loss ->
/// polarizer, then extracts the echoes.
ArmResult simulate_arm(const ArmSpec& arm, const TimeGrid& grid, const EchoSequence& seq,
                       const QuadratureSpec& quadrature, const Jones& polarizer_axis, double half_width);

/// Both memories simulated independently, optionally balanced per mode,
/// then one fringe scan per mode.
DualArmResult run_dual_arm_experiment(const DualArmConfig& config);

/// CSV with columns phase_rad,mean_signal,std_signal.
void write_fringe_csv(std::ostream& out, const FringeScan& scan);

}  // namespace echomem

#endif
