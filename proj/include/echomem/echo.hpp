#ifndef ECHOMEM_ECHO_HPP
#define ECHOMEM_ECHO_HPP

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "echomem/core.hpp"

namespace echomem {

/// Data pulses followed by one rephasing read pulse. The read time is the
/// read pulse center.
struct EchoSequence {
    std::vector<PulseSpec> data_pulses;
    PulseSpec read_pulse;

    double read_time() const { return read_pulse.center; }
    /// Data pulses followed by the read pulse.
    std::vector<PulseSpec> all_pulses() const;
    /// Throws ConfigError if a data pulse does not precede the read pulse.
    void validate() const;
    /// Non-fatal issues, e.g. data areas outside the small-area regime.
    std::vector<std::string> warnings() const;
};

/// Multimode storage needs every data area well below pi/2; areas above
/// this bound are reported as warnings.
inline constexpr double kSmallAreaLimit = 0.5;

struct EchoRecord {
    int mode_index = 0;
    double peak_time = 0.0;
    double window_begin = 0.0;
    double window_end = 0.0;
    ComplexEnvelope segment{TimeGrid(0.0, 1.0, 2)};
    double energy = 0.0;
    double efficiency = 0.0;
};

/// Echo time 2*t_read - t_i per data pulse, in data pulse order.
std::vector<double> predict_echo_times(const EchoSequence& seq);

/// Default echo window half-width: 3 pulse durations.
double default_half_width(const EchoSequence& seq);

/// Locates the echo peak in [predicted - half_width, predicted + half_width]
/// and integrates its energy. The window must lie inside the trace grid and
/// must not touch any pulse in `excitation`. Efficiency is energy divided by
/// `reference_energy` (0 when the reference is 0).
EchoRecord extract_echo(const ComplexEnvelope& trace, double predicted_time, double half_width,
                        std::span<const PulseSpec> excitation = {}, double reference_energy = 0.0,
                        int mode_index = 0);

/// One record per data pulse, sorted by echo time. Reference energies are
/// the sampled data pulse energies.
std::vector<EchoRecord> extract_echoes(const ComplexEnvelope& trace, const EchoSequence& seq, double half_width);

struct StrayPeak {
    double time = 0.0;
    double amplitude = 0.0;
};

/// Largest |trace| after the read pulse (plus `guard`) that falls outside
/// every predicted echo window. Used to detect multi-pulse echoes.
StrayPeak largest_stray_peak(const ComplexEnvelope& trace, const EchoSequence& seq, double half_width, double guard);

struct DecayFit {
    double t2 = 0.0;
    double amplitude0 = 0.0;
    double r_squared = 0.0;
};

/// Log-linear least squares of I(t_s) = I0 exp(-2 t_s / T2).
DecayFit fit_decay(std::span<const double> storage_times, std::span<const double> intensities);

/// Closed-form relative two-pulse echo amplitude
/// sin(theta1) * sin^2(theta2/2) * exp(-2 t12 / T2).
double small_area_echo_oracle(double theta1, double theta2, double t12, double T2);

/// CSV with columns mode_index,peak_time_us,energy,efficiency.
void write_echo_csv(std::ostream& out, std::span<const EchoRecord> records);

}  // namespace echomem

#endif
