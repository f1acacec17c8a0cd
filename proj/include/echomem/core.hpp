#ifndef ECHOMEM_CORE_HPP
#define ECHOMEM_CORE_HPP

// Units used throughout the library:
//   time                      microseconds (us)
//   detuning, Rabi amplitude  rad/us
//   pulse area, phase         radians
// Fields are slowly varying complex envelopes in the rotating frame. A
// coherence at positive detuning rotates as exp(+i*Delta*t).

#include <complex>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace echomem {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class GridMismatchError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class TimeGrid {
public:
    TimeGrid(double t_start, double dt, std::size_t n);

    double t_start() const { return t_start_; }
    double dt() const { return dt_; }
    std::size_t size() const { return n_; }
    double t_end() const { return time(n_ - 1); }
    double time(std::size_t k) const { return t_start_ + static_cast<double>(k) * dt_; }

    /// Index of the sample nearest to t, clamped to the grid.
    std::size_t nearest_index(double t) const;

    bool operator==(const TimeGrid& other) const = default;

private:
    double t_start_;
    double dt_;
    std::size_t n_;
};

TimeGrid build_time_grid(double t_start, double t_end, double dt);

class ComplexEnvelope {
public:
    explicit ComplexEnvelope(TimeGrid grid);
    ComplexEnvelope(TimeGrid grid, std::vector<cplx> samples);

    const TimeGrid& grid() const { return grid_; }
    std::size_t size() const { return samples_.size(); }
    std::span<const cplx> samples() const { return samples_; }
    std::span<cplx> samples() { return samples_; }
    cplx operator[](std::size_t k) const { return samples_[k]; }
    cplx& operator[](std::size_t k) { return samples_[k]; }

    ComplexEnvelope& operator+=(const ComplexEnvelope& other);
    ComplexEnvelope& operator*=(cplx factor);

    /// Samples with index in [first, first + count) on their own grid.
    ComplexEnvelope slice(std::size_t first, std::size_t count) const;

private:
    TimeGrid grid_;
    std::vector<cplx> samples_;
};

ComplexEnvelope operator+(ComplexEnvelope a, const ComplexEnvelope& b);
ComplexEnvelope operator*(cplx factor, ComplexEnvelope e);

void require_same_grid(const ComplexEnvelope& a, const ComplexEnvelope& b, const char* what);

enum class PulseShape { rectangular, gaussian };

/// A single excitation pulse. For gaussian pulses `duration` is the FWHM of
/// |Omega(t)|; the support is truncated at +/- 2 durations around the center.
struct PulseSpec {
    double center = 0.0;
    double duration = 0.015;
    double area = 0.0;
    PulseShape shape = PulseShape::rectangular;
    double phase = 0.0;

    double support_begin() const;
    double support_end() const;
    void validate() const;
};

enum class LineKind { gaussian, lorentzian };

struct LineShape {
    LineKind kind = LineKind::gaussian;
    double fwhm = 150.0;
    double center = 0.0;

    /// Normalized probability density g(Delta) per rad/us.
    double density(double detuning) const;
    void validate() const;
};

struct EnsembleSpec {
    double T1 = kInf;
    double T2 = kInf;
    LineShape line;
    double alpha_l = 0.0;
    double n_atoms = 1e8;
    double decohered_fraction = 0.0;

    void validate() const;
};

ComplexEnvelope sample_pulse(const PulseSpec& pulse, const TimeGrid& grid);
ComplexEnvelope superpose(std::span<const PulseSpec> pulses, const TimeGrid& grid);

/// Sum of |s_k|^2 * dt.
double envelope_energy(const ComplexEnvelope& e);
/// Sum of |s_k| * dt; the pulse area seen by the integrator.
double envelope_area(const ComplexEnvelope& e);

const char* to_string(PulseShape shape);
const char* to_string(LineKind kind);
PulseShape parse_pulse_shape(const std::string& name);
LineKind parse_line_kind(const std::string& name);

}  // namespace echomem

#endif
