#include "echomem/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace echomem {

namespace {

constexpr double kAreaTolerance = 1e-3;
constexpr double kGaussianSupportDurations = 2.0;

double fwhm_to_sigma(double fwhm) { return fwhm / (2.0 * std::sqrt(2.0 * std::log(2.0))); }

}  // namespace

TimeGrid::TimeGrid(double t_start, double dt, std::size_t n) : t_start_(t_start), dt_(dt), n_(n)
{
    if (!(dt > 0.0) || !std::isfinite(dt)) {
        throw ConfigError("time grid: dt must be positive and finite");
    }
    if (n < 2) {
        throw ConfigError("time grid: at least 2 samples required");
    }
    if (!std::isfinite(t_start)) {
        throw ConfigError("time grid: t_start must be finite");
    }
}

std::size_t TimeGrid::nearest_index(double t) const
{
    const double k = std::round((t - t_start_) / dt_);
    if (k <= 0.0) {
        return 0;
    }
    return std::min(static_cast<std::size_t>(k), n_ - 1);
}

TimeGrid build_time_grid(double t_start, double t_end, double dt)
{
    if (!(dt > 0.0)) {
        throw ConfigError("time grid: dt must be positive");
    }
    if (!(t_end > t_start)) {
        throw ConfigError("time grid: t_end must exceed t_start");
    }
    const double span = t_end - t_start;
    if (dt > span) {
        std::ostringstream msg;
        msg << "time grid: dt = " << dt << " exceeds the span " << span;
        throw ConfigError(msg.str());
    }
    const auto n = static_cast<std::size_t>(std::llround(span / dt)) + 1;
    return TimeGrid(t_start, dt, n);
}

ComplexEnvelope::ComplexEnvelope(TimeGrid grid) : grid_(grid), samples_(grid.size(), cplx{}) {}

ComplexEnvelope::ComplexEnvelope(TimeGrid grid, std::vector<cplx> samples)
    : grid_(grid), samples_(std::move(samples))
{
    if (samples_.size() != grid_.size()) {
        throw GridMismatchError("envelope: sample count does not match grid");
    }
    for (const auto& s : samples_) {
        if (!std::isfinite(s.real()) || !std::isfinite(s.imag())) {
            throw std::invalid_argument("envelope: non-finite sample");
        }
    }
}

ComplexEnvelope& ComplexEnvelope::operator+=(const ComplexEnvelope& other)
{
    require_same_grid(*this, other, "envelope addition");
    for (std::size_t k = 0; k < samples_.size(); ++k) {
        samples_[k] += other.samples_[k];
    }
    return *this;
}

ComplexEnvelope& ComplexEnvelope::operator*=(cplx factor)
{
    for (auto& s : samples_) {
        s *= factor;
    }
    return *this;
}

ComplexEnvelope ComplexEnvelope::slice(std::size_t first, std::size_t count) const
{
    if (count < 2 || first + count > samples_.size()) {
        throw std::out_of_range("envelope slice outside grid");
    }
    std::vector<cplx> part(samples_.begin() + static_cast<std::ptrdiff_t>(first),
                           samples_.begin() + static_cast<std::ptrdiff_t>(first + count));
    return ComplexEnvelope(TimeGrid(grid_.time(first), grid_.dt(), count), std::move(part));
}

ComplexEnvelope operator+(ComplexEnvelope a, const ComplexEnvelope& b)
{
    a += b;
    return a;
}

ComplexEnvelope operator*(cplx factor, ComplexEnvelope e)
{
    e *= factor;
    return e;
}

void require_same_grid(const ComplexEnvelope& a, const ComplexEnvelope& b, const char* what)
{
    if (!(a.grid() == b.grid())) {
        throw GridMismatchError(std::string(what) + ": envelopes are on different time grids");
    }
}

double PulseSpec::support_begin() const
{
    const double half = shape == PulseShape::rectangular ? 0.5 * duration : kGaussianSupportDurations * duration;
    return center - half;
}

double PulseSpec::support_end() const
{
    const double half = shape == PulseShape::rectangular ? 0.5 * duration : kGaussianSupportDurations * duration;
    return center + half;
}

void PulseSpec::validate() const
{
    if (!(duration > 0.0)) {
        throw ConfigError("pulse: duration must be positive");
    }
    if (!(area >= 0.0)) {
        throw ConfigError("pulse: area must be non-negative");
    }
    if (!std::isfinite(center) || !std::isfinite(phase) || !std::isfinite(area)) {
        throw ConfigError("pulse: non-finite parameter");
    }
}

double LineShape::density(double detuning) const
{
    const double x = detuning - center;
    if (kind == LineKind::gaussian) {
        const double s = fwhm_to_sigma(fwhm);
        return std::exp(-0.5 * x * x / (s * s)) / (s * std::sqrt(2.0 * kPi));
    }
    const double hw = 0.5 * fwhm;
    return hw / (kPi * (x * x + hw * hw));
}

void LineShape::validate() const
{
    if (!(fwhm > 0.0) || !std::isfinite(fwhm)) {
        throw ConfigError("line shape: fwhm must be positive");
    }
    if (!std::isfinite(center)) {
        throw ConfigError("line shape: center detuning must be finite");
    }
}

void EnsembleSpec::validate() const
{
    line.validate();
    if (!(T2 > 0.0)) {
        throw ConfigError("ensemble: T2 must be positive");
    }
    if (!(T1 > 0.0)) {
        throw ConfigError("ensemble: T1 must be positive");
    }
    if (std::isfinite(T1) && T2 > 2.0 * T1) {
        throw ConfigError("ensemble: T2 must not exceed 2*T1");
    }
    if (!(alpha_l >= 0.0) || !std::isfinite(alpha_l)) {
        throw ConfigError("ensemble: alphaL must be non-negative");
    }
    if (!(n_atoms >= 1.0)) {
        throw ConfigError("ensemble: n_atoms must be at least 1");
    }
    if (!(decohered_fraction >= 0.0 && decohered_fraction <= 1.0)) {
        throw ConfigError("ensemble: decohered_fraction must lie in [0, 1]");
    }
}

ComplexEnvelope sample_pulse(const PulseSpec& pulse, const TimeGrid& grid)
{
    pulse.validate();
    const double begin = pulse.support_begin();
    const double end = pulse.support_end();
    const double slack = 1e-9 * grid.dt();
    if (begin < grid.t_start() - slack || end > grid.t_end() + slack) {
        std::ostringstream msg;
        msg << "pulse at t = " << pulse.center << " us with support [" << begin << ", " << end
            << "] is truncated by the grid [" << grid.t_start() << ", " << grid.t_end() << "]";
        throw ConfigError(msg.str());
    }

    ComplexEnvelope env(grid);
    if (pulse.area == 0.0) {
        return env;
    }
    const cplx carrier = std::polar(1.0, pulse.phase);
    const double dt = grid.dt();
    const std::size_t first = grid.nearest_index(begin);
    const std::size_t last = grid.nearest_index(end);

    if (pulse.shape == PulseShape::rectangular) {
        // Cell-averaged rectangle: each sample carries the fraction of its
        // cell [t - dt/2, t + dt/2] covered by the pulse.
        const double height = pulse.area / pulse.duration;
        for (std::size_t k = first; k <= last; ++k) {
            const double t = grid.time(k);
            const double lo = std::max(t - 0.5 * dt, begin);
            const double hi = std::min(t + 0.5 * dt, end);
            if (hi > lo) {
                env[k] = carrier * (height * (hi - lo) / dt);
            }
        }
    } else {
        const double s = fwhm_to_sigma(pulse.duration);
        const double peak = pulse.area / (s * std::sqrt(2.0 * kPi));
        for (std::size_t k = first; k <= last; ++k) {
            const double t = grid.time(k);
            if (t < begin || t > end) {
                continue;
            }
            const double x = (t - pulse.center) / s;
            env[k] = carrier * (peak * std::exp(-0.5 * x * x));
        }
    }

    const double numeric = envelope_area(env);
    if (std::abs(numeric - pulse.area) > kAreaTolerance * pulse.area) {
        std::ostringstream msg;
        msg << "pulse at t = " << pulse.center << " us: sampled area " << numeric << " deviates from declared "
            << pulse.area << " by more than 0.1%; refine dt";
        throw ConfigError(msg.str());
    }
    return env;
}

ComplexEnvelope superpose(std::span<const PulseSpec> pulses, const TimeGrid& grid)
{
    std::vector<std::size_t> order(pulses.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return pulses[a].support_begin() < pulses[b].support_begin();
    });
    for (std::size_t i = 1; i < order.size(); ++i) {
        const auto& prev = pulses[order[i - 1]];
        const auto& next = pulses[order[i]];
        if (next.support_begin() < prev.support_end()) {
            const auto a = std::min(order[i - 1], order[i]);
            const auto b = std::max(order[i - 1], order[i]);
            std::ostringstream msg;
            msg << "pulses " << a << " and " << b << " overlap";
            throw ConfigError(msg.str());
        }
    }

    ComplexEnvelope total(grid);
    for (const auto& p : pulses) {
        total += sample_pulse(p, grid);
    }
    return total;
}

double envelope_energy(const ComplexEnvelope& e)
{
    double sum = 0.0;
    for (const auto& s : e.samples()) {
        sum += std::norm(s);
    }
    return sum * e.grid().dt();
}

double envelope_area(const ComplexEnvelope& e)
{
    double sum = 0.0;
    for (const auto& s : e.samples()) {
        sum += std::abs(s);
    }
    return sum * e.grid().dt();
}

const char* to_string(PulseShape shape)
{
    return shape == PulseShape::rectangular ? "rectangular" : "gaussian";
}

const char* to_string(LineKind kind)
{
    return kind == LineKind::gaussian ? "gaussian" : "lorentzian";
}

PulseShape parse_pulse_shape(const std::string& name)
{
    if (name == "rectangular") {
        return PulseShape::rectangular;
    }
    if (name == "gaussian") {
        return PulseShape::gaussian;
    }
    throw ConfigError("unknown pulse shape '" + name + "'");
}

LineKind parse_line_kind(const std::string& name)
{
    if (name == "gaussian") {
        return LineKind::gaussian;
    }
    if (name == "lorentzian") {
        return LineKind::lorentzian;
    }
    throw ConfigError("unknown line shape '" + name + "'");
}

}  // namespace echomem
