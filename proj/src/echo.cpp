#include "echomem/echo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>

#include "echomem/csv.hpp"

namespace echomem {

std::vector<PulseSpec> EchoSequence::all_pulses() const
{
    std::vector<PulseSpec> pulses = data_pulses;
    pulses.push_back(read_pulse);
    return pulses;
}

void EchoSequence::validate() const
{
    read_pulse.validate();
    for (std::size_t i = 0; i < data_pulses.size(); ++i) {
        data_pulses[i].validate();
        if (!(data_pulses[i].support_end() <= read_pulse.support_begin())) {
            std::ostringstream msg;
            msg << "data pulse " << i << " at t = " << data_pulses[i].center
                << " us does not precede the read pulse at t = " << read_pulse.center << " us";
            throw ConfigError(msg.str());
        }
    }
}

std::vector<std::string> EchoSequence::warnings() const
{
    std::vector<std::string> out;
    if (data_pulses.size() < 2) {
        return out;
    }
    for (std::size_t i = 0; i < data_pulses.size(); ++i) {
        if (data_pulses[i].area > kSmallAreaLimit) {
            std::ostringstream msg;
            msg << "data pulse " << i << " area " << data_pulses[i].area
                << " rad is not much smaller than pi/2; multimode storage needs small areas (<= "
                << kSmallAreaLimit << " rad) to avoid echo distortion and multi-pulse echoes";
            out.push_back(msg.str());
        }
    }
    return out;
}

std::vector<double> predict_echo_times(const EchoSequence& seq)
{
    std::vector<double> times;
    times.reserve(seq.data_pulses.size());
    for (const auto& p : seq.data_pulses) {
        times.push_back(2.0 * seq.read_time() - p.center);
    }
    return times;
}

double default_half_width(const EchoSequence& seq) { return 3.0 * seq.read_pulse.duration; }

EchoRecord extract_echo(const ComplexEnvelope& trace, double predicted_time, double half_width,
                        std::span<const PulseSpec> excitation, double reference_energy, int mode_index)
{
    if (!(half_width > 0.0)) {
        throw ConfigError("extract_echo: half_width must be positive");
    }
    const auto& grid = trace.grid();
    const double lo = predicted_time - half_width;
    const double hi = predicted_time + half_width;
    if (lo < grid.t_start() || hi > grid.t_end()) {
        std::ostringstream msg;
        msg << "echo window [" << lo << ", " << hi << "] us lies outside the trace";
        throw ConfigError(msg.str());
    }
    for (std::size_t i = 0; i < excitation.size(); ++i) {
        const auto& p = excitation[i];
        if (p.support_begin() < hi && p.support_end() > lo) {
            std::ostringstream msg;
            msg << "echo window [" << lo << ", " << hi << "] us overlaps excitation pulse " << i << " at t = "
                << p.center << " us";
            throw ConfigError(msg.str());
        }
    }

    const double dt = grid.dt();
    const auto first = static_cast<std::size_t>(std::ceil((lo - grid.t_start()) / dt - 1e-9));
    auto last = static_cast<std::size_t>(std::floor((hi - grid.t_start()) / dt + 1e-9));
    last = std::min(last, grid.size() - 1);
    if (last < first + 1) {
        throw ConfigError("extract_echo: window shorter than two samples");
    }

    EchoRecord rec;
    rec.mode_index = mode_index;
    rec.window_begin = lo;
    rec.window_end = hi;
    rec.segment = trace.slice(first, last - first + 1);
    rec.energy = envelope_energy(rec.segment);

    std::size_t best = first;
    double best_abs = -1.0;
    for (std::size_t k = first; k <= last; ++k) {
        const double a = std::abs(trace[k]);
        if (a > best_abs) {
            best_abs = a;
            best = k;
        }
    }
    rec.peak_time = best_abs > 0.0 ? grid.time(best) : predicted_time;
    rec.efficiency = reference_energy > 0.0 ? rec.energy / reference_energy : 0.0;
    return rec;
}

std::vector<EchoRecord> extract_echoes(const ComplexEnvelope& trace, const EchoSequence& seq, double half_width)
{
    const auto times = predict_echo_times(seq);
    const auto pulses = seq.all_pulses();
    std::vector<EchoRecord> out;
    out.reserve(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double reference = envelope_energy(sample_pulse(seq.data_pulses[i], trace.grid()));
        out.push_back(extract_echo(trace, times[i], half_width, pulses, reference, static_cast<int>(i)));
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const EchoRecord& a, const EchoRecord& b) { return a.window_begin < b.window_begin; });
    return out;
}

StrayPeak largest_stray_peak(const ComplexEnvelope& trace, const EchoSequence& seq, double half_width, double guard)
{
    const auto times = predict_echo_times(seq);
    const double start = seq.read_pulse.support_end() + guard;
    const auto& grid = trace.grid();
    StrayPeak best;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double t = grid.time(k);
        if (t < start) {
            continue;
        }
        const bool in_window =
            std::any_of(times.begin(), times.end(), [&](double te) { return std::abs(t - te) <= half_width; });
        if (in_window) {
            continue;
        }
        const double a = std::abs(trace[k]);
        if (a > best.amplitude) {
            best = {t, a};
        }
    }
    return best;
}

DecayFit fit_decay(std::span<const double> storage_times, std::span<const double> intensities)
{
    if (storage_times.size() != intensities.size()) {
        throw std::invalid_argument("fit_decay: storage times and intensities differ in length");
    }
    const std::size_t n = storage_times.size();
    if (n < 3) {
        throw std::invalid_argument("fit_decay: at least 3 points required");
    }
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(intensities[i] > 0.0)) {
            std::ostringstream msg;
            msg << "fit_decay: intensity " << i << " is not positive";
            throw std::invalid_argument(msg.str());
        }
        y[i] = std::log(intensities[i]);
    }
    const double nn = static_cast<double>(n);
    const double mx = std::accumulate(storage_times.begin(), storage_times.end(), 0.0) / nn;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / nn;
    double sxx = 0.0;
    double sxy = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = storage_times[i] - mx;
        const double dy = y[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx == 0.0) {
        throw std::invalid_argument("fit_decay: storage times must not all be equal");
    }
    const double slope = sxy / sxx;
    const double intercept = my - slope * mx;

    DecayFit fit;
    fit.t2 = slope < 0.0 ? -2.0 / slope : kInf;
    fit.amplitude0 = std::exp(intercept);
    fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return fit;
}

double small_area_echo_oracle(double theta1, double theta2, double t12, double T2)
{
    const double s = std::sin(0.5 * theta2);
    const double decay = std::isfinite(T2) ? std::exp(-2.0 * t12 / T2) : 1.0;
    return std::sin(theta1) * s * s * decay;
}

void write_echo_csv(std::ostream& out, std::span<const EchoRecord> records)
{
    out << "mode_index,peak_time_us,energy,efficiency\n";
    for (const auto& r : records) {
        out << r.mode_index << ',' << format_number(r.peak_time) << ',' << format_number(r.energy) << ','
            << format_number(r.efficiency) << '\n';
    }
}

}  // namespace echomem
