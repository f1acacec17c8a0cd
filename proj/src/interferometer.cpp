#include "echomem/interferometer.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include <Eigen/Dense>

#include "echomem/csv.hpp"
#include "echomem/rng.hpp"

namespace echomem {

void ArmSpec::validate() const
{
    medium.validate();
    if (!(amplitude_scale >= 0.0) || !std::isfinite(amplitude_scale)) {
        throw ConfigError("arm: amplitude_scale must be non-negative");
    }
    if (std::abs(jones.norm() - 1.0) > 1e-12) {
        throw ConfigError("arm: Jones vector must have unit norm");
    }
}

void PhaseNoiseSpec::validate() const
{
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
        throw ConfigError("phase noise: sigma must be non-negative");
    }
    if (shots_per_point < 1) {
        throw ConfigError("phase noise: shots_per_point must be at least 1");
    }
}

ComplexEnvelope combine_arms(const ComplexEnvelope& e1, const ComplexEnvelope& e2, double phase)
{
    return combine_arms_ports(e1, e2, phase).first;
}

std::pair<ComplexEnvelope, ComplexEnvelope> combine_arms_ports(const ComplexEnvelope& e1, const ComplexEnvelope& e2,
                                                               double phase)
{
    require_same_grid(e1, e2, "combine_arms");
    const cplx shift = std::polar(1.0, phase);
    ComplexEnvelope plus(e1.grid());
    ComplexEnvelope minus(e1.grid());
    for (std::size_t k = 0; k < e1.size(); ++k) {
        const cplx b = shift * e2[k];
        plus[k] = 0.5 * (e1[k] + b);
        minus[k] = 0.5 * (e1[k] - b);
    }
    return {std::move(plus), std::move(minus)};
}

ComplexEnvelope project_polarization(const ComplexEnvelope& e, const Jones& jones, const Jones& axis)
{
    return jones.overlap_with(axis) * e;
}

cplx inner_product(const ComplexEnvelope& e1, const ComplexEnvelope& e2)
{
    require_same_grid(e1, e2, "inner_product");
    cplx sum{};
    for (std::size_t k = 0; k < e1.size(); ++k) {
        sum += std::conj(e1[k]) * e2[k];
    }
    return sum * e1.grid().dt();
}

double overlap_visibility(const ComplexEnvelope& e1, const ComplexEnvelope& e2)
{
    const double n1 = envelope_energy(e1);
    const double n2 = envelope_energy(e2);
    if (n1 + n2 == 0.0) {
        throw std::invalid_argument("overlap_visibility: both fields are zero");
    }
    return std::min(1.0, 2.0 * std::abs(inner_product(e1, e2)) / (n1 + n2));
}

FringeScan fit_fringe(std::vector<double> phases, std::vector<double> signals, std::vector<double> signal_std)
{
    const std::size_t n = phases.size();
    if (signals.size() != n || signal_std.size() != n) {
        throw std::invalid_argument("fit_fringe: phase and signal lists differ in length");
    }
    if (n < 8) {
        throw FitError("fringe fit needs at least 8 phase points");
    }
    const auto [lo, hi] = std::minmax_element(phases.begin(), phases.end());
    const double coverage = (*hi - *lo) * static_cast<double>(n) / static_cast<double>(n - 1);
    if (coverage < 2.0 * kPi - 1e-9) {
        throw FitError("fringe fit needs phase points spanning a full period");
    }

    Eigen::MatrixXd x(static_cast<Eigen::Index>(n), 3);
    Eigen::VectorXd y(static_cast<Eigen::Index>(n));
    for (std::size_t j = 0; j < n; ++j) {
        const auto r = static_cast<Eigen::Index>(j);
        x(r, 0) = 1.0;
        x(r, 1) = std::cos(phases[j]);
        x(r, 2) = std::sin(phases[j]);
        y(r) = signals[j];
    }
    const Eigen::Matrix3d normal = x.transpose() * x;
    const Eigen::Vector3d coef = normal.ldlt().solve(x.transpose() * y);
    const double a = coef(0);
    const double b = std::hypot(coef(1), coef(2));
    if (!(a > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
        throw FitError("fringe fit failed: degenerate signal (mean level not positive)");
    }

    FringeScan scan;
    scan.raw_visibility = b / a;
    scan.fitted.visibility = std::clamp(scan.raw_visibility, 0.0, 1.0);
    scan.clipped = scan.raw_visibility > 1.0;
    scan.fitted.phase_offset = std::atan2(coef(2), coef(1));
    scan.fitted.mean_level = a;

    if (n > 3) {
        const Eigen::VectorXd resid = y - x * coef;
        const double s2 = resid.squaredNorm() / static_cast<double>(n - 3);
        const Eigen::Matrix3d cov = s2 * normal.inverse();
        Eigen::Vector3d grad;
        grad(0) = -scan.raw_visibility / a;
        if (b > 0.0) {
            grad(1) = coef(1) / (b * a);
            grad(2) = coef(2) / (b * a);
        } else {
            grad(1) = 1.0 / a;
            grad(2) = 0.0;
        }
        scan.visibility_uncertainty = std::sqrt(std::max(0.0, grad.dot(cov * grad)));
    }
    scan.phases = std::move(phases);
    scan.signals = std::move(signals);
    scan.signal_std = std::move(signal_std);
    return scan;
}

FringeScan scan_fringe(const ComplexEnvelope& e1, const ComplexEnvelope& e2, std::span<const double> phases,
                       const PhaseNoiseSpec& noise, std::uint64_t stream, double incoherent_energy)
{
    noise.validate();
    // energy((E1 + e^{i phi} E2)/2) = (|E1|^2 + |E2|^2 + 2 Re(e^{i phi} <E1,E2>)) / 4
    const double n1 = envelope_energy(e1);
    const double n2 = envelope_energy(e2);
    const cplx c = inner_product(e1, e2);
    const std::size_t shots = noise.sigma > 0.0 ? noise.shots_per_point : 1;
    const CounterRng rng(noise.seed, stream_id("fringe") ^ stream);

    const std::size_t n = phases.size();
    std::vector<double> mean(n);
    std::vector<double> spread(n);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t jj = 0; jj < static_cast<std::ptrdiff_t>(n); ++jj) {
        const auto j = static_cast<std::size_t>(jj);
        const CounterRng point = rng.substream(j);
        double sum = 0.0;
        double sum_sq = 0.0;
        for (std::size_t s = 0; s < shots; ++s) {
            const double jitter = noise.sigma > 0.0 ? noise.sigma * point.normal(s) : 0.0;
            const double energy =
                0.25 * (n1 + n2 + 2.0 * (std::polar(1.0, phases[j] + jitter) * c).real()) + incoherent_energy;
            sum += energy;
            sum_sq += energy * energy;
        }
        const double m = sum / static_cast<double>(shots);
        mean[j] = m;
        spread[j] = shots > 1 ? std::sqrt(std::max(0.0, (sum_sq - static_cast<double>(shots) * m * m) /
                                                            static_cast<double>(shots - 1)))
                              : 0.0;
    }
    return fit_fringe(std::vector<double>(phases.begin(), phases.end()), std::move(mean), std::move(spread));
}

double expected_noise_visibility(double sigma)
{
    if (!(sigma >= 0.0)) {
        throw std::invalid_argument("expected_noise_visibility: sigma must be non-negative");
    }
    return std::exp(-0.5 * sigma * sigma);
}

double collective_snr(double n_atoms, double n_decohered)
{
    if (!(n_atoms >= 1.0)) {
        throw std::invalid_argument("collective_snr: N must be at least 1");
    }
    if (!(n_decohered >= 0.0)) {
        throw std::invalid_argument("collective_snr: N' must be non-negative");
    }
    if (n_decohered > n_atoms) {
        throw std::invalid_argument("collective_snr: N' exceeds N");
    }
    const double coherent = n_atoms - n_decohered;
    return coherent * coherent / n_atoms;
}

std::vector<double> phase_range(double start, double span, std::size_t count)
{
    std::vector<double> out(count);
    for (std::size_t j = 0; j < count; ++j) {
        out[j] = start + span * static_cast<double>(j) / static_cast<double>(count);
    }
    return out;
}

double DualArmConfig::effective_half_width() const
{
    return half_width > 0.0 ? half_width : default_half_width(sequence);
}

void DualArmConfig::validate() const
{
    sequence.validate();
    for (const auto& arm : arms) {
        arm.validate();
    }
    noise.validate();
    if (std::abs(polarizer_axis.norm() - 1.0) > 1e-12) {
        throw ConfigError("polarizer axis must have unit norm");
    }
    if (quadrature.points < 1 || !(quadrature.span > 0.0)) {
        throw ConfigError("quadrature: points >= 1 and span > 0 required");
    }
    if (sequence.data_pulses.empty()) {
        throw ConfigError("sequence needs at least one data pulse");
    }
}

ArmResult simulate_arm(const ArmSpec& arm, const TimeGrid& grid, const EchoSequence& seq,
                       const QuadratureSpec& quadrature, const Jones& polarizer_axis, double half_width)
{
    arm.validate();
    const auto pulses = seq.all_pulses();
    ArmResult res;
    res.input = superpose(pulses, grid);
    const auto dg = discretize_line(arm.medium.ensemble.line, quadrature.points, quadrature.span);
    ComplexEnvelope out = propagate_maxwell_bloch(res.input, arm.medium, dg);
    out *= arm.amplitude_scale;
    res.output = project_polarization(out, arm.jones, polarizer_axis);
    res.echoes = extract_echoes(res.output, seq, half_width);
    return res;
}

namespace {

// Incoherent forward emission of one arm relative to its collective echo.
// The echo amplitude carries the coherent atom number N - N', where N'
// counts both the configured decohered fraction and homogeneous decay
// over the storage time; the background scales with N.
double incoherent_share(const EnsembleSpec& ens, double storage_time, double echo_energy)
{
    const double n = ens.n_atoms;
    const double surviving = std::isfinite(ens.T2) ? std::exp(-storage_time / ens.T2) : 1.0;
    const double coherent_fraction = (1.0 - ens.decohered_fraction) * surviving;
    const double snr = collective_snr(n, n * (1.0 - coherent_fraction));
    return snr > 0.0 ? echo_energy / snr : 0.0;
}

}  // namespace

DualArmResult run_dual_arm_experiment(const DualArmConfig& config)
{
    config.validate();
    const double hw = config.effective_half_width();

    DualArmResult result;
    for (std::size_t a = 0; a < 2; ++a) {
        try {
            result.arms[a] = simulate_arm(config.arms[a], config.grid, config.sequence, config.quadrature,
                                          config.polarizer_axis, hw);
        } catch (const std::exception& e) {
            std::ostringstream msg;
            msg << "arm " << (a + 1) << ": " << e.what();
            throw std::runtime_error(msg.str());
        }
    }

    const auto& recs1 = result.arms[0].echoes;
    const auto& recs2 = result.arms[1].echoes;
    for (std::size_t m = 0; m < recs1.size(); ++m) {
        const auto& r1 = recs1[m];
        const auto& r2 = recs2[m];
        ModeResult mode;
        mode.mode_index = r1.mode_index;
        const auto& data = config.sequence.data_pulses[static_cast<std::size_t>(r1.mode_index)];
        mode.storage_time = 2.0 * (config.sequence.read_time() - data.center);
        mode.energy_arm1 = r1.energy;
        mode.energy_arm2 = r2.energy;

        ComplexEnvelope e1 = r1.segment;
        ComplexEnvelope e2 = r2.segment;
        if (config.balance && r1.energy > 0.0 && r2.energy > 0.0) {
            e2 *= std::sqrt(r1.energy / r2.energy);
        }
        try {
            mode.overlap_visibility = overlap_visibility(e1, e2);
            double background = 0.0;
            if (config.incoherent_background) {
                background = 0.25 * (incoherent_share(config.arms[0].medium.ensemble, mode.storage_time,
                                                      envelope_energy(e1)) +
                                     incoherent_share(config.arms[1].medium.ensemble, mode.storage_time,
                                                      envelope_energy(e2)));
            }
            mode.scan = scan_fringe(e1, e2, config.phases, config.noise, static_cast<std::uint64_t>(mode.mode_index),
                                    background);
        } catch (const std::exception& e) {
            std::ostringstream msg;
            msg << "mode " << mode.mode_index << ": " << e.what();
            throw std::runtime_error(msg.str());
        }
        result.modes.push_back(std::move(mode));
    }
    return result;
}

void write_fringe_csv(std::ostream& out, const FringeScan& scan)
{
    out << "phase_rad,mean_signal,std_signal\n";
    for (std::size_t j = 0; j < scan.phases.size(); ++j) {
        out << format_number(scan.phases[j]) << ',' << format_number(scan.signals[j]) << ','
            << format_number(scan.signal_std[j]) << '\n';
    }
}

}  // namespace echomem
