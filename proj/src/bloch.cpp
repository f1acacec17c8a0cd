#include "echomem/bloch.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

namespace echomem {

namespace {

constexpr double kBoundTolerance = 1e-6;
constexpr std::size_t kBlock = 32;

double rate(double lifetime) { return std::isfinite(lifetime) ? 1.0 / lifetime : 0.0; }

struct Deriv {
    double sr, si, w;
};

inline Deriv bloch_rhs(double sr, double si, double w, double om_r, double om_i, double delta, double gamma2,
                       double gamma1)
{
    return {-delta * si - gamma2 * sr - 0.5 * om_i * w,
            delta * sr - gamma2 * si + 0.5 * om_r * w,
            2.0 * (om_i * sr - om_r * si) - gamma1 * (w + 1.0)};
}

struct Drive {
    double r0, i0, rm, im, r1, i1;
};

inline Drive drive_at(std::span<const cplx> s, std::size_t k)
{
    const cplx a = s[k];
    const cplx b = s[k + 1];
    const cplx m = 0.5 * (a + b);
    return {a.real(), a.imag(), m.real(), m.imag(), b.real(), b.imag()};
}

inline void rk4_step(double& sr, double& si, double& w, const Drive& d, double delta, double gamma2, double gamma1,
                     double dt)
{
    const double h2 = 0.5 * dt;
    const Deriv k1 = bloch_rhs(sr, si, w, d.r0, d.i0, delta, gamma2, gamma1);
    const Deriv k2 = bloch_rhs(sr + h2 * k1.sr, si + h2 * k1.si, w + h2 * k1.w, d.rm, d.im, delta, gamma2, gamma1);
    const Deriv k3 = bloch_rhs(sr + h2 * k2.sr, si + h2 * k2.si, w + h2 * k2.w, d.rm, d.im, delta, gamma2, gamma1);
    const Deriv k4 = bloch_rhs(sr + dt * k3.sr, si + dt * k3.si, w + dt * k3.w, d.r1, d.i1, delta, gamma2, gamma1);
    const double h6 = dt / 6.0;
    sr += h6 * (k1.sr + 2.0 * k2.sr + 2.0 * k3.sr + k4.sr);
    si += h6 * (k1.si + 2.0 * k2.si + 2.0 * k3.si + k4.si);
    w += h6 * (k1.w + 2.0 * k2.w + 2.0 * k3.w + k4.w);
}

[[noreturn]] void throw_unstable(double t, double excess)
{
    std::ostringstream msg;
    msg << "integration unstable at t = " << t << " us (Bloch bound exceeded by " << excess
        << "); reduce dt";
    throw IntegrationError(msg.str());
}

void integrate_block(std::span<const cplx> drive, const double* detunings, const double* weights, std::size_t count,
                     double dt, double gamma2, double gamma1, double t_start, cplx* out)
{
    alignas(64) std::array<double, kBlock> sr{};
    alignas(64) std::array<double, kBlock> si{};
    alignas(64) std::array<double, kBlock> w{};
    alignas(64) std::array<double, kBlock> delta{};
    alignas(64) std::array<double, kBlock> weight{};
    std::fill(w.begin(), w.end(), -1.0);
    // Padding lanes carry zero weight and stay in the ground state.
    std::copy_n(detunings, count, delta.begin());
    std::copy_n(weights, count, weight.begin());

    const double limit = 1.0 + kBoundTolerance;
    out[0] = {};
    for (std::size_t k = 0; k + 1 < drive.size(); ++k) {
        const Drive d = drive_at(drive, k);
        int violated = 0;
        double pr = 0.0;
        double pi = 0.0;
#pragma omp simd reduction(| : violated) reduction(+ : pr, pi)
        for (std::size_t j = 0; j < kBlock; ++j) {
            double a = sr[j];
            double b = si[j];
            double c = w[j];
            rk4_step(a, b, c, d, delta[j], gamma2, gamma1, dt);
            sr[j] = a;
            si[j] = b;
            w[j] = c;
            const double norm = 4.0 * (a * a + b * b) + c * c;
            violated |= static_cast<int>(!(norm <= limit));
            pr += weight[j] * a;
            pi += weight[j] * b;
        }
        if (violated) {
            double worst = 0.0;
            for (std::size_t j = 0; j < count; ++j) {
                worst = std::max(worst, 4.0 * (sr[j] * sr[j] + si[j] * si[j]) + w[j] * w[j]);
            }
            throw_unstable(t_start + static_cast<double>(k + 1) * dt, worst - 1.0);
        }
        out[k + 1] = {pr, pi};
    }
}

}  // namespace

double DetuningGrid::max_abs_detuning() const
{
    double m = 0.0;
    for (double d : detunings) {
        m = std::max(m, std::abs(d));
    }
    return m;
}

double DetuningGrid::spacing() const
{
    if (detunings.size() < 2) {
        return 0.0;
    }
    return (detunings.back() - detunings.front()) / static_cast<double>(detunings.size() - 1);
}

void DetuningGrid::validate() const
{
    if (detunings.empty() || detunings.size() != weights.size()) {
        throw ConfigError("detuning grid: detunings and weights must be non-empty and of equal length");
    }
    double sum = 0.0;
    for (std::size_t k = 0; k < weights.size(); ++k) {
        if (!(weights[k] >= 0.0)) {
            throw ConfigError("detuning grid: weights must be non-negative");
        }
        if (k > 0 && !(detunings[k] > detunings[k - 1])) {
            throw ConfigError("detuning grid: detunings must be strictly increasing");
        }
        sum += weights[k];
    }
    if (std::abs(sum - 1.0) > 1e-12) {
        throw ConfigError("detuning grid: weights must sum to 1");
    }
}

void check_step_size(const ComplexEnvelope& drive, double max_abs_detuning)
{
    double max_rabi = 0.0;
    for (const auto& s : drive.samples()) {
        max_rabi = std::max(max_rabi, std::abs(s));
    }
    const double dt = drive.grid().dt();
    const double phase_step = dt * std::max(max_abs_detuning, max_rabi);
    if (phase_step > kMaxPhaseStep) {
        std::ostringstream msg;
        msg << "step size too large: dt*max(|Delta|,|Omega|) = " << phase_step << " > " << kMaxPhaseStep
            << "; use dt <= " << kMaxPhaseStep / std::max(max_abs_detuning, max_rabi) << " us";
        throw IntegrationError(msg.str());
    }
}

std::vector<AtomState> evolve_atom(const ComplexEnvelope& drive, double detuning, double T1, double T2,
                                   AtomState initial)
{
    if (initial.bloch_norm() > 1.0 + 1e-9) {
        throw std::invalid_argument("evolve_atom: initial state violates the Bloch bound");
    }
    if (!(T1 > 0.0) || !(T2 > 0.0)) {
        throw ConfigError("evolve_atom: T1 and T2 must be positive");
    }
    check_step_size(drive, std::abs(detuning));

    const auto samples = drive.samples();
    const double dt = drive.grid().dt();
    const double g2 = rate(T2);
    const double g1 = rate(T1);

    std::vector<AtomState> traj;
    traj.reserve(samples.size());
    traj.push_back(initial);
    double sr = initial.coherence.real();
    double si = initial.coherence.imag();
    double w = initial.inversion;
    for (std::size_t k = 0; k + 1 < samples.size(); ++k) {
        rk4_step(sr, si, w, drive_at(samples, k), detuning, g2, g1, dt);
        AtomState s{{sr, si}, w};
        const double norm = s.bloch_norm();
        if (norm > 1.0 + kBoundTolerance || !std::isfinite(norm)) {
            throw_unstable(drive.grid().time(k + 1), norm - 1.0);
        }
        traj.push_back(s);
    }
    return traj;
}

DetuningGrid discretize_line(const LineShape& line, std::size_t n, double span)
{
    line.validate();
    if (n < 1) {
        throw ConfigError("discretize_line: at least one point required");
    }
    if (!(span > 0.0)) {
        throw ConfigError("discretize_line: span must be positive");
    }
    DetuningGrid g;
    g.detunings.resize(n);
    g.weights.resize(n);
    if (n == 1) {
        g.detunings[0] = line.center;
        g.weights[0] = 1.0;
        return g;
    }
    const double width = span * line.fwhm;
    const double step = width / static_cast<double>(n - 1);
    const double mid = 0.5 * static_cast<double>(n - 1);
    for (std::size_t k = 0; k < n; ++k) {
        // Offsets are computed from the middle index so that the grid is
        // exactly symmetric about the line center.
        g.detunings[k] = line.center + (static_cast<double>(k) - mid) * step;
    }
    double total = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        g.weights[k] = line.density(g.detunings[k]);
    }
    // Pairwise sum from both ends keeps the normalization symmetric.
    for (std::size_t k = 0; k < n / 2; ++k) {
        total += g.weights[k] + g.weights[n - 1 - k];
    }
    if (n % 2 == 1) {
        total += g.weights[n / 2];
    }
    for (auto& wgt : g.weights) {
        wgt /= total;
    }
    return g;
}

ComplexEnvelope ensemble_polarization(const ComplexEnvelope& drive, const DetuningGrid& grid, double T1, double T2)
{
    grid.validate();
    if (!(T1 > 0.0) || !(T2 > 0.0)) {
        throw ConfigError("ensemble_polarization: T1 and T2 must be positive");
    }
    check_step_size(drive, grid.max_abs_detuning());

    const auto samples = drive.samples();
    const std::size_t ns = samples.size();
    const std::size_t na = grid.size();
    const std::size_t nblocks = (na + kBlock - 1) / kBlock;
    const double dt = drive.grid().dt();
    const double g2 = rate(T2);
    const double g1 = rate(T1);
    const double t0 = drive.grid().t_start();

    bool all_zero = std::all_of(samples.begin(), samples.end(), [](cplx s) { return s == cplx{}; });
    if (all_zero) {
        return ComplexEnvelope(drive.grid());
    }

    std::vector<cplx> partial(nblocks * ns);
    std::vector<std::string> errors(nblocks);

#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(nblocks); ++b) {
        const std::size_t first = static_cast<std::size_t>(b) * kBlock;
        const std::size_t count = std::min(kBlock, na - first);
        try {
            integrate_block(samples, grid.detunings.data() + first, grid.weights.data() + first, count, dt, g2, g1,
                            t0, partial.data() + static_cast<std::size_t>(b) * ns);
        } catch (const IntegrationError& e) {
            errors[static_cast<std::size_t>(b)] = e.what();
        }
    }
    for (const auto& e : errors) {
        if (!e.empty()) {
            throw IntegrationError(e);
        }
    }

    std::vector<cplx> total(ns);
    for (std::size_t b = 0; b < nblocks; ++b) {
        const cplx* part = partial.data() + b * ns;
        for (std::size_t k = 0; k < ns; ++k) {
            total[k] += part[k];
        }
    }
    return ComplexEnvelope(drive.grid(), std::move(total));
}

}  // namespace echomem
