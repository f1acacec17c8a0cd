// Acceptance run: one PASS/FAIL line per criterion, detail lines indented.
// Exit status is the number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "echomem/bloch.hpp"
#include "echomem/config.hpp"
#include "echomem/echo.hpp"
#include "echomem/experiments.hpp"
#include "echomem/interferometer.hpp"
#include "echomem/propagation.hpp"

using namespace echomem;
namespace fs = std::filesystem;

namespace {

// Tolerances.
constexpr double kTimingTolerance = 0.015;      // us
constexpr double kCaseTimeLimit = 30.0;         // s
constexpr double kT2Tolerance = 0.03;           // relative
constexpr double kVisibilitySpread = 0.01;      // absolute
constexpr double kRequiredEnergyDrop = 5.0;     // first / last point
constexpr double kNoiseSigma = 0.408;           // rad
constexpr double kNoiseTarget = 0.920;
constexpr double kNoiseTolerance = 0.01;
constexpr std::size_t kNoiseShots = 10000;
constexpr double kIndependenceTolerance = 0.01; // relative energy change
constexpr double kImbalanceTolerance = 1e-3;
constexpr double kRabiTolerance = 1e-6;
constexpr double kDecayTolerance = 1e-8;        // relative
constexpr double kFidTolerance = 0.01;          // relative
constexpr double kBeerTolerance = 0.01;         // relative
constexpr double kSmallAreaTolerance = 0.02;    // relative

const fs::path kConfigs = ECHOMEM_CONFIG_DIR;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof(buf), f, v);
    return buf;
}

struct Outcome {
    bool pass = true;
    std::vector<std::string> details;
    std::string summary;

    void require(bool ok, const std::string& detail)
    {
        pass = pass && ok;
        details.push_back(std::string(ok ? "ok   " : "FAIL ") + detail);
    }
};

int report(int index, const std::string& title, const std::function<Outcome()>& body)
{
    const auto t0 = Clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o.pass = false;
        o.summary = std::string("exception: ") + e.what();
    }
    for (const auto& d : o.details) {
        std::printf("    %s\n", d.c_str());
    }
    std::printf("criterion %d %s  %s: %s (%.1f s)\n", index, o.pass ? "PASS" : "FAIL", title.c_str(),
                o.summary.c_str(), seconds_since(t0));
    std::fflush(stdout);
    return o.pass ? 0 : 1;
}

double peak_amplitude(const ComplexEnvelope& e)
{
    double m = 0.0;
    for (const auto& s : e.samples()) {
        m = std::max(m, std::abs(s));
    }
    return m;
}

EchoSequence two_pulse(double t12, double theta1, double theta2, double t_data = 0.1)
{
    EchoSequence seq;
    seq.data_pulses = {PulseSpec{t_data, 0.015, theta1}};
    seq.read_pulse = PulseSpec{t_data + t12, 0.015, theta2};
    return seq;
}

// Echo timing on the single-arm acceptance configuration.
Outcome echo_timing()
{
    Outcome o;
    auto cfg = load_config(kConfigs / "echo.json");
    double worst = 0.0;
    double slowest = 0.0;
    for (double t12 : {0.4, 0.8, 1.6}) {
        const auto t0 = Clock::now();
        cfg.sequence = two_pulse(t12, 0.1, kPi);
        cfg.t_end = 0.1 + 2.0 * t12 + cfg.effective_half_width() + 0.05;
        const auto run = run_echo(cfg);
        const double elapsed = seconds_since(t0);
        const double error = std::abs(run.arm.echoes.at(0).peak_time - (0.1 + 2.0 * t12));
        worst = std::max(worst, error);
        slowest = std::max(slowest, elapsed);
        o.require(error <= kTimingTolerance && elapsed < kCaseTimeLimit,
                  "t12 = " + fmt("%.1f", t12) + " us: peak offset " + fmt("%.1f", error * 1e3) + " ns, runtime " +
                      fmt("%.2f", elapsed) + " s");
    }
    o.summary = "max |peak - 2 t12| = " + fmt("%.1f", worst * 1e3) + " ns (limit 15 ns), slowest case " +
                fmt("%.2f", slowest) + " s (limit 30 s)";
    return o;
}

// Storage-time sweep shared by the decay and invariance criteria.
const DecayRun& decay_sweep()
{
    static const DecayRun run = run_decay(load_config(kConfigs / "decay.json"));
    return run;
}

Outcome decay_t2()
{
    Outcome o;
    const auto cfg = load_config(kConfigs / "decay.json");
    const auto& run = decay_sweep();
    const double fits[2] = {run.fit_arm1.t2, run.fit_arm2.t2};
    std::string parts;
    for (std::size_t a = 0; a < 2; ++a) {
        const double configured = cfg.arms[a].ensemble.T2;
        const double rel = std::abs(fits[a] / configured - 1.0);
        o.require(rel <= kT2Tolerance, "configured T2 = " + fmt("%.0f", configured) + " us: fitted " +
                                           fmt("%.3f", fits[a]) + " us (" + fmt("%.2f", 100 * rel) + "%)");
        parts += (a ? ", " : "") + fmt("%.0f", configured) + " -> " + fmt("%.3f", fits[a]);
    }
    o.summary = "t_s = 0.8..5.6 us, T2 " + parts + " us (limit 3%)";
    return o;
}

Outcome visibility_invariance()
{
    Outcome o;
    const auto cfg = load_config(kConfigs / "decay.json");
    const auto& run = decay_sweep();
    double v_min = 1.0;
    double v_max = 0.0;
    for (const auto& p : run.points) {
        v_min = std::min(v_min, p.visibility);
        v_max = std::max(v_max, p.visibility);
        o.details.push_back("     t_s = " + fmt("%.1f", p.storage_time) + " us: E1 = " + fmt("%.5f", p.energy_arm1) +
                            ", E2 = " + fmt("%.5f", p.energy_arm2) + ", V = " + fmt("%.5f", p.visibility));
    }
    const std::size_t weak = cfg.arms[0].ensemble.T2 < cfg.arms[1].ensemble.T2 ? 0 : 1;
    const auto energy = [&](const DecayPoint& p) { return weak == 0 ? p.energy_arm1 : p.energy_arm2; };
    const double drop = energy(run.points.front()) / energy(run.points.back());
    o.require(v_max - v_min < kVisibilitySpread,
              "visibility spread " + fmt("%.5f", v_max - v_min) + " (limit < 0.01 absolute)");
    o.require(drop >= kRequiredEnergyDrop, "energy drop of the T2 = " + fmt("%.0f", cfg.arms[weak].ensemble.T2) +
                                               " us arm " + fmt("%.3f", drop) + "x (required >= 5x; exp(1.6) = " +
                                               fmt("%.3f", std::exp(1.6)) + ")");
    o.summary = "V in [" + fmt("%.4f", v_min) + ", " + fmt("%.4f", v_max) + "], weaker arm drops " +
                fmt("%.3f", drop) + "x";
    return o;
}

Outcome phase_noise()
{
    Outcome o;
    auto cfg = load_config(kConfigs / "fringe_noise.json");
    o.require(std::abs(cfg.noise.sigma - kNoiseSigma) < 1e-12 && cfg.noise.shots_per_point == kNoiseShots,
              "config: sigma = " + fmt("%.3f", cfg.noise.sigma) + " rad, " +
                  std::to_string(cfg.noise.shots_per_point) + " shots per point");
    const auto res = run_fringe(cfg);
    const auto& m = res.modes.at(0);
    const double v = m.scan.fitted.visibility;
    const double expected = expected_noise_visibility(kNoiseSigma);
    o.require(std::abs(v - kNoiseTarget) <= kNoiseTolerance,
              "fitted V = " + fmt("%.4f", v) + " +/- " + fmt("%.4f", m.scan.visibility_uncertainty) +
                  ", exp(-sigma^2/2) = " + fmt("%.4f", expected) + ", noiseless overlap " +
                  fmt("%.4f", m.overlap_visibility));
    o.summary = "V = " + fmt("%.4f", v) + " (target 0.920 +/- 0.01)";
    return o;
}

Outcome multimode()
{
    Outcome o;
    const auto cfg = load_config(kConfigs / "multimode.json");
    const auto grid = cfg.grid();
    const double hw = cfg.effective_half_width();
    const auto predicted = predict_echo_times(cfg.sequence);
    o.require(cfg.sequence.data_pulses.size() == 3, "3 data pulses, 150 ns apart, Theta = 0.1 rad");

    double worst_time = 0.0;
    double worst_change = 0.0;
    for (std::size_t a = 0; a < cfg.arms.size(); ++a) {
        const auto arm = cfg.arm_spec(a);
        const auto full =
            simulate_arm(arm, grid, cfg.sequence, cfg.quadrature, cfg.polarizer_axis, hw).echoes;
        bool reversed = full.size() == 3;
        for (std::size_t k = 0; reversed && k < 3; ++k) {
            reversed = full[k].mode_index == static_cast<int>(2 - k);
            const double err = std::abs(full[k].peak_time - predicted[static_cast<std::size_t>(full[k].mode_index)]);
            worst_time = std::max(worst_time, err);
        }
        o.require(reversed && worst_time <= kTimingTolerance,
                  "arm " + std::to_string(a + 1) + ": echoes in time-reversed order, worst timing error " +
                      fmt("%.1f", worst_time * 1e3) + " ns");

        std::map<int, double> full_energy;
        for (const auto& r : full) {
            full_energy[r.mode_index] = r.energy;
        }
        for (std::size_t drop = 0; drop < 3; ++drop) {
            auto seq = cfg.sequence;
            seq.data_pulses.erase(seq.data_pulses.begin() + static_cast<std::ptrdiff_t>(drop));
            const auto reduced = simulate_arm(arm, grid, seq, cfg.quadrature, cfg.polarizer_axis, hw).echoes;
            double change = 0.0;
            for (const auto& r : reduced) {
                const int original = r.mode_index < static_cast<int>(drop) ? r.mode_index : r.mode_index + 1;
                change = std::max(change, std::abs(r.energy / full_energy.at(original) - 1.0));
            }
            worst_change = std::max(worst_change, change);
            o.require(change < kIndependenceTolerance, "arm " + std::to_string(a + 1) + ", without data pulse " +
                                                           std::to_string(drop) + ": other echoes change by " +
                                                           fmt("%.3f", 100 * change) + "%");
        }
    }
    o.summary = "timing within " + fmt("%.1f", worst_time * 1e3) + " ns, largest energy change " +
                fmt("%.3f", 100 * worst_change) + "% (limit 1%)";
    return o;
}

Outcome imbalance()
{
    Outcome o;
    auto cfg = load_config(kConfigs / "fringe.json");
    cfg.balance = false;
    double worst = 0.0;
    for (double r : {0.25, 0.5, 1.0}) {
        cfg.arms[1].amplitude_scale = r;
        const auto res = run_fringe(cfg);
        const double v = res.modes.at(0).scan.fitted.visibility;
        const double expected = 2.0 * r / (1.0 + r * r);
        worst = std::max(worst, std::abs(v - expected));
        o.require(std::abs(v - expected) <= kImbalanceTolerance,
                  "r = " + fmt("%.2f", r) + ": V = " + fmt("%.6f", v) + ", 2r/(1+r^2) = " + fmt("%.6f", expected));
    }
    o.summary = "max |V - 2r/(1+r^2)| = " + fmt("%.2e", worst) + " (limit 1e-3)";
    return o;
}

Outcome oracle_suite()
{
    Outcome o;

    {  // Rabi flopping
        const double omega = 2.0 * kPi;
        const auto g = build_time_grid(0.0, 1.0, 0.001);
        const ComplexEnvelope drive(g, std::vector<cplx>(g.size(), omega));
        const auto traj = evolve_atom(drive, 0.0, kInf, kInf);
        double worst = 0.0;
        for (std::size_t k = 0; k < traj.size(); ++k) {
            worst = std::max(worst, std::abs(traj[k].inversion + std::cos(omega * g.time(k))));
        }
        o.require(worst < kRabiTolerance, "Rabi flopping: max |w + cos(Omega t)| = " + fmt("%.2e", worst));
    }

    {  // Free coherence decay
        const auto g = build_time_grid(0.0, 3.0, 0.001);
        const auto traj = evolve_atom(ComplexEnvelope(g), 0.0, kInf, 6.0, AtomState{{0.5, 0.0}, 0.0});
        double worst = 0.0;
        for (std::size_t k = 0; k < traj.size(); ++k) {
            worst = std::max(worst, std::abs(std::abs(traj[k].coherence) / (0.5 * std::exp(-g.time(k) / 6.0)) - 1.0));
        }
        o.require(worst < kDecayTolerance, "zero-drive T2 decay: max relative error " + fmt("%.2e", worst));
    }

    {  // Gaussian free induction decay, timed from the effective pulse origin
        double worst = 0.0;
        for (double sd : {2.0, 5.0}) {
            LineShape line{LineKind::gaussian, 2.0 * std::sqrt(2.0 * std::log(2.0)) * sd, 0.0};
            const auto dg = discretize_line(line, kDefaultQuadraturePoints, kDefaultQuadratureSpan);
            const PulseSpec p{0.05, 0.015, kPi / 2};
            const double end = p.support_end();
            const double origin = end - 2.0 * p.duration / kPi;
            const double reach = 2.0 * std::sqrt(2.0) / sd;
            const auto g = build_time_grid(0.0, end + reach + 0.05, 0.0005);
            const auto pol = ensemble_polarization(sample_pulse(p, g), dg, kInf, kInf);
            for (std::size_t k = g.nearest_index(end) + 1; k < g.size() && g.time(k) <= end + reach; ++k) {
                const double t = g.time(k) - origin;
                worst = std::max(worst, std::abs(std::abs(pol[k]) / (0.5 * std::exp(-0.5 * sd * sd * t * t)) - 1.0));
            }
        }
        o.require(worst < kFidTolerance, "Gaussian FID vs exp(-sigma^2 t^2/2), sigma in {2, 5} rad/us: max " +
                                             fmt("%.2e", worst));
    }

    {  // Beer's law
        const auto dg = discretize_line(LineShape{}, kDefaultQuadraturePoints, kDefaultQuadratureSpan);
        const auto g = build_time_grid(0.0, 2.1, 0.0002);
        const auto probe = sample_pulse(PulseSpec{1.05, 0.5, 0.01, PulseShape::gaussian}, g);
        double worst = 0.0;
        std::string values;
        for (double al : {0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0}) {
            EnsembleSpec e;
            e.T2 = 18.0;
            e.alpha_l = al;
            const auto out = propagate_maxwell_bloch(probe, make_medium(e, dg), dg);
            const double rel = std::abs(peak_amplitude(out) / peak_amplitude(probe) / std::exp(-0.5 * al) - 1.0);
            worst = std::max(worst, rel);
            values += " " + fmt("%.4f", rel * 100);
        }
        o.require(worst < kBeerTolerance,
                  "Beer's law, alphaL = 0..3 step 0.5: relative errors (%)" + values);
    }

    {  // Small-area echo law
        const auto dg = discretize_line(LineShape{}, kDefaultQuadraturePoints, kDefaultQuadratureSpan);
        auto amplitude = [&](double th1, double th2, double t12, double T2) {
            const auto seq = two_pulse(t12, th1, th2);
            const double echo = 0.1 + 2.0 * t12;
            const auto g = build_time_grid(0.0, echo + 0.1, 0.0002);
            const auto p = ensemble_polarization(superpose(seq.all_pulses(), g), dg, kInf, T2);
            const auto rec = extract_echo(p, echo, 0.045, seq.all_pulses());
            return std::abs(p[g.nearest_index(rec.peak_time)]);
        };
        const double ref = amplitude(0.1, kPi, 0.8, 6.0) / small_area_echo_oracle(0.1, kPi, 0.8, 6.0);
        double worst = 0.0;
        for (double th1 : {0.02, 0.1, 0.2}) {
            for (double th2 : {kPi / 2, kPi}) {
                for (double t12 : {0.4, 1.2}) {
                    for (double T2 : {6.0, 18.0}) {
                        const double ratio = amplitude(th1, th2, t12, T2) / small_area_echo_oracle(th1, th2, t12, T2);
                        worst = std::max(worst, std::abs(ratio / ref - 1.0));
                    }
                }
            }
        }
        o.require(worst < kSmallAreaTolerance,
                  "small-area echo law, 24 settings with Theta1 <= 0.2: max relative deviation " +
                      fmt("%.4f", 100 * worst) + "%");
    }
    o.summary = o.pass ? "all oracles within tolerance" : "oracle mismatch";
    return o;
}

Outcome snr()
{
    Outcome o;
    const double n = 1e8;
    const std::vector<std::pair<double, double>> cases{{0.0, 1e8}, {0.5 * n, 2.5e7}, {n, 0.0}};
    for (const auto& [np, expected] : cases) {
        const double got = collective_snr(n, np);
        o.require(got == expected, "N = 1e8, N' = " + fmt("%.2g", np) + ": " + fmt("%.6g", got));
    }
    // Link to the decay sweep: atoms that lost coherence (N' = N (1 - exp(-t_s/T2)))
    // stop contributing to the collective echo, but their incoherent emission
    // is weaker by (N - N')^2 / N, so it cannot dilute the fringe.
    const double np = n * (1.0 - std::exp(-5.6 / 6.0));
    const double ratio = collective_snr(n, np);
    o.details.push_back("     decay sweep, T2 = 6 us arm at t_s = 5.6 us: N'/N = " + fmt("%.3f", np / n) +
                        ", collective/incoherent = " + fmt("%.3g", ratio) + ", visibility loss bound " +
                        fmt("%.1e", 1.0 / (1.0 + ratio)));
    o.summary = "(N - N')^2 / N exact for N' = 0, N/2, N";
    return o;
}

std::map<std::string, std::string> read_dir(const fs::path& dir)
{
    std::map<std::string, std::string> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        std::ifstream in(entry.path(), std::ios::binary);
        std::ostringstream s;
        s << in.rdbuf();
        files[entry.path().filename().string()] = s.str();
    }
    return files;
}

Outcome determinism()
{
    Outcome o;
    const fs::path root = fs::temp_directory_path() / "echomem_acceptance";
    fs::remove_all(root);
    const std::vector<std::pair<std::string, std::string>> runs{{"echo", "echo.json"},
                                                                {"fringe", "fringe.json"},
                                                                {"fringe", "fringe_noise.json"},
                                                                {"decay", "decay.json"},
                                                                {"multimode", "multimode.json"}};
    std::size_t compared = 0;
    for (const auto& [cmd, file] : runs) {
        std::map<std::string, std::string> outputs[2];
        bool ok = true;
        for (int i = 0; i < 2; ++i) {
            const std::string threads = i == 0 ? "1" : "8";
            const fs::path dir = root / (cmd + "_" + file + "_" + threads);
            std::ostringstream out;
            std::ostringstream err;
            const int code = cli::run({cmd, "--config", (kConfigs / file).string(), "--out", dir.string(), "--threads",
                                       threads},
                                      out, err);
            ok = ok && code == 0;
            outputs[i] = read_dir(dir);
        }
        const bool same = ok && !outputs[0].empty() && outputs[0] == outputs[1];
        compared += outputs[0].size();
        o.require(same, cmd + " on " + file + ": " + std::to_string(outputs[0].size()) + " CSV files " +
                            (same ? "byte-identical" : "DIFFER"));
    }
    fs::remove_all(root);
    o.summary = std::to_string(compared) + " CSV files compared between --threads 1 and --threads 8";
    return o;
}

}  // namespace

int main()
{
    int failed = 0;
    failed += report(1, "echo timing", echo_timing);
    failed += report(2, "T2 recovery", decay_t2);
    failed += report(3, "visibility invariance under decoherence", visibility_invariance);
    failed += report(4, "phase-noise ceiling", phase_noise);
    failed += report(5, "multimode order and independence", multimode);
    failed += report(6, "imbalance law", imbalance);
    failed += report(7, "oracle suite", oracle_suite);
    failed += report(8, "collective_snr", snr);
    failed += report(9, "thread-count determinism", determinism);
    std::printf("%d of 9 criteria passed\n", 9 - failed);
    return failed;
}
