#include "echomem/experiments.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "echomem/csv.hpp"

namespace echomem {

namespace {

void write_file(const std::filesystem::path& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write '" + path.string() + "'");
    }
    out << content;
}

template <typename F>
void write_csv(const std::filesystem::path& path, F&& writer)
{
    std::ostringstream text;
    writer(text);
    write_file(path, text.str());
}

std::string fixed(double v, int digits = 4)
{
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return buf;
}

void require_valid(const ExperimentConfig& config, Subcommand cmd)
{
    const auto report = check_config(config, cmd);
    if (!report.valid()) {
        std::ostringstream msg;
        msg << "invalid configuration for '" << to_string(cmd) << "':";
        for (const auto& v : report.violations) {
            msg << "\n  " << v;
        }
        throw ConfigError(msg.str());
    }
}

void write_dual_arm(const DualArmResult& res, const std::filesystem::path& dir)
{
    write_csv(dir / "visibility.csv", [&](std::ostream& o) { write_visibility_csv(o, res.modes); });
    write_csv(dir / "echoes_arm1.csv", [&](std::ostream& o) { write_echo_csv(o, res.arms[0].echoes); });
    write_csv(dir / "echoes_arm2.csv", [&](std::ostream& o) { write_echo_csv(o, res.arms[1].echoes); });
    if (res.modes.size() == 1) {
        write_csv(dir / "fringe.csv", [&](std::ostream& o) { write_fringe_csv(o, res.modes[0].scan); });
    } else {
        for (const auto& m : res.modes) {
            write_csv(dir / ("fringe_mode" + std::to_string(m.mode_index) + ".csv"),
                      [&](std::ostream& o) { write_fringe_csv(o, m.scan); });
        }
    }
}

}  // namespace

EchoRun run_echo(const ExperimentConfig& config)
{
    const TimeGrid grid = config.grid();
    EchoRun run;
    run.arm = simulate_arm(config.arm_spec(0), grid, config.sequence, config.quadrature, config.polarizer_axis,
                           config.effective_half_width());
    return run;
}

DualArmResult run_fringe(const ExperimentConfig& config)
{
    return run_dual_arm_experiment(config.dual_arm(config.grid(), config.sequence));
}

DecayRun run_decay(const ExperimentConfig& config)
{
    DecayRun run;
    std::vector<double> ts;
    std::vector<double> e1;
    std::vector<double> e2;
    for (double t_s : config.storage_times) {
        const auto seq = sequence_for_storage_time(config.sequence, t_s);
        const auto res = run_dual_arm_experiment(config.dual_arm(grid_for_storage_time(config, t_s), seq));
        const auto& mode = res.modes.at(0);
        DecayPoint p;
        p.storage_time = t_s;
        p.energy_arm1 = mode.energy_arm1;
        p.energy_arm2 = mode.energy_arm2;
        p.visibility = mode.scan.fitted.visibility;
        p.visibility_err = mode.scan.visibility_uncertainty;
        p.overlap_visibility = mode.overlap_visibility;
        run.points.push_back(p);
        ts.push_back(t_s);
        e1.push_back(p.energy_arm1);
        e2.push_back(p.energy_arm2);
    }
    run.fit_arm1 = fit_decay(ts, e1);
    run.fit_arm2 = fit_decay(ts, e2);
    return run;
}

std::string run_subcommand(Subcommand cmd, const ExperimentConfig& config, const std::filesystem::path& out_dir)
{
    require_valid(config, cmd);
    std::filesystem::create_directories(out_dir);
    std::ostringstream summary;

    switch (cmd) {
    case Subcommand::echo: {
        const auto run = run_echo(config);
        write_csv(out_dir / "trace.csv", [&](std::ostream& o) { write_trace_csv(o, run.arm.input, run.arm.output); });
        write_csv(out_dir / "echoes.csv", [&](std::ostream& o) { write_echo_csv(o, run.arm.echoes); });
        summary << "echo: modes=" << run.arm.echoes.size();
        for (const auto& r : run.arm.echoes) {
            summary << " [mode " << r.mode_index << " peak_us=" << fixed(r.peak_time) << " efficiency="
                    << fixed(r.efficiency, 6) << "]";
        }
        break;
    }
    case Subcommand::fringe:
    case Subcommand::multimode: {
        const auto res = run_fringe(config);
        write_dual_arm(res, out_dir);
        summary << to_string(cmd) << ": modes=" << res.modes.size();
        double v_min = 1.0;
        for (const auto& m : res.modes) {
            v_min = std::min(v_min, m.scan.fitted.visibility);
        }
        if (res.modes.size() == 1) {
            const auto& m = res.modes[0];
            summary << " V=" << fixed(m.scan.fitted.visibility) << " V_err=" << fixed(m.scan.visibility_uncertainty)
                    << " overlap=" << fixed(m.overlap_visibility);
        } else {
            for (const auto& m : res.modes) {
                summary << " V" << m.mode_index << "=" << fixed(m.scan.fitted.visibility);
            }
            summary << " V_min=" << fixed(v_min);
        }
        break;
    }
    case Subcommand::decay: {
        const auto run = run_decay(config);
        write_csv(out_dir / "decay.csv", [&](std::ostream& o) { write_decay_csv(o, run.points); });
        double v_min = 1.0;
        double v_max = 0.0;
        for (const auto& p : run.points) {
            v_min = std::min(v_min, p.visibility);
            v_max = std::max(v_max, p.visibility);
        }
        summary << "decay: points=" << run.points.size() << " T2_arm1_us=" << fixed(run.fit_arm1.t2, 3)
                << " T2_arm2_us=" << fixed(run.fit_arm2.t2, 3) << " V_min=" << fixed(v_min) << " V_max="
                << fixed(v_max);
        break;
    }
    }
    return summary.str();
}

void write_trace_csv(std::ostream& out, const ComplexEnvelope& drive, const ComplexEnvelope& output)
{
    require_same_grid(drive, output, "trace output");
    out << "t_us,drive_re,drive_im,output_re,output_im\n";
    for (std::size_t k = 0; k < drive.size(); ++k) {
        out << format_number(drive.grid().time(k)) << ',' << format_number(drive[k].real()) << ','
            << format_number(drive[k].imag()) << ',' << format_number(output[k].real()) << ','
            << format_number(output[k].imag()) << '\n';
    }
}

void write_visibility_csv(std::ostream& out, const std::vector<ModeResult>& modes)
{
    out << "mode,V,V_err,t_s_us\n";
    for (const auto& m : modes) {
        out << m.mode_index << ',' << format_number(m.scan.fitted.visibility) << ','
            << format_number(m.scan.visibility_uncertainty) << ',' << format_number(m.storage_time) << '\n';
    }
}

void write_decay_csv(std::ostream& out, const std::vector<DecayPoint>& points)
{
    out << "t_s_us,energy_arm1,energy_arm2,V\n";
    for (const auto& p : points) {
        out << format_number(p.storage_time) << ',' << format_number(p.energy_arm1) << ','
            << format_number(p.energy_arm2) << ',' << format_number(p.visibility) << '\n';
    }
}

}  // namespace echomem
