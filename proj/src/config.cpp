#include "echomem/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace echomem {

using nlohmann::json;

namespace {

constexpr std::size_t kDefaultPhaseCount = 24;
constexpr double kSweepMargin = 0.05;

void reject_unknown(const json& obj, const std::string& where, std::initializer_list<const char*> allowed)
{
    const std::set<std::string> keys(allowed.begin(), allowed.end());
    for (const auto& [key, value] : obj.items()) {
        if (!keys.contains(key)) {
            throw ConfigError(where + ": unknown field '" + key + "'");
        }
    }
}

const json& require_object(const json& parent, const char* key, const std::string& where)
{
    if (!parent.contains(key)) {
        throw ConfigError(where + ": missing required field '" + key + "'");
    }
    const json& v = parent.at(key);
    if (!v.is_object()) {
        throw ConfigError(where + "." + key + ": expected an object");
    }
    return v;
}

double number_value(const json& v, const std::string& where)
{
    if (v.is_number()) {
        return v.get<double>();
    }
    if (v.is_null() || (v.is_string() && (v == "inf" || v == "infinity"))) {
        return kInf;
    }
    throw ConfigError(where + ": expected a number");
}

double number(const json& obj, const char* key, const std::string& where, std::optional<double> fallback = {})
{
    if (!obj.contains(key)) {
        if (fallback) {
            return *fallback;
        }
        throw ConfigError(where + ": missing required field '" + key + "'");
    }
    const double v = number_value(obj.at(key), where + "." + key);
    return v;
}

double finite_number(const json& obj, const char* key, const std::string& where, std::optional<double> fallback = {})
{
    const double v = number(obj, key, where, fallback);
    if (!std::isfinite(v)) {
        throw ConfigError(where + "." + key + ": must be finite");
    }
    return v;
}

std::size_t count_value(const json& obj, const char* key, const std::string& where, std::size_t fallback)
{
    if (!obj.contains(key)) {
        return fallback;
    }
    const json& v = obj.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0) {
        throw ConfigError(where + "." + key + ": expected a non-negative integer");
    }
    return v.get<std::size_t>();
}

cplx complex_value(const json& v, const std::string& where)
{
    if (v.is_number()) {
        return {v.get<double>(), 0.0};
    }
    if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
        return {v[0].get<double>(), v[1].get<double>()};
    }
    throw ConfigError(where + ": expected a number or [re, im]");
}

Jones parse_jones(const json& v, const std::string& where)
{
    if (v.is_number()) {
        return Jones::linear(v.get<double>());
    }
    if (!v.is_object()) {
        throw ConfigError(where + ": expected a linear angle (rad) or {\"h\": .., \"v\": ..}");
    }
    reject_unknown(v, where, {"h", "v"});
    Jones j;
    j.h = v.contains("h") ? complex_value(v.at("h"), where + ".h") : cplx{};
    j.v = v.contains("v") ? complex_value(v.at("v"), where + ".v") : cplx{};
    return j;
}

PulseSpec parse_pulse(const json& v, const std::string& where)
{
    if (!v.is_object()) {
        throw ConfigError(where + ": expected an object");
    }
    reject_unknown(v, where, {"center", "duration", "area", "area_pi", "shape", "phase"});
    PulseSpec p;
    p.center = finite_number(v, "center", where);
    p.duration = finite_number(v, "duration", where, 0.015);
    const bool has_area = v.contains("area");
    const bool has_area_pi = v.contains("area_pi");
    if (has_area == has_area_pi) {
        throw ConfigError(where + ": exactly one of 'area' or 'area_pi' is required");
    }
    p.area = has_area ? finite_number(v, "area", where) : kPi * finite_number(v, "area_pi", where);
    if (v.contains("shape")) {
        if (!v.at("shape").is_string()) {
            throw ConfigError(where + ".shape: expected a string");
        }
        p.shape = parse_pulse_shape(v.at("shape").get<std::string>());
    }
    p.phase = finite_number(v, "phase", where, 0.0);
    return p;
}

ArmConfig parse_arm(const json& v, const std::string& where)
{
    if (!v.is_object()) {
        throw ConfigError(where + ": expected an object");
    }
    reject_unknown(v, where, {"name", "ensemble", "n_slices", "amplitude_scale", "jones"});
    ArmConfig arm;
    arm.name = v.value("name", std::string{});
    const json& e = require_object(v, "ensemble", where);
    const std::string ew = where + ".ensemble";
    reject_unknown(e, ew, {"T1", "T2", "line", "alphaL", "n_atoms", "decohered_fraction"});
    arm.ensemble.T1 = number(e, "T1", ew, kInf);
    arm.ensemble.T2 = number(e, "T2", ew);
    if (e.contains("line")) {
        const json& l = require_object(e, "line", ew);
        const std::string lw = ew + ".line";
        reject_unknown(l, lw, {"kind", "fwhm", "center"});
        if (l.contains("kind")) {
            if (!l.at("kind").is_string()) {
                throw ConfigError(lw + ".kind: expected a string");
            }
            arm.ensemble.line.kind = parse_line_kind(l.at("kind").get<std::string>());
        }
        arm.ensemble.line.fwhm = finite_number(l, "fwhm", lw, arm.ensemble.line.fwhm);
        arm.ensemble.line.center = finite_number(l, "center", lw, 0.0);
    }
    arm.ensemble.alpha_l = finite_number(e, "alphaL", ew, 0.0);
    arm.ensemble.n_atoms = finite_number(e, "n_atoms", ew, 1e8);
    arm.ensemble.decohered_fraction = finite_number(e, "decohered_fraction", ew, 0.0);
    arm.n_slices = count_value(v, "n_slices", where, 0);
    arm.amplitude_scale = finite_number(v, "amplitude_scale", where, 1.0);
    if (v.contains("jones")) {
        arm.jones = parse_jones(v.at("jones"), where + ".jones");
    }
    return arm;
}

std::vector<double> number_list(const json& v, const std::string& where)
{
    if (!v.is_array()) {
        throw ConfigError(where + ": expected an array of numbers");
    }
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number()) {
            throw ConfigError(where + "[" + std::to_string(i) + "]: expected a number");
        }
        out.push_back(v[i].get<double>());
    }
    return out;
}

std::string line_context(const std::string& text, std::size_t byte)
{
    std::size_t line = 1;
    std::size_t column = 1;
    for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
        if (text[i] == '\n') {
            ++line;
            column = 1;
        } else {
            ++column;
        }
    }
    std::ostringstream msg;
    msg << "line " << line << ", column " << column;
    return msg.str();
}

template <typename F>
void collect(std::vector<std::string>& out, const std::string& prefix, F&& check)
{
    try {
        check();
    } catch (const std::exception& e) {
        out.push_back(prefix.empty() ? std::string(e.what()) : prefix + ": " + e.what());
    }
}

bool needs_two_arms(std::optional<Subcommand> cmd)
{
    return cmd && *cmd != Subcommand::echo;
}

void check_sequence_on_grid(std::vector<std::string>& out, const std::string& label, const EchoSequence& seq,
                            const TimeGrid& grid, double half_width)
{
    const auto pulses = seq.all_pulses();
    for (std::size_t i = 0; i < pulses.size(); ++i) {
        const bool is_read = i + 1 == pulses.size();
        const std::string name = is_read ? "read pulse" : "data pulse " + std::to_string(i);
        collect(out, label + name, [&] { sample_pulse(pulses[i], grid); });
    }
    collect(out, label + "sequence", [&] { superpose(pulses, grid); });
    const auto times = predict_echo_times(seq);
    for (std::size_t i = 0; i < times.size(); ++i) {
        collect(out, label + "echo " + std::to_string(i), [&] {
            const double lo = times[i] - half_width;
            const double hi = times[i] + half_width;
            if (lo < grid.t_start() || hi > grid.t_end()) {
                std::ostringstream msg;
                msg << "window [" << lo << ", " << hi << "] us lies outside the grid [" << grid.t_start() << ", "
                    << grid.t_end() << "]";
                throw ConfigError(msg.str());
            }
            for (std::size_t j = 0; j < pulses.size(); ++j) {
                if (pulses[j].support_begin() < hi && pulses[j].support_end() > lo) {
                    std::ostringstream msg;
                    msg << "window [" << lo << ", " << hi << "] us overlaps pulse " << j;
                    throw ConfigError(msg.str());
                }
            }
        });
    }
}

void check_step(std::vector<std::string>& out, const ExperimentConfig& cfg, const EchoSequence& seq,
                const TimeGrid& grid)
{
    double max_rabi = 0.0;
    for (const auto& p : seq.all_pulses()) {
        try {
            for (const auto& s : sample_pulse(p, grid).samples()) {
                max_rabi = std::max(max_rabi, std::abs(s));
            }
        } catch (const std::exception&) {
            // reported by check_sequence_on_grid
        }
    }
    for (std::size_t a = 0; a < cfg.arms.size(); ++a) {
        collect(out, "arm " + std::to_string(a + 1), [&] {
            const auto dg = discretize_line(cfg.arms[a].ensemble.line, cfg.quadrature.points, cfg.quadrature.span);
            const double phase_step = grid.dt() * std::max(dg.max_abs_detuning(), max_rabi);
            if (phase_step > kMaxPhaseStep) {
                std::ostringstream msg;
                msg << "dt*max(|Delta|,|Omega|) = " << phase_step << " exceeds " << kMaxPhaseStep
                    << "; reduce dt or the line width";
                throw ConfigError(msg.str());
            }
        });
    }
}

}  // namespace

const char* to_string(Subcommand cmd)
{
    switch (cmd) {
    case Subcommand::echo:
        return "echo";
    case Subcommand::fringe:
        return "fringe";
    case Subcommand::decay:
        return "decay";
    case Subcommand::multimode:
        return "multimode";
    }
    return "?";
}

Subcommand parse_subcommand(const std::string& name)
{
    for (auto cmd : {Subcommand::echo, Subcommand::fringe, Subcommand::decay, Subcommand::multimode}) {
        if (name == to_string(cmd)) {
            return cmd;
        }
    }
    throw ConfigError("unknown subcommand '" + name + "'");
}

double ExperimentConfig::effective_half_width() const
{
    return half_width > 0.0 ? half_width : default_half_width(sequence);
}

ArmSpec ExperimentConfig::arm_spec(std::size_t index) const
{
    const ArmConfig& a = arms.at(index);
    const auto dg = discretize_line(a.ensemble.line, quadrature.points, quadrature.span);
    ArmSpec spec;
    spec.medium = make_medium(a.ensemble, dg, a.n_slices);
    spec.amplitude_scale = a.amplitude_scale;
    spec.jones = a.jones;
    return spec;
}

DualArmConfig ExperimentConfig::dual_arm(const TimeGrid& grid, const EchoSequence& seq) const
{
    if (arms.size() != 2) {
        throw ConfigError("dual-arm experiment needs exactly 2 arms");
    }
    DualArmConfig d;
    d.grid = grid;
    d.sequence = seq;
    d.arms = {arm_spec(0), arm_spec(1)};
    d.noise = noise;
    d.noise.seed = seed;
    d.phases = phases;
    d.quadrature = quadrature;
    d.balance = balance;
    d.polarizer_axis = polarizer_axis;
    d.half_width = half_width;
    d.incoherent_background = incoherent_background;
    return d;
}

ExperimentConfig parse_config(const std::string& text)
{
    json doc;
    try {
        doc = json::parse(text, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ConfigError("parse error at " + line_context(text, e.byte == 0 ? 0 : e.byte - 1) + ": " + e.what());
    }
    if (!doc.is_object()) {
        throw ConfigError("config: top level must be a JSON object");
    }
    reject_unknown(doc, "config",
                   {"description", "seed", "grid", "quadrature", "sequence", "arms", "noise", "phases",
                    "storage_times", "balance", "polarizer_axis", "echo_half_width", "incoherent_background",
                    "output_dir"});

    ExperimentConfig cfg;
    if (doc.contains("seed")) {
        if (!doc.at("seed").is_number_unsigned()) {
            throw ConfigError("config.seed: expected a non-negative integer");
        }
        cfg.seed = doc.at("seed").get<std::uint64_t>();
    }

    const json& grid = require_object(doc, "grid", "config");
    reject_unknown(grid, "grid", {"t_start", "t_end", "dt"});
    cfg.t_start = finite_number(grid, "t_start", "grid", 0.0);
    cfg.t_end = finite_number(grid, "t_end", "grid");
    cfg.dt = finite_number(grid, "dt", "grid", 0.0002);

    if (doc.contains("quadrature")) {
        const json& q = require_object(doc, "quadrature", "config");
        reject_unknown(q, "quadrature", {"points", "span"});
        cfg.quadrature.points = count_value(q, "points", "quadrature", kDefaultQuadraturePoints);
        cfg.quadrature.span = finite_number(q, "span", "quadrature", kDefaultQuadratureSpan);
    }

    const json& seq = require_object(doc, "sequence", "config");
    reject_unknown(seq, "sequence", {"data_pulses", "read_pulse"});
    if (!seq.contains("data_pulses") || !seq.at("data_pulses").is_array()) {
        throw ConfigError("sequence.data_pulses: expected an array");
    }
    const json& data = seq.at("data_pulses");
    for (std::size_t i = 0; i < data.size(); ++i) {
        cfg.sequence.data_pulses.push_back(parse_pulse(data[i], "sequence.data_pulses[" + std::to_string(i) + "]"));
    }
    if (!seq.contains("read_pulse")) {
        throw ConfigError("sequence: missing required field 'read_pulse'");
    }
    cfg.sequence.read_pulse = parse_pulse(seq.at("read_pulse"), "sequence.read_pulse");

    if (!doc.contains("arms") || !doc.at("arms").is_array()) {
        throw ConfigError("config.arms: expected an array of 1 or 2 arms");
    }
    const json& arms = doc.at("arms");
    if (arms.empty() || arms.size() > 2) {
        throw ConfigError("config.arms: expected 1 or 2 arms");
    }
    for (std::size_t i = 0; i < arms.size(); ++i) {
        cfg.arms.push_back(parse_arm(arms[i], "arms[" + std::to_string(i) + "]"));
    }

    if (doc.contains("noise")) {
        const json& n = require_object(doc, "noise", "config");
        reject_unknown(n, "noise", {"sigma", "shots_per_point"});
        cfg.noise.sigma = finite_number(n, "sigma", "noise", 0.0);
        cfg.noise.shots_per_point = count_value(n, "shots_per_point", "noise", 1);
    }

    if (doc.contains("phases")) {
        const json& p = doc.at("phases");
        if (p.is_array()) {
            cfg.phases = number_list(p, "phases");
        } else if (p.is_object()) {
            reject_unknown(p, "phases", {"count", "start", "span"});
            cfg.phases = phase_range(finite_number(p, "start", "phases", 0.0),
                                     finite_number(p, "span", "phases", 2.0 * kPi),
                                     count_value(p, "count", "phases", kDefaultPhaseCount));
        } else {
            throw ConfigError("phases: expected an array or {count, start, span}");
        }
    } else {
        cfg.phases = phase_range(0.0, 2.0 * kPi, kDefaultPhaseCount);
    }

    if (doc.contains("storage_times")) {
        cfg.storage_times = number_list(doc.at("storage_times"), "storage_times");
    }
    if (doc.contains("balance")) {
        if (!doc.at("balance").is_boolean()) {
            throw ConfigError("config.balance: expected true or false");
        }
        cfg.balance = doc.at("balance").get<bool>();
    }
    if (doc.contains("polarizer_axis")) {
        cfg.polarizer_axis = parse_jones(doc.at("polarizer_axis"), "polarizer_axis");
    }
    cfg.half_width = finite_number(doc, "echo_half_width", "config", 0.0);
    if (doc.contains("incoherent_background")) {
        if (!doc.at("incoherent_background").is_boolean()) {
            throw ConfigError("config.incoherent_background: expected true or false");
        }
        cfg.incoherent_background = doc.at("incoherent_background").get<bool>();
    }
    if (doc.contains("output_dir")) {
        if (!doc.at("output_dir").is_string()) {
            throw ConfigError("config.output_dir: expected a string");
        }
        cfg.output_dir = doc.at("output_dir").get<std::string>();
    }
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot read config file '" + path.string() + "'");
    }
    std::ostringstream text;
    text << in.rdbuf();
    try {
        return parse_config(text.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

EchoSequence sequence_for_storage_time(const EchoSequence& base, double storage_time)
{
    if (base.data_pulses.empty()) {
        throw ConfigError("storage-time sweep needs a data pulse");
    }
    EchoSequence seq;
    seq.data_pulses = {base.data_pulses.front()};
    seq.read_pulse = base.read_pulse;
    seq.read_pulse.center = base.data_pulses.front().center + 0.5 * storage_time;
    return seq;
}

TimeGrid grid_for_storage_time(const ExperimentConfig& config, double storage_time)
{
    const double echo = config.sequence.data_pulses.at(0).center + storage_time;
    const double t_end = echo + 2.0 * config.effective_half_width() + kSweepMargin;
    return build_time_grid(config.t_start, t_end, config.dt);
}

ValidationReport check_config(const ExperimentConfig& cfg, std::optional<Subcommand> cmd)
{
    ValidationReport report;
    auto& v = report.violations;

    std::optional<TimeGrid> grid;
    collect(v, "grid", [&] { grid = cfg.grid(); });
    collect(v, "quadrature", [&] {
        if (cfg.quadrature.points < 1 || !(cfg.quadrature.span > 0.0)) {
            throw ConfigError("points must be >= 1 and span > 0");
        }
    });
    collect(v, "", [&] { cfg.sequence.validate(); });
    if (cfg.sequence.data_pulses.empty()) {
        v.push_back("sequence: at least one data pulse is required");
    }
    report.warnings = cfg.sequence.warnings();

    for (std::size_t a = 0; a < cfg.arms.size(); ++a) {
        const std::string label = "arm " + std::to_string(a + 1);
        collect(v, label, [&] { cfg.arms[a].ensemble.validate(); });
        collect(v, label, [&] {
            if (std::abs(cfg.arms[a].jones.norm() - 1.0) > 1e-12) {
                throw ConfigError("Jones vector must have unit norm");
            }
            if (!(cfg.arms[a].amplitude_scale >= 0.0)) {
                throw ConfigError("amplitude_scale must be non-negative");
            }
        });
        collect(v, label, [&] {
            const std::size_t need = minimum_slices(cfg.arms[a].ensemble.alpha_l);
            if (cfg.arms[a].n_slices != 0 && cfg.arms[a].n_slices < need) {
                std::ostringstream msg;
                msg << "per-slice optical depth " << cfg.arms[a].ensemble.alpha_l / cfg.arms[a].n_slices
                    << " exceeds " << kMaxSliceDepth << "; use at least " << need << " slices";
                throw ConfigError(msg.str());
            }
        });
    }
    collect(v, "polarizer_axis", [&] {
        if (std::abs(cfg.polarizer_axis.norm() - 1.0) > 1e-12) {
            throw ConfigError("must have unit norm");
        }
    });
    collect(v, "noise", [&] { cfg.noise.validate(); });

    if (needs_two_arms(cmd) && cfg.arms.size() != 2) {
        v.push_back(std::string(to_string(*cmd)) + ": exactly 2 arms are required");
    }
    if (needs_two_arms(cmd) || !cfg.phases.empty()) {
        collect(v, "phases", [&] {
            const std::size_t n = cfg.phases.size();
            if (n < 8) {
                throw ConfigError("at least 8 phase points are required");
            }
            const auto [lo, hi] = std::minmax_element(cfg.phases.begin(), cfg.phases.end());
            if ((*hi - *lo) * static_cast<double>(n) / static_cast<double>(n - 1) < 2.0 * kPi - 1e-9) {
                throw ConfigError("phase points must span a full 2*pi period");
            }
        });
    }

    const double hw = cfg.effective_half_width();
    if (cmd == Subcommand::decay) {
        if (cfg.sequence.data_pulses.size() != 1) {
            v.push_back("decay: exactly one data pulse is required");
        }
        if (cfg.storage_times.size() < 3) {
            v.push_back("decay: at least 3 storage_times are required");
        }
        for (std::size_t i = 0; i < cfg.storage_times.size(); ++i) {
            const double ts = cfg.storage_times[i];
            const std::string label = "storage time " + std::to_string(i) + " (" + std::to_string(ts) + " us): ";
            if (!(ts > 0.0)) {
                v.push_back(label + "must be positive");
                continue;
            }
            if (cfg.sequence.data_pulses.empty()) {
                continue;
            }
            std::optional<TimeGrid> g;
            collect(v, label + "grid", [&] { g = grid_for_storage_time(cfg, ts); });
            if (g) {
                const auto seq = sequence_for_storage_time(cfg.sequence, ts);
                collect(v, label, [&] { seq.validate(); });
                check_sequence_on_grid(v, label, seq, *g, hw);
                check_step(v, cfg, seq, *g);
            }
        }
    } else if (grid) {
        check_sequence_on_grid(v, "", cfg.sequence, *grid, hw);
        check_step(v, cfg, cfg.sequence, *grid);
    }

    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return report;
}

ValidationReport validate_config(const std::filesystem::path& path, std::optional<Subcommand> cmd)
{
    try {
        return check_config(load_config(path), cmd);
    } catch (const std::exception& e) {
        ValidationReport report;
        report.violations.push_back(e.what());
        return report;
    }
}

}  // namespace echomem
