#include "labyrinth/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <variant>

namespace labyrinth {

namespace {

using Member = std::variant<double RunConfig::*, int RunConfig::*, bool RunConfig::*, std::uint64_t RunConfig::*,
                            Parity RunConfig::*, ForceLaw RunConfig::*, std::vector<double> RunConfig::*>;

struct Entry {
    const char* section;
    const char* key;
    Member member;
};

const std::vector<Entry>& table() {
    static const std::vector<Entry> entries = {
        {"beam", "irradiance_kw_cm2", &RunConfig::irradiance_kw_cm2},
        {"beam", "detuning_nm", &RunConfig::detuning_nm},
        {"beam", "kz_ratio", &RunConfig::kz_ratio},
        {"beam", "parity", &RunConfig::parity},
        {"beam", "a", &RunConfig::a},
        {"species", "mass_amu", &RunConfig::mass_amu},
        {"species", "gamma_per_s", &RunConfig::gamma_per_s},
        {"species", "transition_nm", &RunConfig::transition_nm},
        {"grid", "half_width", &RunConfig::grid_half_width},
        {"grid", "points", &RunConfig::grid_points},
        {"grid", "tile", &RunConfig::grid_tile},
        {"ensemble", "n_atoms", &RunConfig::n_atoms},
        {"ensemble", "disk_radius", &RunConfig::disk_radius},
        {"ensemble", "t_xy_min_uk", &RunConfig::t_xy_min_uk},
        {"ensemble", "t_xy_max_uk", &RunConfig::t_xy_max_uk},
        {"ensemble", "t_z_uk", &RunConfig::t_z_uk},
        {"ensemble", "z0", &RunConfig::z0},
        {"ensemble", "t_final", &RunConfig::t_final},
        {"ensemble", "sample_interval", &RunConfig::sample_interval},
        {"trapping", "radial_bound", &RunConfig::radial_bound},
        {"trapping", "axial_bound", &RunConfig::axial_bound},
        {"trapping", "horizon", &RunConfig::horizon},
        {"integrator", "rtol", &RunConfig::rtol},
        {"integrator", "atol", &RunConfig::atol},
        {"integrator", "min_step", &RunConfig::min_step},
        {"integrator", "max_speed", &RunConfig::max_speed},
        {"integrator", "force_law", &RunConfig::force_law},
        {"integrator", "gravity", &RunConfig::gravity},
        {"analysis", "epsilon", &RunConfig::epsilon},
        {"analysis", "max_peaks", &RunConfig::max_peaks},
        {"analysis", "peak_width", &RunConfig::peak_width},
        {"analysis", "min_spectrum_samples", &RunConfig::min_spectrum_samples},
        {"analysis", "spectrum_coordinate", &RunConfig::spectrum_coordinate},
        {"analysis", "lobe_threshold", &RunConfig::lobe_threshold},
        {"analysis", "lobe_stride", &RunConfig::lobe_stride},
        {"analysis", "hysteresis", &RunConfig::hysteresis},
        {"analysis", "bin_width", &RunConfig::bin_width},
        {"analysis", "fit_min_count", &RunConfig::fit_min_count},
        {"sweep", "irradiances_kw_cm2", &RunConfig::irradiances_kw_cm2},
        {"run", "seed", &RunConfig::seed},
        {"run", "threads", &RunConfig::threads},
        {"run", "save_trajectories", &RunConfig::save_trajectories},
    };
    return entries;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    const char* end = s.data() + s.size();
    auto [p, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc() && p == end && std::isfinite(out);
}

template <class Int>
bool parse_int(const std::string& s, Int& out) {
    if (s.empty()) return false;
    const char* end = s.data() + s.size();
    auto [p, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc() && p == end;
}

std::string value_text(const RunConfig& c, const Member& m) {
    return std::visit(
        [&](auto ptr) -> std::string {
            using T = std::remove_cvref_t<decltype(c.*ptr)>;
            const auto& v = c.*ptr;
            if constexpr (std::is_same_v<T, double>) return format_double(v);
            else if constexpr (std::is_same_v<T, bool>) return v ? "true" : "false";
            else if constexpr (std::is_same_v<T, Parity>) return to_string(v);
            else if constexpr (std::is_same_v<T, ForceLaw>) return to_string(v);
            else if constexpr (std::is_same_v<T, std::vector<double>>) {
                std::string s;
                for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_double(v[i]);
                return s;
            } else return std::to_string(v);
        },
        m);
}

// Returns an error message, empty on success.
std::string assign(RunConfig& c, const Member& m, const std::string& text) {
    return std::visit(
        [&](auto ptr) -> std::string {
            using T = std::remove_cvref_t<decltype(c.*ptr)>;
            auto& v = c.*ptr;
            if constexpr (std::is_same_v<T, double>) {
                return parse_double(text, v) ? "" : "expected a finite number";
            } else if constexpr (std::is_same_v<T, bool>) {
                if (text == "true") v = true;
                else if (text == "false") v = false;
                else return "expected true or false";
                return "";
            } else if constexpr (std::is_same_v<T, Parity>) {
                if (text == "even") v = Parity::even;
                else if (text == "odd") v = Parity::odd;
                else return "expected even or odd";
                return "";
            } else if constexpr (std::is_same_v<T, ForceLaw>) {
                if (text == "full") v = ForceLaw::full;
                else if (text == "simple") v = ForceLaw::simple;
                else if (text == "dipole_only") v = ForceLaw::dipole_only;
                else return "expected full, simple or dipole_only";
                return "";
            } else if constexpr (std::is_same_v<T, std::vector<double>>) {
                v.clear();
                std::stringstream ss(text);
                std::string item;
                while (std::getline(ss, item, ',')) {
                    double d;
                    if (!parse_double(trim(item), d)) return "expected a comma-separated list of numbers";
                    v.push_back(d);
                }
                return "";
            } else {
                return parse_int(text, v) ? "" : "expected an integer";
            }
        },
        m);
}

void require(bool ok, const char* key, const std::string& message) {
    if (!ok) throw ConfigError(std::string(key) + ": " + message, 0, 0, key);
}

}  // namespace

const char* to_string(ForceLaw law) {
    switch (law) {
        case ForceLaw::full: return "full";
        case ForceLaw::simple: return "simple";
        case ForceLaw::dipole_only: return "dipole_only";
    }
    return "?";
}

const char* to_string(Parity parity) { return parity == Parity::even ? "even" : "odd"; }

void RunConfig::validate() const {
    require(irradiance_kw_cm2 >= 0.0, "beam.irradiance_kw_cm2", "must be non-negative");
    require(detuning_nm > 0.0, "beam.detuning_nm", "must be positive (red detuning)");
    require(kz_ratio > 0.0 && kz_ratio < 1.0, "beam.kz_ratio", "must lie in (0, 1)");
    require(mass_amu > 0.0, "species.mass_amu", "must be positive");
    require(gamma_per_s > 0.0, "species.gamma_per_s", "must be positive");
    require(transition_nm > 0.0, "species.transition_nm", "must be positive");
    require(grid_half_width > 0.0, "grid.half_width", "must be positive");
    require(grid_points >= 8, "grid.points", "must be at least 8");
    require(grid_tile >= 1, "grid.tile", "must be positive");
    require(n_atoms >= 1, "ensemble.n_atoms", "must be at least 1");
    require(disk_radius > 0.0, "ensemble.disk_radius", "must be positive");
    require(t_xy_min_uk > 0.0, "ensemble.t_xy_min_uk", "must be positive");
    require(t_xy_max_uk >= t_xy_min_uk, "ensemble.t_xy_max_uk", "must be at least t_xy_min_uk");
    require(t_z_uk > 0.0, "ensemble.t_z_uk", "must be positive");
    require(t_final > 0.0, "ensemble.t_final", "must be positive");
    require(sample_interval > 0.0 && sample_interval <= t_final, "ensemble.sample_interval",
            "must lie in (0, t_final]");
    require(radial_bound > 0.0, "trapping.radial_bound", "must be positive");
    require(radial_bound <= grid_half_width, "trapping.radial_bound", "must not exceed grid.half_width");
    require(axial_bound > 0.0, "trapping.axial_bound", "must be positive");
    require(horizon > 0.0 && horizon <= t_final, "trapping.horizon", "must lie in (0, ensemble.t_final]");
    require(rtol > 0.0, "integrator.rtol", "must be positive");
    require(atol > 0.0, "integrator.atol", "must be positive");
    require(min_step > 0.0, "integrator.min_step", "must be positive");
    require(max_speed > 0.0, "integrator.max_speed", "must be positive");
    require(epsilon > 0.0 && epsilon < 1.0, "analysis.epsilon", "must lie in (0, 1)");
    require(max_peaks >= 1, "analysis.max_peaks", "must be at least 1");
    require(peak_width >= 1 && peak_width % 2 == 1, "analysis.peak_width", "must be a positive odd integer");
    require(min_spectrum_samples >= 16, "analysis.min_spectrum_samples", "must be at least 16");
    require(spectrum_coordinate >= 0 && spectrum_coordinate <= 2, "analysis.spectrum_coordinate", "must be 0, 1 or 2");
    require(lobe_threshold > 0.0 && lobe_threshold < 1.0, "analysis.lobe_threshold", "must lie in (0, 1)");
    require(lobe_stride >= 1 && (grid_points - 1) % lobe_stride == 0, "analysis.lobe_stride",
            "must divide grid.points - 1");
    require(hysteresis >= 1.0, "analysis.hysteresis", "must be at least 1");
    require(bin_width > 0.0, "analysis.bin_width", "must be positive");
    require(fit_min_count >= 1.0, "analysis.fit_min_count", "must be at least 1");
    require(!irradiances_kw_cm2.empty(), "sweep.irradiances_kw_cm2", "must not be empty");
    for (double v : irradiances_kw_cm2) require(v >= 0.0, "sweep.irradiances_kw_cm2", "entries must be non-negative");
    require(threads >= 1, "run.threads", "must be at least 1");
}

RunConfig parse_config(const std::string& text) {
    RunConfig config;
    std::set<std::string> seen;
    std::string section;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = raw;
        if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line = line.substr(3);
        // trailing comment: # or ; preceded by whitespace
        for (std::size_t i = 1; i < line.size(); ++i)
            if ((line[i] == '#' || line[i] == ';') && (line[i - 1] == ' ' || line[i - 1] == '\t')) {
                line = line.substr(0, i);
                break;
            }
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#' || line[first] == ';') continue;
        const int col = static_cast<int>(first) + 1;
        const std::string body = trim(line);
        if (body.front() == '[') {
            if (body.back() != ']')
                throw ConfigError("line " + std::to_string(line_no) + ", column " + std::to_string(col) +
                                      ": unterminated section header",
                                  line_no, col);
            section = trim(body.substr(1, body.size() - 2));
            bool known = false;
            for (const auto& e : table()) known = known || section == e.section;
            if (!known)
                throw ConfigError("line " + std::to_string(line_no) + ", column " + std::to_string(col + 1) +
                                      ": unknown section [" + section + "]",
                                  line_no, col + 1);
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line_no) + ", column " + std::to_string(col) +
                                  ": expected key = value",
                              line_no, col);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const int value_col = static_cast<int>(line.find_first_not_of(" \t", eq + 1) == std::string::npos
                                                   ? eq + 2
                                                   : line.find_first_not_of(" \t", eq + 1) + 1);
        if (section.empty())
            throw ConfigError("line " + std::to_string(line_no) + ", column " + std::to_string(col) + ": key '" + key +
                                  "' outside any section",
                              line_no, col);
        const Entry* entry = nullptr;
        for (const auto& e : table())
            if (section == e.section && key == e.key) entry = &e;
        const std::string full = section + "." + key;
        if (!entry)
            throw ConfigError("line " + std::to_string(line_no) + ", column " + std::to_string(col) +
                                  ": unknown key '" + full + "'",
                              line_no, col, full);
        if (!seen.insert(full).second)
            throw ConfigError("line " + std::to_string(line_no) + ", column " + std::to_string(col) +
                                  ": duplicate key '" + full + "'",
                              line_no, col, full);
        const std::string err = assign(config, entry->member, value);
        if (!err.empty())
            throw ConfigError("line " + std::to_string(line_no) + ", column " + std::to_string(value_col) + ": " +
                                  full + ": " + err,
                              line_no, value_col, full);
    }
    config.validate();
    return config;
}

RunConfig load_config(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open config file " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

namespace {
std::string serialize_sections(const RunConfig& config, bool include_run) {
    std::string out;
    std::string section;
    for (const auto& e : table()) {
        if (!include_run && std::string(e.section) == "run") continue;
        if (section != e.section) {
            section = e.section;
            out += (out.empty() ? "[" : "\n[") + section + "]\n";
        }
        out += std::string(e.key) + " = " + value_text(config, e.member) + "\n";
    }
    return out;
}
}  // namespace

std::string serialize_config(const RunConfig& config) { return serialize_sections(config, true); }

std::uint64_t config_hash(const RunConfig& config) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : serialize_sections(config, false)) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hash_hex(std::uint64_t hash) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

}  // namespace labyrinth
