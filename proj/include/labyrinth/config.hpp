#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "labyrinth/beam_field.hpp"
#include "labyrinth/force_model.hpp"

namespace labyrinth {

inline constexpr const char* code_version = LABYRINTH_VERSION;
inline constexpr int schema_version = 1;

class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& what, int line = 0, int column = 0, std::string key = {})
        : std::runtime_error(what), line(line), column(column), key(std::move(key)) {}
    int line;
    int column;
    std::string key;  // section.key for validation errors
};

/// Everything a run depends on. Defaults are the reference operating point.
struct RunConfig {
    // [beam]
    double irradiance_kw_cm2 = 6.0;
    double detuning_nm = 67.0;  // red detuning: laser wavelength = transition + detuning
    double kz_ratio = 0.975;
    Parity parity = Parity::even;
    double a = 0.0;
    // [species]
    double mass_amu = 84.911789738;
    double gamma_per_s = 3.7e7;
    double transition_nm = 795.0;
    // [grid]
    double grid_half_width = 82.0;
    int grid_points = 1024;
    int grid_tile = 128;
    // [ensemble]
    int n_atoms = 100;
    double disk_radius = 20.0;
    double t_xy_min_uk = 2.9;
    double t_xy_max_uk = 3.1;
    double t_z_uk = 0.2;
    double z0 = 0.0;
    double t_final = 1.25e8;
    double sample_interval = 20.0;
    // [trapping]
    double radial_bound = 80.0;
    double axial_bound = 5.0;
    double horizon = 1.25e8;
    // [integrator]
    double rtol = 1e-9;
    double atol = 1e-12;
    double min_step = 1e-12;
    double max_speed = 0.5;
    ForceLaw force_law = ForceLaw::full;
    bool gravity = true;
    // [analysis]
    double epsilon = 0.05;
    int max_peaks = 20;
    int peak_width = 3;
    int min_spectrum_samples = 1 << 14;
    int spectrum_coordinate = 0;
    double lobe_threshold = 0.1;
    int lobe_stride = 1;
    double hysteresis = 1.5;
    double bin_width = 50.0;
    double fit_min_count = 10.0;
    // [sweep]
    std::vector<double> irradiances_kw_cm2{0.5, 1.5, 3.0, 4.5, 6.0, 9.0, 13.5, 22.0};
    // [run]
    std::uint64_t seed = 1;
    int threads = 1;
    bool save_trajectories = false;

    /// Throws ConfigError naming the offending key.
    void validate() const;
    bool operator==(const RunConfig&) const = default;
};

/// Sectioned key = value text. Blank lines and lines starting with # or ;
/// are ignored, as is anything after an unquoted # following whitespace.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// Canonical text: every key, in table order, doubles with 17 digits.
std::string serialize_config(const RunConfig& config);

/// FNV-1a 64 of the canonical text without the [run] section, so the hash
/// identifies the physics and not the seed or thread count.
std::uint64_t config_hash(const RunConfig& config);
std::string hash_hex(std::uint64_t hash);

const char* to_string(ForceLaw law);
const char* to_string(Parity parity);

}  // namespace labyrinth
