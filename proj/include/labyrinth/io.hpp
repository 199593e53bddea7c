#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "labyrinth/analysis.hpp"
#include "labyrinth/config.hpp"
#include "labyrinth/ensemble.hpp"

namespace labyrinth {

namespace fs = std::filesystem;
using json = nlohmann::json;

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Provenance embedded in every output file.
struct Provenance {
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
    std::string code_version;
};

inline constexpr std::uint32_t trajectory_format_version = 1;

/// Binary trajectory file, all fields little-endian:
///   "LTRJ", u32 version, u64 config hash, u64 seed, u64 atom id,
///   f64 sample interval, f64 horizon, u64 accepted, u64 rejected,
///   u64 evaluations, u8 escape kind, 7 zero bytes, f64 escape time,
///   6 f64 escape state (x y z vx vy vz), u64 sample count, u32 length of
///   the code version string, its bytes, then count records of 7 f64
///   (t x y z vx vy vz), and a trailing u64 FNV-1a of everything before it.
void write_trajectory(const fs::path& path, const Trajectory& trajectory, const Provenance& provenance);
Trajectory read_trajectory(const fs::path& path, Provenance* provenance = nullptr);

/// CSV with columns t,x,y,z,vx,vy,vz after '#' provenance lines.
void write_trajectory_csv(const fs::path& path, const Trajectory& trajectory, const Provenance& provenance);

json to_json(const AtomState& s);
AtomState atom_state_from_json(const json& j);
json to_json(const AtomResult& r);
AtomResult atom_result_from_json(const json& j);
json to_json(const SweepPoint& p, bool with_atoms);
json provenance_json(const Provenance& p);

/// Standard report envelope: schema_version, kind, provenance, then payload.
json report(const std::string& kind, const Provenance& provenance, json payload);

void write_text(const fs::path& path, const std::string& text);
std::string read_text(const fs::path& path);
void write_json(const fs::path& path, const json& j);
json read_json(const fs::path& path);

/// Comment-header CSV writer: "# kind=...", provenance, then a header row.
class CsvWriter {
public:
    CsvWriter(const fs::path& path, const std::string& kind, const Provenance& provenance,
              const std::vector<std::string>& columns);
    void row(const std::vector<double>& values);
    void close();

private:
    std::string buffer_;
    fs::path path_;
    std::size_t columns_;
};

struct CsvTable {
    std::map<std::string, std::string> meta;  // from "# key=value" lines
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    std::vector<double> column(const std::string& name) const;
};
CsvTable read_csv(const fs::path& path);

/// Append-only per-atom checkpoint (JSON lines). A torn final line from an
/// interrupted write is ignored on load.
class Checkpoint {
public:
    Checkpoint(fs::path path, Provenance provenance);
    std::map<std::uint64_t, AtomResult> load(double irradiance_kw_cm2) const;
    void store(double irradiance_kw_cm2, const AtomResult& result);
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
    Provenance provenance_;
    std::mutex mutex_;
};

}  // namespace labyrinth
