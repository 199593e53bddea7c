#include "labyrinth/io.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

namespace labyrinth {

namespace {

constexpr std::uint64_t fnv_offset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t fnv_prime = 0x100000001b3ULL;

std::uint64_t fnv1a(const std::string& bytes, std::size_t n) {
    std::uint64_t h = fnv_offset;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= static_cast<unsigned char>(bytes[i]);
        h *= fnv_prime;
    }
    return h;
}

class ByteWriter {
public:
    void raw(const void* p, std::size_t n) { out.append(static_cast<const char*>(p), n); }
    void u8(std::uint8_t v) { out.push_back(static_cast<char>(v)); }
    void u32(std::uint32_t v) {
        for (int b = 0; b < 4; ++b) u8(static_cast<std::uint8_t>(v >> (8 * b)));
    }
    void u64(std::uint64_t v) {
        for (int b = 0; b < 8; ++b) u8(static_cast<std::uint8_t>(v >> (8 * b)));
    }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    std::string out;
};

class ByteReader {
public:
    ByteReader(const std::string& data, std::size_t end, const std::string& name) : d_(data), end_(end), name_(name) {}
    void need(std::size_t n) {
        if (pos_ + n > end_) throw FormatError(name_ + ": truncated trajectory file");
    }
    std::uint8_t u8() {
        need(1);
        return static_cast<std::uint8_t>(d_[pos_++]);
    }
    std::uint32_t u32() {
        std::uint32_t v = 0;
        for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(u8()) << (8 * b);
        return v;
    }
    std::uint64_t u64() {
        std::uint64_t v = 0;
        for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(u8()) << (8 * b);
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string bytes(std::size_t n) {
        need(n);
        std::string s = d_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    std::size_t pos() const { return pos_; }

private:
    const std::string& d_;
    std::size_t end_;
    std::string name_;
    std::size_t pos_ = 0;
};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw FormatError("cannot write " + path.string());
        f.write(text.data(), static_cast<std::streamsize>(text.size()));
        if (!f) throw FormatError("write failed for " + path.string());
    }
    fs::rename(tmp, path);
}

std::string read_text(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw FormatError("cannot open " + path.string());
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) {
    try {
        return json::parse(read_text(path));
    } catch (const json::parse_error& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

void write_trajectory(const fs::path& path, const Trajectory& t, const Provenance& p) {
    ByteWriter w;
    w.raw("LTRJ", 4);
    w.u32(trajectory_format_version);
    w.u64(p.config_hash);
    w.u64(p.seed);
    w.u64(t.meta.atom_id);
    w.f64(t.sample_interval);
    w.f64(t.horizon);
    w.u64(t.stats.accepted);
    w.u64(t.stats.rejected);
    w.u64(t.stats.evaluations);
    w.u8(static_cast<std::uint8_t>(t.escape ? t.escape->kind : EscapeKind::none));
    for (int i = 0; i < 7; ++i) w.u8(0);
    const AtomState es = t.escape ? t.escape->state : AtomState{};
    w.f64(t.escape ? t.escape->time : 0.0);
    for (int k = 0; k < 3; ++k) w.f64(es.position[k]);
    for (int k = 0; k < 3; ++k) w.f64(es.velocity[k]);
    w.u64(t.samples.size());
    w.u32(static_cast<std::uint32_t>(p.code_version.size()));
    w.raw(p.code_version.data(), p.code_version.size());
    w.out.reserve(w.out.size() + t.samples.size() * 56 + 8);
    for (const auto& s : t.samples) {
        w.f64(s.time);
        for (int k = 0; k < 3; ++k) w.f64(s.position[k]);
        for (int k = 0; k < 3; ++k) w.f64(s.velocity[k]);
    }
    w.u64(fnv1a(w.out, w.out.size()));
    write_text(path, w.out);
}

Trajectory read_trajectory(const fs::path& path, Provenance* provenance) {
    const std::string data = read_text(path);
    const std::string name = path.string();
    if (data.size() < 12 || data.compare(0, 4, "LTRJ") != 0) throw FormatError(name + ": not a trajectory file");
    {
        ByteReader r(data, data.size(), name);
        r.bytes(4);
        const std::uint32_t version = r.u32();
        if (version != trajectory_format_version)
            throw FormatError(name + ": unsupported trajectory format version " + std::to_string(version));
    }
    const std::size_t body = data.size() - 8;
    std::uint64_t stored = 0;
    for (int b = 0; b < 8; ++b) stored |= static_cast<std::uint64_t>(static_cast<unsigned char>(data[body + b])) << (8 * b);
    if (stored != fnv1a(data, body)) throw FormatError(name + ": checksum mismatch (corrupt file)");

    ByteReader r(data, body, name);
    r.bytes(4);
    r.u32();
    Provenance p;
    p.config_hash = r.u64();
    p.seed = r.u64();
    Trajectory t;
    t.meta.atom_id = r.u64();
    t.meta.seed = p.seed;
    t.meta.params_hash = p.config_hash;
    t.sample_interval = r.f64();
    t.horizon = r.f64();
    t.stats.accepted = r.u64();
    t.stats.rejected = r.u64();
    t.stats.evaluations = r.u64();
    const auto kind = static_cast<EscapeKind>(r.u8());
    r.bytes(7);
    EscapeRecord e;
    e.kind = kind;
    e.time = r.f64();
    for (int k = 0; k < 3; ++k) e.state.position[k] = r.f64();
    for (int k = 0; k < 3; ++k) e.state.velocity[k] = r.f64();
    e.state.time = e.time;
    if (kind != EscapeKind::none) t.escape = e;
    const std::uint64_t count = r.u64();
    p.code_version = r.bytes(r.u32());
    if (count > (body - r.pos()) / 56 || (body - r.pos()) != count * 56)
        throw FormatError(name + ": sample count does not match file size");
    t.samples.resize(count);
    for (auto& s : t.samples) {
        s.time = r.f64();
        for (int k = 0; k < 3; ++k) s.position[k] = r.f64();
        for (int k = 0; k < 3; ++k) s.velocity[k] = r.f64();
    }
    if (provenance) *provenance = p;
    return t;
}

void write_trajectory_csv(const fs::path& path, const Trajectory& t, const Provenance& p) {
    CsvWriter w(path, "trajectory", p, {"t", "x", "y", "z", "vx", "vy", "vz"});
    for (const auto& s : t.samples)
        w.row({s.time, s.position.x(), s.position.y(), s.position.z(), s.velocity.x(), s.velocity.y(), s.velocity.z()});
    w.close();
}

CsvWriter::CsvWriter(const fs::path& path, const std::string& kind, const Provenance& p,
                     const std::vector<std::string>& columns)
    : path_(path), columns_(columns.size()) {
    buffer_ = "# kind=" + kind + "\n# schema_version=" + std::to_string(schema_version) +
              "\n# config_hash=" + hash_hex(p.config_hash) + "\n# seed=" + std::to_string(p.seed) +
              "\n# code_version=" + p.code_version + "\n";
    for (std::size_t i = 0; i < columns.size(); ++i) buffer_ += (i ? "," : "") + columns[i];
    buffer_ += "\n";
}

void CsvWriter::row(const std::vector<double>& values) {
    if (values.size() != columns_) throw FormatError("CsvWriter: row width does not match the header");
    for (std::size_t i = 0; i < values.size(); ++i) buffer_ += (i ? "," : "") + fmt(values[i]);
    buffer_ += "\n";
}

void CsvWriter::close() { write_text(path_, buffer_); }

std::vector<double> CsvTable::column(const std::string& name) const {
    for (std::size_t c = 0; c < columns.size(); ++c) {
        if (columns[c] != name) continue;
        std::vector<double> out;
        out.reserve(rows.size());
        for (const auto& r : rows) out.push_back(r[c]);
        return out;
    }
    throw FormatError("CSV has no column " + name);
}

CsvTable read_csv(const fs::path& path) {
    std::istringstream in(read_text(path));
    CsvTable t;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto eq = line.find('=');
            if (eq != std::string::npos) t.meta[line.substr(2, eq - 2)] = line.substr(eq + 1);
            continue;
        }
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (t.columns.empty()) {
            t.columns = cells;
            continue;
        }
        if (cells.size() != t.columns.size()) throw FormatError(path.string() + ": ragged CSV row");
        std::vector<double> row;
        for (const auto& c : cells) row.push_back(std::strtod(c.c_str(), nullptr));
        t.rows.push_back(std::move(row));
    }
    return t;
}

json to_json(const AtomState& s) {
    return json::array({s.time, s.position.x(), s.position.y(), s.position.z(), s.velocity.x(), s.velocity.y(),
                        s.velocity.z()});
}

AtomState atom_state_from_json(const json& j) {
    if (!j.is_array() || j.size() != 7) throw FormatError("state must be an array of 7 numbers");
    AtomState s;
    s.time = j[0].get<double>();
    for (int k = 0; k < 3; ++k) s.position[k] = j[1 + k].get<double>();
    for (int k = 0; k < 3; ++k) s.velocity[k] = j[4 + k].get<double>();
    return s;
}

json to_json(const AtomResult& r) {
    json j;
    j["atom_id"] = r.atom_id;
    j["initial"] = to_json(r.initial);
    j["trapping"] = to_string(r.trapping);
    j["escape_time"] = r.escape_time ? json(*r.escape_time) : json(nullptr);
    j["motion"] = r.motion ? json(to_string(*r.motion)) : json(nullptr);
    j["flatness"] = r.flatness;
    j["peak_fraction"] = r.peak_fraction;
    j["transitions"] = r.transitions;
    j["final"] = to_json(r.final_state);
    j["checksum"] = hash_hex(r.checksum);
    j["steps_accepted"] = r.stats.accepted;
    j["steps_rejected"] = r.stats.rejected;
    j["evaluations"] = r.stats.evaluations;
    j["error"] = r.error;
    return j;
}

AtomResult atom_result_from_json(const json& j) {
    try {
        AtomResult r;
        r.atom_id = j.at("atom_id").get<std::uint64_t>();
        r.initial = atom_state_from_json(j.at("initial"));
        const auto trap = j.at("trapping").get<std::string>();
        if (trap == "trapped") r.trapping = TrappingLabel::trapped;
        else if (trap == "escaped_transverse") r.trapping = TrappingLabel::escaped_transverse;
        else if (trap == "escaped_axial") r.trapping = TrappingLabel::escaped_axial;
        else throw FormatError("unknown trapping label " + trap);
        if (!j.at("escape_time").is_null()) r.escape_time = j.at("escape_time").get<double>();
        if (!j.at("motion").is_null()) {
            const auto m = j.at("motion").get<std::string>();
            if (m == "quasiperiodic") r.motion = MotionLabel::quasiperiodic;
            else if (m == "chaotic") r.motion = MotionLabel::chaotic;
            else throw FormatError("unknown motion label " + m);
        }
        r.flatness = j.at("flatness").get<double>();
        r.peak_fraction = j.at("peak_fraction").get<double>();
        r.transitions = j.at("transitions").get<std::uint64_t>();
        r.final_state = atom_state_from_json(j.at("final"));
        r.checksum = std::stoull(j.at("checksum").get<std::string>(), nullptr, 16);
        r.stats.accepted = j.at("steps_accepted").get<std::uint64_t>();
        r.stats.rejected = j.at("steps_rejected").get<std::uint64_t>();
        r.stats.evaluations = j.at("evaluations").get<std::uint64_t>();
        r.error = j.at("error").get<std::string>();
        return r;
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed atom record: ") + e.what());
    }
}

json to_json(const SweepPoint& p, bool with_atoms) {
    auto frac = [](const ClassFractions& f) { return json{{"value", f.value}, {"error", f.error}}; };
    json j{{"irradiance_kw_cm2", p.irradiance_kw_cm2},
           {"n_atoms", p.n_atoms},
           {"counts",
            {{"escaped_transverse", p.escaped_transverse},
             {"escaped_axial", p.escaped_axial},
             {"quasiperiodic", p.quasiperiodic},
             {"chaotic", p.chaotic},
             {"unclassified", p.unclassified},
             {"failed", p.failed}}},
           {"fractions",
            {{"non_trapped", frac(p.non_trapped)},
             {"trapped", frac(p.trapped)},
             {"quasiperiodic", frac(p.quasiperiodic_fraction)},
             {"chaotic", frac(p.chaotic_fraction)}}}};
    if (with_atoms) {
        json atoms = json::array();
        for (const auto& a : p.atoms) atoms.push_back(to_json(a));
        j["atoms"] = std::move(atoms);
    }
    return j;
}

json provenance_json(const Provenance& p) {
    return {{"config_hash", hash_hex(p.config_hash)}, {"seed", p.seed}, {"code_version", p.code_version}};
}

json report(const std::string& kind, const Provenance& provenance, json payload) {
    json j{{"schema_version", schema_version}, {"kind", kind}};
    j.update(provenance_json(provenance));
    j["data"] = std::move(payload);
    return j;
}

Checkpoint::Checkpoint(fs::path path, Provenance provenance) : path_(std::move(path)), provenance_(std::move(provenance)) {
    if (path_.has_parent_path()) fs::create_directories(path_.parent_path());
}

std::map<std::uint64_t, AtomResult> Checkpoint::load(double irradiance_kw_cm2) const {
    std::map<std::uint64_t, AtomResult> out;
    std::ifstream f(path_);
    if (!f) return out;
    std::string line;
    const std::string hash = hash_hex(provenance_.config_hash);
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error&) {
            if (f.peek() == std::char_traits<char>::eof()) break;  // torn tail
            throw FormatError(path_.string() + ": corrupt checkpoint line");
        }
        if (j.value("config_hash", "") != hash || j.value("seed", std::uint64_t{0}) != provenance_.seed) continue;
        if (j.at("irradiance_kw_cm2").get<double>() != irradiance_kw_cm2) continue;
        AtomResult r = atom_result_from_json(j.at("atom"));
        out[r.atom_id] = std::move(r);
    }
    return out;
}

void Checkpoint::store(double irradiance_kw_cm2, const AtomResult& result) {
    json j{{"config_hash", hash_hex(provenance_.config_hash)},
           {"seed", provenance_.seed},
           {"irradiance_kw_cm2", irradiance_kw_cm2},
           {"atom", to_json(result)}};
    std::lock_guard lock(mutex_);
    std::ofstream f(path_, std::ios::app);
    if (!f) throw FormatError("cannot append to checkpoint " + path_.string());
    f << j.dump() << '\n';
    f.flush();
}

}  // namespace labyrinth
