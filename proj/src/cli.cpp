#include "labyrinth/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"

#include "labyrinth/io.hpp"
#include "labyrinth/pipeline.hpp"
#include "labyrinth/svg.hpp"

namespace labyrinth {

namespace {

struct Common {
    std::string config_path;
    std::int64_t seed = -1;
    std::string out = "out";
    int threads = 0;
};

struct Context {
    RunConfig config;
    Provenance provenance;
    fs::path out;
    int threads = 1;
};

Context make_context(const Common& c) {
    Context ctx;
    ctx.config = c.config_path.empty() ? RunConfig{} : load_config(c.config_path);
    if (c.seed >= 0) ctx.config.seed = static_cast<std::uint64_t>(c.seed);
    ctx.threads = resolve_threads(c.threads, ctx.config.threads);
    ctx.config.threads = ctx.threads;
    ctx.provenance = {config_hash(ctx.config), ctx.config.seed, code_version};
    ctx.out = c.out;
    fs::create_directories(ctx.out);
    write_text(ctx.out / "config.ini", serialize_config(ctx.config));
    return ctx;
}

std::string subtitle(const std::map<std::string, std::string>& meta) {
    auto get = [&](const char* k) {
        auto it = meta.find(k);
        return it == meta.end() ? std::string("?") : it->second;
    };
    return "config " + get("config_hash") + "  seed " + get("seed") + "  v" + get("code_version");
}

double motion_code(const AtomResult& a) {
    if (a.failed()) return -2;
    if (!a.motion) return -1;
    return *a.motion == MotionLabel::quasiperiodic ? 0 : 1;
}

void write_atoms_csv(const fs::path& path, const std::vector<AtomResult>& atoms, const Provenance& p) {
    CsvWriter w(path, "atoms", p,
                {"atom_id", "trapping", "escape_time", "motion", "peak_fraction", "flatness", "transitions", "x0", "y0",
                 "vx0", "vy0", "vz0"});
    for (const auto& a : atoms)
        w.row({static_cast<double>(a.atom_id), static_cast<double>(static_cast<int>(a.trapping)),
               a.escape_time.value_or(std::nan("")), motion_code(a), a.peak_fraction, a.flatness,
               static_cast<double>(a.transitions), a.initial.position.x(), a.initial.position.y(),
               a.initial.velocity.x(), a.initial.velocity.y(), a.initial.velocity.z()});
    w.close();
}

// ---- field-map ----

int field_map(const Common& common, double extent, int points, std::ostream& out) {
    Context ctx = make_context(common);
    const Lattice lattice = Lattice::build(ctx.config);
    const auto beam = make_beam(ctx.config, lattice.physics, ctx.config.irradiance_kw_cm2);
    const Environment env = lattice.environment(ctx.config.irradiance_kw_cm2);

    CsvWriter w(ctx.out / "field_map.csv", "field_map", ctx.provenance,
                {"x", "y", "psi_re", "psi_im", "psi_intensity", "ex_re", "ex_im", "ey_re", "ey_im", "e_intensity",
                 "saturation"});
    for (int iy = 0; iy < points; ++iy) {
        const double y = -extent + 2.0 * extent * iy / (points - 1);
        for (int ix = 0; ix < points; ++ix) {
            const double x = -extent + 2.0 * extent * ix / (points - 1);
            const ModeJet j = beam->jet(x, y, 1);
            const CVec3 e = beam->te_field(x, y, 0.0, 0.0, true);
            const double p =
                env.field ? saturation(env.field->sample(Vec3(x, y, 0.0)), env.params.detuning, env.params.gamma) : 0.0;
            w.row({x, y, j.value().real(), j.value().imag(), std::norm(j.value()), e.x().real(), e.x().imag(),
                   e.y().real(), e.y().imag(), e.squaredNorm(), p});
        }
    }
    w.close();

    const auto& lobes = *lattice.lobes;
    CsvWriter lw(ctx.out / "lobes.csv", "lobes", ctx.provenance, {"id", "peak", "x", "y"});
    for (std::size_t i = 0; i < lobes.count(); ++i)
        lw.row({static_cast<double>(i), lobes.component_peak[i], lobes.component_peak_location[i].x(),
                lobes.component_peak_location[i].y()});
    lw.close();

    const double p_peak = peak_saturation(lattice, ctx.config.irradiance_kw_cm2);
    const double u_peak = dipole_potential(p_peak, env.params);
    const double kelvin_per_unit = lattice.physics.units.energy() / si::k_B;
    json data{{"irradiance_kw_cm2", ctx.config.irradiance_kw_cm2},
              {"detuning_gamma", lattice.physics.detuning},
              {"peak_location", {beam->peak_location().x(), beam->peak_location().y()}},
              {"peak_unit_gradient", lattice.unit_beam->peak_unit_gradient()},
              {"peak_saturation", p_peak},
              {"peak_potential_hbar_gamma", u_peak},
              {"peak_potential_uK", u_peak * kelvin_per_unit * 1e6},
              {"lobes", lobes.count()},
              {"extent", extent},
              {"points", points}};
    write_json(ctx.out / "field_map.json", report("field_map", ctx.provenance, data));
    plot_csv(ctx.out / "field_map.csv");
    out << "field-map: peak saturation " << p_peak << ", well depth " << u_peak * kelvin_per_unit * 1e6 << " uK, "
        << lobes.count() << " lobes -> " << ctx.out.string() << "\n";
    return 0;
}

// ---- simulate ----

int simulate(const Common& common, bool save_trajectories, bool csv_trajectories, std::ostream& out) {
    Context ctx = make_context(common);
    save_trajectories = save_trajectories || ctx.config.save_trajectories;
    const Lattice lattice = Lattice::build(ctx.config);
    const Environment env = lattice.environment(ctx.config.irradiance_kw_cm2);
    RunOptions opt = lattice.run_options(ctx.threads);

    struct Path {
        std::uint64_t id;
        std::vector<Vec3> points;
    };
    std::vector<Path> paths;
    const fs::path traj_dir = ctx.out / "trajectories";
    if (save_trajectories) fs::create_directories(traj_dir);
    opt.on_trajectory = [&](const AtomResult& r, const Trajectory& t) {
        char name[32];
        std::snprintf(name, sizeof name, "atom_%05llu", static_cast<unsigned long long>(r.atom_id));
        if (save_trajectories) write_trajectory(traj_dir / (std::string(name) + ".ltrj"), t, ctx.provenance);
        if (csv_trajectories) write_trajectory_csv(traj_dir / (std::string(name) + ".csv"), t, ctx.provenance);
        if (r.trapping == TrappingLabel::trapped && (paths.size() < 4 || r.atom_id < paths.back().id)) {
            const std::size_t stride = std::max<std::size_t>(1, t.samples.size() / 4000);
            Path p{r.atom_id, {}};
            for (std::size_t i = 0; i < t.samples.size(); i += stride) p.points.push_back(t.samples[i].position);
            paths.push_back(std::move(p));
            // keep the four lowest ids whatever the completion order
            std::sort(paths.begin(), paths.end(), [](const Path& a, const Path& b) { return a.id < b.id; });
            if (paths.size() > 4) paths.pop_back();
        }
    };
    const auto t0 = std::chrono::steady_clock::now();
    auto atoms = run_ensemble(env, lattice.ensemble_spec(), lattice.criteria(), lattice.physics.units, opt);
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const SweepPoint point = summarize(ctx.config.irradiance_kw_cm2, atoms);

    write_json(ctx.out / "simulate.json", report("simulate", ctx.provenance, to_json(point, true)));
    write_atoms_csv(ctx.out / "atoms.csv", point.atoms, ctx.provenance);
    CsvWriter pw(ctx.out / "paths.csv", "paths", ctx.provenance, {"segment", "x", "y"});
    for (const auto& p : paths)
        for (const auto& r : p.points) pw.row({static_cast<double>(p.id), r.x(), r.y()});
    pw.close();
    plot_csv(ctx.out / "paths.csv");
    out << "simulate: " << point.n_atoms << " atoms at " << point.irradiance_kw_cm2 << " kW/cm2 in " << elapsed
        << " s on " << ctx.threads << (ctx.threads == 1 ? " thread" : " threads") << ": trapped " << point.trapped.value * 100 << "% (quasiperiodic "
        << point.quasiperiodic << ", chaotic " << point.chaotic << ", unclassified " << point.unclassified
        << "), escaped " << point.non_trapped.value * 100 << "%, failed " << point.failed << "\n";
    return 0;
}

// ---- sweep ----

int sweep(const Common& common, const std::vector<double>& irradiances, std::size_t stop_after, bool fresh,
          std::ostream& out) {
    Context ctx = make_context(common);
    if (!irradiances.empty()) ctx.config.irradiances_kw_cm2 = irradiances;
    ctx.config.validate();
    const Lattice lattice = Lattice::build(ctx.config);
    RunOptions opt = lattice.run_options(ctx.threads);
    opt.stop_after = stop_after;

    Checkpoint checkpoint(ctx.out / "sweep_checkpoint.jsonl", ctx.provenance);
    if (fresh) fs::remove(checkpoint.path());
    SweepHooks hooks;
    hooks.load = [&](double irr) { return checkpoint.load(irr); };
    hooks.store = [&](double irr, const AtomResult& r) { checkpoint.store(irr, r); };

    const auto report_data = run_sweep(
        ctx.config.irradiances_kw_cm2, [&](double irr) { return lattice.environment(irr); }, lattice.ensemble_spec(),
        lattice.criteria(), lattice.physics.units, opt, hooks);

    out << "sweep: " << ctx.threads << (ctx.threads == 1 ? " thread\n" : " threads\n");
    bool complete = true;
    for (const auto& p : report_data.points) complete = complete && p.n_atoms == ctx.config.n_atoms * 1ull;
    if (!complete) {
        out << "sweep: interrupted after " << stop_after << " new atoms per irradiance; rerun to resume\n";
        return 3;
    }
    json points = json::array();
    CsvWriter w(ctx.out / "sweep.csv", "sweep", ctx.provenance,
                {"irradiance_kw_cm2", "n_atoms", "non_trapped", "non_trapped_err", "trapped", "trapped_err",
                 "quasiperiodic", "quasiperiodic_err", "chaotic", "chaotic_err", "unclassified", "failed"});
    for (const auto& p : report_data.points) {
        points.push_back(to_json(p, true));
        w.row({p.irradiance_kw_cm2, static_cast<double>(p.n_atoms), p.non_trapped.value, p.non_trapped.error,
               p.trapped.value, p.trapped.error, p.quasiperiodic_fraction.value, p.quasiperiodic_fraction.error,
               p.chaotic_fraction.value, p.chaotic_fraction.error, static_cast<double>(p.unclassified),
               static_cast<double>(p.failed)});
        out << "sweep: " << p.irradiance_kw_cm2 << " kW/cm2: non-trapped " << p.non_trapped.value * 100
            << "%, quasiperiodic " << p.quasiperiodic_fraction.value * 100 << "%, chaotic "
            << p.chaotic_fraction.value * 100 << "%\n";
    }
    w.close();
    write_json(ctx.out / "sweep.json", report("sweep", ctx.provenance, json{{"points", points}}));
    plot_csv(ctx.out / "sweep.csv");
    return 0;
}

// ---- analyze ----

void analyze_detail(const Context& ctx, const Lattice& lattice, const Trajectory& t, double window_center,
                    double window_half) {
    const std::string tag = std::to_string(t.meta.atom_id);
    const AnalysisParams params = lattice.analysis_params();
    if (t.samples.size() >= params.spectrum.min_samples) {
        const auto spectrum = power_spectrum(t, params.spectrum_coordinate, params.spectrum);
        CsvWriter w(ctx.out / ("spectrum_" + tag + ".csv"), "spectrum", ctx.provenance, {"frequency", "power"});
        for (std::size_t k = 0; k < spectrum.power.size(); ++k) w.row({spectrum.frequency[k], spectrum.power[k]});
        w.close();
        plot_csv(ctx.out / ("spectrum_" + tag + ".csv"));
    }
    {
        CsvWriter w(ctx.out / ("phase_" + tag + ".csv"), "phase", ctx.provenance, {"position", "velocity"});
        const std::size_t stride = std::max<std::size_t>(1, t.samples.size() / 20000);
        const auto pts = phase_space_export(t, 1, 1);
        for (std::size_t i = 0; i < pts.size(); i += stride) w.row({pts[i].first, pts[i].second});
        w.close();
        plot_csv(ctx.out / ("phase_" + tag + ".csv"));
    }
    const auto events = lobe_events(t, *lattice.lobes, params.hysteresis);
    {
        CsvWriter w(ctx.out / ("events_" + tag + ".csv"), "events", ctx.provenance,
                    {"lobe", "entry_time", "exit_time", "duration"});
        for (const auto& e : events) w.row({static_cast<double>(e.lobe_id), e.entry_time, e.exit_time, e.duration()});
        w.close();
    }
    const auto dwells = completed_dwells(events);
    if (!dwells.empty()) {
        const auto h = permanency_histogram(dwells, params.bin_width, HistogramFit{lattice.config.fit_min_count});
        CsvWriter w(ctx.out / ("histogram_" + tag + ".csv"), "histogram", ctx.provenance,
                    {"bin_start", "bin_center", "count", "log10_count", "local_max"});
        const auto logs = h.log_counts();
        std::set<std::size_t> maxima(h.local_maxima.begin(), h.local_maxima.end());
        for (std::size_t k = 0; k < h.counts.size(); ++k)
            w.row({k * h.bin_width, h.bin_center(k), static_cast<double>(h.counts[k]), logs[k],
                   maxima.count(k) ? 1.0 : 0.0});
        w.close();
        plot_csv(ctx.out / ("histogram_" + tag + ".csv"));
        write_json(ctx.out / ("histogram_" + tag + ".json"),
                   report("histogram", ctx.provenance,
                          json{{"events", h.total},
                               {"min_dwell", h.min_dwell},
                               {"longest_dwell", h.longest_dwell},
                               {"slope", std::isfinite(h.slope) ? json(h.slope) : json(nullptr)},
                               {"r_squared", std::isfinite(h.r_squared) ? json(h.r_squared) : json(nullptr)},
                               {"fit_points", h.fit_points}}));
    }
    {
        CsvWriter w(ctx.out / ("trajectory_" + tag + ".csv"), "paths", ctx.provenance, {"segment", "x", "y"});
        const std::size_t stride = std::max<std::size_t>(1, t.samples.size() / 20000);
        for (std::size_t i = 0; i < t.samples.size(); i += stride)
            w.row({static_cast<double>(t.meta.atom_id), t.samples[i].position.x(), t.samples[i].position.y()});
        w.close();
        plot_csv(ctx.out / ("trajectory_" + tag + ".csv"));
    }
    if (window_half > 0.0) {
        const auto segments = extract_partial_trajectories(t, events, window_center, window_half);
        CsvWriter w(ctx.out / ("partial_" + tag + ".csv"), "partial", ctx.provenance, {"segment", "x", "y"});
        for (std::size_t s = 0; s < segments.size(); ++s)
            for (const auto& r : segments[s].positions) w.row({static_cast<double>(s), r.x(), r.y()});
        w.close();
        plot_csv(ctx.out / ("partial_" + tag + ".csv"));
    }
}

int analyze(const Common& common, const std::string& in_dir, bool force, std::int64_t detail_atom,
            double window_center, double window_half, std::ostream& out, std::ostream& err) {
    Context ctx = make_context(common);
    const fs::path dir = fs::path(in_dir.empty() ? common.out : in_dir) / "trajectories";
    if (!fs::is_directory(dir)) throw FormatError("analyze: no trajectories directory in " + dir.parent_path().string());
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().extension() == ".ltrj") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw FormatError("analyze: no .ltrj files in " + dir.string());

    const Lattice lattice = Lattice::build(ctx.config);
    const AnalysisParams params = lattice.analysis_params();
    std::vector<AtomResult> atoms;
    for (const auto& f : files) {
        Provenance p;
        Trajectory t = read_trajectory(f, &p);
        if (p.config_hash != ctx.provenance.config_hash || p.seed != ctx.provenance.seed ||
            p.code_version != ctx.provenance.code_version) {
            const std::string msg = f.filename().string() + " was written with config " + hash_hex(p.config_hash) +
                                    ", seed " + std::to_string(p.seed) + ", version " + p.code_version +
                                    "; current run has config " + hash_hex(ctx.provenance.config_hash) + ", seed " +
                                    std::to_string(ctx.provenance.seed) + ", version " + ctx.provenance.code_version;
            if (!force) throw FormatError("analyze: provenance mismatch: " + msg + " (use --force to override)");
            err << "warning: " << msg << "\n";
        }
        try {
            atoms.push_back(analyze_atom(t, lattice.criteria(), params, lattice.lobes.get()));
        } catch (const std::exception& e) {
            AtomResult r;
            r.atom_id = t.meta.atom_id;
            r.error = e.what();
            atoms.push_back(r);
        }
        if (detail_atom >= 0 && t.meta.atom_id == static_cast<std::uint64_t>(detail_atom))
            analyze_detail(ctx, lattice, t, window_center, window_half);
    }
    std::sort(atoms.begin(), atoms.end(), [](const auto& a, const auto& b) { return a.atom_id < b.atom_id; });
    const SweepPoint point = summarize(ctx.config.irradiance_kw_cm2, atoms);
    write_json(ctx.out / "analysis.json", report("analysis", ctx.provenance, to_json(point, true)));
    write_atoms_csv(ctx.out / "analysis_atoms.csv", point.atoms, ctx.provenance);
    out << "analyze: " << atoms.size() << " trajectories, trapped " << point.trapped.value * 100 << "% (quasiperiodic "
        << point.quasiperiodic << ", chaotic " << point.chaotic << ")\n";
    return 0;
}

// ---- replot ----

int replot(const Common& common, const std::string& in_dir, std::ostream& out) {
    const fs::path dir = in_dir.empty() ? fs::path(common.out) : fs::path(in_dir);
    if (!fs::is_directory(dir)) throw FormatError("replot: no such directory " + dir.string());
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().extension() == ".csv") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    int n = 0;
    for (const auto& f : files)
        if (!plot_csv(f).empty()) ++n;
    out << "replot: " << n << " plots regenerated in " << dir.string() << "\n";
    return 0;
}

void segments_series(const CsvTable& t, std::vector<svg::Series>& out) {
    const auto seg = t.column("segment"), x = t.column("x"), y = t.column("y");
    svg::Series cur;
    for (std::size_t i = 0; i < seg.size(); ++i) {
        if (i > 0 && seg[i] != seg[i - 1]) {
            out.push_back(cur);
            cur = {};
        }
        cur.name = "atom/segment " + std::to_string(static_cast<long long>(seg[i]));
        cur.x.push_back(x[i]);
        cur.y.push_back(y[i]);
    }
    if (!cur.x.empty()) out.push_back(cur);
}

}  // namespace

int resolve_threads(int flag, int fallback) {
    if (flag > 0) return flag;
    if (const char* env = std::getenv("LATTICE_THREADS"); env && *env) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (*end != '\0' || v < 1 || v > 4096)
            throw std::invalid_argument(std::string("LATTICE_THREADS must be a positive integer, got '") + env + "'");
        return static_cast<int>(v);
    }
    return std::max(1, fallback);
}

fs::path plot_csv(const fs::path& csv) {
    const CsvTable t = read_csv(csv);
    const auto kind_it = t.meta.find("kind");
    if (kind_it == t.meta.end()) return {};
    const std::string kind = kind_it->second;
    const std::string sub = subtitle(t.meta);
    fs::path svg_path = csv;
    svg_path.replace_extension(".svg");

    if (kind == "field_map") {
        const auto x = t.column("x");
        std::set<double> xs(x.begin(), x.end());
        const int n = static_cast<int>(xs.size());
        if (n < 2 || static_cast<std::size_t>(n) * n != t.rows.size()) throw FormatError(csv.string() + ": field map is not square");
        std::vector<svg::Marker> markers;
        const fs::path lobes = csv.parent_path() / "lobes.csv";
        if (fs::exists(lobes)) {
            const CsvTable l = read_csv(lobes);
            const auto id = l.column("id"), lx = l.column("x"), ly = l.column("y");
            for (std::size_t i = 0; i < id.size() && i < 8; ++i)
                markers.push_back({lx[i], ly[i], std::to_string(static_cast<int>(id[i]))});
        }
        for (const auto& [column, title, file] :
             {std::tuple{"e_intensity", "Transverse intensity |E|^2 (standing wave, z = 0)", "field_map.svg"},
              std::tuple{"psi_intensity", "Scalar mode |psi|^2", "field_map_psi.svg"}}) {
            svg::Heatmap h;
            h.title = title;
            h.subtitle = sub;
            h.colorbar_label = column;
            h.nx = h.ny = n;
            h.values = t.column(column);
            h.x0 = *xs.begin();
            h.x1 = *xs.rbegin();
            h.y0 = h.x0;
            h.y1 = h.x1;
            if (std::string(column) == "e_intensity") h.markers = markers;
            write_text(csv.parent_path() / file, svg::render(h));
        }
        return csv.parent_path() / "field_map.svg";
    }

    svg::Plot p;
    p.subtitle = sub;
    if (kind == "spectrum") {
        p.title = "Power spectrum";
        p.xlabel = "frequency [cycles per 1/Gamma]";
        p.ylabel = "power";
        p.logy = true;
        p.series.push_back({"", t.column("frequency"), t.column("power"), {}, svg::Style::line, ""});
    } else if (kind == "histogram") {
        p.title = "Permanency-time histogram";
        p.xlabel = "log10 T [1/Gamma]";
        p.ylabel = "log10 N (log 0 -> 0)";
        auto c = t.column("bin_center");
        for (double& v : c) v = std::log10(v);
        p.series.push_back({"", c, t.column("log10_count"), {}, svg::Style::markers, ""});
    } else if (kind == "phase") {
        p.title = "Phase space";
        p.xlabel = "y [wavelengths]";
        p.ylabel = "v_y [wavelength Gamma]";
        p.series.push_back({"", t.column("position"), t.column("velocity"), {}, svg::Style::markers, ""});
    } else if (kind == "sweep") {
        p.title = "Trajectory classes vs irradiance";
        p.xlabel = "irradiance [kW/cm^2]";
        p.ylabel = "percentage of atoms";
        const auto irr = t.column("irradiance_kw_cm2");
        for (const auto& [col, name] : {std::pair{"non_trapped", "non trapped"}, std::pair{"quasiperiodic", "quasiperiodic"},
                                        std::pair{"chaotic", "chaotic"}}) {
            auto v = t.column(col), e = t.column(std::string(col) + "_err");
            for (double& x : v) x *= 100;
            for (double& x : e) x *= 100;
            p.series.push_back({name, irr, v, e, svg::Style::line_markers, ""});
        }
    } else if (kind == "paths" || kind == "partial") {
        p.title = kind == "paths" ? "Transverse trajectories" : "Partial trajectories within a lobe";
        p.xlabel = "x [wavelengths]";
        p.ylabel = "y [wavelengths]";
        p.equal_aspect = true;
        segments_series(t, p.series);
        if (p.series.size() > 8)
            for (auto& s : p.series) s.name.clear();
    } else {
        return {};
    }
    write_text(svg_path, svg::render(p));
    return svg_path;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Atom trajectories in a structured-light optical lattice"};
    app.require_subcommand(1);
    app.set_version_flag("--version", code_version);

    std::vector<Common> commons(5);
    auto add_common = [&](CLI::App* sub, Common& c) {
        sub->add_option("--config", c.config_path, "configuration file")->check(CLI::ExistingFile);
        sub->add_option("--seed", c.seed, "random seed (overrides the config)")->check(CLI::NonNegativeNumber);
        sub->add_option("--out", c.out, "output directory");
        sub->add_option("--threads", c.threads, "worker threads (default: LATTICE_THREADS, then the config)")
            ->check(CLI::PositiveNumber);
    };

    double extent = 20.0;
    int points = 161;
    auto* fm = app.add_subcommand("field-map", "tabulate and plot the transverse field");
    add_common(fm, commons[0]);
    fm->add_option("--extent", extent, "half width of the map [wavelengths]")->check(CLI::PositiveNumber);
    fm->add_option("--points", points, "points per side")->check(CLI::Range(2, 2001));

    bool save = false, csv = false;
    auto* sim = app.add_subcommand("simulate", "run one ensemble at the configured irradiance");
    add_common(sim, commons[1]);
    sim->add_flag("--save-trajectories", save, "write binary trajectories for analyze");
    sim->add_flag("--csv-trajectories", csv, "also write trajectories as CSV");

    std::vector<double> irradiances;
    std::size_t stop_after = 0;
    bool fresh = false;
    auto* sw = app.add_subcommand("sweep", "run the ensemble over a list of irradiances (resumable)");
    add_common(sw, commons[2]);
    sw->add_option("--irradiances", irradiances, "irradiances in kW/cm^2 (overrides the config)")->delimiter(',');
    sw->add_option("--stop-after", stop_after, "stop after this many new atoms per irradiance");
    sw->add_flag("--fresh", fresh, "discard an existing checkpoint");

    std::string in_dir;
    bool force = false;
    std::int64_t atom = -1;
    double window_center = 0.0, window_half = 0.0;
    auto* an = app.add_subcommand("analyze", "re-run the analysis on persisted trajectories");
    add_common(an, commons[3]);
    an->add_option("--in", in_dir, "directory written by simulate (default: --out)");
    an->add_flag("--force", force, "analyze despite a provenance mismatch");
    an->add_option("--atom", atom, "write spectra, events and plots for this atom");
    an->add_option("--window-center", window_center, "permanency window center for partial trajectories");
    an->add_option("--window-half", window_half, "permanency window half width");

    std::string replot_dir;
    auto* rp = app.add_subcommand("replot", "regenerate SVGs from CSV outputs");
    add_common(rp, commons[4]);
    rp->add_option("--in", replot_dir, "directory to replot (default: --out)");

    std::vector<std::string> argv_store{"labyrinth"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& s : argv_store) argv.push_back(s.data());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (*fm) return field_map(commons[0], extent, points, out);
        if (*sim) return simulate(commons[1], save, csv, out);
        if (*sw) return sweep(commons[2], irradiances, stop_after, fresh, out);
        if (*an) return analyze(commons[3], in_dir, force, atom, window_center, window_half, out, err);
        if (*rp) return replot(commons[4], replot_dir, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace labyrinth
