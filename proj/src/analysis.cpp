#include "labyrinth/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <mutex>
#include <numeric>
#include <string>

#include <fftw3.h>

namespace labyrinth {

namespace {

// FFTW planning is not thread-safe; execution is.
std::mutex fftw_planner_mutex;

class RealFft {
public:
    explicit RealFft(std::size_t n) : n_(n) {
        in_ = fftw_alloc_real(n);
        out_ = fftw_alloc_complex(n / 2 + 1);
        std::lock_guard lock(fftw_planner_mutex);
        plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_, out_, FFTW_ESTIMATE);
    }
    ~RealFft() {
        {
            std::lock_guard lock(fftw_planner_mutex);
            fftw_destroy_plan(plan_);
        }
        fftw_free(in_);
        fftw_free(out_);
    }
    RealFft(const RealFft&) = delete;
    RealFft& operator=(const RealFft&) = delete;

    double* input() { return in_; }
    void execute() { fftw_execute(plan_); }
    double norm2(std::size_t k) const { return out_[k][0] * out_[k][0] + out_[k][1] * out_[k][1]; }

private:
    std::size_t n_;
    double* in_ = nullptr;
    fftw_complex* out_ = nullptr;
    fftw_plan plan_ = nullptr;
};

}  // namespace

double PowerSpectrum::total() const { return std::accumulate(power.begin(), power.end(), 0.0); }

PowerSpectrum power_spectrum(std::span<const double> times, std::span<const double> values,
                             const SpectrumOptions& options) {
    const std::size_t n = values.size();
    if (times.size() != n) throw AnalysisError("power_spectrum: times and values differ in length");
    if (n < std::max<std::size_t>(options.min_samples, 4))
        throw AnalysisError("power_spectrum: need at least " + std::to_string(options.min_samples) + " samples, got " +
                            std::to_string(n));
    const double dt = (times[n - 1] - times[0]) / static_cast<double>(n - 1);
    if (!(dt > 0.0)) throw AnalysisError("power_spectrum: timestamps must increase");
    for (std::size_t i = 0; i < n; ++i) {
        const double expected = times[0] + dt * static_cast<double>(i);
        if (std::abs(times[i] - expected) > 1e-9 * dt + 1e-14 * std::abs(expected))
            throw AnalysisError("power_spectrum: non-uniform timestamps at sample " + std::to_string(i));
    }
    if (options.min_segments < 1) throw AnalysisError("power_spectrum: min_segments must be positive");

    // largest power of two with (n - len) / (len / 2) + 1 >= min_segments
    auto fits = [&](std::size_t l) { return l <= n && (n - l) / (l / 2) + 1 >= options.min_segments; };
    std::size_t len = 2;
    while (fits(2 * len)) len *= 2;
    const std::size_t hop = len / 2;
    const std::size_t segments = (n - len) / hop + 1;

    std::vector<double> w(len, 1.0);
    if (options.window == Window::hann)
        for (std::size_t i = 0; i < len; ++i)
            w[i] = 0.5 - 0.5 * std::cos(two_pi * static_cast<double>(i) / static_cast<double>(len));
    double w2 = 0.0;
    for (double v : w) w2 += v * v;

    const std::size_t bins = len / 2 + 1;
    std::vector<double> acc(bins, 0.0);
    double time_power = 0.0;
    RealFft fft(len);
    for (std::size_t s = 0; s < segments; ++s) {
        const double* x = values.data() + s * hop;
        double mean = 0.0;
        for (std::size_t i = 0; i < len; ++i) mean += x[i];
        mean /= static_cast<double>(len);
        double seg = 0.0;
        double* in = fft.input();
        for (std::size_t i = 0; i < len; ++i) {
            in[i] = w[i] * (x[i] - mean);
            seg += in[i] * in[i];
        }
        time_power += seg;
        fft.execute();
        for (std::size_t k = 0; k < bins; ++k) {
            const double edge = (k == 0 || k == len / 2) ? 1.0 : 2.0;
            acc[k] += edge * fft.norm2(k);
        }
    }

    PowerSpectrum out;
    out.window = options.window;
    out.segment_length = len;
    out.segments = segments;
    out.sample_interval = dt;
    out.time_domain_power = time_power / (static_cast<double>(segments) * w2);
    out.frequency.resize(bins);
    out.power.resize(bins);
    const double norm = 1.0 / (static_cast<double>(segments) * static_cast<double>(len) * w2);
    for (std::size_t k = 0; k < bins; ++k) {
        out.frequency[k] = static_cast<double>(k) / (static_cast<double>(len) * dt);
        out.power[k] = acc[k] * norm;
    }
    return out;
}

PowerSpectrum power_spectrum(const Trajectory& trajectory, int coordinate, const SpectrumOptions& options) {
    if (coordinate < 0 || coordinate > 2) throw AnalysisError("power_spectrum: coordinate must be 0, 1 or 2");
    std::vector<double> t(trajectory.samples.size()), v(trajectory.samples.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        t[i] = trajectory.samples[i].time;
        v[i] = trajectory.samples[i].position[coordinate];
    }
    return power_spectrum(t, v, options);
}

std::vector<SpectralPeak> find_peaks(const PowerSpectrum& spectrum, int max_peaks, int peak_width) {
    const auto& p = spectrum.power;
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(p.size());
    const std::ptrdiff_t half = std::max(0, peak_width / 2);
    std::vector<std::ptrdiff_t> maxima;
    for (std::ptrdiff_t k = 1; k < n; ++k) {
        const double left = p[k - 1];
        const double right = k + 1 < n ? p[k + 1] : -1.0;
        if (p[k] > left && p[k] >= right && p[k] > 0.0) maxima.push_back(k);
    }
    std::stable_sort(maxima.begin(), maxima.end(), [&](auto a, auto b) { return p[a] > p[b]; });

    std::vector<SpectralPeak> peaks;
    std::vector<char> used(p.size(), 0);
    for (auto k : maxima) {
        if (static_cast<int>(peaks.size()) >= max_peaks) break;
        const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, k - half);
        const std::ptrdiff_t hi = std::min(n - 1, k + half);
        bool free = true;
        for (auto j = lo; j <= hi; ++j) free = free && !used[j];
        if (!free) continue;
        SpectralPeak peak;
        peak.bin = static_cast<std::size_t>(k);
        peak.frequency = spectrum.frequency[k];
        for (auto j = lo; j <= hi; ++j) {
            used[j] = 1;
            peak.power += p[j];
        }
        peaks.push_back(peak);
    }
    return peaks;
}

double spectral_flatness(const PowerSpectrum& spectrum) {
    double log_sum = 0.0, sum = 0.0;
    std::size_t count = 0;
    for (std::size_t k = 1; k < spectrum.power.size(); ++k) {
        const double v = spectrum.power[k];
        if (!(v > 0.0)) return 0.0;
        log_sum += std::log(v);
        sum += v;
        ++count;
    }
    if (count == 0 || !(sum > 0.0)) return 0.0;
    return std::exp(log_sum / count) / (sum / count);
}

MotionClassification classify_motion(const PowerSpectrum& spectrum, const MotionParams& params) {
    const double total = spectrum.total();
    if (!(total > 0.0) || !std::isfinite(total)) throw AnalysisError("classify_motion: degenerate all-zero signal");
    MotionClassification out;
    out.peaks = find_peaks(spectrum, params.max_peaks, params.peak_width);
    double captured = 0.0;
    for (const auto& pk : out.peaks) captured += pk.power;
    out.peak_fraction = captured / total;
    out.flatness = spectral_flatness(spectrum);
    out.label = out.peak_fraction >= 1.0 - params.epsilon ? MotionLabel::quasiperiodic : MotionLabel::chaotic;
    return out;
}

bool LobeMap::contains(double x, double y) const { return cell(x, y) >= 0; }

std::ptrdiff_t LobeMap::cell(double x, double y) const {
    if (!std::isfinite(x) || !std::isfinite(y)) return -1;
    const double fx = std::round((x + half_width) / spacing);
    const double fy = std::round((y + half_width) / spacing);
    if (fx < 0.0 || fy < 0.0 || fx >= points || fy >= points) return -1;
    return static_cast<std::ptrdiff_t>(fy) * points + static_cast<std::ptrdiff_t>(fx);
}

int LobeMap::lobe_at(double x, double y) const {
    const auto c = cell(x, y);
    return c < 0 ? -1 : lobe[c];
}

int LobeMap::component_at(double x, double y) const {
    const auto c = cell(x, y);
    return c < 0 ? -1 : component[c];
}

double LobeMap::intensity_at(double x, double y) const {
    const auto c = cell(x, y);
    return c < 0 ? 0.0 : intensity[c];
}

LobeMap lobe_segmentation(std::vector<double> intensity, int points, double half_width, double threshold) {
    if (points < 2 || intensity.size() != static_cast<std::size_t>(points) * points)
        throw AnalysisError("lobe_segmentation: intensity must be points x points");
    if (!(threshold > 0.0) || !(threshold < 1.0)) throw AnalysisError("lobe_segmentation: threshold must lie in (0, 1)");
    if (!(half_width > 0.0)) throw AnalysisError("lobe_segmentation: half_width must be positive");
    const double peak = *std::max_element(intensity.begin(), intensity.end());
    if (!(peak > 0.0) || !std::isfinite(peak)) throw AnalysisError("lobe_segmentation: intensity has no positive maximum");

    LobeMap map;
    map.points = points;
    map.half_width = half_width;
    map.spacing = 2.0 * half_width / (points - 1);
    map.threshold = threshold;
    for (double& v : intensity) v /= peak;
    map.intensity = std::move(intensity);

    const std::size_t cells = map.intensity.size();
    const auto coord = [&](std::size_t c) {
        return Eigen::Vector2d(-half_width + map.spacing * static_cast<double>(c % points),
                               -half_width + map.spacing * static_cast<double>(c / points));
    };
    auto neighbours = [&](std::size_t c, auto&& visit) {
        const std::size_t ix = c % points, iy = c / points;
        if (ix > 0) visit(c - 1);
        if (ix + 1 < static_cast<std::size_t>(points)) visit(c + 1);
        if (iy > 0) visit(c - points);
        if (iy + 1 < static_cast<std::size_t>(points)) visit(c + points);
    };

    // connected components above threshold, 4-connectivity
    std::vector<int> raw(cells, -1);
    struct Raw {
        double peak;
        std::size_t peak_cell;
    };
    std::vector<Raw> found;
    std::vector<std::size_t> stack;
    for (std::size_t c = 0; c < cells; ++c) {
        if (raw[c] >= 0 || map.intensity[c] < threshold) continue;
        const int id = static_cast<int>(found.size());
        Raw r{map.intensity[c], c};
        raw[c] = id;
        stack.push_back(c);
        while (!stack.empty()) {
            const std::size_t cur = stack.back();
            stack.pop_back();
            if (map.intensity[cur] > r.peak) r = {map.intensity[cur], cur};
            neighbours(cur, [&](std::size_t nb) {
                if (raw[nb] < 0 && map.intensity[nb] >= threshold) {
                    raw[nb] = id;
                    stack.push_back(nb);
                }
            });
        }
        found.push_back(r);
    }
    if (found.empty()) throw AnalysisError("lobe_segmentation: threshold leaves no component");

    // descending peak; peaks equal to 1e-9 are ordered by x, then y
    std::vector<int> order(found.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return found[a].peak > found[b].peak; });
    for (std::size_t g = 0; g < order.size();) {
        std::size_t e = g + 1;
        while (e < order.size() && found[order[e - 1]].peak - found[order[e]].peak <= 1e-9 * found[order[g]].peak) ++e;
        std::stable_sort(order.begin() + g, order.begin() + e, [&](int a, int b) {
            const auto pa = coord(found[a].peak_cell), pb = coord(found[b].peak_cell);
            return pa.x() != pb.x() ? pa.x() < pb.x() : pa.y() < pb.y();
        });
        g = e;
    }
    std::vector<int> rank(found.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        rank[order[i]] = static_cast<int>(i);
        map.component_peak.push_back(found[order[i]].peak);
        map.component_peak_location.push_back(coord(found[order[i]].peak_cell));
    }
    map.component.assign(cells, -1);
    for (std::size_t c = 0; c < cells; ++c)
        if (raw[c] >= 0) map.component[c] = rank[raw[c]];

    // Multi-source BFS. Cells reached at the same distance by several
    // components prefer those on their own side of y = 0 (mirror-consistent),
    // then the lower id. Components that contain the mirror image of their
    // own peak, or peak on the axis, belong to neither side.
    std::vector<int> side(map.count(), 0);
    for (std::size_t id = 0; id < map.count(); ++id) {
        const std::size_t c = found[order[id]].peak_cell;
        const std::size_t mirror = (static_cast<std::size_t>(points) - 1 - c / points) * points + c % points;
        const double py = map.component_peak_location[id].y();
        if (map.component[mirror] != static_cast<int>(id) && std::abs(py) > map.spacing) side[id] = py > 0.0 ? 1 : -1;
    }
    auto side_ok = [&](int id, double y) { return side[id] == 0 || (side[id] > 0) == (y > 0.0); };
    auto better = [&](int a, int b, double y) {
        if (b < 0) return true;
        const bool sa = side_ok(a, y), sb = side_ok(b, y);
        if (sa != sb) return sa;
        return a < b;
    };
    map.lobe = map.component;
    std::vector<std::size_t> frontier;
    for (std::size_t c = 0; c < cells; ++c)
        if (map.lobe[c] >= 0) frontier.push_back(c);
    std::vector<char> fresh(cells, 0);
    std::vector<std::size_t> next;
    while (!frontier.empty()) {
        next.clear();
        for (std::size_t c : frontier) {
            const int id = map.lobe[c];
            neighbours(c, [&](std::size_t nb) {
                if (map.lobe[nb] < 0) {
                    map.lobe[nb] = id;
                    fresh[nb] = 1;
                    next.push_back(nb);
                } else if (fresh[nb] && map.lobe[nb] != id && better(id, map.lobe[nb], coord(nb).y())) {
                    map.lobe[nb] = id;
                }
            });
        }
        for (std::size_t c : next) fresh[c] = 0;
        frontier.swap(next);
    }
    return map;
}

LobeMap lobe_segmentation(const FieldGrid& grid, double threshold, int stride) {
    const int n = grid.spec().points;
    if (stride < 1 || (n - 1) % stride != 0)
        throw AnalysisError("lobe_segmentation: stride must divide points - 1");
    const int m = (n - 1) / stride + 1;
    std::vector<double> intensity(static_cast<std::size_t>(m) * m);
    for (int iy = 0; iy < m; ++iy)
        for (int ix = 0; ix < m; ++ix)
            intensity[static_cast<std::size_t>(iy) * m + ix] = std::norm(grid.node(ix * stride, iy * stride).d[0]);
    return lobe_segmentation(std::move(intensity), m, grid.spec().half_width, threshold);
}

std::vector<LobeEvent> lobe_events(const Trajectory& trajectory, const LobeMap& map, double hysteresis) {
    const auto& s = trajectory.samples;
    std::vector<LobeEvent> events;
    if (s.empty()) return events;
    auto lobe_of = [&](std::size_t i) { return map.lobe_at(s[i].position.x(), s[i].position.y()); };
    auto penetrated = [&](std::size_t i, int id) {
        if (id < 0) return false;
        const auto c = map.cell(s[i].position.x(), s[i].position.y());
        if (c < 0 || map.component[c] != id) return false;
        const double level =
            std::min(hysteresis * map.threshold, 0.5 * (map.threshold + map.component_peak[static_cast<std::size_t>(id)]));
        return map.intensity[c] >= level;
    };

    LobeEvent current{lobe_of(0), s[0].time, s[0].time, 0, 0};
    int candidate = current.lobe_id;
    std::size_t candidate_start = 0;
    for (std::size_t i = 1; i < s.size(); ++i) {
        const int id = lobe_of(i);
        if (id == current.lobe_id) {
            candidate = id;
            continue;
        }
        if (id != candidate) {
            candidate = id;
            candidate_start = i;
        }
        if (penetrated(i, id)) {
            current.exit_index = candidate_start - 1;
            current.exit_time = s[candidate_start].time;
            events.push_back(current);
            current = LobeEvent{id, s[candidate_start].time, s[candidate_start].time, candidate_start, candidate_start};
        }
    }
    current.exit_index = s.size() - 1;
    current.exit_time = s.back().time;
    events.push_back(current);
    return events;
}

std::vector<LobeEvent> completed_dwells(const std::vector<LobeEvent>& events) {
    if (events.size() <= 1) return {};
    return {events.begin(), events.end() - 1};
}

std::vector<double> PermanencyHistogram::log_counts() const {
    std::vector<double> out(counts.size(), 0.0);
    for (std::size_t k = 0; k < counts.size(); ++k)
        if (counts[k] > 0) out[k] = std::log10(static_cast<double>(counts[k]));
    return out;
}

PermanencyHistogram permanency_histogram(std::span<const double> dwell_times, double bin_width, const HistogramFit& fit) {
    if (!(bin_width > 0.0)) throw AnalysisError("permanency_histogram: bin width must be positive");
    PermanencyHistogram h;
    h.bin_width = bin_width;
    h.slope = h.intercept = h.r_squared = std::nan("");
    if (dwell_times.empty()) return h;
    h.min_dwell = *std::min_element(dwell_times.begin(), dwell_times.end());
    h.longest_dwell = *std::max_element(dwell_times.begin(), dwell_times.end());
    if (!(h.min_dwell >= 0.0) || !std::isfinite(h.longest_dwell))
        throw AnalysisError("permanency_histogram: dwell times must be finite and non-negative");
    h.counts.assign(static_cast<std::size_t>(std::floor(h.longest_dwell / bin_width)) + 1, 0);
    for (double d : dwell_times) ++h.counts[static_cast<std::size_t>(std::floor(d / bin_width))];
    h.total = dwell_times.size();

    const std::size_t n = h.counts.size();
    for (std::size_t k = 0; k < n; ++k) {
        const auto c = h.counts[k];
        const auto left = k > 0 ? h.counts[k - 1] : 0;
        const auto right = k + 1 < n ? h.counts[k + 1] : 0;
        if (c > 0 && c > left && c > right) h.local_maxima.push_back(k);
    }
    const std::size_t longest_bin = n - 1;
    std::vector<double> xs, ys;
    for (auto k : h.local_maxima) {
        if (k == longest_bin || static_cast<double>(h.counts[k]) < fit.min_count) continue;
        xs.push_back(std::log10(h.bin_center(k)));
        ys.push_back(std::log10(static_cast<double>(h.counts[k])));
    }
    h.fit_points = xs.size();
    if (xs.size() >= 2) {
        const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
        const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / ys.size();
        double sxx = 0.0, sxy = 0.0, syy = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            sxx += (xs[i] - mx) * (xs[i] - mx);
            sxy += (xs[i] - mx) * (ys[i] - my);
            syy += (ys[i] - my) * (ys[i] - my);
        }
        if (sxx > 0.0) {
            h.slope = sxy / sxx;
            h.intercept = my - h.slope * mx;
            h.r_squared = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
        }
    }
    return h;
}

PermanencyHistogram permanency_histogram(const std::vector<LobeEvent>& events, double bin_width, const HistogramFit& fit) {
    std::vector<double> d(events.size());
    for (std::size_t i = 0; i < events.size(); ++i) d[i] = events[i].duration();
    return permanency_histogram(d, bin_width, fit);
}

std::vector<PathSegment> extract_partial_trajectories(const Trajectory& trajectory,
                                                      const std::vector<LobeEvent>& events, double center,
                                                      double half_width) {
    std::vector<PathSegment> out;
    for (const auto& e : events) {
        if (std::abs(e.duration() - center) > half_width) continue;
        if (e.exit_index >= trajectory.samples.size() || e.entry_index > e.exit_index)
            throw AnalysisError("extract_partial_trajectories: event does not match the trajectory");
        PathSegment seg{e.lobe_id, e.entry_time, e.exit_time, e.entry_index, {}};
        seg.positions.reserve(e.exit_index - e.entry_index + 1);
        for (std::size_t i = e.entry_index; i <= e.exit_index; ++i) seg.positions.push_back(trajectory.samples[i].position);
        out.push_back(std::move(seg));
    }
    return out;
}

std::vector<std::pair<double, double>> phase_space_export(const Trajectory& trajectory, int position_axis,
                                                          int velocity_axis) {
    if (position_axis < 0 || position_axis > 2 || velocity_axis < 0 || velocity_axis > 2)
        throw AnalysisError("phase_space_export: axes must be 0, 1 or 2");
    std::vector<std::pair<double, double>> out;
    out.reserve(trajectory.samples.size());
    for (const auto& s : trajectory.samples) out.emplace_back(s.position[position_axis], s.velocity[velocity_axis]);
    return out;
}

}  // namespace labyrinth
