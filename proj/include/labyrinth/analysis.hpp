#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "labyrinth/beam_field.hpp"
#include "labyrinth/integrator.hpp"

namespace labyrinth {

class AnalysisError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Window { hann, rectangular };

/// Welch estimate. Frequencies in cycles per unit time. Power is the
/// one-sided periodogram normalized so that sum(power) equals the mean over
/// segments of sum((w x)^2) / sum(w^2), i.e. the windowed variance.
struct PowerSpectrum {
    std::vector<double> frequency;
    std::vector<double> power;
    Window window = Window::hann;
    std::size_t segment_length = 0;
    std::size_t segments = 0;
    double sample_interval = 0.0;
    double time_domain_power = 0.0;  // the same quantity computed without the FFT

    double total() const;
};

struct SpectrumOptions {
    Window window = Window::hann;
    std::size_t min_samples = 1 << 14;
    std::size_t min_segments = 8;
};

/// Segment length is the largest power of two giving at least
/// min_segments half-overlapping segments. Each segment has its mean removed.
PowerSpectrum power_spectrum(std::span<const double> times, std::span<const double> values,
                             const SpectrumOptions& options = {});

/// Spectrum of one position coordinate (0 = x, 1 = y, 2 = z).
PowerSpectrum power_spectrum(const Trajectory& trajectory, int coordinate = 0, const SpectrumOptions& options = {});

enum class MotionLabel { quasiperiodic, chaotic };

struct MotionParams {
    double epsilon = 0.05;
    int max_peaks = 20;
    int peak_width = 3;  // bins, odd
};

struct SpectralPeak {
    std::size_t bin = 0;
    double frequency = 0.0;
    double power = 0.0;  // summed over the peak window
};

struct MotionClassification {
    MotionLabel label = MotionLabel::chaotic;
    double flatness = 0.0;       // geometric over arithmetic mean of the power
    double peak_fraction = 0.0;  // share of power in the selected peaks
    std::vector<SpectralPeak> peaks;
};

/// Local maxima of the spectrum, strongest first, with non-overlapping
/// windows of peak_width bins.
std::vector<SpectralPeak> find_peaks(const PowerSpectrum& spectrum, int max_peaks, int peak_width);

double spectral_flatness(const PowerSpectrum& spectrum);

MotionClassification classify_motion(const PowerSpectrum& spectrum, const MotionParams& params = {});

/// Partition of the transverse plane into lobes of the coupling intensity
/// |q|^2 (proportional to the transverse field intensity).
struct LobeMap {
    int points = 0;
    double half_width = 0.0;
    double spacing = 0.0;
    double threshold = 0.1;
    std::vector<double> intensity;  // normalized to max 1, index iy * points + ix
    std::vector<int> component;     // -1 below threshold
    std::vector<int> lobe;          // watershed label of every cell
    std::vector<double> component_peak;
    std::vector<Eigen::Vector2d> component_peak_location;

    std::size_t count() const { return component_peak.size(); }
    bool contains(double x, double y) const;
    // nearest cell; out-of-map positions give -1
    std::ptrdiff_t cell(double x, double y) const;
    int lobe_at(double x, double y) const;
    int component_at(double x, double y) const;
    double intensity_at(double x, double y) const;
};

/// Segmentation of a sampled intensity. `intensity` is row-major with
/// index iy * points + ix over the square [-half_width, half_width]^2.
LobeMap lobe_segmentation(std::vector<double> intensity, int points, double half_width, double threshold = 0.1);

/// Segmentation of the nodal intensity of a field grid, optionally decimated.
LobeMap lobe_segmentation(const FieldGrid& grid, double threshold = 0.1, int stride = 1);

/// One stay inside a lobe. Sample indices are inclusive and consecutive events
/// are contiguous (entry of the next = exit of this + 1). A stay ends at the
/// transition, so exit_time equals the entry_time of the next event and the
/// durations add up to the trajectory duration; the last stay ends at the
/// final sample.
struct LobeEvent {
    int lobe_id = -1;
    double entry_time = 0.0;
    double exit_time = 0.0;
    std::size_t entry_index = 0;
    std::size_t exit_index = 0;

    double duration() const { return exit_time - entry_time; }
};

/// A change of lobe is confirmed only once the atom reaches an intensity of
/// min(hysteresis * threshold, (threshold + peak) / 2) inside the new
/// component; the new stay starts where the atom first crossed into it.
std::vector<LobeEvent> lobe_events(const Trajectory& trajectory, const LobeMap& map, double hysteresis = 1.5);

/// Stays that ended with a transition (all but the last event).
std::vector<LobeEvent> completed_dwells(const std::vector<LobeEvent>& events);

struct HistogramFit {
    double min_count = 10.0;  // local maxima below this count are ignored
};

struct PermanencyHistogram {
    double bin_width = 50.0;
    std::vector<std::uint64_t> counts;  // bin k covers [k w, (k + 1) w)
    std::uint64_t total = 0;
    double min_dwell = 0.0;
    double longest_dwell = 0.0;
    std::vector<std::size_t> local_maxima;  // strict, over nonzero bins
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    std::size_t fit_points = 0;

    /// log10 of the counts with log(0) mapped to 0.
    std::vector<double> log_counts() const;
    double bin_center(std::size_t k) const { return (static_cast<double>(k) + 0.5) * bin_width; }
};

PermanencyHistogram permanency_histogram(std::span<const double> dwell_times, double bin_width = 50.0,
                                         const HistogramFit& fit = {});
PermanencyHistogram permanency_histogram(const std::vector<LobeEvent>& events, double bin_width = 50.0,
                                         const HistogramFit& fit = {});

struct PathSegment {
    int lobe_id = -1;
    double entry_time = 0.0;
    double exit_time = 0.0;
    std::size_t first_index = 0;
    std::vector<Vec3> positions;
};

/// Every stay whose duration lies in [center - half_width, center + half_width].
std::vector<PathSegment> extract_partial_trajectories(const Trajectory& trajectory,
                                                      const std::vector<LobeEvent>& events, double center,
                                                      double half_width);

/// (coordinate, velocity) pairs for axes 0..2.
std::vector<std::pair<double, double>> phase_space_export(const Trajectory& trajectory, int position_axis,
                                                          int velocity_axis);

}  // namespace labyrinth
