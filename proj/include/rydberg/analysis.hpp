#pragma once

// Parameter sweeps on top of the propagation model: probe spectra,
// (omega_mod, beta) maps, RF response curves, slope maps, bandwidth contours,
// sensitivities and protocol ratio maps.
//
// Every sweep point is an independent propagation. Points are distributed over
// worker threads and written back by grid index, so results do not depend on
// the thread count.

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rydberg/medium.hpp"

namespace rydberg
{

enum class Protocol
{
    cp,   // DC probe transparency
    mtp,  // relative modulation amplitude of the demodulated probe
};

std::string to_string(Protocol p);
Protocol parse_protocol(const std::string& name);

/// Everything that defines one evaluation of the detector signal.
struct Experiment
{
    CellConfig cell;
    MediumSetup medium;
    DriveParams drive;
    ModulationParams mod;
};

struct Axis
{
    std::string name;
    std::string unit;
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
};

/// n evenly spaced points including both ends (n == 1 gives lo).
std::vector<double> linspace(double lo, double hi, int n);

struct SpectrumResult
{
    Axis axis;
    std::string quantity;  // "transparency" or "rma"
    std::vector<double> values;
    std::map<std::string, std::string> metadata;
};

struct MapResult
{
    Axis x_axis;
    Axis y_axis;
    std::string quantity;
    std::vector<double> values;  // row-major, values[iy * nx + ix]
    std::map<std::string, std::string> metadata;

    double at(std::size_t iy, std::size_t ix) const { return values[iy * x_axis.size() + ix]; }
    std::vector<double> row(std::size_t iy) const;
    /// Throws std::invalid_argument on inconsistent dimensions.
    void check() const;
};

// ---------------------------------------------------------------------------
// Threading

/// Worker count: RYDBERG_THREADS if set to a positive integer, otherwise the
/// hardware concurrency.
int default_thread_count();

/// Runs body(0..n-1) on up to `threads` workers. If any call throws, the
/// exception from the lowest failing index is rethrown after all workers stop.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body);

// ---------------------------------------------------------------------------
// Sweeps

/// Detector signal at the experiment's own detunings: transparency for CP,
/// R.M.A for MTP (the modulation is ignored for CP).
double detector_signal(Protocol protocol, const Experiment& ex);

/// Observable versus probe detuning (MHz). Only drive.delta_probe is swept.
SpectrumResult spectrum(Protocol protocol, const Experiment& ex, const std::vector<double>& delta_p_mhz,
                        int threads = default_thread_count());

struct ModulationMapOptions
{
    std::vector<double> omega_mhz = linspace(0.5, 8.0, 31);
    std::vector<double> beta = linspace(0.05, 0.45, 21);
    // Peak search: coarse scan over this probe-detuning grid, then Brent
    // refinement between the neighbours of the best coarse point.
    std::vector<double> peak_search_mhz = linspace(-6.0, 6.0, 25);
    int refine_bits = 24;
    double slope_point_mhz = 0.1;
    double slope_step_mhz = 0.02;
};

struct ModulationMaps
{
    MapResult amplitude;  // peak R.M.A over probe detuning
    MapResult slope;      // d(R.M.A)/d(Delta_p / 2pi) per MHz at the operating point
    MapResult peak_position;
};

/// Maps over x = omega_mod/2pi, y = beta. The experiment's RF field is used as
/// given (the optimization is defined at E_RF = 0).
ModulationMaps modulation_map(const Experiment& ex, const ModulationMapOptions& opt,
                              int threads = default_thread_count());

struct OperatingPoint
{
    double cp_delta_p_mhz = 0.0;
    double mtp_delta_p_mhz = 0.1;

    double for_protocol(Protocol p) const { return p == Protocol::cp ? cp_delta_p_mhz : mtp_delta_p_mhz; }
};

/// Detector signal versus exterior RF amplitude at fixed RF detuning.
SpectrumResult response_curve(Protocol protocol, const Experiment& ex, double delta_rf_mhz,
                              const std::vector<double>& e_rf, const OperatingPoint& op = {},
                              int threads = default_thread_count());

/// Response over x = E_RF (V/m), y = Delta_RF/2pi (MHz).
MapResult response_map(Protocol protocol, const Experiment& ex, const std::vector<double>& e_rf,
                       const std::vector<double>& delta_rf_mhz, const OperatingPoint& op = {},
                       int threads = default_thread_count());

struct SlopeFitOptions
{
    int window = 7;  // points per local fit
    int degree = 3;
    // Responses are even in E_RF; when the axis starts at zero, mirrored
    // samples are added so windows near the origin stay centered.
    bool even_extension = true;
};

/// Derivative of samples y(x) from sliding-window least-squares polynomials.
std::vector<double> polynomial_slope(const std::vector<double>& x, const std::vector<double>& y,
                                     const SlopeFitOptions& opt = {});

/// Differentiates each row of a response map with respect to E_RF.
MapResult slope_map(const MapResult& response, const SlopeFitOptions& opt = {});

struct Contour
{
    bool found = false;
    // found: interpolated crossing. Otherwise `bound` is the largest detuning
    // at which the profile is still above threshold (open interval), or empty
    // when the profile never reaches the threshold.
    double value = 0.0;
    std::optional<double> bound;
};

/// |slope| / E_RF in the limit E_RF -> 0, per row of a slope map. Responses
/// are even in E_RF, so slope / E = 2 c2 + 4 c4 E^2 + ...; the limit is
/// Richardson-extrapolated in E^2 from the two smallest positive fields.
std::vector<double> vanishing_field_profile(const MapResult& slopes);

struct BandwidthOptions
{
    enum class Reference
    {
        same_field,   // CP slope at Delta_RF = 0 and the same field
        map_maximum,  // largest CP slope anywhere in the Delta_RF = 0 row
    };
    // Field whose slope profile is compared. Unset: the vanishing-field limit
    // (requires Reference::same_field).
    std::optional<double> field;
    Reference reference = Reference::same_field;
};

struct BandwidthReport
{
    std::string protocol;
    double reference_slope = 0.0;      // per V/m, or per (V/m)^2 in the vanishing-field limit
    double reference_e_rf = 0.0;       // V/m
    double reference_delta_rf = 0.0;   // MHz
    double field = 0.0;                // E_RF of the profile, 0 for the limit
    Contour minus6;
    Contour minus10;
    std::vector<double> delta_rf;      // MHz
    std::vector<double> profile;       // |slope| along Delta_RF
};

/// -6 and -10 dB crossings of the slope profile against the CP reference.
/// Power convention: -X dB is a factor 10^(-X/10) on the slope. The search
/// starts at the profile maximum and proceeds to larger detuning.
BandwidthReport bandwidth(const MapResult& slopes, const MapResult& cp_slopes, const BandwidthOptions& opt = {});

/// First crossing of `threshold` from above, searching from the profile maximum.
Contour threshold_crossing(const std::vector<double>& x, const std::vector<double>& profile, double threshold);

struct SensitivityReport
{
    double slope = 0.0;     // V per V/m
    double noise_v0 = 0.0;  // V / sqrt(Hz)
    double rbw = 0.0;       // Hz
    double sensitivity = 0.0;
    bool infinite = false;
};

/// S = V0 / (slope sqrt(RBW)); a zero slope gives infinite S, flagged.
SensitivityReport sensitivity(double slope, double noise_v0, double rbw);

/// |mtp| / |cp| element-wise. CP magnitudes below relative_threshold * max|cp|
/// are replaced by that floor; the count of such cells goes to metadata.
MapResult ratio_map(const MapResult& mtp, const MapResult& cp, double relative_threshold = 1e-6);

/// Vanishing-field MTP/CP slope ratio versus Delta_RF, guarded like ratio_map.
std::vector<double> vanishing_field_ratio(const MapResult& mtp, const MapResult& cp, double relative_threshold = 1e-6);

/// Row of `map` whose y coordinate is closest to `y`.
std::size_t nearest_row(const MapResult& map, double y);
std::size_t nearest_index(const std::vector<double>& axis, double v);

}
