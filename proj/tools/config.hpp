#pragma once

// Run configuration for the sim front end.
//
// The config file is JSON with nested blocks. Frequencies are nu = omega/2pi
// in MHz, dipoles in e*a0, fields in V/m, lengths in cm and the density in
// cm^-3. Every file is merged onto the built-in defaults; keys that do not
// exist in the defaults are rejected, as are values of the wrong type.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "rydberg/analysis.hpp"

namespace sim
{

using Json = nlohmann::ordered_json;

class ConfigError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// The complete default configuration; also documents the schema.
Json default_config();

/// Overlays `patch` onto `base`, validating keys and value types against
/// the defaults.
void merge_config(Json& base, const Json& patch);

/// Applies one `dotted.key=value` override. The value is parsed as JSON when
/// possible and taken as a plain string otherwise.
void apply_override(Json& config, const std::string& assignment);

/// defaults <- file (if non-empty path) <- overrides.
Json load_config(const std::string& path, const std::vector<std::string>& overrides);

struct GridSpec
{
    double min = 0.0;
    double max = 0.0;
    int points = 0;

    std::vector<double> values() const;
};

struct OracleSettings
{
    int points = 5;
    std::uint64_t seed = 1;
    double spread = 0.5;
    double omega_mod_mhz = 3.0;
    double beta = 0.25;
    int steps_per_period = 512;
    int max_periods = 200000;
    double tolerance = 1e-6;
};

/// Typed, validated view of a configuration document.
struct RunConfig
{
    rydberg::Protocol protocol = rydberg::Protocol::mtp;
    rydberg::Experiment experiment;
    std::string doppler_method = "exact";
    int doppler_nodes = 64;
    double doppler_span = 8.0;
    std::optional<double> density;       // m^-3; unset means calibrate
    double calibration_target = 0.34;
    int threads = 0;                     // 0: RYDBERG_THREADS or hardware

    GridSpec spectrum_delta_p;
    rydberg::ModulationMapOptions map;
    double response_delta_rf_mhz = 0.0;
    GridSpec response_e_rf;
    rydberg::OperatingPoint operating_point;
    GridSpec slopes_e_rf;
    GridSpec slopes_delta_rf;
    rydberg::SlopeFitOptions fit;
    rydberg::BandwidthOptions bandwidth;
    std::optional<double> noise_v0;      // V / sqrt(Hz)
    double rbw = 1.0;                    // Hz
    double responsivity = 1.0;           // V per unit observable
    double ratio_threshold = 1e-6;
    OracleSettings oracle;
};

/// Converts and validates. Throws ConfigError (or rydberg::ParameterError).
RunConfig resolve(const Json& config);

}
