#include "config.hpp"

#include <cmath>
#include <fstream>
#include <limits>

namespace sim
{

namespace
{
    Json grid(double lo, double hi, int n) { return Json{{"min", lo}, {"max", hi}, {"points", n}}; }

    const char* kind(const Json& j)
    {
        if (j.is_null())
            return "null";
        if (j.is_boolean())
            return "boolean";
        if (j.is_number_integer())
            return "integer";
        if (j.is_number())
            return "number";
        if (j.is_string())
            return "string";
        if (j.is_array())
            return "array";
        return "object";
    }

    // A value may replace a default of the same kind. Integers are accepted
    // where numbers are expected; a null default accepts a number.
    bool compatible(const Json& def, const Json& v)
    {
        if (def.is_null())
            return v.is_null() || v.is_number();
        if (def.is_number_integer())
            return v.is_number_integer();
        if (def.is_number())
            return v.is_number();
        if (def.is_boolean())
            return v.is_boolean();
        if (def.is_string())
            return v.is_string();
        return false;
    }

    double number(const Json& j, const std::string& key)
    {
        const double v = j.get<double>();
        if (!std::isfinite(v))
            throw ConfigError(key + ": value must be finite");
        return v;
    }

    GridSpec read_grid(const Json& j, const std::string& key)
    {
        GridSpec g{number(j.at("min"), key), number(j.at("max"), key), j.at("points").get<int>()};
        if (g.points < 0)
            throw ConfigError(key + ".points must be non-negative");
        if (g.points > 1 && !(g.max > g.min))
            throw ConfigError(key + ": max must exceed min");
        return g;
    }

    void require(bool ok, const std::string& what)
    {
        if (!ok)
            throw ConfigError(what);
    }
}

std::vector<double> GridSpec::values() const { return rydberg::linspace(min, max, points); }

Json default_config()
{
    Json c;
    c["protocol"] = "mtp";
    c["threads"] = 0;
    c["output"] = "";
    c["atom"] = {
        {"dipole_12", 1.96},          // e a0
        {"dipole_23", 0.01},
        {"dipole_34", 2272.4},
        {"gamma_2", 6.05},            // MHz
        {"gamma_3", 0.002},
        {"gamma_4", 0.002},
        {"transit_rate", 0.65},
        {"feed_rate", nullptr},       // null: equal to transit_rate
        {"mass", rydberg::constants::rb85_mass_u},  // u
        {"lambda_probe", 780.0},      // nm
        {"lambda_coupling", 480.0},
        {"temperature", 293.15},      // K
    };
    c["drive"] = {
        {"rabi_probe", 1.32},         // MHz
        {"rabi_coupling", 2.38},
        {"e_rf", 0.0},                // V/m, outside the cell
        {"perturbation_factor", 0.54},
        {"delta_p", 0.0},             // MHz
        {"delta_c", 0.0},
        {"delta_rf", 0.0},
    };
    c["modulation"] = {{"omega_mod", 3.0}, {"beta", 0.25}};
    c["cell"] = {
        {"length", 7.5},              // cm
        {"num_slices", 100},
        {"density", nullptr},         // cm^-3; null: calibrate
        {"calibration_target", 0.34},
        {"attenuate_sidebands", true},
    };
    c["doppler"] = {{"method", "exact"}, {"nodes", 64}, {"span", 8.0}};
    c["spectrum"] = {{"delta_p", grid(-20.0, 20.0, 401)}};
    c["map"] = {
        {"omega_mod", grid(0.5, 8.0, 31)},
        {"beta", grid(0.05, 0.45, 21)},
        {"peak_search", grid(-6.0, 6.0, 25)},
        {"slope_point", 0.1},
        {"slope_step", 0.02},
    };
    c["response"] = {{"delta_rf", 0.0}, {"e_rf", grid(0.0, 1.0, 51)}};
    c["operating_point"] = {{"cp_delta_p", 0.0}, {"mtp_delta_p", 0.1}};
    c["slopes"] = {
        {"e_rf", grid(0.0, 1.0, 51)},
        {"delta_rf", grid(0.0, 30.0, 101)},
        {"window", 7},
        {"degree", 3},
        {"even_extension", true},
    };
    c["bandwidth"] = {
        {"field", nullptr},           // V/m; null: vanishing-field limit
        {"reference", "same_field"},
        {"noise_v0", nullptr},        // V/sqrt(Hz)
        {"rbw", 1.0},                 // Hz
        {"responsivity", 1.0},        // V per unit observable
    };
    c["ratio"] = {{"relative_threshold", 1e-6}};
    c["oracle"] = {
        {"points", 5},
        {"seed", 1},
        {"spread", 0.5},
        {"omega_mod", 3.0},
        {"beta", 0.25},
        {"steps_per_period", 512},
        {"max_periods", 200000},
        {"tolerance", 1e-6},
    };
    return c;
}

namespace
{
    void merge_with_schema(Json& base, const Json& patch, const Json& schema, const std::string& path)
    {
        if (!patch.is_object())
            throw ConfigError((path.empty() ? std::string("config") : path) + ": expected an object");
        for (const auto& [key, value] : patch.items())
        {
            const std::string here = path.empty() ? key : path + "." + key;
            if (!schema.contains(key))
                throw ConfigError("unknown configuration key '" + here + "'");
            const Json& def = schema.at(key);
            if (def.is_object())
            {
                merge_with_schema(base[key], value, def, here);
                continue;
            }
            if (!compatible(def, value))
                throw ConfigError("'" + here + "' expects " + kind(def) + ", got " + kind(value));
            base[key] = value;
        }
    }
}

void merge_config(Json& base, const Json& patch)
{
    static const Json schema = default_config();
    merge_with_schema(base, patch, schema, "");
}

void apply_override(Json& config, const std::string& assignment)
{
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ConfigError("override '" + assignment + "' is not of the form key=value");
    const std::string key = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);

    Json value = Json::parse(text, nullptr, false);
    if (value.is_discarded())
        value = text;

    std::vector<std::string> parts;
    std::size_t start = 0;
    for (;;)
    {
        const auto dot = key.find('.', start);
        parts.push_back(key.substr(start, dot == std::string::npos ? std::string::npos : dot - start));
        if (parts.back().empty())
            throw ConfigError("override key '" + key + "' has an empty component");
        if (dot == std::string::npos)
            break;
        start = dot + 1;
    }
    Json patch = value;
    for (auto it = parts.rbegin(); it != parts.rend(); ++it)
        patch = Json{{*it, patch}};
    merge_config(config, patch);
}

Json load_config(const std::string& path, const std::vector<std::string>& overrides)
{
    Json config = default_config();
    if (!path.empty())
    {
        std::ifstream in(path);
        if (!in)
            throw ConfigError("cannot read config file '" + path + "'");
        Json file;
        try
        {
            file = Json::parse(in);
        }
        catch (const Json::parse_error& e)
        {
            throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
        }
        merge_config(config, file);
    }
    for (const auto& o : overrides)
        apply_override(config, o);
    return config;
}

RunConfig resolve(const Json& c)
{
    using namespace rydberg;
    RunConfig r;
    try
    {
        r.protocol = parse_protocol(c.at("protocol").get<std::string>());
    }
    catch (const std::invalid_argument& e)
    {
        throw ConfigError(e.what());
    }
    r.threads = c.at("threads").get<int>();
    require(r.threads >= 0, "threads must be non-negative");

    const Json& a = c.at("atom");
    AtomicParams atom;
    atom.dipole_12 = ea0_to_si(number(a.at("dipole_12"), "atom.dipole_12"));
    atom.dipole_23 = ea0_to_si(number(a.at("dipole_23"), "atom.dipole_23"));
    atom.dipole_34 = ea0_to_si(number(a.at("dipole_34"), "atom.dipole_34"));
    atom.gamma_2 = mhz_to_angular(number(a.at("gamma_2"), "atom.gamma_2"));
    atom.gamma_3 = mhz_to_angular(number(a.at("gamma_3"), "atom.gamma_3"));
    atom.gamma_4 = mhz_to_angular(number(a.at("gamma_4"), "atom.gamma_4"));
    atom.transit_rate = mhz_to_angular(number(a.at("transit_rate"), "atom.transit_rate"));
    atom.feed_rate = a.at("feed_rate").is_null() ? atom.transit_rate
                                                 : mhz_to_angular(number(a.at("feed_rate"), "atom.feed_rate"));
    atom.mass = number(a.at("mass"), "atom.mass") * constants::atomic_mass_unit;
    atom.lambda_probe = number(a.at("lambda_probe"), "atom.lambda_probe") * 1e-9;
    atom.lambda_coupling = number(a.at("lambda_coupling"), "atom.lambda_coupling") * 1e-9;
    atom.temperature = number(a.at("temperature"), "atom.temperature");
    atom.validate();

    const Json& d = c.at("drive");
    DriveParams drive;
    drive.rabi_probe = mhz_to_angular(number(d.at("rabi_probe"), "drive.rabi_probe"));
    drive.rabi_coupling = mhz_to_angular(number(d.at("rabi_coupling"), "drive.rabi_coupling"));
    drive.e_rf = number(d.at("e_rf"), "drive.e_rf");
    drive.perturbation_factor = number(d.at("perturbation_factor"), "drive.perturbation_factor");
    drive.delta_probe = mhz_to_angular(number(d.at("delta_p"), "drive.delta_p"));
    drive.delta_coupling = mhz_to_angular(number(d.at("delta_c"), "drive.delta_c"));
    drive.delta_rf = mhz_to_angular(number(d.at("delta_rf"), "drive.delta_rf"));
    drive.validate();

    const Json& m = c.at("modulation");
    const ModulationParams mod(mhz_to_angular(number(m.at("omega_mod"), "modulation.omega_mod")),
                               number(m.at("beta"), "modulation.beta"));

    const Json& cell = c.at("cell");
    CellConfig cc;
    cc.length = number(cell.at("length"), "cell.length") * 1e-2;
    cc.num_slices = cell.at("num_slices").get<int>();
    cc.attenuate_sidebands = cell.at("attenuate_sidebands").get<bool>();
    if (!cell.at("density").is_null())
    {
        r.density = number(cell.at("density"), "cell.density") * 1e6;
        cc.density = *r.density;
    }
    r.calibration_target = number(cell.at("calibration_target"), "cell.calibration_target");
    require(r.calibration_target > 0.0 && r.calibration_target <= 1.0, "cell.calibration_target must lie in (0, 1]");
    cc.validate();

    const Json& dop = c.at("doppler");
    const std::string method = dop.at("method").get<std::string>();
    const int nodes = dop.at("nodes").get<int>();
    const double span = number(dop.at("span"), "doppler.span");
    const double sigma = doppler_sigma(atom);
    DopplerModel doppler;
    if (method == "exact")
        doppler = DopplerModel::exact(sigma);
    else if (method == "gauss_hermite")
    {
        require(nodes >= 1, "doppler.nodes must be positive");
        doppler = DopplerModel::quadrature(maxwell_grid(sigma, nodes));
    }
    else if (method == "uniform")
    {
        require(nodes >= 3 && nodes % 2 == 1, "doppler.nodes must be odd and >= 3 for the uniform grid");
        require(span >= 3.0, "doppler.span must be at least 3");
        doppler = DopplerModel::quadrature(uniform_maxwell_grid(sigma, nodes, span));
    }
    else
        throw ConfigError("doppler.method must be exact, gauss_hermite or uniform");

    r.experiment = Experiment{cc, MediumSetup{atom, doppler}, drive, mod};
    r.doppler_method = method;
    r.doppler_nodes = nodes;
    r.doppler_span = span;

    r.spectrum_delta_p = read_grid(c.at("spectrum").at("delta_p"), "spectrum.delta_p");

    const Json& map = c.at("map");
    r.map.omega_mhz = read_grid(map.at("omega_mod"), "map.omega_mod").values();
    r.map.beta = read_grid(map.at("beta"), "map.beta").values();
    r.map.peak_search_mhz = read_grid(map.at("peak_search"), "map.peak_search").values();
    r.map.slope_point_mhz = number(map.at("slope_point"), "map.slope_point");
    r.map.slope_step_mhz = number(map.at("slope_step"), "map.slope_step");
    for (double w : r.map.omega_mhz)
        require(w > 0.0, "map.omega_mod values must be positive");
    for (double b : r.map.beta)
        require(b >= 0.0 && b < 0.5, "map.beta values must lie in [0, 0.5)");
    require(r.map.slope_step_mhz > 0.0, "map.slope_step must be positive");
    require(!r.map.peak_search_mhz.empty(), "map.peak_search needs at least one point");

    const Json& resp = c.at("response");
    r.response_delta_rf_mhz = number(resp.at("delta_rf"), "response.delta_rf");
    r.response_e_rf = read_grid(resp.at("e_rf"), "response.e_rf");
    require(r.response_e_rf.points == 0 || r.response_e_rf.min >= 0.0, "response.e_rf must be non-negative");

    const Json& op = c.at("operating_point");
    r.operating_point.cp_delta_p_mhz = number(op.at("cp_delta_p"), "operating_point.cp_delta_p");
    r.operating_point.mtp_delta_p_mhz = number(op.at("mtp_delta_p"), "operating_point.mtp_delta_p");

    const Json& sl = c.at("slopes");
    r.slopes_e_rf = read_grid(sl.at("e_rf"), "slopes.e_rf");
    r.slopes_delta_rf = read_grid(sl.at("delta_rf"), "slopes.delta_rf");
    require(r.slopes_e_rf.points == 0 || r.slopes_e_rf.min >= 0.0, "slopes.e_rf must be non-negative");
    r.fit.window = sl.at("window").get<int>();
    r.fit.degree = sl.at("degree").get<int>();
    r.fit.even_extension = sl.at("even_extension").get<bool>();
    require(r.fit.degree >= 1 && r.fit.window > r.fit.degree, "slopes.window must exceed slopes.degree >= 1");

    const Json& bw = c.at("bandwidth");
    if (!bw.at("field").is_null())
        r.bandwidth.field = number(bw.at("field"), "bandwidth.field");
    const std::string ref = bw.at("reference").get<std::string>();
    if (ref == "same_field")
        r.bandwidth.reference = BandwidthOptions::Reference::same_field;
    else if (ref == "map_maximum")
        r.bandwidth.reference = BandwidthOptions::Reference::map_maximum;
    else
        throw ConfigError("bandwidth.reference must be same_field or map_maximum");
    require(r.bandwidth.field || r.bandwidth.reference == BandwidthOptions::Reference::same_field,
            "bandwidth.reference = map_maximum needs an explicit bandwidth.field");
    if (!bw.at("noise_v0").is_null())
    {
        r.noise_v0 = number(bw.at("noise_v0"), "bandwidth.noise_v0");
        require(*r.noise_v0 >= 0.0, "bandwidth.noise_v0 must be non-negative");
    }
    r.rbw = number(bw.at("rbw"), "bandwidth.rbw");
    r.responsivity = number(bw.at("responsivity"), "bandwidth.responsivity");
    require(r.rbw > 0.0, "bandwidth.rbw must be positive");
    require(r.responsivity > 0.0, "bandwidth.responsivity must be positive");

    r.ratio_threshold = number(c.at("ratio").at("relative_threshold"), "ratio.relative_threshold");
    require(r.ratio_threshold >= 0.0, "ratio.relative_threshold must be non-negative");

    const Json& o = c.at("oracle");
    r.oracle.points = o.at("points").get<int>();
    const auto seed = o.at("seed").get<std::int64_t>();
    require(seed >= 0, "oracle.seed must be non-negative");
    r.oracle.seed = static_cast<std::uint64_t>(seed);
    r.oracle.spread = number(o.at("spread"), "oracle.spread");
    r.oracle.omega_mod_mhz = number(o.at("omega_mod"), "oracle.omega_mod");
    r.oracle.beta = number(o.at("beta"), "oracle.beta");
    r.oracle.steps_per_period = o.at("steps_per_period").get<int>();
    r.oracle.max_periods = o.at("max_periods").get<int>();
    r.oracle.tolerance = number(o.at("tolerance"), "oracle.tolerance");
    require(r.oracle.points >= 0, "oracle.points must be non-negative");
    require(r.oracle.spread >= 0.0 && r.oracle.spread < 1.0, "oracle.spread must lie in [0, 1)");
    require(r.oracle.omega_mod_mhz > 0.0, "oracle.omega_mod must be positive");
    require(r.oracle.beta > 0.0 && r.oracle.beta < 0.5, "oracle.beta must lie in (0, 0.5)");
    require(r.oracle.steps_per_period >= 256, "oracle.steps_per_period must be at least 256");
    require(r.oracle.max_periods >= 1, "oracle.max_periods must be positive");
    require(r.oracle.tolerance > 0.0, "oracle.tolerance must be positive");
    return r;
}

}
