#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <ostream>
#include <random>

#include "config.hpp"
#include "output.hpp"
#include "rydberg/steady_state.hpp"

#ifndef RYDBERG_VERSION
#define RYDBERG_VERSION "unknown"
#endif

namespace sim
{

namespace
{
    namespace fs = std::filesystem;
    using namespace rydberg;

    struct Context
    {
        RunConfig cfg;
        int threads = 1;
        fs::path out;
        Json files = Json::array();
        Json diagnostics = Json::object();
        Json summary = Json::object();
        std::ostream& log;

        void csv(const std::string& name, const Table& t)
        {
            write_csv(out / name, t);
            files.push_back(name);
        }
        void json(const std::string& name, const Json& doc)
        {
            write_json(out / name, doc);
            files.push_back(name);
        }
    };

    Json contour_json(const Contour& c)
    {
        Json j;
        j["found"] = c.found;
        if (c.found)
            j["delta_rf_mhz"] = c.value;
        else if (c.bound)
            j["above_mhz"] = *c.bound;  // still above threshold at the grid edge
        else
            j["never_reached"] = true;
        return j;
    }

    Json calibration_json(const CalibrationResult& c)
    {
        return {{"density_m3", c.density},
                {"density_cm3", c.density * 1e-6},
                {"transmission", c.transmission},
                {"max_slice_absorption", c.max_slice_absorption},
                {"slice_absorption_below_1pct", c.max_slice_absorption < 0.01},
                {"iterations", c.iterations}};
    }

    CalibrationResult calibrate(Context& ctx)
    {
        const auto& ex = ctx.cfg.experiment;
        const CalibrationResult cal = calibrate_density(ex.cell, ex.medium, ctx.cfg.calibration_target);
        ctx.diagnostics["calibration"] = calibration_json(cal);
        return cal;
    }

    void ensure_density(Context& ctx)
    {
        if (ctx.cfg.density)
        {
            ctx.diagnostics["density_m3"] = *ctx.cfg.density;
            return;
        }
        ctx.cfg.experiment.cell.density = calibrate(ctx).density;
        ctx.diagnostics["density_m3"] = ctx.cfg.experiment.cell.density;
    }

    double relative_change(double a, double b)
    {
        const double scale = std::max(std::abs(a), std::abs(b));
        return scale > 0.0 ? std::abs(a - b) / scale : 0.0;
    }

    // Observable at the protocol's operating point with doubled slices and,
    // for quadrature methods, doubled velocity nodes.
    void refinement_diagnostics(Context& ctx, Protocol p)
    {
        Experiment ex = ctx.cfg.experiment;
        ex.drive.delta_probe = mhz_to_angular(ctx.cfg.operating_point.for_protocol(p));
        const double base = detector_signal(p, ex);

        Experiment fine = ex;
        fine.cell.num_slices *= 2;
        Json r;
        r["protocol"] = to_string(p);
        r["observable"] = base;
        r["slices_doubled"] = relative_change(base, detector_signal(p, fine));

        const double sigma = doppler_sigma(ex.medium.atom);
        if (ctx.cfg.doppler_method == "gauss_hermite")
        {
            fine = ex;
            fine.medium.doppler = DopplerModel::quadrature(maxwell_grid(sigma, 2 * ctx.cfg.doppler_nodes));
            r["velocity_nodes_doubled"] = relative_change(base, detector_signal(p, fine));
        }
        else if (ctx.cfg.doppler_method == "uniform")
        {
            fine = ex;
            fine.medium.doppler = DopplerModel::quadrature(
                uniform_maxwell_grid(sigma, 2 * ctx.cfg.doppler_nodes + 1, ctx.cfg.doppler_span));
            r["velocity_nodes_doubled"] = relative_change(base, detector_signal(p, fine));
        }
        else
            r["velocity_nodes_doubled"] = "exact average, no velocity grid";
        ctx.diagnostics["refinement"] = r;
    }

    Json argmax_json(const MapResult& m)
    {
        const auto it = std::max_element(m.values.begin(), m.values.end());
        if (it == m.values.end())
            return nullptr;
        const std::size_t idx = it - m.values.begin(), nx = m.x_axis.size();
        return {{m.x_axis.name, m.x_axis.values[idx % nx]}, {m.y_axis.name, m.y_axis.values[idx / nx]}, {"value", *it}};
    }

    std::optional<double> first_upcrossing(const std::vector<double>& x, const std::vector<double>& y, double level)
    {
        for (std::size_t k = 1; k < y.size(); ++k)
            if (y[k - 1] < level && y[k] >= level)
                return x[k - 1] + (level - y[k - 1]) / (y[k] - y[k - 1]) * (x[k] - x[k - 1]);
        return std::nullopt;
    }

    Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

    // ---------------------------------------------------------------------

    void cmd_spectrum(Context& ctx)
    {
        ensure_density(ctx);
        const SpectrumResult s =
            spectrum(ctx.cfg.protocol, ctx.cfg.experiment, ctx.cfg.spectrum_delta_p.values(), ctx.threads);
        ctx.csv("spectrum.csv", to_table(s));
        ctx.json("spectrum.json", sidecar(s));
        refinement_diagnostics(ctx, ctx.cfg.protocol);
        if (!s.values.empty())
        {
            const auto it = std::max_element(s.values.begin(), s.values.end());
            ctx.summary["peak"] = {{"delta_p_mhz", s.axis.values[it - s.values.begin()]}, {"value", *it}};
        }
    }

    void cmd_map(Context& ctx)
    {
        ensure_density(ctx);
        const ModulationMaps maps = modulation_map(ctx.cfg.experiment, ctx.cfg.map, ctx.threads);
        ctx.csv("map.csv", to_table({&maps.amplitude, &maps.slope, &maps.peak_position},
                                    {"rma_peak", "rma_slope_per_mhz", "delta_p_at_peak_mhz"}));
        Json side = sidecar(maps.amplitude);
        side["quantity"] = Json::array({"rma_peak", "rma_slope_per_mhz", "delta_p_at_peak_mhz"});
        side["metadata"]["slope"] = maps.slope.metadata;
        ctx.json("map.json", side);
        ctx.summary["amplitude_argmax"] = argmax_json(maps.amplitude);
        ctx.summary["slope_argmax"] = argmax_json(maps.slope);
    }

    void cmd_response(Context& ctx)
    {
        ensure_density(ctx);
        const SpectrumResult s = response_curve(ctx.cfg.protocol, ctx.cfg.experiment, ctx.cfg.response_delta_rf_mhz,
                                                ctx.cfg.response_e_rf.values(), ctx.cfg.operating_point, ctx.threads);
        ctx.csv("response.csv", to_table(s));
        ctx.json("response.json", sidecar(s));
    }

    MapResult compute_slopes(Context& ctx, Protocol p, MapResult* response = nullptr)
    {
        MapResult r = response_map(p, ctx.cfg.experiment, ctx.cfg.slopes_e_rf.values(), ctx.cfg.slopes_delta_rf.values(),
                                   ctx.cfg.operating_point, ctx.threads);
        MapResult s = slope_map(r, ctx.cfg.fit);
        if (response)
            *response = std::move(r);
        return s;
    }

    void cmd_slopes(Context& ctx)
    {
        ensure_density(ctx);
        MapResult response;
        const MapResult s = compute_slopes(ctx, ctx.cfg.protocol, &response);
        ctx.csv("slopes.csv", to_table({&response, &s}, {response.quantity, s.quantity}));
        Json side = sidecar(s);
        side["quantity"] = Json::array({response.quantity, s.quantity});
        ctx.json("slopes.json", side);
        if (!s.values.empty())
        {
            MapResult mag = s;
            for (double& v : mag.values)
                v = std::abs(v);
            ctx.summary["max_abs_slope"] = argmax_json(mag);
        }
    }

    Json sensitivity_json(const Context& ctx, const MapResult& slopes)
    {
        if (!ctx.cfg.noise_v0 || slopes.values.empty())
            return nullptr;
        double best = 0.0;
        for (double v : slopes.values)
            best = std::max(best, std::abs(v));
        const SensitivityReport r = sensitivity(ctx.cfg.responsivity * best, *ctx.cfg.noise_v0, ctx.cfg.rbw);
        Json j{{"slope_v_per_v_per_m", r.slope}, {"noise_v0", r.noise_v0}, {"rbw_hz", r.rbw}, {"infinite", r.infinite}};
        j["sensitivity_v_per_m_per_rthz"] = r.infinite ? Json(nullptr) : Json(r.sensitivity);
        return j;
    }

    Json bandwidth_json(const BandwidthReport& b)
    {
        return {{"protocol", b.protocol},
                {"field_v_per_m", b.field},
                {"reference_slope", b.reference_slope},
                {"reference_e_rf", b.reference_e_rf},
                {"reference_delta_rf_mhz", b.reference_delta_rf},
                {"minus6db", contour_json(b.minus6)},
                {"minus10db", contour_json(b.minus10)}};
    }

    void cmd_bandwidth(Context& ctx)
    {
        ensure_density(ctx);
        const MapResult cp = compute_slopes(ctx, Protocol::cp);
        const MapResult mtp = compute_slopes(ctx, Protocol::mtp);
        const BandwidthReport bcp = bandwidth(cp, cp, ctx.cfg.bandwidth);
        const BandwidthReport bmtp = bandwidth(mtp, cp, ctx.cfg.bandwidth);

        Table t{{"delta_rf_mhz", "cp_slope_profile", "mtp_slope_profile"}, {}};
        for (std::size_t i = 0; i < bcp.delta_rf.size(); ++i)
            t.rows.push_back({bcp.delta_rf[i], bcp.profile[i], bmtp.profile[i]});
        ctx.csv("bandwidth.csv", t);

        Json side;
        side["convention"] = "-X dB is a factor 10^(-X/10) on the slope";
        side["cp"] = bandwidth_json(bcp);
        side["mtp"] = bandwidth_json(bmtp);
        side["cp"]["sensitivity"] = sensitivity_json(ctx, cp);
        side["mtp"]["sensitivity"] = sensitivity_json(ctx, mtp);
        ctx.json("bandwidth.json", side);
        ctx.summary = side;
    }

    void cmd_ratio(Context& ctx)
    {
        ensure_density(ctx);
        const MapResult cp = compute_slopes(ctx, Protocol::cp);
        const MapResult mtp = compute_slopes(ctx, Protocol::mtp);
        const MapResult r = ratio_map(mtp, cp, ctx.cfg.ratio_threshold);
        ctx.csv("ratio.csv", to_table(r));
        ctx.json("ratio.json", sidecar(r));

        const auto& dr = r.y_axis.values;
        const std::vector<double> limit = vanishing_field_ratio(mtp, cp, ctx.cfg.ratio_threshold);
        Table t{{"delta_rf_mhz", "slope_ratio"}, {}};
        for (std::size_t i = 0; i < dr.size(); ++i)
            t.rows.push_back({dr[i], limit[i]});
        ctx.csv("ratio_vanishing.csv", t);

        double max_far = 0.0;
        for (std::size_t i = 0; i < dr.size(); ++i)
            if (dr[i] >= 20.0 && dr[i] <= 30.0)
                max_far = std::max(max_far, limit[i]);
        ctx.summary["vanishing_field"] = {{"crosses_1_at_mhz", optional_json(first_upcrossing(dr, limit, 1.0))},
                                          {"crosses_2_at_mhz", optional_json(first_upcrossing(dr, limit, 2.0))},
                                          {"max_ratio_20_30_mhz", max_far}};
    }

    void cmd_calibrate(Context& ctx)
    {
        const CalibrationResult cal = calibrate(ctx);
        ctx.csv("calibrate.csv", Table{{"density_m3", "transmission", "max_slice_absorption", "iterations"},
                                       {{cal.density, cal.transmission, cal.max_slice_absorption,
                                         static_cast<double>(cal.iterations)}}});
        ctx.summary = calibration_json(cal);
    }

    int cmd_oracle(Context& ctx)
    {
        const OracleSettings& o = ctx.cfg.oracle;
        const AtomicParams base_atom = ctx.cfg.experiment.medium.atom;
        const DriveParams base_drive = ctx.cfg.experiment.drive;

        struct Draw
        {
            AtomicParams atom;
            DriveParams drive;
            double omega = 0.0;
            double beta = 0.0;
        };
        std::mt19937_64 rng(o.seed);
        auto scaled = [&](double v) {
            const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
            return v * (1.0 + o.spread * (2.0 * u - 1.0));
        };
        std::vector<Draw> draws(o.points);
        for (auto& d : draws)
        {
            d.atom = base_atom;
            d.drive = base_drive;
            d.atom.gamma_2 = scaled(base_atom.gamma_2);
            d.atom.gamma_3 = scaled(base_atom.gamma_3);
            d.atom.gamma_4 = scaled(base_atom.gamma_4);
            d.atom.transit_rate = scaled(base_atom.transit_rate);
            d.atom.feed_rate = d.atom.transit_rate * (base_atom.feed_rate / base_atom.transit_rate);
            d.drive.rabi_probe = scaled(base_drive.rabi_probe);
            d.drive.rabi_coupling = scaled(base_drive.rabi_coupling);
            d.omega = scaled(mhz_to_angular(o.omega_mod_mhz));
            d.beta = std::min(scaled(o.beta), 0.49);
        }

        std::vector<std::vector<double>> rows(draws.size());
        parallel_for(draws.size(), ctx.threads, [&](std::size_t k) {
            const Draw& d = draws[k];
            const ModulationParams mod(d.omega, d.beta);
            const GeneratorSet g = build_generators(d.atom, resolve_couplings(d.atom, d.drive), mod, 0.0);
            const FloquetSolution fl = solve_floquet(g, d.omega);
            const OracleResult td = time_domain_oracle(g, d.omega, o.max_periods, o.steps_per_period);
            rows[k] = {static_cast<double>(k),
                       angular_to_mhz(d.atom.gamma_2),
                       angular_to_mhz(d.atom.gamma_3),
                       angular_to_mhz(d.atom.gamma_4),
                       angular_to_mhz(d.atom.transit_rate),
                       angular_to_mhz(d.drive.rabi_probe),
                       angular_to_mhz(d.drive.rabi_coupling),
                       angular_to_mhz(d.omega),
                       d.beta,
                       max_relative_deviation(fl, td.harmonics),
                       td.order2_residue(),
                       static_cast<double>(td.periods)};
        });

        Table t{{"point", "gamma_2_mhz", "gamma_3_mhz", "gamma_4_mhz", "transit_rate_mhz", "rabi_probe_mhz",
                 "rabi_coupling_mhz", "omega_mod_mhz", "beta", "max_relative_deviation", "order2_residue",
                 "periods"},
                std::move(rows)};
        ctx.csv("oracle-check.csv", t);

        double worst = 0.0;
        for (const auto& row : t.rows)
        {
            worst = std::max(worst, row[9]);
            ctx.log << "point " << row[0] << ": max relative deviation " << format_value(row[9])
                    << ", order-2 residue " << format_value(row[10]) << '\n';
        }
        ctx.log << "max relative deviation " << format_value(worst) << " (tolerance " << format_value(o.tolerance)
                << ")\n";
        ctx.summary = {{"max_relative_deviation", worst}, {"tolerance", o.tolerance}, {"passed", worst <= o.tolerance}};
        return worst <= o.tolerance ? kSuccess : kCheckFailed;
    }

    int dispatch(const std::string& command, Context& ctx)
    {
        if (command == "spectrum")
            cmd_spectrum(ctx);
        else if (command == "map")
            cmd_map(ctx);
        else if (command == "response")
            cmd_response(ctx);
        else if (command == "slopes")
            cmd_slopes(ctx);
        else if (command == "bandwidth")
            cmd_bandwidth(ctx);
        else if (command == "ratio")
            cmd_ratio(ctx);
        else if (command == "calibrate")
            cmd_calibrate(ctx);
        else if (command == "oracle-check")
            return cmd_oracle(ctx);
        return kSuccess;
    }
}

const std::vector<std::string>& command_names()
{
    static const std::vector<std::string> names{"spectrum", "map",       "response",    "slopes",
                                                "bandwidth", "ratio",    "calibrate",   "oracle-check"};
    return names;
}

int run(const std::string& command, const std::string& config_path, const std::vector<std::string>& overrides,
        const std::string& out_dir, std::ostream& log, std::ostream& err)
{
    const auto start = std::chrono::steady_clock::now();
    const auto& names = command_names();
    if (std::find(names.begin(), names.end(), command) == names.end())
    {
        err << "error: unknown command '" << command << "'\n";
        return kConfigError;
    }

    Json config;
    RunConfig cfg;
    try
    {
        config = load_config(config_path, overrides);
        cfg = resolve(config);
    }
    catch (const std::exception& e)
    {
        // ConfigError, ParameterError and JSON type errors alike
        err << "config error: " << e.what() << '\n';
        return kConfigError;
    }

    const std::string dir = !out_dir.empty() ? out_dir : config.at("output").get<std::string>();
    if (dir.empty())
    {
        err << "config error: no output directory (use --out or the 'output' key)\n";
        return kConfigError;
    }

    Context ctx{cfg, cfg.threads > 0 ? cfg.threads : default_thread_count(), dir, Json::array(), Json::object(),
                Json::object(), log};
    try
    {
        fs::create_directories(ctx.out);
    }
    catch (const std::exception& e)
    {
        err << "error: cannot create output directory: " << e.what() << '\n';
        return kCheckFailed;
    }

    int code = kSuccess;
    std::string failure;
    try
    {
        code = dispatch(command, ctx);
    }
    catch (const ConfigError& e)
    {
        code = kConfigError;
        failure = std::string("config error: ") + e.what();
    }
    catch (const ParameterError& e)
    {
        code = kConfigError;
        failure = std::string("config error: ") + e.what();
    }
    catch (const NumericalError& e)
    {
        code = kNumericalFailure;
        failure = std::string("numerical failure: ") + e.what();
    }
    catch (const SingularSystemError& e)
    {
        code = kNumericalFailure;
        failure = std::string("numerical failure: ") + e.what();
    }
    catch (const NonConvergenceError& e)
    {
        code = kNumericalFailure;
        failure = std::string("numerical failure: ") + e.what();
    }
    catch (const CalibrationError& e)
    {
        code = kNumericalFailure;
        failure = std::string("numerical failure: ") + e.what();
    }
    catch (const std::domain_error& e)
    {
        code = kNumericalFailure;
        failure = std::string("numerical failure: ") + e.what();
    }
    catch (const std::invalid_argument& e)
    {
        code = kConfigError;
        failure = std::string("config error: ") + e.what();
    }
    catch (const std::exception& e)
    {
        code = kCheckFailed;
        failure = std::string("error: ") + e.what();
    }
    if (!failure.empty())
        err << failure << '\n';

    Json manifest;
    manifest["tool"] = "sim";
    manifest["version"] = RYDBERG_VERSION;
    manifest["command"] = command;
    manifest["status"] = code == kSuccess ? "ok" : (failure.empty() ? "check failed" : failure);
    manifest["exit_code"] = code;
    manifest["threads"] = ctx.threads;
    manifest["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    manifest["files"] = ctx.files;
    manifest["summary"] = ctx.summary;
    manifest["diagnostics"] = ctx.diagnostics;
    manifest["config"] = config;
    try
    {
        write_json(ctx.out / "manifest.json", manifest);
    }
    catch (const std::exception& e)
    {
        err << "error: " << e.what() << '\n';
        return code == kSuccess ? kCheckFailed : code;
    }
    if (code == kSuccess)
        log << command << ": wrote " << ctx.files.size() << " file(s) to " << ctx.out.string() << '\n';
    return code;
}

}
