#include "rydberg/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>

#include <boost/math/tools/minima.hpp>

namespace rydberg
{

namespace
{
    std::string fmt(double v)
    {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.12g", v);
        return buf;
    }

    void check_finite(const std::vector<double>& v, const char* what)
    {
        for (double x : v)
            if (!std::isfinite(x))
                throw std::domain_error(std::string(what) + ": non-finite value");
    }

    void check_increasing(const std::vector<double>& v, const char* what)
    {
        check_finite(v, what);
        for (std::size_t i = 1; i < v.size(); ++i)
            if (!(v[i] > v[i - 1]))
                throw std::invalid_argument(std::string(what) + ": axis must be strictly increasing");
    }

    double coupling_off_transmission(const Experiment& ex)
    {
        DriveParams off = ex.drive;
        off.rabi_coupling = 0.0;
        return propagate_cp(ex.cell, ex.medium, off).transmission;
    }

    // Detector signal given the coupling-off transmission for CP (unused for MTP).
    double signal_with_reference(Protocol p, const Experiment& ex, double t_off)
    {
        if (p == Protocol::mtp)
            return propagate_mtp(ex.cell, ex.medium, ex.drive, ex.mod).rma;
        if (ex.drive.rabi_coupling == 0.0)
            return 0.0;
        return propagate_cp(ex.cell, ex.medium, ex.drive).transmission - t_off;
    }

    std::string quantity_of(Protocol p) { return p == Protocol::cp ? "transparency" : "rma"; }

    // Least-squares polynomial through (t, y) with t already centered and
    // scaled; returns the linear coefficient.
    double linear_coefficient(const Eigen::VectorXd& t, const Eigen::VectorXd& y, int degree)
    {
        Eigen::MatrixXd v(t.size(), degree + 1);
        for (Eigen::Index i = 0; i < t.size(); ++i)
        {
            double p = 1.0;
            for (int k = 0; k <= degree; ++k)
            {
                v(i, k) = p;
                p *= t(i);
            }
        }
        const auto qr = v.colPivHouseholderQr();
        if (qr.rank() < degree + 1)
            throw std::invalid_argument("polynomial_slope: degenerate fit window");
        return qr.solve(y)(1);
    }
}

std::string to_string(Protocol p) { return p == Protocol::cp ? "cp" : "mtp"; }

Protocol parse_protocol(const std::string& name)
{
    if (name == "cp")
        return Protocol::cp;
    if (name == "mtp")
        return Protocol::mtp;
    throw std::invalid_argument("unknown protocol '" + name + "' (expected cp or mtp)");
}

std::vector<double> linspace(double lo, double hi, int n)
{
    if (n < 0)
        throw std::invalid_argument("linspace: negative point count");
    std::vector<double> v(n);
    if (n == 1)
        v[0] = lo;
    for (int i = 0; i < n && n > 1; ++i)
        v[i] = (i == n - 1) ? hi : lo + (hi - lo) * i / (n - 1);
    return v;
}

std::vector<double> MapResult::row(std::size_t iy) const
{
    const std::size_t nx = x_axis.size();
    return {values.begin() + iy * nx, values.begin() + (iy + 1) * nx};
}

void MapResult::check() const
{
    if (values.size() != x_axis.size() * y_axis.size())
        throw std::invalid_argument("map values do not match the axis dimensions");
}

int default_thread_count()
{
    if (const char* env = std::getenv("RYDBERG_THREADS"))
    {
        char* end = nullptr;
        const long n = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && n > 0)
            return static_cast<int>(std::min<long>(n, 1024));
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body)
{
    if (n == 0)
        return;
    const std::size_t workers = std::min<std::size_t>(std::max(threads, 1), n);

    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::size_t error_index = n;
    std::exception_ptr error;

    auto work = [&] {
        for (;;)
        {
            const std::size_t i = next.fetch_add(1);
            if (i >= n)
                return;
            try
            {
                body(i);
            }
            catch (...)
            {
                std::lock_guard lock(error_mutex);
                if (i < error_index)
                {
                    error_index = i;
                    error = std::current_exception();
                }
            }
        }
    };

    if (workers == 1)
        work();
    else
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back(work);
    }
    if (error)
        std::rethrow_exception(error);
}

double detector_signal(Protocol protocol, const Experiment& ex)
{
    if (protocol == Protocol::mtp)
        return signal_with_reference(protocol, ex, 0.0);
    return transparency(ex.cell, ex.medium, ex.drive);
}

SpectrumResult spectrum(Protocol protocol, const Experiment& ex, const std::vector<double>& delta_p_mhz,
                        int threads)
{
    check_increasing(delta_p_mhz, "spectrum");
    SpectrumResult out;
    out.axis = {"delta_p", "MHz", delta_p_mhz};
    out.quantity = quantity_of(protocol);
    out.values.assign(delta_p_mhz.size(), 0.0);
    out.metadata["protocol"] = to_string(protocol);

    parallel_for(delta_p_mhz.size(), threads, [&](std::size_t i) {
        Experiment local = ex;
        local.drive.delta_probe = mhz_to_angular(delta_p_mhz[i]);
        out.values[i] = detector_signal(protocol, local);
    });
    check_finite(out.values, "spectrum");
    return out;
}

ModulationMaps modulation_map(const Experiment& ex, const ModulationMapOptions& opt, int threads)
{
    check_increasing(opt.omega_mhz, "modulation_map omega axis");
    check_increasing(opt.beta, "modulation_map beta axis");
    check_increasing(opt.peak_search_mhz, "modulation_map peak search grid");
    if (opt.peak_search_mhz.empty())
        throw std::invalid_argument("modulation_map: empty peak search grid");
    if (!(opt.slope_step_mhz > 0.0))
        throw std::invalid_argument("modulation_map: slope step must be positive");

    const std::size_t nx = opt.omega_mhz.size(), ny = opt.beta.size();
    ModulationMaps maps;
    for (MapResult* m : {&maps.amplitude, &maps.slope, &maps.peak_position})
    {
        m->x_axis = {"omega_mod", "MHz", opt.omega_mhz};
        m->y_axis = {"beta", "", opt.beta};
        m->values.assign(nx * ny, 0.0);
    }
    maps.amplitude.quantity = "rma_peak";
    maps.slope.quantity = "rma_slope";
    maps.slope.metadata["unit"] = "1/MHz";
    maps.slope.metadata["delta_p_mhz"] = fmt(opt.slope_point_mhz);
    maps.slope.metadata["step_mhz"] = fmt(opt.slope_step_mhz);
    maps.peak_position.quantity = "delta_p_at_peak";
    maps.peak_position.metadata["unit"] = "MHz";

    const auto& grid = opt.peak_search_mhz;
    std::vector<char> at_edge(nx * ny, 0);

    parallel_for(nx * ny, threads, [&](std::size_t idx) {
        const std::size_t iy = idx / nx, ix = idx % nx;
        if (opt.beta[iy] == 0.0)
            return;
        Experiment local = ex;
        local.mod = ModulationParams(mhz_to_angular(opt.omega_mhz[ix]), opt.beta[iy]);
        auto rma_at = [&](double dp_mhz) {
            local.drive.delta_probe = mhz_to_angular(dp_mhz);
            return propagate_mtp(local.cell, local.medium, local.drive, local.mod).rma;
        };

        std::size_t best = 0;
        double best_value = -1.0;
        for (std::size_t k = 0; k < grid.size(); ++k)
        {
            const double r = rma_at(grid[k]);
            if (r > best_value)
            {
                best_value = r;
                best = k;
            }
        }
        double peak_x = grid[best];
        if (grid.size() > 1)
        {
            const double lo = grid[best == 0 ? 0 : best - 1];
            const double hi = grid[std::min(best + 1, grid.size() - 1)];
            std::uintmax_t iters = 60;
            const auto [x, neg] = boost::math::tools::brent_find_minima(
                [&](double dp) { return -rma_at(dp); }, lo, hi, opt.refine_bits, iters);
            if (-neg > best_value)
            {
                best_value = -neg;
                peak_x = x;
            }
            at_edge[idx] = (best == 0 || best == grid.size() - 1);
        }

        const double h = opt.slope_step_mhz;
        const double slope = (rma_at(opt.slope_point_mhz + h) - rma_at(opt.slope_point_mhz - h)) / (2.0 * h);

        maps.amplitude.values[idx] = best_value;
        maps.peak_position.values[idx] = peak_x;
        maps.slope.values[idx] = slope;
    });

    const auto edges = std::count(at_edge.begin(), at_edge.end(), 1);
    maps.amplitude.metadata["peaks_at_search_edge"] = std::to_string(edges);
    for (const MapResult* m : {&maps.amplitude, &maps.slope, &maps.peak_position})
        check_finite(m->values, "modulation_map");
    return maps;
}

SpectrumResult response_curve(Protocol protocol, const Experiment& ex, double delta_rf_mhz,
                              const std::vector<double>& e_rf, const OperatingPoint& op, int threads)
{
    const MapResult m = response_map(protocol, ex, e_rf, {delta_rf_mhz}, op, threads);
    SpectrumResult out;
    out.axis = m.x_axis;
    out.quantity = m.quantity;
    out.values = m.values;
    out.metadata = m.metadata;
    out.metadata["delta_rf_mhz"] = fmt(delta_rf_mhz);
    return out;
}

MapResult response_map(Protocol protocol, const Experiment& ex, const std::vector<double>& e_rf,
                       const std::vector<double>& delta_rf_mhz, const OperatingPoint& op, int threads)
{
    check_increasing(e_rf, "response E_RF axis");
    check_increasing(delta_rf_mhz, "response Delta_RF axis");
    for (double e : e_rf)
        if (e < 0.0)
            throw std::invalid_argument("response: RF field amplitudes must be non-negative");

    MapResult out;
    out.x_axis = {"e_rf", "V/m", e_rf};
    out.y_axis = {"delta_rf", "MHz", delta_rf_mhz};
    out.quantity = quantity_of(protocol);
    out.metadata["protocol"] = to_string(protocol);
    out.metadata["delta_p_mhz"] = fmt(op.for_protocol(protocol));
    const std::size_t nx = e_rf.size(), ny = delta_rf_mhz.size();
    out.values.assign(nx * ny, 0.0);

    Experiment base = ex;
    base.drive.delta_probe = mhz_to_angular(op.for_protocol(protocol));
    // The coupling-off transmission involves neither level 3 nor level 4 and
    // is therefore independent of the RF field and detuning.
    const double t_off = (protocol == Protocol::cp && nx * ny > 0) ? coupling_off_transmission(base) : 0.0;

    parallel_for(nx * ny, threads, [&](std::size_t idx) {
        Experiment local = base;
        local.drive.e_rf = e_rf[idx % nx];
        local.drive.delta_rf = mhz_to_angular(delta_rf_mhz[idx / nx]);
        out.values[idx] = signal_with_reference(protocol, local, t_off);
    });
    check_finite(out.values, "response");
    return out;
}

std::vector<double> polynomial_slope(const std::vector<double>& x, const std::vector<double>& y,
                                     const SlopeFitOptions& opt)
{
    if (x.size() != y.size())
        throw std::invalid_argument("polynomial_slope: x and y differ in length");
    if (opt.degree < 1 || opt.window < opt.degree + 1)
        throw std::invalid_argument("polynomial_slope: window must exceed the polynomial degree");
    check_increasing(x, "polynomial_slope");
    check_finite(y, "polynomial_slope");
    const std::size_t n = x.size();
    if (n == 0)
        return {};
    if (n < static_cast<std::size_t>(opt.degree + 1) && !(opt.even_extension && x.front() == 0.0))
        throw std::invalid_argument("polynomial_slope: too few points for the fit");

    // Optionally extend with mirrored samples y(-x) = y(x).
    std::vector<double> xe, ye;
    std::size_t offset = 0;
    if (opt.even_extension && x.front() == 0.0)
    {
        for (std::size_t i = n - 1; i >= 1; --i)
        {
            xe.push_back(-x[i]);
            ye.push_back(y[i]);
        }
        offset = xe.size();
    }
    xe.insert(xe.end(), x.begin(), x.end());
    ye.insert(ye.end(), y.begin(), y.end());
    const std::size_t m = xe.size();
    if (m < static_cast<std::size_t>(opt.degree + 1))
        throw std::invalid_argument("polynomial_slope: too few points for the fit");

    const std::size_t w = std::min<std::size_t>(opt.window, m);
    std::vector<double> slope(n);
    for (std::size_t i = 0; i < n; ++i)
    {
        const std::size_t c = i + offset;
        std::size_t lo = c >= w / 2 ? c - w / 2 : 0;
        lo = std::min(lo, m - w);
        const double x0 = xe[c];
        double scale = 0.0;
        for (std::size_t k = lo; k < lo + w; ++k)
            scale = std::max(scale, std::abs(xe[k] - x0));
        Eigen::VectorXd t(w), yy(w);
        for (std::size_t k = 0; k < w; ++k)
        {
            t(k) = (xe[lo + k] - x0) / scale;
            yy(k) = ye[lo + k];
        }
        slope[i] = linear_coefficient(t, yy, opt.degree) / scale;
    }
    return slope;
}

MapResult slope_map(const MapResult& response, const SlopeFitOptions& opt)
{
    response.check();
    MapResult out = response;
    out.quantity = response.quantity + "_slope";
    out.metadata["unit"] = "per V/m";
    out.metadata["fit_window"] = std::to_string(opt.window);
    out.metadata["fit_degree"] = std::to_string(opt.degree);
    const std::size_t nx = response.x_axis.size();
    for (std::size_t iy = 0; iy < response.y_axis.size(); ++iy)
    {
        const std::vector<double> s = polynomial_slope(response.x_axis.values, response.row(iy), opt);
        std::copy(s.begin(), s.end(), out.values.begin() + iy * nx);
    }
    return out;
}

std::vector<double> vanishing_field_ratio(const MapResult& mtp, const MapResult& cp, double relative_threshold)
{
    if (mtp.x_axis.values != cp.x_axis.values || mtp.y_axis.values != cp.y_axis.values)
        throw std::invalid_argument("vanishing_field_ratio: slope maps are on different grids");
    const std::vector<double> gm = vanishing_field_profile(mtp), gc = vanishing_field_profile(cp);
    const double floor = relative_threshold * *std::max_element(gc.begin(), gc.end());
    std::vector<double> r(gm.size());
    for (std::size_t i = 0; i < r.size(); ++i)
    {
        const double den = std::max(gc[i], floor);
        r[i] = den > 0.0 ? gm[i] / den : 0.0;
    }
    return r;
}

std::size_t nearest_index(const std::vector<double>& axis, double v)
{
    if (axis.empty())
        throw std::invalid_argument("nearest_index: empty axis");
    std::size_t best = 0;
    for (std::size_t i = 1; i < axis.size(); ++i)
        if (std::abs(axis[i] - v) < std::abs(axis[best] - v))
            best = i;
    return best;
}

std::size_t nearest_row(const MapResult& map, double y) { return nearest_index(map.y_axis.values, y); }

Contour threshold_crossing(const std::vector<double>& x, const std::vector<double>& profile, double threshold)
{
    Contour c;
    if (profile.empty())
        return c;
    const std::size_t start = std::max_element(profile.begin(), profile.end()) - profile.begin();
    if (!(profile[start] >= threshold) || !(threshold > 0.0))
        return c;
    for (std::size_t k = start + 1; k < profile.size(); ++k)
    {
        if (profile[k] < threshold)
        {
            const double f = (profile[k - 1] - threshold) / (profile[k - 1] - profile[k]);
            c.found = true;
            c.value = x[k - 1] + f * (x[k] - x[k - 1]);
            return c;
        }
    }
    c.bound = x.back();
    return c;
}

std::vector<double> vanishing_field_profile(const MapResult& slopes)
{
    slopes.check();
    const auto& e = slopes.x_axis.values;
    std::vector<std::size_t> cols;
    for (std::size_t i = 0; i < e.size() && cols.size() < 2; ++i)
        if (e[i] > 0.0)
            cols.push_back(i);
    if (cols.size() < 2)
        throw std::invalid_argument("vanishing-field limit needs two positive E_RF values");
    const double e1 = e[cols[0]], e2 = e[cols[1]];
    std::vector<double> g(slopes.y_axis.size());
    for (std::size_t iy = 0; iy < g.size(); ++iy)
    {
        const double g1 = std::abs(slopes.at(iy, cols[0])) / e1;
        const double g2 = std::abs(slopes.at(iy, cols[1])) / e2;
        g[iy] = std::max(0.0, (e2 * e2 * g1 - e1 * e1 * g2) / (e2 * e2 - e1 * e1));
    }
    return g;
}

BandwidthReport bandwidth(const MapResult& slopes, const MapResult& cp_slopes, const BandwidthOptions& opt)
{
    using Ref = BandwidthOptions::Reference;
    slopes.check();
    cp_slopes.check();
    if (slopes.y_axis.size() == 0 || cp_slopes.y_axis.size() == 0 || slopes.x_axis.size() == 0)
        throw std::invalid_argument("bandwidth: empty slope map");
    const std::size_t r0 = nearest_row(cp_slopes, 0.0);
    if (std::abs(cp_slopes.y_axis.values[r0]) > 1e-9)
        throw std::invalid_argument("bandwidth: reference map does not contain Delta_RF = 0");
    if (!opt.field && opt.reference != Ref::same_field)
        throw std::invalid_argument("bandwidth: the vanishing-field limit needs a same-field reference");

    BandwidthReport rep;
    rep.protocol = slopes.metadata.count("protocol") ? slopes.metadata.at("protocol") : "";
    rep.reference_delta_rf = cp_slopes.y_axis.values[r0];
    rep.delta_rf = slopes.y_axis.values;

    if (!opt.field)
    {
        rep.field = 0.0;
        rep.profile = vanishing_field_profile(slopes);
        rep.reference_slope = vanishing_field_profile(cp_slopes)[r0];
    }
    else
    {
        const std::size_t col = nearest_index(slopes.x_axis.values, *opt.field);
        rep.field = slopes.x_axis.values[col];
        rep.profile.resize(slopes.y_axis.size());
        for (std::size_t iy = 0; iy < slopes.y_axis.size(); ++iy)
            rep.profile[iy] = std::abs(slopes.at(iy, col));

        const std::vector<double> ref_row = cp_slopes.row(r0);
        std::size_t best = nearest_index(cp_slopes.x_axis.values, rep.field);
        if (opt.reference == Ref::map_maximum)
            for (std::size_t i = 0; i < ref_row.size(); ++i)
                if (std::abs(ref_row[i]) > std::abs(ref_row[best]))
                    best = i;
        rep.reference_slope = std::abs(ref_row[best]);
        rep.reference_e_rf = cp_slopes.x_axis.values[best];
    }

    rep.minus6 = threshold_crossing(rep.delta_rf, rep.profile, rep.reference_slope * std::pow(10.0, -0.6));
    rep.minus10 = threshold_crossing(rep.delta_rf, rep.profile, rep.reference_slope * 0.1);
    return rep;
}

SensitivityReport sensitivity(double slope, double noise_v0, double rbw)
{
    if (!(rbw > 0.0))
        throw std::invalid_argument("sensitivity: resolution bandwidth must be positive");
    if (!(noise_v0 >= 0.0))
        throw std::invalid_argument("sensitivity: noise voltage must be non-negative");
    if (!std::isfinite(slope))
        throw std::invalid_argument("sensitivity: slope must be finite");
    SensitivityReport r{slope, noise_v0, rbw, 0.0, false};
    const double s = std::abs(slope);
    if (s == 0.0)
    {
        r.infinite = true;
        r.sensitivity = std::numeric_limits<double>::infinity();
        return r;
    }
    r.sensitivity = noise_v0 / (s * std::sqrt(rbw));
    return r;
}

MapResult ratio_map(const MapResult& mtp, const MapResult& cp, double relative_threshold)
{
    mtp.check();
    cp.check();
    if (mtp.x_axis.values != cp.x_axis.values || mtp.y_axis.values != cp.y_axis.values)
        throw std::invalid_argument("ratio_map: slope maps are on different grids");
    if (!(relative_threshold >= 0.0))
        throw std::invalid_argument("ratio_map: threshold must be non-negative");

    MapResult out;
    out.x_axis = mtp.x_axis;
    out.y_axis = mtp.y_axis;
    out.quantity = "slope_ratio";
    out.values.resize(mtp.values.size());

    double cp_max = 0.0;
    for (double v : cp.values)
        cp_max = std::max(cp_max, std::abs(v));
    const double floor = relative_threshold * cp_max;

    std::size_t capped = 0;
    for (std::size_t i = 0; i < out.values.size(); ++i)
    {
        const double num = std::abs(mtp.values[i]);
        double den = std::abs(cp.values[i]);
        if (den < floor || den == 0.0)
        {
            ++capped;
            den = floor;
        }
        out.values[i] = den > 0.0 ? num / den : 0.0;
    }
    out.metadata["capped_points"] = std::to_string(capped);
    out.metadata["cp_floor"] = fmt(floor);
    return out;
}

}
