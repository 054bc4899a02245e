#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "caldeira_leggett.hpp"
#include "errors.hpp"
#include "io.hpp"
#include "log.hpp"
#include "params.hpp"
#include "trajectory_engine.hpp"

namespace lgtraj::cli
{
using json = nlohmann::json;

//---------------------------------------------------------------------------//
enum class Mode
{
    simulate,
    density,
    cl_compare,
    params,
};

inline std::string to_string(Mode m)
{
    switch (m)
    {
        case Mode::simulate:
            return "simulate";
        case Mode::density:
            return "density";
        case Mode::cl_compare:
            return "cl-compare";
        case Mode::params:
            return "params";
    }
    return "?";
}

inline Mode parse_mode(const std::string& s)
{
    if (s == "simulate")
        return Mode::simulate;
    if (s == "density")
        return Mode::density;
    if (s == "cl-compare")
        return Mode::cl_compare;
    if (s == "params")
        return Mode::params;
    throw ValidationError("cli", "unknown mode '" + s + "'");
}

struct ClCompareConfig
{
    CLParams params;
    double tau_max{80};
    double dt{0.5};
};

struct OutputConfig
{
    std::string dir{"."};
    std::string prefix{"lgtraj"};
};

/*!
 * Parsed configuration file.
 *
 * The parameter blocks are kept as given; resolve_params() picks the set the
 * run uses.
 */
struct RunConfig
{
    std::optional<Mode> mode;
    std::optional<DimensionlessParams> dimensionless;
    std::optional<PhysicalParams> physical;
    ExpectedScales expected;
    EnsembleConfig engine;
    std::optional<DensityRequest> density;
    std::optional<ClCompareConfig> cl;
    OutputConfig output;
};

namespace detail
{
inline void check_keys(const json& obj, const std::set<std::string>& allowed,
                       const std::string& where)
{
    if (!obj.is_object())
        throw ValidationError("cli", where + " must be an object");
    for (const auto& item : obj.items())
    {
        if (!allowed.count(item.key()))
            throw ValidationError("cli", "unknown key '" + item.key() + "' in " + where);
    }
}

inline double get_number(const json& obj, const std::string& key, const std::string& where)
{
    if (!obj.contains(key))
        throw ValidationError("cli", where + "." + key + " is required");
    const json& v = obj.at(key);
    if (!v.is_number())
        throw ValidationError("cli", where + "." + key + " must be a number");
    return v.get<double>();
}

inline double get_number_or(const json& obj, const std::string& key,
                            const std::string& where, double fallback)
{
    return obj.contains(key) ? get_number(obj, key, where) : fallback;
}

inline std::uint64_t get_count(const json& obj, const std::string& key,
                               const std::string& where, std::uint64_t fallback)
{
    if (!obj.contains(key))
        return fallback;
    const json& v = obj.at(key);
    if (!v.is_number_unsigned())
        throw ValidationError("cli", where + "." + key + " must be a non-negative integer");
    return v.get<std::uint64_t>();
}

//! Angular frequency given either in rad/s (`key`) or in Hz (`key_hz`).
inline std::optional<double>
get_frequency(const json& obj, const std::string& key, const std::string& where)
{
    bool rad = obj.contains(key);
    bool hz = obj.contains(key + "_hz");
    if (rad && hz)
        throw ValidationError("cli", where + ": give only one of " + key + ", " + key + "_hz");
    if (rad)
        return get_number(obj, key, where);
    if (hz)
        return constants::two_pi * get_number(obj, key + "_hz", where);
    return std::nullopt;
}

inline DimensionlessParams parse_dimensionless(const json& j)
{
    check_keys(j, {"beta", "eta", "mu"}, "dimensionless");
    return direct(get_number(j, "beta", "dimensionless"),
                  get_number(j, "eta", "dimensionless"),
                  get_number(j, "mu", "dimensionless"));
}

inline PhysicalParams parse_physical(const json& j, ExpectedScales& expected)
{
    const std::string w = "physical";
    check_keys(j,
               {"mass", "wavelength", "linewidth", "linewidth_hz", "detuning",
                "detuning_hz", "detuning_linewidths", "rabi", "rabi_hz", "waist",
                "beta", "expected"},
               w);
    PhysicalParams p;
    p.mass = get_number(j, "mass", w);
    p.wavelength = get_number(j, "wavelength", w);
    p.waist = get_number(j, "waist", w);
    p.beta = get_number(j, "beta", w);

    auto gamma = get_frequency(j, "linewidth", w);
    if (!gamma)
        throw ValidationError("cli", "physical.linewidth or physical.linewidth_hz is required");
    p.linewidth = *gamma;

    auto delta = get_frequency(j, "detuning", w);
    if (j.contains("detuning_linewidths"))
    {
        if (delta)
            throw ValidationError("cli", "physical: give only one detuning form");
        delta = get_number(j, "detuning_linewidths", w) * p.linewidth;
    }
    if (!delta)
        throw ValidationError("cli", "physical.detuning is required");
    p.detuning = *delta;

    auto rabi = get_frequency(j, "rabi", w);
    if (!rabi)
        throw ValidationError("cli", "physical.rabi or physical.rabi_hz is required");
    p.rabi = *rabi;

    if (j.contains("expected"))
    {
        const json& e = j.at("expected");
        check_keys(e, {"omega_s_hz", "eta", "mu"}, "physical.expected");
        if (e.contains("omega_s_hz"))
            expected.omega_s_hz = get_number(e, "omega_s_hz", "physical.expected");
        if (e.contains("eta"))
            expected.eta = get_number(e, "eta", "physical.expected");
        if (e.contains("mu"))
            expected.mu = get_number(e, "mu", "physical.expected");
    }
    return p;
}

inline void parse_engine(const json& j, EnsembleConfig& e)
{
    const std::string w = "engine";
    check_keys(j,
               {"cutoff", "n_traj", "tau_max", "sample_dt", "seed", "initial",
                "survival", "histogram_bin", "threads"},
               w);
    e.cutoff = get_count(j, "cutoff", w, e.cutoff);
    e.n_traj = get_count(j, "n_traj", w, e.n_traj);
    e.tau_max = get_number_or(j, "tau_max", w, e.tau_max);
    e.sample_dt = get_number_or(j, "sample_dt", w, e.sample_dt);
    e.seed = get_count(j, "seed", w, e.seed);
    e.histogram_bin = get_number_or(j, "histogram_bin", w, e.histogram_bin);
    e.threads = static_cast<unsigned>(get_count(j, "threads", w, e.threads));
    if (j.contains("initial"))
    {
        const json& i = j.at("initial");
        check_keys(i, {"x0", "y0", "px0", "py0"}, "engine.initial");
        e.initial.x0 = get_number_or(i, "x0", "engine.initial", 0);
        e.initial.y0 = get_number_or(i, "y0", "engine.initial", 0);
        e.initial.px0 = get_number_or(i, "px0", "engine.initial", 0);
        e.initial.py0 = get_number_or(i, "py0", "engine.initial", 0);
    }
    if (j.contains("survival"))
    {
        if (!j.at("survival").is_string())
            throw ValidationError("cli", "engine.survival must be a string");
        std::string s = j.at("survival").get<std::string>();
        if (s == "standard")
            e.survival = SurvivalConvention::standard;
        else if (s == "literal")
            e.survival = SurvivalConvention::literal;
        else
            throw ValidationError("cli", "engine.survival must be 'standard' or 'literal'");
    }
}

inline DensityRequest parse_density(const json& j)
{
    check_keys(j, {"taus", "grid"}, "density");
    DensityRequest d;
    if (!j.contains("taus") || !j.at("taus").is_array() || j.at("taus").empty())
        throw ValidationError("cli", "density.taus must be a non-empty array");
    for (const auto& t : j.at("taus"))
    {
        if (!t.is_number())
            throw ValidationError("cli", "density.taus entries must be numbers");
        d.taus.push_back(t.get<double>());
    }
    if (j.contains("grid"))
    {
        const json& g = j.at("grid");
        const std::string w = "density.grid";
        check_keys(g, {"x_min", "x_max", "nx", "y_min", "y_max", "ny"}, w);
        d.grid.x_min = get_number_or(g, "x_min", w, d.grid.x_min);
        d.grid.x_max = get_number_or(g, "x_max", w, d.grid.x_max);
        d.grid.nx = get_count(g, "nx", w, d.grid.nx);
        d.grid.y_min = get_number_or(g, "y_min", w, d.grid.y_min);
        d.grid.y_max = get_number_or(g, "y_max", w, d.grid.y_max);
        d.grid.ny = get_count(g, "ny", w, d.grid.ny);
    }
    d.grid.validate();
    return d;
}

inline ClCompareConfig parse_cl(const json& j, const std::optional<DimensionlessParams>& dim)
{
    const std::string w = "cl";
    check_keys(j, {"sigma_bar", "eta_bar", "beta", "tau_max", "dt"}, w);
    ClCompareConfig c;
    c.params.sigma_bar = get_number(j, "sigma_bar", w);
    if (j.contains("eta_bar"))
        c.params.eta_bar = get_number(j, "eta_bar", w);
    else if (dim)
        c.params.eta_bar = dim->eta();
    else
        throw ValidationError("cli", "cl.eta_bar is required without a dimensionless block");
    if (j.contains("beta"))
        c.params.beta = get_number(j, "beta", w);
    else if (dim)
        c.params.beta = dim->beta();
    else
        throw ValidationError("cli", "cl.beta is required without a dimensionless block");
    c.tau_max = get_number_or(j, "tau_max", w, c.tau_max);
    c.dt = get_number_or(j, "dt", w, c.dt);
    c.params.validate();
    if (!(c.dt > 0) || !(c.tau_max >= 0))
        throw ValidationError("cli", "cl.dt must be positive and cl.tau_max non-negative");
    return c;
}
} // namespace detail

//! Parse a configuration document. Throws ValidationError on any problem.
inline RunConfig parse_config(const json& j)
{
    detail::check_keys(j,
                       {"mode", "dimensionless", "physical", "engine", "density", "cl",
                        "output"},
                       "config");
    RunConfig c;
    if (j.contains("mode"))
    {
        if (!j.at("mode").is_string())
            throw ValidationError("cli", "mode must be a string");
        c.mode = parse_mode(j.at("mode").get<std::string>());
    }
    if (j.contains("dimensionless"))
        c.dimensionless = detail::parse_dimensionless(j.at("dimensionless"));
    if (j.contains("physical"))
        c.physical = detail::parse_physical(j.at("physical"), c.expected);
    if (j.contains("engine"))
        detail::parse_engine(j.at("engine"), c.engine);
    if (j.contains("density"))
        c.density = detail::parse_density(j.at("density"));
    if (j.contains("cl"))
        c.cl = detail::parse_cl(j.at("cl"), c.dimensionless);
    if (j.contains("output"))
    {
        const json& o = j.at("output");
        detail::check_keys(o, {"dir", "prefix"}, "output");
        if (o.contains("dir"))
            c.output.dir = o.at("dir").get<std::string>();
        if (o.contains("prefix"))
            c.output.prefix = o.at("prefix").get<std::string>();
    }
    return c;
}

inline RunConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ValidationError("cli", "cannot read config " + path.string());
    json j;
    try
    {
        j = json::parse(in, nullptr, true, /* ignore_comments = */ true);
    }
    catch (const json::exception& e)
    {
        throw ValidationError("cli", "malformed config " + path.string() + ": " + e.what());
    }
    try
    {
        return parse_config(j);
    }
    catch (const json::exception& e)
    {
        throw ValidationError("cli", std::string("bad config value: ") + e.what());
    }
}

//---------------------------------------------------------------------------//
struct ResolvedParams
{
    DimensionlessParams params{1, 0, 0};
    std::vector<std::string> diagnostics;
};

/*!
 * Dimensionless set used for a run.
 *
 * A dimensionless block wins over a physical one; the physical derivation is
 * still performed so its diagnostics are reported.
 */
inline ResolvedParams resolve_params(const RunConfig& c)
{
    std::vector<std::string> diag;
    std::optional<DerivationReport> report;
    if (c.physical)
    {
        report = derive(*c.physical, c.expected);
        diag = report->diagnostics;
    }
    if (c.dimensionless)
    {
        if (c.physical)
        {
            diag.push_back(
                "both dimensionless and physical blocks given; using the dimensionless block");
        }
        return {*c.dimensionless, diag};
    }
    if (c.physical)
        return {to_dimensionless(*c.physical, report->scales), diag};
    throw ValidationError("cli", "config needs a dimensionless or physical parameter block");
}

//! Resolved configuration as JSON, echoed into output headers.
inline json resolved_json(const RunConfig& c, Mode mode, const DimensionlessParams& p)
{
    json j;
    j["mode"] = to_string(mode);
    j["params"] = {{"beta", p.beta()}, {"eta", p.eta()}, {"mu", p.mu()}};
    if (c.physical)
    {
        const auto& ph = *c.physical;
        j["physical"] = {{"mass", ph.mass},           {"wavelength", ph.wavelength},
                         {"linewidth", ph.linewidth}, {"detuning", ph.detuning},
                         {"rabi", ph.rabi},           {"waist", ph.waist},
                         {"beta", ph.beta}};
    }
    if (mode == Mode::simulate || mode == Mode::density)
    {
        const auto& e = c.engine;
        j["engine"] = {
            {"cutoff", e.cutoff},
            {"n_traj", e.n_traj},
            {"tau_max", e.tau_max},
            {"sample_dt", e.sample_dt},
            {"seed", e.seed},
            {"initial",
             {{"x0", e.initial.x0}, {"y0", e.initial.y0}, {"px0", e.initial.px0},
              {"py0", e.initial.py0}}},
            {"survival",
             e.survival == SurvivalConvention::standard ? "standard" : "literal"},
            {"histogram_bin", e.histogram_bin},
        };
    }
    if (mode == Mode::density && c.density)
    {
        const auto& g = c.density->grid;
        j["density"] = {{"taus", c.density->taus},
                        {"grid",
                         {{"x_min", g.x_min},
                          {"x_max", g.x_max},
                          {"nx", g.nx},
                          {"y_min", g.y_min},
                          {"y_max", g.y_max},
                          {"ny", g.ny}}}};
    }
    if (mode == Mode::cl_compare && c.cl)
    {
        j["cl"] = {{"sigma_bar", c.cl->params.sigma_bar},
                   {"eta_bar", c.cl->params.eta_bar},
                   {"beta", c.cl->params.beta},
                   {"tau_max", c.cl->tau_max},
                   {"dt", c.cl->dt}};
    }
    return j;
}

//---------------------------------------------------------------------------//
struct Options
{
    std::string mode;
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    std::optional<std::string> out;
    bool no_timestamp{false};
};

namespace detail
{
struct Context
{
    RunConfig config;
    Mode mode{Mode::simulate};
    ResolvedParams resolved;
    bool timestamp{true};
    std::filesystem::path out_dir;
    std::vector<std::filesystem::path> written;

    std::filesystem::path file(const std::string& name) const
    {
        return out_dir / (config.output.prefix + "_" + name);
    }

    void provenance(CsvWriter& w) const
    {
        w.comment("lgtraj " + to_string(mode));
        if (timestamp)
        {
            auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
            std::tm tm{};
            gmtime_r(&now, &tm);
            std::ostringstream os;
            os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
            w.comment("generated " + os.str());
        }
        w.comment("config " + resolved_json(config, mode, resolved.params).dump());
        for (const auto& d : resolved.diagnostics)
            w.comment("diagnostic: " + d);
    }
};

inline void write_series(Context& ctx, const EnsembleResult& r)
{
    auto path = ctx.file("series.csv");
    CsvWriter w(path);
    ctx.provenance(w);
    w.comment("n_traj_effective " + std::to_string(r.n_traj_effective));
    w.comment("n_degenerate " + std::to_string(r.n_degenerate));
    w.comment("total_jumps " + std::to_string(r.total_jumps));
    w.comment("max_truncation_metric " + format_double(r.truncation_metric));
    w.header({"tau", "mean_x", "mean_y", "mean_px", "mean_py", "var_x", "var_y", "mean_L",
              "var_L", "jumps_in_bin", "truncation_metric"});
    for (std::size_t k = 0; k < r.series.size(); ++k)
    {
        const auto& s = r.series[k];
        w.row({s.tau, s.mean_x, s.mean_y, s.mean_px, s.mean_py, s.var_x, s.var_y, s.mean_L,
               s.var_L, double(r.jumps_per_sample[k]), r.top_shell[k]});
    }
    w.close();
    ctx.written.push_back(path);

    auto hpath = ctx.file("jumps.csv");
    CsvWriter h(hpath);
    ctx.provenance(h);
    h.header({"tau_start", "tau_end", "jumps"});
    const auto& hist = r.jump_histogram;
    for (std::size_t b = 0; b < hist.counts.size(); ++b)
    {
        h.row({hist.bin_width * double(b), hist.bin_width * double(b + 1),
               double(hist.counts[b])});
    }
    h.close();
    ctx.written.push_back(hpath);
}

inline void write_densities(Context& ctx, const EnsembleResult& r)
{
    for (std::size_t i = 0; i < r.densities.size(); ++i)
    {
        const auto& d = r.densities[i];
        std::string stem = "density_" + std::to_string(i);
        auto path = ctx.file(stem + ".csv");
        CsvWriter w(path);
        ctx.provenance(w);
        w.comment("tau " + format_double(d.tau));
        w.comment("rows x, columns y");
        write_matrix_rows(w, d.density);
        w.close();
        ctx.written.push_back(path);

        json meta = {{"tau", d.tau},
                     {"data", path.filename().string()},
                     {"rows", "x"},
                     {"columns", "y"},
                     {"x_min", d.grid.x_min},
                     {"x_max", d.grid.x_max},
                     {"nx", d.grid.nx},
                     {"y_min", d.grid.y_min},
                     {"y_max", d.grid.y_max},
                     {"ny", d.grid.ny},
                     {"n_traj_effective", r.n_traj_effective}};
        auto mpath = ctx.file(stem + ".json");
        std::ofstream m(mpath, std::ios::binary | std::ios::trunc);
        m << meta.dump(2) << '\n';
        if (!m)
            throw ValidationError("cli", "error writing " + mpath.string());
        ctx.written.push_back(mpath);
    }
}

inline void write_cl(Context& ctx)
{
    const auto& c = *ctx.config.cl;
    auto path = ctx.file("cl.csv");
    CsvWriter w(path);
    ctx.provenance(w);
    w.header({"tau", "var_x", "delta_x"});
    auto steps = static_cast<std::size_t>(std::floor(c.tau_max / c.dt + 1e-9));
    for (std::size_t k = 0; k <= steps; ++k)
    {
        double tau = double(k) * c.dt;
        double v = cl_variance(tau, c.params);
        w.row({tau, v, std::sqrt(v)});
    }
    w.close();
    ctx.written.push_back(path);
}

inline void write_params(Context& ctx, std::ostream& out)
{
    const auto& c = ctx.config;
    if (!c.physical)
        throw ValidationError("cli", "params mode needs a physical block");
    DerivationReport report = derive(*c.physical, c.expected);
    std::string text = format_report(*c.physical, report);
    if (c.dimensionless)
    {
        text += "dimensionless block (used for simulations):\n  beta " + format_double(c.dimensionless->beta())
                + "\n  eta  " + format_double(c.dimensionless->eta()) + "\n  mu   "
                + format_double(c.dimensionless->mu()) + "\n";
    }
    out << text;
    auto path = ctx.file("params.txt");
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f << text;
    if (!f)
        throw ValidationError("cli", "error writing " + path.string());
    ctx.written.push_back(path);
}
} // namespace detail

/*!
 * Execute one run. Returns the process exit code:
 * 0 success, 2 configuration error, 3 numerical failure, 1 anything else.
 */
inline int run(const Options& opt, std::ostream& out, std::ostream& err)
{
    auto previous = set_warning_handler([&err](const std::string& msg) {
        err << "warning: " << msg << '\n';
    });
    struct Restore
    {
        WarningHandler h;
        ~Restore() { set_warning_handler(std::move(h)); }
    } restore{std::move(previous)};

    try
    {
        detail::Context ctx;
        ctx.config = load_config(opt.config);
        auto& cfg = ctx.config;

        std::optional<Mode> flag_mode;
        if (!opt.mode.empty())
            flag_mode = parse_mode(opt.mode);
        if (flag_mode && cfg.mode && *flag_mode != *cfg.mode)
        {
            throw ValidationError("cli", "mode '" + to_string(*flag_mode)
                                             + "' conflicts with config mode '"
                                             + to_string(*cfg.mode) + "'");
        }
        if (!flag_mode && !cfg.mode)
            throw ValidationError("cli", "no mode given on the command line or in the config");
        ctx.mode = flag_mode ? *flag_mode : *cfg.mode;
        ctx.timestamp = !opt.no_timestamp;

        if (opt.seed)
            cfg.engine.seed = *opt.seed;
        if (opt.threads)
        {
            cfg.engine.threads = *opt.threads;
        }
        else if (const char* env = std::getenv("LGTRAJ_THREADS"))
        {
            try
            {
                std::size_t used = 0;
                unsigned long v = std::stoul(env, &used);
                if (used != std::string(env).size())
                    throw std::invalid_argument("trailing characters");
                cfg.engine.threads = static_cast<unsigned>(v);
            }
            catch (const std::exception&)
            {
                throw ValidationError("cli", std::string("bad LGTRAJ_THREADS value '") + env + "'");
            }
        }

        ctx.out_dir = opt.out ? *opt.out : cfg.output.dir;
        std::error_code ec;
        std::filesystem::create_directories(ctx.out_dir, ec);
        if (ec || !std::filesystem::is_directory(ctx.out_dir))
            throw ValidationError("cli", "cannot create output directory " + ctx.out_dir.string());

        switch (ctx.mode)
        {
            case Mode::simulate:
            case Mode::density: {
                ctx.resolved = resolve_params(cfg);
                cfg.engine.params = ctx.resolved.params;
                cfg.engine.validate();
                for (const auto& d : ctx.resolved.diagnostics)
                    err << "diagnostic: " << d << '\n';
                const DensityRequest* req = nullptr;
                if (ctx.mode == Mode::density)
                {
                    if (!cfg.density)
                        throw ValidationError("cli", "density mode needs a density block");
                    for (double t : cfg.density->taus)
                        cfg.engine.lattice_index(t);
                    req = &*cfg.density;
                }
                EnsembleResult r = run_ensemble(cfg.engine, req);
                detail::write_series(ctx, r);
                if (req)
                    detail::write_densities(ctx, r);
                if (r.n_degenerate)
                {
                    err << "warning: " << r.n_degenerate
                        << " trajectories ended in degenerate jumps and were excluded\n";
                }
                break;
            }
            case Mode::cl_compare: {
                if (!cfg.cl)
                    throw ValidationError("cli", "cl-compare mode needs a cl block");
                ctx.resolved.params = cfg.dimensionless
                                          ? *cfg.dimensionless
                                          : DimensionlessParams(cfg.cl->params.beta,
                                                                cfg.cl->params.eta_bar, 0);
                detail::write_cl(ctx);
                break;
            }
            case Mode::params: {
                if (!cfg.physical)
                    throw ValidationError("cli", "params mode needs a physical block");
                ctx.resolved = resolve_params(cfg);
                detail::write_params(ctx, out);
                break;
            }
        }
        for (const auto& p : ctx.written)
            out << "wrote " << p.string() << '\n';
        return 0;
    }
    catch (const ValidationError& e)
    {
        err << "error: " << e.what() << '\n';
        return 2;
    }
    catch (const NumericalError& e)
    {
        err << "numerical failure: " << e.what() << '\n';
        return 3;
    }
    catch (const std::exception& e)
    {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

//! Parse argv and run. Usage errors exit with 2.
inline int main(int argc, char** argv, std::ostream& out = std::cout,
                std::ostream& err = std::cerr)
{
    CLI::App app{"Quantum-trajectory simulator for an atom orbiting in a Laguerre-Gaussian beam"};
    Options opt;
    std::uint64_t seed = 0;
    unsigned threads = 0;
    std::string out_dir;
    app.add_option("mode", opt.mode, "simulate | density | cl-compare | params")
        ->check(CLI::IsMember({"simulate", "density", "cl-compare", "params"}));
    app.add_option("--config", opt.config, "JSON run configuration")->required();
    auto* seed_opt = app.add_option("--seed", seed, "override engine seed");
    auto* threads_opt = app.add_option("--threads", threads, "worker threads (0: all cores)");
    auto* out_opt = app.add_option("--out", out_dir, "output directory");
    app.add_flag("--no-timestamp", opt.no_timestamp, "omit the generation time from outputs");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::CallForHelp& e)
    {
        out << app.help();
        return 0;
    }
    catch (const CLI::ParseError& e)
    {
        err << "error: " << e.what() << '\n';
        return 2;
    }
    if (seed_opt->count())
        opt.seed = seed;
    if (threads_opt->count())
        opt.threads = threads;
    if (out_opt->count())
        opt.out = out_dir;
    return run(opt, out, err);
}

} // namespace lgtraj::cli
