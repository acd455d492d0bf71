#pragma once

// Declarative experiment runs: config parsing, presets, orchestration and
// the CSV/JSON file formats consumed by the plotting scripts.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dynamics.hpp"
#include "ensemble.hpp"
#include "integrator.hpp"
#include "orbits.hpp"
#include "quantum_state.hpp"
#include "spectra.hpp"

namespace pwspec {

inline constexpr char const* artifact_version = "1.0.0";

/// Process exit codes of `pwspec run`.
enum ExitCode : int
{
    exit_success = 0,
    exit_config_error = 2,
    exit_integration_failure = 3,
    exit_io_failure = 4,
};

class ConfigError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

enum class ScenarioKind
{
    ensemble,  //!< sample, evolve, histogram
    orbits,    //!< G contours and the equilibrium density field
};

enum class OutputFormat
{
    csv,
    json,
};

struct ScenarioConfig
{
    std::string name = "custom";
    ScenarioKind kind = ScenarioKind::ensemble;
    std::string description;

    // ensemble runs; w == 1 is the equilibrium sampler
    double w = 1.0;
    std::size_t n_points = 10'000;
    std::vector<double> snapshot_times;
    std::vector<double> vacuum_mode_ratios;
    IntegratorSettings integrator;
    std::size_t bins = 50;
    double range_lo = -5.0;
    double range_hi = 5.0;
    double e_gamma = 1.0;
    bool write_points = true;
    /// Line counting reported per frame in the manifest.
    ModeCountOptions line_detection;

    // orbit runs
    std::vector<double> contour_levels;
    std::size_t grid_q = 121;
    std::size_t grid_yp = 161;
    double grid_q_lo = -3.0, grid_q_hi = 3.0;
    double grid_yp_lo = -4.0, grid_yp_hi = 4.0;

    std::string output_dir = "out";
    std::uint64_t seed = 20170101;

    void validate() const
    {
        if (kind == ScenarioKind::ensemble) {
            if (n_points == 0)
                throw ConfigError("n_points must be positive");
            if (!(w > 0.0) || !std::isfinite(w))
                throw ConfigError("sampler width w must be positive");
            if (snapshot_times.empty())
                throw ConfigError("snapshot_times must not be empty");
            for (std::size_t i = 0; i < snapshot_times.size(); ++i)
                if (!(snapshot_times[i] >= 0.0) || (i > 0 && !(snapshot_times[i] > snapshot_times[i - 1])))
                    throw ConfigError("snapshot_times must be nonnegative and strictly increasing");
            for (double r : vacuum_mode_ratios)
                if (!(r > 0.0))
                    throw ConfigError("vacuum_mode_ratios must be positive");
            if (bins < 2 || !(range_hi > range_lo))
                throw ConfigError("binning needs bins >= 2 and a nonempty range");
            if (!(e_gamma > 0.0))
                throw ConfigError("E_gamma must be positive");
            if (!(line_detection.bandwidth > 0.0) || !(line_detection.prominence_fraction >= 0.0)
                || line_detection.oversample < 1)
                throw ConfigError("line_detection needs a positive bandwidth and oversample, nonnegative prominence");
        } else {
            if (contour_levels.empty())
                throw ConfigError("contour_levels must not be empty");
            if (grid_q < 2 || grid_yp < 2 || !(grid_q_hi > grid_q_lo) || !(grid_yp_hi > grid_yp_lo))
                throw ConfigError("density grid needs >= 2 points per axis and nonempty ranges");
        }
        try {
            integrator.validate();
        } catch (std::invalid_argument const& e) {
            throw ConfigError(e.what());
        }
    }
};

// -- presets -----------------------------------------------------------------------

struct PresetInfo
{
    std::string name;
    std::string description;
};

namespace detail {

inline ScenarioConfig ensemble_preset(std::string name, std::string description, double w,
                                      std::vector<double> times, bool points)
{
    ScenarioConfig c;
    c.name = std::move(name);
    c.description = std::move(description);
    c.w = w;
    c.snapshot_times = std::move(times);
    c.write_points = points;
    c.output_dir = "out/" + c.name;
    return c;
}

}  // namespace detail

inline std::vector<ScenarioConfig> preset_configs()
{
    std::vector<ScenarioConfig> presets;
    ScenarioConfig fig1;
    fig1.name = "fig1";
    fig1.kind = ScenarioKind::orbits;
    fig1.description = "periodic orbits (contours of G) over the equilibrium density";
    fig1.contour_levels = {1.3, 1.5, 1.75, 2.0, 2.5, 3.0, 4.0};
    fig1.output_dir = "out/fig1";
    presets.push_back(fig1);
    presets.push_back(detail::ensemble_preset(
        "fig2", "widened ensemble (w = 2) frames at T = 0, 5, 10, 50, 100, 1000", 2.0,
        {0, 5, 10, 50, 100, 1000}, true));
    presets.push_back(detail::ensemble_preset(
        "fig3", "line profiles (marginals only) of a w = 4 ensemble at the fig2 times", 4.0,
        {0, 5, 10, 50, 100, 1000}, false));
    presets.push_back(detail::ensemble_preset(
        "fig4", "narrowed ensemble (w = 1/4) frames at T = 0, 5, 10, 15, 20, 100", 0.25,
        {0, 5, 10, 15, 20, 100}, true));
    presets.push_back(detail::ensemble_preset(
        "fig5", "line profiles (marginals only) of the fig4 ensemble", 0.25, {0, 5, 10, 15, 20, 100},
        false));
    presets.push_back(detail::ensemble_preset(
        "equivariance", "equilibrium ensemble evolved to T = 5, 10, 50, 100 (stays |psi|^2)", 1.0,
        {0, 5, 10, 50, 100}, true));
    return presets;
}

inline std::vector<PresetInfo> list_presets()
{
    std::vector<PresetInfo> out;
    for (auto const& c : preset_configs())
        out.push_back({c.name, c.description});
    return out;
}

inline std::optional<ScenarioConfig> find_preset(std::string const& name)
{
    for (auto const& c : preset_configs())
        if (c.name == name)
            return c;
    return std::nullopt;
}

// -- config files ----------------------------------------------------------------------

namespace detail {

using nlohmann::json;

inline void reject_unknown(json const& j, std::initializer_list<char const*> known, std::string const& where)
{
    if (!j.is_object())
        throw ConfigError(where + ": expected an object");
    for (auto const& [key, value] : j.items()) {
        bool found = false;
        for (char const* k : known)
            found = found || key == k;
        if (!found)
            throw ConfigError(where + ": unknown key '" + key + "'");
    }
}

template<class T>
void read(json const& j, char const* key, T& into)
{
    if (j.contains(key)) {
        try {
            into = j.at(key).get<T>();
        } catch (json::exception const& e) {
            throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
        }
    }
}

}  // namespace detail

/// Parse a scenario from JSON text. Unknown keys are errors.
inline ScenarioConfig parse_config(std::string const& text)
{
    using detail::json;
    json j;
    try {
        j = json::parse(text);
    } catch (json::parse_error const& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    detail::reject_unknown(j,
                           {"name", "kind", "description", "sampler", "n_points", "snapshot_times",
                            "vacuum_mode_ratios", "integrator", "binning", "E_gamma", "write_points",
                            "contour_levels", "density_grid", "line_detection", "output", "seed"},
                           "config");
    ScenarioConfig c;
    detail::read(j, "name", c.name);
    detail::read(j, "description", c.description);
    if (j.contains("kind")) {
        auto const kind = j.at("kind").get<std::string>();
        if (kind == "ensemble")
            c.kind = ScenarioKind::ensemble;
        else if (kind == "orbits")
            c.kind = ScenarioKind::orbits;
        else
            throw ConfigError("kind must be 'ensemble' or 'orbits'");
    }
    if (j.contains("sampler")) {
        auto const& s = j.at("sampler");
        detail::reject_unknown(s, {"kind", "w"}, "sampler");
        std::string kind = "equilibrium";
        detail::read(s, "kind", kind);
        if (kind == "equilibrium") {
            if (s.contains("w"))
                throw ConfigError("sampler: the equilibrium sampler takes no w");
            c.w = 1.0;
        } else if (kind == "widened") {
            if (!s.contains("w"))
                throw ConfigError("sampler: widened sampler needs w");
            detail::read(s, "w", c.w);
        } else {
            throw ConfigError("sampler.kind must be 'equilibrium' or 'widened'");
        }
    }
    detail::read(j, "n_points", c.n_points);
    detail::read(j, "snapshot_times", c.snapshot_times);
    detail::read(j, "vacuum_mode_ratios", c.vacuum_mode_ratios);
    if (j.contains("integrator")) {
        auto const& s = j.at("integrator");
        detail::reject_unknown(s, {"rel_tol", "abs_tol", "max_step", "g_drift_tol"}, "integrator");
        detail::read(s, "rel_tol", c.integrator.rel_tol);
        detail::read(s, "abs_tol", c.integrator.abs_tol);
        detail::read(s, "max_step", c.integrator.max_step);
        detail::read(s, "g_drift_tol", c.integrator.g_drift_tol);
    }
    if (j.contains("binning")) {
        auto const& s = j.at("binning");
        detail::reject_unknown(s, {"bins", "range"}, "binning");
        detail::read(s, "bins", c.bins);
        if (s.contains("range")) {
            std::vector<double> r;
            detail::read(s, "range", r);
            if (r.size() != 2)
                throw ConfigError("binning.range must have two entries");
            c.range_lo = r[0];
            c.range_hi = r[1];
        }
    }
    if (j.contains("line_detection")) {
        auto const& s = j.at("line_detection");
        detail::reject_unknown(s, {"bandwidth", "prominence_fraction", "oversample"}, "line_detection");
        detail::read(s, "bandwidth", c.line_detection.bandwidth);
        detail::read(s, "prominence_fraction", c.line_detection.prominence_fraction);
        detail::read(s, "oversample", c.line_detection.oversample);
    }
    detail::read(j, "E_gamma", c.e_gamma);
    detail::read(j, "write_points", c.write_points);
    detail::read(j, "contour_levels", c.contour_levels);
    if (j.contains("density_grid")) {
        auto const& s = j.at("density_grid");
        detail::reject_unknown(s, {"q_points", "yp_points", "q_range", "yp_range"}, "density_grid");
        detail::read(s, "q_points", c.grid_q);
        detail::read(s, "yp_points", c.grid_yp);
        std::vector<double> r;
        if (s.contains("q_range")) {
            detail::read(s, "q_range", r);
            if (r.size() != 2)
                throw ConfigError("density_grid.q_range must have two entries");
            c.grid_q_lo = r[0];
            c.grid_q_hi = r[1];
        }
        if (s.contains("yp_range")) {
            detail::read(s, "yp_range", r);
            if (r.size() != 2)
                throw ConfigError("density_grid.yp_range must have two entries");
            c.grid_yp_lo = r[0];
            c.grid_yp_hi = r[1];
        }
    }
    detail::read(j, "output", c.output_dir);
    detail::read(j, "seed", c.seed);
    c.validate();
    return c;
}

inline ScenarioConfig load_config(std::filesystem::path const& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

// -- file formats ----------------------------------------------------------------------

/// Fixed 17-significant-digit rendering used by every numeric output.
inline std::string format_number(double x)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

/// Label of a snapshot time for file names: T0, T5, T0.25, ...
inline std::string time_label(double t)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "T%g", t);
    return buf;
}

/// A table with named columns, written as CSV or as JSON.
struct Table
{
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    std::string to_csv() const
    {
        std::string out;
        for (std::size_t c = 0; c < columns.size(); ++c)
            out += (c ? "," : "") + columns[c];
        out += '\n';
        for (auto const& row : rows) {
            for (std::size_t c = 0; c < row.size(); ++c) {
                if (c)
                    out += ',';
                out += format_number(row[c]);
            }
            out += '\n';
        }
        return out;
    }

    std::string to_json() const
    {
        // numbers are spliced in as text so the 17-digit rendering is kept
        std::string out = "{\"columns\":" + nlohmann::json(columns).dump() + ",\"rows\":[";
        for (std::size_t r = 0; r < rows.size(); ++r) {
            out += r ? ",[" : "[";
            for (std::size_t c = 0; c < rows[r].size(); ++c) {
                if (c)
                    out += ',';
                out += std::isfinite(rows[r][c]) ? format_number(rows[r][c]) : std::string("null");
            }
            out += ']';
        }
        out += "]}\n";
        return out;
    }
};

inline Table points_table(Ensemble const& e)
{
    Table t;
    t.columns = {"index", "Q", "Y_prime", "Y_moving", "G"};
    std::size_t const nvac = e.modes.size();
    for (std::size_t k = 0; k < nvac; ++k)
        t.columns.push_back("Qk_" + std::to_string(k));
    t.rows.reserve(e.size());
    for (std::size_t i = 0; i < e.size(); ++i) {
        auto const& p = e.points[i];
        std::vector<double> row{static_cast<double>(i), p.q, p.yp, p.yp + e.t_now, conserved_G_full(p, e.modes)};
        row.insert(row.end(), p.vacuum.begin(), p.vacuum.end());
        t.rows.push_back(std::move(row));
    }
    return t;
}

inline Table histogram_table(SpectrumHistogram const& h)
{
    Table t;
    t.columns = {"bin_left", "bin_right", "density"};
    for (std::size_t i = 0; i < h.bins(); ++i)
        t.rows.push_back({h.edges[i], h.edges[i + 1], h.densities[i]});
    return t;
}

/// Parse a histogram CSV written by `histogram_table`.
inline SpectrumHistogram read_histogram_csv(std::string const& text, SpectrumUnits units, double out_of_range_mass)
{
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "bin_left,bin_right,density")
        throw IoError("histogram CSV: unexpected header");
    SpectrumHistogram h;
    h.units = units;
    h.out_of_range_mass = out_of_range_mass;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        double l = 0, r = 0, d = 0;
        if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &l, &r, &d) != 3)
            throw IoError("histogram CSV: malformed row '" + line + "'");
        if (h.edges.empty())
            h.edges.push_back(l);
        else if (h.edges.back() != l)
            throw IoError("histogram CSV: bins are not contiguous");
        h.edges.push_back(r);
        h.densities.push_back(d);
    }
    return h;
}

// -- orchestration --------------------------------------------------------------------

struct RunOptions
{
    unsigned threads = 0;
    OutputFormat format = OutputFormat::csv;
};

struct RunResult
{
    int exit_code = exit_success;
    std::string message;
    std::vector<std::filesystem::path> files;
    std::filesystem::path manifest;
    double wall_time_seconds = 0.0;
};

namespace detail {

class OutputDir
{
  public:
    OutputDir(std::filesystem::path dir, OutputFormat format) : dir_(std::move(dir)), format_(format)
    {
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        if (ec)
            throw IoError("cannot create output directory " + dir_.string() + ": " + ec.message());
        write_raw("INCOMPLETE", "run in progress or failed; data files in this directory are not complete\n");
    }

    std::filesystem::path const& path() const noexcept { return dir_; }
    std::vector<std::filesystem::path> const& files() const noexcept { return files_; }

    std::string write_table(std::string const& stem, Table const& t)
    {
        std::string const name = stem + (format_ == OutputFormat::csv ? ".csv" : ".json");
        write_raw(name, format_ == OutputFormat::csv ? t.to_csv() : t.to_json());
        files_.push_back(dir_ / name);
        return name;
    }

    void write_raw(std::string const& name, std::string const& content) const
    {
        std::ofstream out(dir_ / name, std::ios::binary | std::ios::trunc);
        out << content;
        out.close();
        if (!out)
            throw IoError("failed writing " + (dir_ / name).string());
    }

    void mark_complete() const
    {
        std::error_code ec;
        std::filesystem::remove(dir_ / "INCOMPLETE", ec);
        if (ec)
            throw IoError("cannot remove INCOMPLETE marker: " + ec.message());
    }

  private:
    std::filesystem::path dir_;
    OutputFormat format_;
    std::vector<std::filesystem::path> files_;
};

inline nlohmann::json integrator_json(IntegratorSettings const& s)
{
    return {{"method", "dormand-prince-5(4)"},
            {"rel_tol", s.rel_tol},
            {"abs_tol", s.abs_tol},
            {"max_step", s.max_step},
            {"g_drift_tol", s.g_drift_tol}};
}

inline void run_ensemble(ScenarioConfig const& c, RunOptions const& opts, OutputDir& out, nlohmann::json& manifest)
{
    ModeSpectrum modes{c.vacuum_mode_ratios};
    auto const initial = sample_widened(c.n_points, c.w, c.seed, modes);
    auto const snaps = evolve_to_snapshots(initial, c.snapshot_times, c.integrator, opts.threads);

    nlohmann::json frames = nlohmann::json::array();
    for (std::size_t j = 0; j < snaps.times.size(); ++j) {
        auto const& e = snaps.ensembles[j];
        double const t = snaps.times[j];
        std::string const label = time_label(t);
        nlohmann::json frame{{"T", t}};
        if (c.write_points)
            frame["points"] = out.write_table("points_" + label, points_table(e));
        auto const pointer = marginal_histogram(e, Axis::yp, c.bins, c.range_lo, c.range_hi);
        frame["hist_pointer"] = out.write_table("hist_pointer_" + label, histogram_table(pointer));
        frame["hist_pointer_out_of_range_mass"] = pointer.out_of_range_mass;
        frame["mode_count"] = mode_count(pointer, c.line_detection);
        if (t > 0.0) {
            DispersionModel const model(c.e_gamma, t);
            auto const energy = to_energy_units(pointer, model);
            frame["dnoneq_energy"] = out.write_table("dnoneq_" + label, histogram_table(energy));
            frame["dnoneq_energy_out_of_range_mass"] = energy.out_of_range_mass;
            frame["fractional_dispersion"] = model.fractional_dispersion();
        } else {
            // the dispersion is unbounded at T = 0; only pointer units exist
            frame["dnoneq_energy"] = nullptr;
        }
        auto const yp = coordinates(e, Axis::yp);
        frame["yp_mean"] = sample_mean(yp);
        if (yp.size() > 1)
            frame["yp_stddev"] = sample_stddev(yp);
        frames.push_back(std::move(frame));
    }
    manifest["w"] = c.w;
    manifest["sampler"] = c.w == 1.0 ? "equilibrium" : "widened";
    manifest["n_points"] = c.n_points;
    manifest["snapshot_times"] = c.snapshot_times;
    manifest["vacuum_mode_ratios"] = c.vacuum_mode_ratios;
    manifest["E_gamma"] = c.e_gamma;
    manifest["binning"] = {{"bins", c.bins}, {"range", {c.range_lo, c.range_hi}}, {"axis", "Y_prime"}};
    manifest["line_detection"] = {{"bandwidth", c.line_detection.bandwidth},
                                  {"prominence_fraction", c.line_detection.prominence_fraction},
                                  {"oversample", c.line_detection.oversample}};
    manifest["frames"] = std::move(frames);
}

inline void run_orbits(ScenarioConfig const& c, OutputDir& out, nlohmann::json& manifest)
{
    Table contours;
    contours.columns = {"level", "region", "branch", "point", "Q", "Y_prime"};
    nlohmann::json orbits = nlohmann::json::array();
    for (double level : c.contour_levels) {
        for (Region region : {Region::inner, Region::outer}) {
            if (!(level > region_floor(region)))
                continue;
            auto const orbit = trace_orbit(level, region, c.integrator);
            for (double branch : {1.0, -1.0}) {
                for (std::size_t i = 0; i < orbit.path.size(); ++i) {
                    auto const& s = orbit.path.states[i];
                    contours.rows.push_back({level, region == Region::inner ? 0.0 : 1.0, branch,
                                             static_cast<double>(i), branch * s.q, s.yp});
                }
            }
            orbits.push_back({{"level", level}, {"region", to_string(region)}, {"period", orbit.period}});
        }
    }
    Table density;
    density.columns = {"Q", "Y_prime", "density"};
    for (std::size_t a = 0; a < c.grid_q; ++a) {
        double const q = c.grid_q_lo + (c.grid_q_hi - c.grid_q_lo) * static_cast<double>(a) / (c.grid_q - 1);
        for (std::size_t b = 0; b < c.grid_yp; ++b) {
            double const yp
                = c.grid_yp_lo + (c.grid_yp_hi - c.grid_yp_lo) * static_cast<double>(b) / (c.grid_yp - 1);
            density.rows.push_back({q, yp, equilibrium_density(q, yp)});
        }
    }
    manifest["contours"] = out.write_table("contours", contours);
    manifest["density"] = out.write_table("density", density);
    manifest["orbits"] = std::move(orbits);
    manifest["contour_levels"] = c.contour_levels;
    manifest["region_minima"] = {{"inner", region_floor(Region::inner)}, {"outer", region_floor(Region::outer)}};
    manifest["density_grid"] = {{"q_points", c.grid_q},
                                {"yp_points", c.grid_yp},
                                {"q_range", {c.grid_q_lo, c.grid_q_hi}},
                                {"yp_range", {c.grid_yp_lo, c.grid_yp_hi}}};
}

}  // namespace detail

/// Execute a scenario, writing data files and `manifest.json` under
/// `config.output_dir`. Errors are mapped to exit codes, not thrown.
inline RunResult run_scenario(ScenarioConfig const& config, RunOptions const& opts = {})
{
    RunResult result;
    auto const started = std::chrono::steady_clock::now();
    nlohmann::json manifest{{"preset", config.name},
                            {"kind", config.kind == ScenarioKind::ensemble ? "ensemble" : "orbits"},
                            {"seed", config.seed},
                            {"integrator", detail::integrator_json(config.integrator)},
                            {"artifact_version", artifact_version},
                            {"format", opts.format == OutputFormat::csv ? "csv" : "json"}};
    std::optional<detail::OutputDir> out;
    auto finish = [&](int code, std::string message) {
        result.exit_code = code;
        result.message = std::move(message);
        if (!out)
            return;
        manifest["complete"] = code == exit_success;
        if (code != exit_success)
            manifest["error"] = result.message;
        // the only run-dependent entry; data files themselves are byte-reproducible
        result.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        manifest["wall_time_seconds"] = result.wall_time_seconds;
        try {
            out->write_raw("manifest.json", manifest.dump(2) + "\n");
            result.manifest = out->path() / "manifest.json";
            result.files = out->files();
            if (code == exit_success)
                out->mark_complete();
        } catch (IoError const& e) {
            result.exit_code = exit_io_failure;
            result.message = e.what();
        }
    };

    try {
        config.validate();
        out.emplace(config.output_dir, opts.format);
        if (config.kind == ScenarioKind::ensemble)
            detail::run_ensemble(config, opts, *out, manifest);
        else
            detail::run_orbits(config, *out, manifest);
        finish(exit_success, "ok");
    } catch (ConfigError const& e) {
        finish(exit_config_error, e.what());
    } catch (IoError const& e) {
        finish(exit_io_failure, e.what());
    } catch (EnsembleEvolutionError const& e) {
        finish(exit_integration_failure, e.what());
    } catch (IntegrationError const& e) {
        finish(exit_integration_failure, e.what());
    } catch (std::invalid_argument const& e) {
        finish(exit_config_error, e.what());
    } catch (std::exception const& e) {
        finish(exit_integration_failure, e.what());
    }
    return result;
}

}  // namespace pwspec
