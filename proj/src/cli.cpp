#include "nlsid/cli.hpp"

#include <CLI11.hpp>
#include <Eigen/Core>
#include <cstdlib>
#include <iostream>
#include <sstream>

#include "nlsid/bench.hpp"
#include "nlsid/config.hpp"
#include "nlsid/error.hpp"
#include "nlsid/io.hpp"
#include "nlsid/pipeline.hpp"

namespace nlsid::cli {
namespace {

namespace fs = std::filesystem;
using io::json;

struct Common {
    std::string config_file;
    std::vector<std::string> sets;
    std::string out;
    std::vector<double> band;
    std::optional<double> rms, fs;
    std::optional<int> N, realizations, periods;
    std::optional<std::uint64_t> seed;
    std::string cell;
    std::string input;
    std::string sidecar;
    std::string grid;
    std::string model;
};

void add_common(CLI::App* sub, Common& c, bool with_input) {
    sub->add_option("-c,--config", c.config_file, "TOML-style key/value configuration file");
    sub->add_option("--set", c.sets, "Override one setting, key=value (repeatable)");
    sub->add_option("-o,--out", c.out, "Output directory (relative paths resolve under $NLSID_OUTPUT_ROOT)");
    sub->add_option("--band", c.band, "Excitation band f_lo f_hi [Hz]")->expected(2);
    sub->add_option("--rms", c.rms, "Target rms of the excitation");
    sub->add_option("--fs", c.fs, "Sample frequency [Hz]");
    sub->add_option("--N", c.N, "Samples per period");
    sub->add_option("--seed", c.seed, "Excitation seed");
    sub->add_option("--realizations", c.realizations, "Number of random-phase realizations");
    sub->add_option("--periods", c.periods, "Periods per realization");
    sub->add_option("--cell", c.cell, "Synthetic cell preset (soc90, soc10)");
    if (with_input) {
        sub->add_option("-i,--input", c.input, "Record CSV (t,current,voltage); the synthetic cell is simulated when absent");
        sub->add_option("--sidecar", c.sidecar, "Record metadata JSON (defaults to the CSV path with .json)");
        sub->add_option("--grid", c.grid, "Grid JSON written by design/simulate (rebuilt from the config when absent)");
    }
}

PipelineConfig load_config(const Common& c) {
    PipelineConfig cfg;
    if (!c.config_file.empty()) cfg.apply(parse_key_values(io::read_text(c.config_file)));
    for (const auto& s : c.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
        cfg.set(s.substr(0, eq), s.substr(eq + 1));
    }
    if (!c.band.empty()) {
        cfg.signal.f_lo = c.band[0];
        cfg.signal.f_hi = c.band[1];
    }
    if (c.rms) cfg.signal.target_rms = *c.rms;
    if (c.fs) cfg.signal.fs = *c.fs;
    if (c.N) cfg.signal.N = *c.N;
    if (c.seed) cfg.signal.seed = *c.seed;
    if (c.realizations) cfg.realizations = *c.realizations;
    if (c.periods) cfg.periods = *c.periods;
    if (!c.cell.empty()) cfg.cell_preset = c.cell;
    if (!c.input.empty()) cfg.input = c.input;
    if (!c.out.empty()) cfg.output_dir = c.out;
    cfg.validate();
    return cfg;
}

fs::path output_dir(const PipelineConfig& cfg) {
    fs::path p(cfg.output_dir);
    if (p.is_relative()) {
        if (const char* root = std::getenv(kOutputRootEnv); root && *root) p = fs::path(root) / p;
    }
    fs::create_directories(p);
    return p;
}

/// Records inputs and outputs of one command and writes manifest.json.
class Manifest {
   public:
    Manifest(std::string command, const PipelineConfig& cfg, fs::path dir) : dir_(std::move(dir)) {
        j_["command"]      = std::move(command);
        j_["tool_version"] = kVersion;
        j_["versions"]     = {{"nlsid", kVersion},
                              {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                            std::to_string(EIGEN_MINOR_VERSION)},
                              {"cli11", CLI11_VERSION}};
        j_["config_hash"] = cfg.hash();
        j_["config"]      = cfg.to_key_values();
        j_["inputs"]      = json::object();
        j_["outputs"]     = json::object();
        j_["status"]      = "running";
    }
    void input(const fs::path& p) { j_["inputs"][p.string()] = io::file_digest(p); }
    fs::path path(const std::string& name) const { return dir_ / name; }
    void output(const std::string& name) { j_["outputs"][name] = io::file_digest(dir_ / name); }
    void set(const std::string& k, json v) { j_[k] = std::move(v); }
    void finish(const std::string& status, const std::string& error = {}) {
        j_["status"] = status;
        if (!error.empty()) j_["error"] = error;
        io::write_json(dir_ / "manifest.json", j_);
    }

   private:
    fs::path dir_;
    json j_;
};

MeasuredRecord load_record(const PipelineConfig& cfg, const Common& c, Manifest& m) {
    if (cfg.input.empty()) {
        if (!c.sidecar.empty()) throw ConfigError("--sidecar requires --input");
        const SyntheticCell cell = cfg.cell();
        MeasuredRecord rec;
        rec.record             = simulate_cell(cell, realizations(cfg.signal, cfg.realizations), cfg.periods);
        rec.metadata.soc_label = cell.operating_point;
        rec.metadata.rms_level = cfg.signal.target_rms;
        m.set("synthetic_cell", cell.operating_point);
        return rec;
    }
    const fs::path csv = cfg.input;
    fs::path side      = c.sidecar.empty() ? fs::path(csv).replace_extension(".json") : fs::path(c.sidecar);
    CsvLayout layout;
    RecordMetadata meta;
    if (fs::exists(side)) {
        layout = io::layout_from_sidecar(io::read_json(side), &meta);
        m.input(side);
    } else if (!c.sidecar.empty()) {
        throw FormatError("sidecar not found: " + side.string());
    } else {
        layout.N = cfg.signal.N;
        layout.R = cfg.realizations;
    }
    MeasuredRecord rec = ingest_csv(csv, layout);
    rec.metadata       = meta;
    m.input(csv);
    return rec;
}

HarmonicGrid load_grid(const PipelineConfig& cfg, const Common& c, Manifest& m) {
    if (c.grid.empty()) return build_grid(cfg.signal);
    m.input(c.grid);
    return io::grid_from_json(io::read_json(c.grid));
}

void check_grid(const HarmonicGrid& g, const TimeRecord& rec) {
    if (g.N != rec.N)
        throw FormatError("grid/data mismatch: grid has N=" + std::to_string(g.N) + ", record has N=" + std::to_string(rec.N) +
                          " (pass the grid JSON written with the record via --grid, or a matching --N)");
}

void write_design(const PipelineConfig& cfg, Manifest& m, std::ostream& out, HarmonicGrid& grid, std::vector<ExcitationSignal>& sigs) {
    grid = build_grid(cfg.signal);
    sigs = realizations(cfg.signal, cfg.realizations);
    for (size_t r = 0; r < sigs.size(); ++r) {
        const std::string name = "signal_r" + std::to_string(r) + ".csv";
        io::write_signal_csv(m.path(name), sigs[r]);
        m.output(name);
    }
    io::write_json(m.path("grid.json"), io::grid_to_json(cfg.signal, grid, sigs));
    m.output("grid.json");
    out << "frequency resolution: " << io::fmt(cfg.signal.resolution()) << " Hz\n";
    out << "band: " << io::fmt(cfg.signal.f_lo) << " - " << io::fmt(cfg.signal.f_hi) << " Hz\n";
    out << "excited lines: " << grid.excited.size() << "\n";
    out << "odd detection lines: " << grid.odd_detect.size() << "\n";
    out << "even detection lines: " << grid.even_detect.size() << "\n";
    for (size_t r = 0; r < sigs.size(); ++r) out << "rms[" << r << "]: " << io::fmt(sigs[r].realized_rms) << "\n";
}

int cmd_design(const PipelineConfig& cfg, Manifest& m, std::ostream& out) {
    HarmonicGrid grid;
    std::vector<ExcitationSignal> sigs;
    write_design(cfg, m, out, grid, sigs);
    return kOk;
}

int cmd_simulate(const PipelineConfig& cfg, Manifest& m, std::ostream& out) {
    HarmonicGrid grid;
    std::vector<ExcitationSignal> sigs;
    write_design(cfg, m, out, grid, sigs);
    const SyntheticCell cell = cfg.cell();
    const TimeRecord rec     = simulate_cell(cell, sigs, cfg.periods);
    export_csv(rec, m.path("record.csv"));
    m.output("record.csv");
    RecordMetadata meta;
    meta.soc_label = cell.operating_point;
    meta.rms_level = cfg.signal.target_rms ? std::optional<double>(*cfg.signal.target_rms) : std::nullopt;
    io::write_json(m.path("record.json"), io::sidecar_to_json(rec, meta));
    m.output("record.json");
    out << "cell: " << cell.operating_point << " (nl_even " << io::fmt(cell.nl_even) << ", nl_odd " << io::fmt(cell.nl_odd)
        << ", noise_std " << io::fmt(cell.noise_std) << ", drift_rate " << io::fmt(cell.drift_rate) << ")\n";
    out << "record: " << rec.R << " realization(s) x " << rec.P << " period(s) x " << rec.N << " samples\n";
    return kOk;
}

int cmd_ingest(const PipelineConfig& cfg, const Common& c, Manifest& m, std::ostream& out, std::ostream& err) {
    const MeasuredRecord rec = load_record(cfg, c, m);
    for (const auto& w : rec.warnings) err << "warning: " << w << "\n";
    export_csv(rec.record, m.path("record.csv"));
    m.output("record.csv");
    io::write_json(m.path("record.json"), io::sidecar_to_json(rec.record, rec.metadata));
    m.output("record.json");
    m.set("warnings", rec.warnings);
    out << "record: " << rec.record.R << " realization(s) x " << rec.record.P << " period(s) x " << rec.record.N
        << " samples, fs " << io::fmt(rec.record.fs) << " Hz\n";
    return kOk;
}

void print_summary(std::ostream& out, const char* name, const ClassSummary& s) {
    out << "  " << name << ": " << s.count << " lines, power " << io::fmt(std::round(s.power_db * 100) / 100) << " dB, noise "
        << io::fmt(std::round(s.noise_db * 100) / 100) << " dB" << (s.significant ? " (above noise)" : "") << "\n";
}

int cmd_analyze(const PipelineConfig& cfg, const Common& c, Manifest& m, std::ostream& out, std::ostream& err) {
    const MeasuredRecord rec = load_record(cfg, c, m);
    for (const auto& w : rec.warnings) err << "warning: " << w << "\n";
    const HarmonicGrid grid = load_grid(cfg, c, m);
    check_grid(grid, rec.record);
    const DistortionReport rep = analyze_record(rec.record, grid, cfg.detrend, cfg.identify.trend, cfg.analysis);
    io::write_json(m.path("report.json"), io::report_to_json(rep));
    m.output("report.json");
    io::write_report_csv(m.path("report.csv"), rep);
    m.output("report.csv");
    out << "verdict: " << rep.verdict << "\n";
    print_summary(out, "excited", rep.pooled.linear);
    print_summary(out, "even detection", rep.pooled.even_nl);
    print_summary(out, "odd detection", rep.pooled.odd_nl);
    m.set("verdict", rep.verdict);
    return kOk;
}

void write_error_spectrum(const fs::path& path, const ErrorSpectrum& es) {
    std::string s = "bin,freq_hz,output_db,linear_error_db,pnlss_error_db\n";
    for (size_t i = 0; i < es.bins.size(); ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        s += std::to_string(es.bins[i]) + "," + io::fmt(es.freq_hz[ii]) + "," + io::fmt(es.output_db[ii]) + "," +
             io::fmt(es.linear_db[ii]) + "," + io::fmt(es.pnlss_db[ii]) + "\n";
    }
    io::write_text(path, s);
}

int cmd_identify(const PipelineConfig& cfg, const Common& c, Manifest& m, std::ostream& out, std::ostream& err) {
    const MeasuredRecord rec = load_record(cfg, c, m);
    for (const auto& w : rec.warnings) err << "warning: " << w << "\n";
    const HarmonicGrid grid = load_grid(cfg, c, m);
    check_grid(grid, rec.record);
    json prov = {{"config_hash", cfg.hash()}};
    if (cfg.input.empty()) prov["synthetic_cell"] = cfg.cell_preset;
    else prov.update({{"input", cfg.input}, {"input_digest", io::file_digest(cfg.input)}});

    auto hook = [&](const std::string& stage, const IdentifyResult& r) {
        out << "stage " << stage << " done\n";
        if (stage == "detrend") {
            for (int k = 0; k < rec.record.R; ++k) {
                const std::string name = "trend_r" + std::to_string(k) + ".csv";
                io::write_trend_csv(m.path(name), rec.record.y_realization(k), r.detrended.trends[static_cast<size_t>(k)],
                                    rec.record.fs);
                m.output(name);
            }
        } else if (stage == "bla") {
            io::write_bla_csv(m.path("bla.csv"), r.bla);
            m.output("bla.csv");
        } else if (stage == "mdl") {
            json table = json::array();
            for (const auto& t : r.mdl.table) table.push_back({{"nb", t.nb}, {"na", t.na}, {"cost", t.cost}, {"mdl", t.mdl}});
            io::write_json(m.path("mdl.json"), {{"nb", r.mdl.nb},
                                                {"na", r.mdl.na},
                                                {"b", io::to_json(r.mdl.fit.model.b)},
                                                {"a", io::to_json(r.mdl.fit.model.a)},
                                                {"cost", r.mdl.fit.cost},
                                                {"table", table}});
            m.output("mdl.json");
        } else if (stage == "ml_refine") {
            json p           = prov;
            p["bla_file"]    = "bla.csv";
            p["bla_digest"]  = io::file_digest(m.path("bla.csv"));
            p["ml_cost"]     = {{"initial", r.ml.initial_cost}, {"final", r.ml.cost}};
            p["hankel_singular_values"] = io::to_json(r.realization.hankel_singular_values);
            io::write_json(m.path("linear_model.json"), io::state_space_to_json(r.ml.model, p));
            m.output("linear_model.json");
        } else if (stage == "pnlss_fit") {
            json p          = prov;
            p["linear_model"] = "linear_model.json";
            io::write_json(m.path("pnlss_model.json"), io::pnlss_to_json(r.pnlss.model, &r.pnlss.report, p));
            m.output("pnlss_model.json");
            io::write_fit_log_csv(m.path("fit_log.csv"), r.pnlss.report.lm);
            m.output("fit_log.csv");
        }
    };
    const IdentifyResult res = identify(rec.record, grid, cfg.identify, hook);
    write_error_spectrum(m.path("error_spectrum.csv"), res.error_spectrum);
    m.output("error_spectrum.csv");

    const double gain_db  = res.improvement_db();
    const bool adequate   = gain_db < 3.0;
    const json summary = {{"mdl", {{"nb", res.mdl.nb}, {"na", res.mdl.na}}},
                          {"linear_order", res.ml.model.order()},
                          {"rmse_linear", res.rmse_linear},
                          {"rmse_pnlss", res.rmse_pnlss},
                          {"rmse_ratio", res.rmse_ratio()},
                          {"improvement_db", gain_db},
                          {"output_rms", res.output_rms},
                          {"linear_model_adequate", adequate},
                          {"warnings", res.warnings}};
    io::write_json(m.path("summary.json"), summary);
    m.output("summary.json");
    m.set("summary", summary);
    for (const auto& w : res.warnings) err << "warning: " << w << "\n";
    out << "mdl orders: nb=" << res.mdl.nb << " na=" << res.mdl.na << ", state dimension " << res.ml.model.order() << "\n";
    out << "rmse linear: " << io::fmt(res.rmse_linear) << "\n";
    out << "rmse pnlss: " << io::fmt(res.rmse_pnlss) << "\n";
    out << "rmse ratio (pnlss/linear): " << io::fmt(res.rmse_ratio()) << "\n";
    out << "improvement: " << io::fmt(std::round(gain_db * 100) / 100) << " dB\n";
    out << (adequate ? "linear model adequate (PNLSS improvement < 3 dB)\n" : "PNLSS model improves on the linear model\n");
    return kOk;
}

int cmd_validate(const PipelineConfig& cfg, const Common& c, Manifest& m, std::ostream& out, std::ostream& err) {
    if (c.model.empty()) throw ConfigError("--model: a model JSON is required");
    m.input(c.model);
    const json mj = io::read_json(c.model);
    PnlssModel model;
    const std::string type = mj.value("type", std::string());
    if (type == "pnlss") model = io::pnlss_from_json(mj);
    else if (type == "state_space") model = init_from_linear(io::state_space_from_json(mj));
    else throw FormatError("model: unknown type '" + type + "'");

    const MeasuredRecord rec = load_record(cfg, c, m);
    for (const auto& w : rec.warnings) err << "warning: " << w << "\n";
    TimeRecord data = rec.record;
    if (cfg.detrend) {
        const HarmonicGrid grid = load_grid(cfg, c, m);
        check_grid(grid, data);
        data = detrend_record(data, cfg.identify.trend, 1e-8, &grid).record;
    }
    data = drop_periods(data, cfg.analysis.transient_skip);

    json per         = json::array();
    std::string csv  = "sample,realization,error\n";
    double acc       = 0.0;
    for (int r = 0; r < data.R; ++r) {
        Vec e;
        const double v = steady_state_rmse(model, data, r, cfg.identify.fit.transient_periods, &e);
        per.push_back(v);
        acc += v * v;
        for (Eigen::Index t = 0; t < e.size(); ++t) csv += std::to_string(t) + "," + std::to_string(r) + "," + io::fmt(e[t]) + "\n";
        out << "rmse[" << r << "]: " << io::fmt(v) << "\n";
    }
    const double total = std::sqrt(acc / data.R);
    io::write_text(m.path("validation_error.csv"), csv);
    m.output("validation_error.csv");
    io::write_json(m.path("validation.json"), {{"model", c.model}, {"rmse", total}, {"rmse_per_realization", per}});
    m.output("validation.json");
    out << "rmse: " << io::fmt(total) << "\n";
    return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"nlsid: multisine design, nonlinear distortion analysis and PNLSS identification"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);
    Common c;
    auto* design   = app.add_subcommand("design", "Design the multisine and write signal CSVs and the grid JSON");
    auto* simulate = app.add_subcommand("simulate", "Design, then simulate the synthetic cell into record.csv");
    auto* ingest   = app.add_subcommand("ingest", "Validate a measured t,current,voltage CSV and normalize it");
    auto* analyze  = app.add_subcommand("analyze", "Even/odd nonlinear distortion report");
    auto* ident    = app.add_subcommand("identify", "BLA, linear model and PNLSS model from a record");
    auto* valid    = app.add_subcommand("validate", "Steady-state rms error of a saved model on a record");
    add_common(design, c, false);
    add_common(simulate, c, false);
    for (auto* s : {ingest, analyze, ident, valid}) add_common(s, c, true);
    valid->add_option("-m,--model", c.model, "Model JSON (pnlss or state_space)");

    std::vector<std::string> rev(args.rbegin(), args.rend());
    if (!rev.empty()) rev.pop_back();
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForVersion&) {
        out << kVersion << "\n";
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kConfigError;
    }

    CLI::App* sub = app.get_subcommands().front();
    std::optional<Manifest> manifest;
    try {
        const PipelineConfig cfg = load_config(c);
        manifest.emplace(sub->get_name(), cfg, output_dir(cfg));
        if (!c.config_file.empty()) manifest->input(c.config_file);
        int rc = kOk;
        if (sub == design) rc = cmd_design(cfg, *manifest, out);
        else if (sub == simulate) rc = cmd_simulate(cfg, *manifest, out);
        else if (sub == ingest) rc = cmd_ingest(cfg, c, *manifest, out, err);
        else if (sub == analyze) rc = cmd_analyze(cfg, c, *manifest, out, err);
        else if (sub == ident) rc = cmd_identify(cfg, c, *manifest, out, err);
        else if (sub == valid) rc = cmd_validate(cfg, c, *manifest, out, err);
        manifest->finish("ok");
        return rc;
    } catch (const Error& e) {
        const bool numerical = dynamic_cast<const NumericalError*>(&e) != nullptr;
        err << "error: " << e.what() << "\n";
        if (manifest) manifest->finish("failed", e.what());
        return numerical ? kNumericalError : kConfigError;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        if (manifest) manifest->finish("failed", e.what());
        return kConfigError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        if (manifest) manifest->finish("failed", e.what());
        return kUsage;
    }
}

int run(int argc, const char* const* argv) {
    std::vector<std::string> args(argv, argv + argc);
    return run(args, std::cout, std::cerr);
}

}  // namespace nlsid::cli
