#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "nlsid/bench.hpp"
#include "nlsid/cli.hpp"
#include "nlsid/config.hpp"
#include "nlsid/dft.hpp"
#include "nlsid/error.hpp"
#include "nlsid/io.hpp"
#include "nlsid/pipeline.hpp"

namespace py = pybind11;
using namespace nlsid;

namespace {

Vec pnlss_output(const PnlssModel& m, const Vec& u) {
    py::gil_scoped_release release;
    return simulate(m, u).y.row(0).transpose();
}

py::tuple run_cli(const std::vector<std::string>& args) {
    std::vector<std::string> argv{"nlsid"};
    argv.insert(argv.end(), args.begin(), args.end());
    std::ostringstream out, err;
    int code = 0;
    {
        py::gil_scoped_release release;
        code = cli::run(argv, out, err);
    }
    return py::make_tuple(code, out.str(), err.str());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Nonlinear battery system identification: multisine design, LPM, l1 trend, PNLSS";
    m.attr("__version__") = cli::kVersion;

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
    py::register_exception<InsufficientDataError>(m, "InsufficientDataError", PyExc_ValueError);
    auto numerical = py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
    py::register_exception<InstabilityError>(m, "InstabilityError", numerical.ptr());

    py::class_<MultisineSpec>(m, "MultisineSpec")
        .def(py::init<>())
        .def_readwrite("fs", &MultisineSpec::fs)
        .def_readwrite("N", &MultisineSpec::N)
        .def_readwrite("f_lo", &MultisineSpec::f_lo)
        .def_readwrite("f_hi", &MultisineSpec::f_hi)
        .def_readwrite("group_size", &MultisineSpec::group_size)
        .def_readwrite("omit_per_group", &MultisineSpec::omit_per_group)
        .def_readwrite("target_rms", &MultisineSpec::target_rms)
        .def_readwrite("seed", &MultisineSpec::seed)
        .def_property_readonly("resolution", &MultisineSpec::resolution)
        .def("validate", &MultisineSpec::validate);

    py::class_<HarmonicGrid>(m, "HarmonicGrid")
        .def_readonly("N", &HarmonicGrid::N)
        .def_readonly("excited", &HarmonicGrid::excited)
        .def_readonly("odd_detect", &HarmonicGrid::odd_detect)
        .def_readonly("even_detect", &HarmonicGrid::even_detect)
        .def("band_bins", &HarmonicGrid::band_bins);

    m.def("build_grid", &build_grid, py::arg("spec"));
    m.def(
        "realizations",
        [](const MultisineSpec& spec, int count) {
            std::vector<Vec> out;
            for (const auto& s : realizations(spec, count)) out.push_back(s.samples);
            return out;
        },
        py::arg("spec"), py::arg("count") = 1, "One period of each random-phase realization.");
    m.def("tile", &tile, py::arg("period"), py::arg("periods"));
    m.def(
        "dft", [](const Vec& x) { return dft::forward(std::span<const double>(x.data(), static_cast<size_t>(x.size()))); },
        py::arg("x"), "One-sided DFT with 1/sqrt(N) scaling.");

    py::class_<TimeRecord>(m, "TimeRecord")
        .def(py::init(&TimeRecord::from_samples), py::arg("u"), py::arg("y"), py::arg("fs"), py::arg("N"), py::arg("R") = 1)
        .def_readonly("u", &TimeRecord::u)
        .def_readonly("y", &TimeRecord::y)
        .def_readonly("fs", &TimeRecord::fs)
        .def_readonly("N", &TimeRecord::N)
        .def_readonly("P", &TimeRecord::P)
        .def_readonly("R", &TimeRecord::R);

    m.def(
        "simulate_cell",
        [](const std::string& preset, const MultisineSpec& spec, int realizations_count, int periods, std::optional<double> nl_even,
           std::optional<double> nl_odd, std::optional<double> noise_std, std::optional<double> drift_rate) {
            SyntheticCell cell = SyntheticCell::preset(preset, spec.fs);
            if (nl_even) cell.nl_even = *nl_even;
            if (nl_odd) cell.nl_odd = *nl_odd;
            if (noise_std) cell.noise_std = *noise_std;
            if (drift_rate) cell.drift_rate = *drift_rate;
            cell.validate();
            py::gil_scoped_release release;
            return simulate_cell(cell, realizations(spec, realizations_count), periods);
        },
        py::arg("preset"), py::arg("spec") = MultisineSpec{}, py::arg("realizations") = 2, py::arg("periods") = 20,
        py::arg("nl_even") = py::none(), py::arg("nl_odd") = py::none(), py::arg("noise_std") = py::none(),
        py::arg("drift_rate") = py::none(), "Synthetic battery-like record; keyword arguments override the preset.");
    m.def(
        "cell_preset",
        [](const std::string& name) {
            const SyntheticCell c = SyntheticCell::preset(name);
            py::dict d;
            d["nl_even"]    = c.nl_even;
            d["nl_odd"]     = c.nl_odd;
            d["noise_std"]  = c.noise_std;
            d["drift_rate"] = c.drift_rate;
            d["seed"]       = c.seed;
            return d;
        },
        py::arg("name"));

    py::class_<ClassSummary>(m, "ClassSummary")
        .def_readonly("count", &ClassSummary::count)
        .def_readonly("power_db", &ClassSummary::power_db)
        .def_readonly("noise_db", &ClassSummary::noise_db)
        .def_readonly("significant", &ClassSummary::significant);
    py::class_<ClassLevels>(m, "ClassLevels")
        .def_readonly("linear", &ClassLevels::linear)
        .def_readonly("even_nl", &ClassLevels::even_nl)
        .def_readonly("odd_nl", &ClassLevels::odd_nl);
    py::class_<DistortionReport>(m, "DistortionReport")
        .def_readonly("verdict", &DistortionReport::verdict)
        .def_readonly("pooled", &DistortionReport::pooled)
        .def_readonly("per_realization", &DistortionReport::per_realization)
        .def_readonly("periods", &DistortionReport::periods)
        .def_readonly("realizations", &DistortionReport::realizations);
    m.def(
        "analyze",
        [](const TimeRecord& rec, const HarmonicGrid& grid, bool detrend, int transient_skip, double margin_db) {
            py::gil_scoped_release release;
            return analyze_record(rec, grid, detrend, TrendLambdaPolicy{}, AnalysisOptions{transient_skip, margin_db});
        },
        py::arg("record"), py::arg("grid"), py::arg("detrend") = true, py::arg("transient_skip") = 1, py::arg("margin_db") = 6.0);

    py::class_<TrendResult>(m, "TrendResult")
        .def_readonly("m", &TrendResult::m)
        .def_readonly("detrended", &TrendResult::detrended)
        .def_readonly("kink_count", &TrendResult::kink_count)
        .def_readonly("duality_gap", &TrendResult::duality_gap)
        .def_readonly("gap_scale", &TrendResult::gap_scale)
        .def_readonly("lam", &TrendResult::lambda);
    m.def(
        "l1_trend", [](const Vec& y, double lam, double tol) { return l1_trend(TrendProblem{y, lam}, tol); }, py::arg("y"),
        py::arg("lam"), py::arg("tol") = 1e-8);
    m.def("lambda_max", &lambda_max, py::arg("y"));

    py::class_<BlaEstimate>(m, "BlaEstimate")
        .def_readonly("bins", &BlaEstimate::bins)
        .def_readonly("G", &BlaEstimate::G)
        .def_readonly("var_total", &BlaEstimate::var_total);
    m.def(
        "lpm_frf",
        [](const CVec& U, const CVec& Y, const BinList& bins, int order) {
            LpmConfig cfg;
            cfg.order = order;
            return lpm_frf(U, Y, bins, cfg);
        },
        py::arg("U"), py::arg("Y"), py::arg("bins"), py::arg("order") = 2);

    py::class_<PnlssModel>(m, "PnlssModel")
        .def_readonly("A", &PnlssModel::A)
        .def_readonly("B", &PnlssModel::B)
        .def_readonly("C", &PnlssModel::C)
        .def_readonly("D", &PnlssModel::D)
        .def_readonly("E", &PnlssModel::E)
        .def_readonly("F", &PnlssModel::F)
        .def_property_readonly("n_x", &PnlssModel::n_x)
        .def("parameters", &PnlssModel::parameters)
        .def("simulate", &pnlss_output, py::arg("u"), "Output from rest for an input sequence.")
        .def("to_json", [](const PnlssModel& mod) { return io::pnlss_to_json(mod).dump(); })
        .def_static("from_json", [](const std::string& s) { return io::pnlss_from_json(io::json::parse(s)); });

    py::class_<PipelineConfig>(m, "PipelineConfig")
        .def(py::init<>())
        .def("set", &PipelineConfig::set, py::arg("key"), py::arg("value"))
        .def("validate", &PipelineConfig::validate)
        .def("hash", &PipelineConfig::hash)
        .def("to_dict", &PipelineConfig::to_key_values)
        .def_property_readonly("signal", [](const PipelineConfig& c) { return c.signal; });

    py::class_<IdentifyResult>(m, "IdentifyResult")
        .def_readonly("rmse_linear", &IdentifyResult::rmse_linear)
        .def_readonly("rmse_pnlss", &IdentifyResult::rmse_pnlss)
        .def_readonly("output_rms", &IdentifyResult::output_rms)
        .def_readonly("warnings", &IdentifyResult::warnings)
        .def_property_readonly("rmse_ratio", &IdentifyResult::rmse_ratio)
        .def_property_readonly("improvement_db", &IdentifyResult::improvement_db)
        .def_property_readonly("linear_model", [](const IdentifyResult& r) { return r.linear; })
        .def_property_readonly("pnlss_model", [](const IdentifyResult& r) { return r.pnlss.model; });
    m.def(
        "identify",
        [](const TimeRecord& rec, const PipelineConfig& cfg) {
            cfg.validate();
            py::gil_scoped_release release;
            return identify(rec, build_grid(cfg.signal), cfg.identify);
        },
        py::arg("record"), py::arg("config") = PipelineConfig{},
        "Detrend, BLA, linear model and PNLSS fit; the grid comes from config.signal.");

    m.def("run_cli", &run_cli, py::arg("args"), "Run the nlsid command line in-process; returns (exit_code, stdout, stderr).");
}
