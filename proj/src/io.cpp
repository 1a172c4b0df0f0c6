#include "nlsid/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "nlsid/error.hpp"

namespace nlsid::io {

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string file_digest(const fs::path& path) { return hex64(fnv1a(read_text(path))); }

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary);
    if (!os) throw FormatError("cannot write " + path.string());
    os << text;
}

json read_json(const fs::path& path) {
    try {
        return json::parse(read_text(path));
    } catch (const json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

namespace {

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

template <class F>
auto guarded(const char* what, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const json::exception& e) {
        throw FormatError(std::string(what) + ": " + e.what());
    }
}

}  // namespace

json to_json(const Mat& M) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
        rows.push_back(std::move(row));
    }
    return json{{"rows", M.rows()}, {"cols", M.cols()}, {"data", std::move(rows)}};
}

Mat mat_from_json(const json& j) {
    return guarded("matrix", [&] {
        const auto r = j.at("rows").get<Eigen::Index>();
        const auto c = j.at("cols").get<Eigen::Index>();
        const json& d = j.at("data");
        if (static_cast<Eigen::Index>(d.size()) != r) throw FormatError("matrix: row count mismatch");
        Mat M(r, c);
        for (Eigen::Index i = 0; i < r; ++i) {
            const json& row = d.at(static_cast<size_t>(i));
            if (static_cast<Eigen::Index>(row.size()) != c) throw FormatError("matrix: column count mismatch");
            for (Eigen::Index k = 0; k < c; ++k) M(i, k) = row.at(static_cast<size_t>(k)).get<double>();
        }
        return M;
    });
}

json to_json(const Vec& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

Vec vec_from_json(const json& j) {
    return guarded("vector", [&] {
        const auto v = j.get<std::vector<double>>();
        return Vec(Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size())));
    });
}

json spec_to_json(const MultisineSpec& spec) {
    json j = {{"fs", spec.fs},
              {"N", spec.N},
              {"f_lo", spec.f_lo},
              {"f_hi", spec.f_hi},
              {"grid_kind", spec.grid_kind == GridKind::OddRandom ? "odd-random" : "full-odd"},
              {"group_size", spec.group_size},
              {"omit_per_group", spec.omit_per_group},
              {"amplitude_profile", spec.amplitude ? "custom" : "flat"},
              {"seed", spec.seed}};
    j["target_rms"] = spec.target_rms ? json(*spec.target_rms) : json(nullptr);
    return j;
}

MultisineSpec spec_from_json(const json& j) {
    return guarded("multisine spec", [&] {
        MultisineSpec s;
        s.fs             = j.at("fs").get<double>();
        s.N              = j.at("N").get<int>();
        s.f_lo           = j.at("f_lo").get<double>();
        s.f_hi           = j.at("f_hi").get<double>();
        s.grid_kind      = j.at("grid_kind").get<std::string>() == "full-odd" ? GridKind::FullOdd : GridKind::OddRandom;
        s.group_size     = j.at("group_size").get<int>();
        s.omit_per_group = j.at("omit_per_group").get<int>();
        s.seed           = j.at("seed").get<std::uint64_t>();
        if (j.contains("target_rms") && !j["target_rms"].is_null()) s.target_rms = j["target_rms"].get<double>();
        else s.target_rms.reset();
        return s;
    });
}

json grid_to_json(const MultisineSpec& spec, const HarmonicGrid& grid, const std::vector<ExcitationSignal>& signals) {
    json j = {{"spec", spec_to_json(spec)},
              {"N", grid.N},
              {"resolution_hz", spec.resolution()},
              {"excited", grid.excited},
              {"odd_detect", grid.odd_detect},
              {"even_detect", grid.even_detect}};
    json real = json::array();
    for (const auto& s : signals) {
        json lines = json::array();
        for (size_t i = 0; i < grid.excited.size(); ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            lines.push_back({{"bin", grid.excited[i]},
                             {"freq_hz", spec.bin_frequency(grid.excited[i])},
                             {"amplitude", s.amplitudes[ii]},
                             {"phase", s.phases[ii]}});
        }
        real.push_back({{"realized_rms", s.realized_rms}, {"lines", std::move(lines)}});
    }
    j["realizations"] = std::move(real);
    return j;
}

HarmonicGrid grid_from_json(const json& j) {
    return guarded("grid", [&] {
        HarmonicGrid g;
        g.N           = j.at("N").get<int>();
        g.excited     = j.at("excited").get<BinList>();
        g.odd_detect  = j.at("odd_detect").get<BinList>();
        g.even_detect = j.at("even_detect").get<BinList>();
        if (g.N <= 0 || g.excited.empty()) throw FormatError("grid: N and excited lines are required");
        return g;
    });
}

void write_signal_csv(const fs::path& path, const ExcitationSignal& sig) {
    std::string out = "sample_index,value\n";
    for (Eigen::Index i = 0; i < sig.samples.size(); ++i) out += std::to_string(i) + "," + fmt(sig.samples[i]) + "\n";
    write_text(path, out);
}

json sidecar_to_json(const TimeRecord& rec, const RecordMetadata& meta) {
    json labels = {{"soc", meta.soc_label}};
    labels["temperature_c"] = meta.temperature_c ? json(*meta.temperature_c) : json(nullptr);
    labels["rms_level"]     = meta.rms_level ? json(*meta.rms_level) : json(nullptr);
    return {{"fs", rec.fs}, {"N", rec.N}, {"P", rec.P}, {"R", rec.R}, {"labels", labels}};
}

CsvLayout layout_from_sidecar(const json& j, RecordMetadata* meta) {
    return guarded("sidecar", [&] {
        CsvLayout l;
        l.N  = j.at("N").get<int>();
        l.R  = j.value("R", 1);
        if (j.contains("fs") && !j["fs"].is_null()) l.fs = j["fs"].get<double>();
        if (meta && j.contains("labels")) {
            const json& lb = j["labels"];
            meta->soc_label = lb.value("soc", std::string());
            if (lb.contains("temperature_c") && !lb["temperature_c"].is_null()) meta->temperature_c = lb["temperature_c"].get<double>();
            if (lb.contains("rms_level") && !lb["rms_level"].is_null()) meta->rms_level = lb["rms_level"].get<double>();
        }
        return l;
    });
}

namespace {

json summary_to_json(const ClassSummary& s) {
    return {{"count", s.count},          {"mean_power", num(s.mean_power)}, {"mean_noise", num(s.mean_noise)},
            {"power_db", num(s.power_db)}, {"noise_db", num(s.noise_db)},   {"significant", s.significant}};
}

json levels_to_json(const ClassLevels& c) {
    return {{"linear", summary_to_json(c.linear)}, {"even_nl", summary_to_json(c.even_nl)}, {"odd_nl", summary_to_json(c.odd_nl)}};
}

}  // namespace

json report_to_json(const DistortionReport& rep) {
    json bins = json::array();
    for (const auto& b : rep.bins) {
        bins.push_back({{"bin", b.bin},
                        {"freq_hz", b.freq_hz},
                        {"class", to_string(b.cls)},
                        {"power_db", num(db10(b.power))},
                        {"noise_db", num(db10(b.noise))}});
    }
    json per = json::array();
    for (const auto& c : rep.per_realization) per.push_back(levels_to_json(c));
    return {{"verdict", rep.verdict},
            {"transient_skip", rep.transient_skip},
            {"margin_db", rep.margin_db},
            {"periods", rep.periods},
            {"realizations", rep.realizations},
            {"classes", levels_to_json(rep.pooled)},
            {"per_realization", std::move(per)},
            {"bins", std::move(bins)}};
}

void write_report_csv(const fs::path& path, const DistortionReport& rep) {
    std::string out = "bin,freq_hz,class,power_db,noise_db\n";
    for (const auto& b : rep.bins)
        out += std::to_string(b.bin) + "," + fmt(b.freq_hz) + "," + to_string(b.cls) + "," + fmt(db10(b.power)) + "," +
               fmt(db10(b.noise)) + "\n";
    write_text(path, out);
}

void write_bla_csv(const fs::path& path, const BlaEstimate& bla) {
    std::string out = "bin,freq_hz,re_G,im_G,var_noise,var_total\n";
    for (size_t i = 0; i < bla.bins.size(); ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        out += std::to_string(bla.bins[i]) + "," + fmt(bla.freq(i)) + "," + fmt(bla.G[ii].real()) + "," + fmt(bla.G[ii].imag()) +
               "," + fmt(bla.var_noise.size() ? bla.var_noise[ii] : 0.0) + "," + fmt(bla.var_total[ii]) + "\n";
    }
    write_text(path, out);
}

json state_space_to_json(const StateSpaceModel& ss, const json& provenance) {
    return {{"type", "state_space"},
            {"fs", ss.fs},
            {"order", ss.order()},
            {"n_inputs", ss.n_inputs()},
            {"n_outputs", ss.n_outputs()},
            {"A", to_json(ss.A)},
            {"B", to_json(ss.B)},
            {"C", to_json(ss.C)},
            {"D", to_json(ss.D)},
            {"provenance", provenance}};
}

StateSpaceModel state_space_from_json(const json& j) {
    return guarded("state-space model", [&] {
        if (j.value("type", std::string()) != "state_space") throw FormatError("state-space model: wrong type tag");
        StateSpaceModel ss;
        ss.fs = j.at("fs").get<double>();
        ss.A  = mat_from_json(j.at("A"));
        ss.B  = mat_from_json(j.at("B"));
        ss.C  = mat_from_json(j.at("C"));
        ss.D  = mat_from_json(j.at("D"));
        ss.validate();
        return ss;
    });
}

void write_trend_csv(const fs::path& path, const Vec& y, const Vec& m, double fs) {
    std::string out = "t,y,m,y_minus_m\n";
    for (Eigen::Index i = 0; i < y.size(); ++i)
        out += fmt(static_cast<double>(i) / fs) + "," + fmt(y[i]) + "," + fmt(m[i]) + "," + fmt(y[i] - m[i]) + "\n";
    write_text(path, out);
}

json basis_to_json(const MonomialBasis& b) {
    return {{"n_x", b.n_x}, {"n_u", b.n_u}, {"degrees", b.degrees}, {"exponents", b.exponents}};
}

MonomialBasis basis_from_json(const json& j) {
    return guarded("monomial basis", [&] {
        MonomialBasis b = build_basis(j.at("n_x").get<int>(), j.at("n_u").get<int>(), j.at("degrees").get<std::vector<int>>());
        if (j.contains("exponents") && j["exponents"].get<std::vector<std::vector<int>>>() != b.exponents)
            throw FormatError("monomial basis: exponent list does not match the canonical ordering");
        return b;
    });
}

json pnlss_to_json(const PnlssModel& m, const FitReport* report, const json& provenance) {
    json j = {{"type", "pnlss"},
              {"fs", m.fs},
              {"n_x", m.n_x()},
              {"n_u", m.n_u()},
              {"n_y", m.n_y()},
              {"A", to_json(m.A)},
              {"B", to_json(m.B)},
              {"C", to_json(m.C)},
              {"D", to_json(m.D)},
              {"E", to_json(m.E)},
              {"F", to_json(m.F)},
              {"state_basis", basis_to_json(m.state_basis)},
              {"output_basis", basis_to_json(m.output_basis)},
              {"x_scale", to_json(m.x_scale)},
              {"u_scale", to_json(m.u_scale)},
              {"y_scale", to_json(m.y_scale)},
              {"provenance", provenance}};
    if (report) {
        json iters = json::array();
        for (const auto& r : report->lm.log)
            iters.push_back({{"iter", r.iteration},
                             {"lambda", r.lambda},
                             {"est_cost", num(r.cost)},
                             {"val_cost", num(r.val_cost)},
                             {"accepted", r.accepted}});
        j["fit"] = {{"initial_cost", num(report->initial_cost)},
                    {"final_cost", num(report->final_cost)},
                    {"initial_val_cost", num(report->initial_val_cost)},
                    {"final_val_cost", num(report->final_val_cost)},
                    {"chosen_iteration", report->chosen_iteration},
                    {"status", lm::to_string(report->lm.status)},
                    {"warnings", report->warnings},
                    {"iterations", std::move(iters)}};
    }
    return j;
}

PnlssModel pnlss_from_json(const json& j) {
    return guarded("pnlss model", [&] {
        if (j.value("type", std::string()) != "pnlss") throw FormatError("pnlss model: wrong type tag");
        PnlssModel m;
        m.fs           = j.at("fs").get<double>();
        m.A            = mat_from_json(j.at("A"));
        m.B            = mat_from_json(j.at("B"));
        m.C            = mat_from_json(j.at("C"));
        m.D            = mat_from_json(j.at("D"));
        m.E            = mat_from_json(j.at("E"));
        m.F            = mat_from_json(j.at("F"));
        m.state_basis  = basis_from_json(j.at("state_basis"));
        m.output_basis = basis_from_json(j.at("output_basis"));
        m.x_scale      = vec_from_json(j.at("x_scale"));
        m.u_scale      = vec_from_json(j.at("u_scale"));
        m.y_scale      = vec_from_json(j.at("y_scale"));
        m.validate();
        return m;
    });
}

void write_fit_log_csv(const fs::path& path, const lm::Result& lm) {
    std::string out = "iter,lambda,est_cost,val_cost,accepted\n";
    for (const auto& r : lm.log)
        out += std::to_string(r.iteration) + "," + fmt(r.lambda) + "," + fmt(r.cost) + "," + fmt(r.val_cost) + "," +
               (r.accepted ? "1" : "0") + "\n";
    write_text(path, out);
}

}  // namespace nlsid::io
