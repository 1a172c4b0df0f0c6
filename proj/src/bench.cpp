#include "nlsid/bench.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "nlsid/error.hpp"

namespace nlsid {

StateSpaceModel SyntheticCell::default_core(double fs) {
    // Series resistance plus two RC branches, zero-order-hold discretized.
    const double Ts = 1.0 / fs;
    const double R0 = 1.5e-3;
    const double R1 = 1.0e-3, tau1 = 0.04;
    const double R2 = 1.5e-3, tau2 = 0.20;
    const double a1 = std::exp(-Ts / tau1);
    const double a2 = std::exp(-Ts / tau2);
    StateSpaceModel ss;
    ss.fs = fs;
    ss.A  = Mat::Zero(2, 2);
    ss.A(0, 0) = a1;
    ss.A(1, 1) = a2;
    ss.B = Mat(2, 1);
    ss.B << R1 * (1.0 - a1), R2 * (1.0 - a2);
    ss.C = Mat::Ones(1, 2);
    ss.D = Mat::Constant(1, 1, R0);
    return ss;
}

SyntheticCell SyntheticCell::preset(const std::string& name, double fs) {
    SyntheticCell cell;
    cell.linear          = default_core(fs);
    cell.operating_point = name;
    cell.noise_std       = 1e-4;
    cell.drift_rate      = 1e-7;
    if (name == "soc90") {
        cell.nl_even = 0.0;
        cell.nl_odd  = 0.0;
    } else if (name == "soc10") {
        cell.nl_even = 1.0;
        cell.nl_odd  = 2.0;
    } else {
        throw ConfigError("cell preset: unknown operating point '" + name + "' (expected soc90 or soc10)");
    }
    return cell;
}

void SyntheticCell::validate() const {
    linear.validate();
    if (linear.n_inputs() != 1 || linear.n_outputs() != 1) throw ConfigError("cell: SISO core required");
    if (!linear.is_stable()) throw NumericalError("cell: linear core is unstable");
    if (!(noise_std >= 0.0)) throw ConfigError("cell: noise_std must be >= 0");
}

Vec cell_response(const SyntheticCell& cell, const Vec& u) {
    const Vec v = cell.linear.simulate(u);
    Vec y       = v + cell.nl_even * v.cwiseAbs2() + cell.nl_odd * v.array().cube().matrix();
    if (!y.allFinite()) throw NumericalError("cell: simulation produced non-finite output");
    return y;
}

TimeRecord simulate_cell(const SyntheticCell& cell, const std::vector<ExcitationSignal>& excitation, int periods) {
    cell.validate();
    if (excitation.empty()) throw ConfigError("cell: at least one excitation realization required");
    if (periods < 1) throw ConfigError("cell: periods must be >= 1");
    const int N = excitation.front().spec.N;
    const int R = static_cast<int>(excitation.size());
    const Eigen::Index len = static_cast<Eigen::Index>(periods) * N;
    Vec u(len * R), y(len * R);
    for (int r = 0; r < R; ++r) {
        if (excitation[static_cast<size_t>(r)].spec.N != N) throw ConfigError("cell: realizations differ in period length");
        const Vec ur = tile(excitation[static_cast<size_t>(r)].samples, periods);
        Vec yr       = cell_response(cell, ur);
        std::mt19937_64 rng = make_rng(cell.seed, 0x6e6f697365ULL, static_cast<std::uint64_t>(r));
        std::normal_distribution<double> noise(0.0, 1.0);
        for (Eigen::Index t = 0; t < len; ++t) {
            yr[t] += cell.drift_rate * static_cast<double>(t);
            if (cell.noise_std > 0.0) yr[t] += cell.noise_std * noise(rng);
        }
        u.segment(r * len, len) = ur;
        y.segment(r * len, len) = yr;
    }
    return TimeRecord::from_samples(std::move(u), std::move(y), excitation.front().spec.fs, N, R);
}

namespace {

std::vector<std::string_view> split_row(std::string_view line) {
    std::vector<std::string_view> out;
    size_t start = 0;
    while (true) {
        const size_t comma = line.find(',', start);
        std::string_view f = line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
        while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.remove_prefix(1);
        while (!f.empty() && (f.back() == ' ' || f.back() == '\t' || f.back() == '\r')) f.remove_suffix(1);
        out.push_back(f);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

double parse_field(std::string_view f, size_t line_no, const std::string& column) {
    if (f.empty()) throw FormatError("csv: missing value for '" + column + "' on row " + std::to_string(line_no));
    double v         = 0.0;
    const auto* last = f.data() + f.size();
    auto [ptr, ec]   = std::from_chars(f.data(), last, v);
    if (ec != std::errc() || ptr != last)
        throw FormatError("csv: cannot parse '" + std::string(f) + "' for '" + column + "' on row " + std::to_string(line_no));
    return v;
}

void write_number(std::ostream& os, double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    os.write(buf, ptr - buf);
}

}  // namespace

MeasuredRecord ingest_csv(const std::filesystem::path& path, const CsvLayout& layout) {
    if (layout.N <= 0) throw ConfigError("ingest: samples per period N must be declared");
    if (layout.R <= 0) throw ConfigError("ingest: realization count must be >= 1");
    std::ifstream in(path);
    if (!in) throw FormatError("csv: cannot open " + path.string());

    std::string line;
    if (!std::getline(in, line)) throw FormatError("csv: empty file " + path.string());
    const auto header = split_row(line);
    auto find_col     = [&](const std::string& name) {
        for (size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw FormatError("csv: missing column '" + name + "' in " + path.string());
    };
    const size_t ct = find_col(layout.time_column);
    const size_t cu = find_col(layout.input_column);
    const size_t cy = find_col(layout.output_column);

    std::vector<double> t, u, y;
    size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto f = split_row(line);
        if (f.size() != header.size())
            throw FormatError("csv: row " + std::to_string(line_no) + " has " + std::to_string(f.size()) + " fields, expected " +
                              std::to_string(header.size()));
        t.push_back(parse_field(f[ct], line_no, layout.time_column));
        u.push_back(parse_field(f[cu], line_no, layout.input_column));
        y.push_back(parse_field(f[cy], line_no, layout.output_column));
    }
    if (t.size() < 2) throw FormatError("csv: fewer than two samples");

    const double dt = t[1] - t[0];
    if (!(dt > 0.0)) throw FormatError("csv: time column is not increasing at row 3");
    for (size_t i = 1; i < t.size(); ++i) {
        const double step = t[i] - t[i - 1];
        if (std::abs(step - dt) > 1e-6 * dt)
            throw FormatError("csv: non-uniform sampling at row " + std::to_string(i + 2) + " (step " + std::to_string(step) +
                              " vs " + std::to_string(dt) + ")");
    }
    const double fs = layout.fs ? *layout.fs : 1.0 / dt;
    if (layout.fs && std::abs(*layout.fs * dt - 1.0) > 1e-6)
        throw FormatError("csv: declared fs does not match the time column");

    MeasuredRecord out;
    const size_t block  = static_cast<size_t>(layout.N) * static_cast<size_t>(layout.R);
    const size_t usable = (t.size() / block) * block;
    if (usable == 0)
        throw FormatError("csv: " + std::to_string(t.size()) + " samples do not fill one period per realization");
    if (usable < t.size()) {
        out.warnings.push_back("csv: dropped " + std::to_string(t.size() - usable) + " trailing sample(s) of " +
                               std::to_string(t.size()) + " (N=" + std::to_string(layout.N) + ", R=" + std::to_string(layout.R) +
                               ")");
    }
    Vec uv = Eigen::Map<const Vec>(u.data(), static_cast<Eigen::Index>(usable));
    Vec yv = Eigen::Map<const Vec>(y.data(), static_cast<Eigen::Index>(usable));
    out.record = TimeRecord::from_samples(std::move(uv), std::move(yv), fs, layout.N, layout.R);
    return out;
}

void export_csv(const TimeRecord& rec, const std::filesystem::path& path) {
    rec.validate();
    std::ofstream os(path);
    if (!os) throw FormatError("csv: cannot write " + path.string());
    os << "t,current,voltage\n";
    for (Eigen::Index i = 0; i < rec.u.size(); ++i) {
        write_number(os, static_cast<double>(i) / rec.fs);
        os << ',';
        write_number(os, rec.u[i]);
        os << ',';
        write_number(os, rec.y[i]);
        os << '\n';
    }
}

}  // namespace nlsid
