#include "nlsid/config.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <functional>
#include <sstream>
#include <vector>

#include "nlsid/error.hpp"
#include "nlsid/io.hpp"

namespace nlsid {
namespace {

std::string trim(std::string_view s) {
    size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return std::string(s.substr(a, b - a));
}

double to_double(const std::string& key, const std::string& v) {
    double out       = 0.0;
    const char* last = v.data() + v.size();
    auto [p, ec]     = std::from_chars(v.data(), last, out);
    if (ec != std::errc() || p != last) throw ConfigError(key + ": expected a number, got '" + v + "'");
    return out;
}

long long to_int(const std::string& key, const std::string& v) {
    long long out    = 0;
    const char* last = v.data() + v.size();
    auto [p, ec]     = std::from_chars(v.data(), last, out);
    if (ec != std::errc() || p != last) throw ConfigError(key + ": expected an integer, got '" + v + "'");
    return out;
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::vector<int> to_int_list(const std::string& key, const std::string& v) {
    std::vector<int> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(static_cast<int>(to_int(key, trim(item))));
    if (out.empty()) throw ConfigError(key + ": expected a comma-separated list");
    return out;
}

std::string join(const std::vector<int>& v) {
    std::string out;
    for (int x : v) out += (out.empty() ? "" : ",") + std::to_string(x);
    return out;
}

std::string opt_str(const std::optional<double>& v) { return v ? io::fmt(*v) : "preset"; }

std::optional<double> opt_double(const std::string& key, const std::string& v) {
    if (v == "preset" || v.empty()) return std::nullopt;
    return to_double(key, v);
}

const char* policy_name(const PipelineConfig& c) {
    if (!c.identify.detrend) return "none";
    switch (c.identify.trend.kind) {
        case TrendLambdaPolicy::Kind::Absolute: return "absolute";
        case TrendLambdaPolicy::Kind::RelativeToMax: return "relative";
        case TrendLambdaPolicy::Kind::SubbandNoise: return "subband";
    }
    return "relative";
}

struct Entry {
    std::function<void(PipelineConfig&, const std::string& key, const std::string& value)> set;
    std::function<std::string(const PipelineConfig&)> get;
};

const std::map<std::string, Entry>& table() {
    using C = PipelineConfig;
    using S = const std::string&;
    static const std::map<std::string, Entry> t = {
        {"signal.fs", {[](C& c, S k, S v) { c.signal.fs = to_double(k, v); }, [](const C& c) { return io::fmt(c.signal.fs); }}},
        {"signal.N", {[](C& c, S k, S v) { c.signal.N = static_cast<int>(to_int(k, v)); }, [](const C& c) { return std::to_string(c.signal.N); }}},
        {"signal.f_lo", {[](C& c, S k, S v) { c.signal.f_lo = to_double(k, v); }, [](const C& c) { return io::fmt(c.signal.f_lo); }}},
        {"signal.f_hi", {[](C& c, S k, S v) { c.signal.f_hi = to_double(k, v); }, [](const C& c) { return io::fmt(c.signal.f_hi); }}},
        {"signal.grid",
         {[](C& c, S k, S v) {
              if (v == "odd-random") c.signal.grid_kind = GridKind::OddRandom;
              else if (v == "full-odd") c.signal.grid_kind = GridKind::FullOdd;
              else throw ConfigError(k + ": expected odd-random or full-odd, got '" + v + "'");
          },
          [](const C& c) { return std::string(c.signal.grid_kind == GridKind::OddRandom ? "odd-random" : "full-odd"); }}},
        {"signal.group_size",
         {[](C& c, S k, S v) { c.signal.group_size = static_cast<int>(to_int(k, v)); }, [](const C& c) { return std::to_string(c.signal.group_size); }}},
        {"signal.omit_per_group",
         {[](C& c, S k, S v) { c.signal.omit_per_group = static_cast<int>(to_int(k, v)); },
          [](const C& c) { return std::to_string(c.signal.omit_per_group); }}},
        {"signal.rms",
         {[](C& c, S k, S v) {
              if (v == "none") c.signal.target_rms.reset();
              else c.signal.target_rms = to_double(k, v);
          },
          [](const C& c) { return c.signal.target_rms ? io::fmt(*c.signal.target_rms) : std::string("none"); }}},
        {"signal.seed",
         {[](C& c, S k, S v) { c.signal.seed = static_cast<std::uint64_t>(to_int(k, v)); }, [](const C& c) { return std::to_string(c.signal.seed); }}},
        {"signal.realizations",
         {[](C& c, S k, S v) { c.realizations = static_cast<int>(to_int(k, v)); }, [](const C& c) { return std::to_string(c.realizations); }}},
        {"signal.periods", {[](C& c, S k, S v) { c.periods = static_cast<int>(to_int(k, v)); }, [](const C& c) { return std::to_string(c.periods); }}},
        {"cell.preset", {[](C& c, S, S v) { c.cell_preset = v; }, [](const C& c) { return c.cell_preset; }}},
        {"cell.noise_std", {[](C& c, S k, S v) { c.noise_std = opt_double(k, v); }, [](const C& c) { return opt_str(c.noise_std); }}},
        {"cell.drift_rate", {[](C& c, S k, S v) { c.drift_rate = opt_double(k, v); }, [](const C& c) { return opt_str(c.drift_rate); }}},
        {"cell.nl_even", {[](C& c, S k, S v) { c.nl_even = opt_double(k, v); }, [](const C& c) { return opt_str(c.nl_even); }}},
        {"cell.nl_odd", {[](C& c, S k, S v) { c.nl_odd = opt_double(k, v); }, [](const C& c) { return opt_str(c.nl_odd); }}},
        {"cell.seed",
         {[](C& c, S k, S v) { c.cell_seed = static_cast<std::uint64_t>(to_int(k, v)); }, [](const C& c) { return std::to_string(c.cell_seed); }}},
        {"record.input", {[](C& c, S, S v) { c.input = v; }, [](const C& c) { return c.input; }}},
        {"analysis.transient_skip",
         {[](C& c, S k, S v) {
              c.analysis.transient_skip = static_cast<int>(to_int(k, v));
              c.identify.transient_skip = c.analysis.transient_skip;
          },
          [](const C& c) { return std::to_string(c.analysis.transient_skip); }}},
        {"analysis.margin_db",
         {[](C& c, S k, S v) { c.analysis.margin_db = to_double(k, v); }, [](const C& c) { return io::fmt(c.analysis.margin_db); }}},
        {"trend.policy",
         {[](C& c, S k, S v) {
              c.identify.detrend = v != "none";
              if (v == "absolute") c.identify.trend.kind = TrendLambdaPolicy::Kind::Absolute;
              else if (v == "relative") c.identify.trend.kind = TrendLambdaPolicy::Kind::RelativeToMax;
              else if (v == "subband") c.identify.trend.kind = TrendLambdaPolicy::Kind::SubbandNoise;
              else if (v != "none") throw ConfigError(k + ": expected relative, absolute, subband or none, got '" + v + "'");
              c.detrend = c.identify.detrend;
          },
          [](const C& c) { return std::string(policy_name(c)); }}},
        {"trend.lambda",
         {[](C& c, S k, S v) { c.identify.trend.value = to_double(k, v); }, [](const C& c) { return io::fmt(c.identify.trend.value); }}},
        {"lpm.order",
         {[](C& c, S k, S v) { c.identify.lpm.order = static_cast<int>(to_int(k, v)); }, [](const C& c) { return std::to_string(c.identify.lpm.order); }}},
        {"lpm.half_width",
         {[](C& c, S k, S v) { c.identify.lpm.half_width = static_cast<int>(to_int(k, v)); },
          [](const C& c) { return std::to_string(c.identify.lpm.half_width); }}},
        {"lpm.dof_extra",
         {[](C& c, S k, S v) { c.identify.lpm.dof_extra = static_cast<int>(to_int(k, v)); },
          [](const C& c) { return std::to_string(c.identify.lpm.dof_extra); }}},
        {"lpm.max_widen",
         {[](C& c, S k, S v) { c.identify.lpm.max_widen = static_cast<int>(to_int(k, v)); },
          [](const C& c) { return std::to_string(c.identify.lpm.max_widen); }}},
        {"linear.max_order",
         {[](C& c, S k, S v) { c.identify.max_order = static_cast<int>(to_int(k, v)); }, [](const C& c) { return std::to_string(c.identify.max_order); }}},
        {"linear.weighting",
         {[](C& c, S, S v) { c.identify.weighting = parse_weighting(v); }, [](const C& c) { return std::string(to_string(c.identify.weighting)); }}},
        {"pnlss.state_degrees",
         {[](C& c, S k, S v) { c.identify.structure.state_degrees = to_int_list(k, v); },
          [](const C& c) { return join(c.identify.structure.state_degrees); }}},
        {"pnlss.output_degrees",
         {[](C& c, S k, S v) { c.identify.structure.output_degrees = to_int_list(k, v); },
          [](const C& c) { return join(c.identify.structure.output_degrees); }}},
        {"pnlss.output_uses_input",
         {[](C& c, S k, S v) { c.identify.structure.output_uses_input = to_bool(k, v); },
          [](const C& c) { return std::string(c.identify.structure.output_uses_input ? "true" : "false"); }}},
        {"pnlss.fit_lines",
         {[](C& c, S, S v) { c.identify.fit_lines = parse_fit_lines(v); }, [](const C& c) { return std::string(to_string(c.identify.fit_lines)); }}},
        {"pnlss.max_iterations",
         {[](C& c, S k, S v) { c.identify.fit.max_iterations = static_cast<int>(to_int(k, v)); },
          [](const C& c) { return std::to_string(c.identify.fit.max_iterations); }}},
        {"pnlss.lambda_init",
         {[](C& c, S k, S v) { c.identify.fit.lambda_init = to_double(k, v); }, [](const C& c) { return io::fmt(c.identify.fit.lambda_init); }}},
        {"pnlss.rel_tol",
         {[](C& c, S k, S v) { c.identify.fit.rel_tol = to_double(k, v); }, [](const C& c) { return io::fmt(c.identify.fit.rel_tol); }}},
        {"pnlss.transient_periods",
         {[](C& c, S k, S v) { c.identify.fit.transient_periods = static_cast<int>(to_int(k, v)); },
          [](const C& c) { return std::to_string(c.identify.fit.transient_periods); }}},
        {"pnlss.validation_periods",
         {[](C& c, S k, S v) { c.identify.fit.validation_periods = static_cast<int>(to_int(k, v)); },
          [](const C& c) { return std::to_string(c.identify.fit.validation_periods); }}},
        {"output.dir", {[](C& c, S, S v) { c.output_dir = v; }, [](const C& c) { return c.output_dir; }}},
    };
    return t;
}

}  // namespace

KeyValues parse_key_values(const std::string& text) {
    std::istringstream in(text);
    std::vector<CLI::ConfigItem> items;
    try {
        items = CLI::ConfigTOML().from_config(in);
    } catch (const CLI::Error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    KeyValues kv;
    for (const auto& item : items) {
        if (item.name == "++" || item.name == "--") continue;  // section open/close markers
        std::string key;
        for (const auto& p : item.parents)
            if (p != "default") key += p + ".";
        key += item.name;
        std::string value;
        for (const auto& v : item.inputs) value += (value.empty() ? "" : ",") + v;
        kv[key] = value;
    }
    return kv;
}

void PipelineConfig::set(const std::string& key, const std::string& value) {
    const auto& t = table();
    const auto it = t.find(key);
    if (it == t.end()) throw ConfigError("unknown configuration key '" + key + "'");
    it->second.set(*this, key, value);
}

void PipelineConfig::apply(const KeyValues& kv) {
    for (const auto& [k, v] : kv) set(k, v);
}

KeyValues PipelineConfig::to_key_values() const {
    KeyValues kv;
    for (const auto& [k, e] : table()) kv[k] = e.get(*this);
    return kv;
}

std::string PipelineConfig::hash() const {
    std::string canon;
    for (const auto& [k, v] : to_key_values()) {
        if (k == "output.dir") continue;
        canon += k + "=" + v + "\n";
    }
    return io::hex64(io::fnv1a(canon));
}

SyntheticCell PipelineConfig::cell() const {
    SyntheticCell c = SyntheticCell::preset(cell_preset, signal.fs);
    if (noise_std) c.noise_std = *noise_std;
    if (drift_rate) c.drift_rate = *drift_rate;
    if (nl_even) c.nl_even = *nl_even;
    if (nl_odd) c.nl_odd = *nl_odd;
    c.seed = cell_seed;
    c.validate();
    return c;
}

void PipelineConfig::validate() const {
    signal.validate();
    if (realizations < 1) throw ConfigError("signal.realizations must be >= 1");
    if (periods < 1) throw ConfigError("signal.periods must be >= 1");
    if (analysis.transient_skip < 0) throw ConfigError("analysis.transient_skip must be >= 0");
    if (input.empty() && periods < analysis.transient_skip + 2)
        throw ConfigError("signal.periods must leave at least 2 periods after analysis.transient_skip");
    if (!(analysis.margin_db >= 0.0)) throw ConfigError("analysis.margin_db must be >= 0");
    identify.validate();
    if (identify.fit.transient_periods < 1) throw ConfigError("pnlss.transient_periods must be >= 1");
    if (identify.fit.validation_periods < 1) throw ConfigError("pnlss.validation_periods must be >= 1");
    if (identify.fit.max_iterations < 0) throw ConfigError("pnlss.max_iterations must be >= 0");
    for (int d : identify.structure.state_degrees)
        if (d < 2) throw ConfigError("pnlss.state_degrees: degrees start at 2");
    for (int d : identify.structure.output_degrees)
        if (d < 2) throw ConfigError("pnlss.output_degrees: degrees start at 2");
    if (input.empty()) (void)cell();
}

}  // namespace nlsid
