#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "nlsid/bench.hpp"
#include "nlsid/pipeline.hpp"

namespace nlsid {

using KeyValues = std::map<std::string, std::string>;

/// Parse a TOML-style file body: `[section]` headers, `key = value` lines, `#` comments,
/// quoted strings and flat arrays. Keys come back as "section.key".
KeyValues parse_key_values(const std::string& text);

/// Every setting of a pipeline run.
struct PipelineConfig {
    MultisineSpec signal{};
    int realizations = 2;
    int periods      = 20;

    std::string cell_preset = "soc10";
    std::optional<double> noise_std;
    std::optional<double> drift_rate;
    std::optional<double> nl_even;
    std::optional<double> nl_odd;
    std::uint64_t cell_seed = 7;

    std::string input;  ///< measured record CSV; synthetic cell when empty

    AnalysisOptions analysis{};
    bool detrend = true;
    IdentifyOptions identify{};

    std::string output_dir = "nlsid_out";

    /// Set one dotted key from its string form; unknown keys and bad values are ConfigErrors.
    void set(const std::string& key, const std::string& value);
    void apply(const KeyValues& kv);
    /// All effective settings in canonical string form.
    KeyValues to_key_values() const;
    /// FNV-1a of the canonical key/value listing.
    std::string hash() const;

    SyntheticCell cell() const;
    /// Cross-field consistency: band inside Nyquist, enough periods for the transient skip and
    /// the validation split, one N everywhere.
    void validate() const;
};

}  // namespace nlsid
