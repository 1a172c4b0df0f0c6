#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "nlsid/bench.hpp"
#include "nlsid/levmar.hpp"
#include "nlsid/linmodel.hpp"
#include "nlsid/lpm.hpp"
#include "nlsid/pnlss.hpp"
#include "nlsid/signals.hpp"
#include "nlsid/spectral.hpp"
#include "nlsid/trend.hpp"

namespace nlsid::io {

using json = nlohmann::json;
namespace fs = std::filesystem;

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);
/// FNV-1a digest of a file's bytes, as 16 hex digits.
std::string file_digest(const fs::path& path);

std::string read_text(const fs::path& path);
void write_text(const fs::path& path, const std::string& text);
json read_json(const fs::path& path);
void write_json(const fs::path& path, const json& j);

/// Shortest round-trip decimal form.
std::string fmt(double v);

json to_json(const Mat& M);
Mat mat_from_json(const json& j);
json to_json(const Vec& v);
Vec vec_from_json(const json& j);

// signals
json spec_to_json(const MultisineSpec& spec);
MultisineSpec spec_from_json(const json& j);
json grid_to_json(const MultisineSpec& spec, const HarmonicGrid& grid, const std::vector<ExcitationSignal>& signals);
HarmonicGrid grid_from_json(const json& j);
void write_signal_csv(const fs::path& path, const ExcitationSignal& sig);

// bench
json sidecar_to_json(const TimeRecord& rec, const RecordMetadata& meta);
CsvLayout layout_from_sidecar(const json& j, RecordMetadata* meta = nullptr);

// spectral
json report_to_json(const DistortionReport& rep);
void write_report_csv(const fs::path& path, const DistortionReport& rep);

// lpm
void write_bla_csv(const fs::path& path, const BlaEstimate& bla);

// linmodel
json state_space_to_json(const StateSpaceModel& ss, const json& provenance = json::object());
StateSpaceModel state_space_from_json(const json& j);

// trend
void write_trend_csv(const fs::path& path, const Vec& y, const Vec& m, double fs);

// pnlss
json basis_to_json(const MonomialBasis& b);
MonomialBasis basis_from_json(const json& j);
json pnlss_to_json(const PnlssModel& model, const FitReport* report = nullptr, const json& provenance = json::object());
PnlssModel pnlss_from_json(const json& j);
void write_fit_log_csv(const fs::path& path, const lm::Result& lm);

}  // namespace nlsid::io
