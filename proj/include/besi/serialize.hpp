#pragma once

// JSON and CSV views of the estimator results, plus atomic file writes.

#include <filesystem>
#include <string>

#include <json.hpp>

#include "besi/classify.hpp"
#include "besi/delone.hpp"
#include "besi/pseudometrics.hpp"
#include "besi/spectral.hpp"

namespace besi {

using json = nlohmann::ordered_json;

json to_json(const Schedule& s);
json to_json(const MetricEstimate& m);
json to_json(const EquivalenceReport& r);
json to_json(const SpectrumScan& s);
json to_json(const ApProbeResult& r);
json to_json(const Verdict& v);
json to_json(const ExpansivityReport& r);
json to_json(const DichotomyReport& r);
json to_json(const PeriodReport& r, int d);
json to_json(const DiffractionSpectrum& s);
json to_json(const DeloneReport& r);

/// w,re,im,abs over the coarse scan grid.
std::string spectrum_csv(const SpectrumScan& s);
/// k...,intensity,is_peak over the frequency grid.
std::string diffraction_csv(const DiffractionSpectrum& s);

/// Writes through a temporary file in the same directory and renames it.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace besi
