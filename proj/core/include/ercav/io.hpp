#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ercav/ensemble.hpp"
#include "ercav/estimators.hpp"
#include "ercav/fit.hpp"
#include "ercav/g2.hpp"
#include "ercav/photodynamics.hpp"

namespace ercav::io {

/// Shortest decimal form that parses back to the identical double.
[[nodiscard]] std::string format_double(double v);

void write_scan_csv(const photo::SpectrumScan& scan, std::ostream& os);
void write_histogram_csv(const photo::Histogram& histogram, std::ostream& os);
void write_saturation_csv(std::span<const photo::SaturationPoint> points, std::ostream& os);
void write_g2_csv(const estimators::G2Series& g2, std::ostream& os);

/// Numeric CSV with one header row. Blank lines and lines starting with '#' are skipped.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    [[nodiscard]] bool has(std::string_view name) const;
    /// Throws InputError naming the missing column.
    [[nodiscard]] std::vector<double> column(std::string_view name) const;
};

[[nodiscard]] CsvTable read_csv(std::istream& is);
[[nodiscard]] CsvTable read_csv(const std::filesystem::path& path);

[[nodiscard]] photo::Histogram histogram_from_csv(const CsvTable& table);
[[nodiscard]] photo::SpectrumScan scan_from_csv(const CsvTable& table);
[[nodiscard]] std::vector<photo::SaturationPoint> saturation_from_csv(const CsvTable& table);

// JSON documents are returned as text so the public headers stay free of the JSON library.
[[nodiscard]] std::string to_json(const fit::FitResult& result);
[[nodiscard]] std::string to_json(const estimators::G2Series& g2);
[[nodiscard]] std::string to_json(const estimators::DecayFit& fit);
[[nodiscard]] std::string to_json(const estimators::LorentzianFit& fit);
[[nodiscard]] std::string to_json(const estimators::SaturationRateFit& fit);
[[nodiscard]] std::string to_json(const estimators::SaturationLinewidthFit& fit);

inline constexpr int kEnsembleFormatVersion = 1;

[[nodiscard]] std::string ensemble_to_json(const ensemble::Nanoparticle& particle);
/// Throws ConfigError for unknown keys, a missing or unsupported version, or invalid values.
[[nodiscard]] ensemble::Nanoparticle ensemble_from_json(const std::string& text);
void write_ensemble(const ensemble::Nanoparticle& particle, const std::filesystem::path& path);
[[nodiscard]] ensemble::Nanoparticle read_ensemble(const std::filesystem::path& path);

/// Writes `content` to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);
[[nodiscard]] std::string read_file(const std::filesystem::path& path);

}  // namespace ercav::io
