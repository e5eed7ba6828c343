#pragma once

#include "qc/clustering.hpp"
#include "qc/dataset.hpp"
#include "qc/datagen.hpp"
#include "qc/potential.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace qc {

struct CsvOptions {
    char delimiter = ',';
    char decimal = '.';
    std::optional<bool> header;                  // nullopt: header iff the first row is not numeric
    std::vector<std::size_t> include_columns;    // empty: every column
    std::vector<std::size_t> exclude_columns;    // applied after include_columns
    std::optional<double> missing_sentinel;      // impute exact matches with the column mean
    bool drop_empty_columns = false;             // drop columns whose every cell is empty
};

struct CsvTable {
    Matrix data;
    std::vector<std::string> column_names;           // empty without a header
    std::vector<std::size_t> source_columns;         // original index of each data column
    std::vector<std::string> diagnostics;
    std::vector<std::size_t> dropped_columns;        // original indices
};

/// Parses a numeric table. Rows whose cells are all empty are skipped. Throws
/// DataError naming the 1-based line and 0-based column of the first bad cell.
CsvTable parse_csv(std::istream& in, const CsvOptions& options = {});
CsvTable read_csv(const std::filesystem::path& path, const CsvOptions& options = {});
Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options = {});

/// Expected on-disk name of the UCI air-quality file.
inline constexpr const char* kAirQualityFileName = "AirQualityUCI.csv";
inline constexpr double kAirQualityMissing = -200.0;

struct AirQualityData {
    Dataset dataset;
    std::vector<std::string> column_names;
    std::vector<std::string> diagnostics;
};

/// Semicolon-separated, comma decimals, Date and Time in columns 0-1 (dropped),
/// empty trailing columns, -200 as the missing marker. Missing cells are
/// imputed with the column mean and columns are standardized unless
/// `standardize` is false.
AirQualityData load_air_quality(std::istream& in, bool standardize = true);
AirQualityData load_air_quality(const std::filesystem::path& path, bool standardize = true);

struct PointRecord {
    std::size_t index = 0;
    std::size_t label = 0;
    bool outlier = false;
    std::vector<double> converged;

    bool operator==(const PointRecord&) const = default;
};

/// Everything needed to reproduce and inspect one detect run.
struct RunReport {
    std::string input;
    double sigma = 0.0;
    bool sigma_estimated = false;
    std::size_t k = 0;
    double merge_radius = 0.0;
    PotentialMode mode = PotentialMode::Direct;
    std::optional<std::uint64_t> seed;
    bool standardized = false;
    std::optional<std::size_t> pca_components;
    std::vector<double> pca_explained_variance_ratio;
    std::size_t n = 0;
    std::size_t d = 0;
    std::vector<std::size_t> cluster_sizes;
    std::size_t outlier_count = 0;
    std::vector<PointRecord> points;
    std::size_t non_converged = 0;
    std::vector<std::size_t> dropped_columns;
    std::vector<std::string> warnings;

    std::size_t cluster_count() const noexcept { return cluster_sizes.size(); }
    bool operator==(const RunReport&) const = default;
};

RunReport make_report(const ClusterResult& result);

inline constexpr const char* kReportSchema = "qc-run-report/1";

/// JSON with a fixed key order; doubles are written in shortest round-trip form.
std::string report_to_json(const RunReport& report);
RunReport report_from_json(const std::string& text);
void write_report(const RunReport& report, const std::filesystem::path& path);
RunReport read_report(const std::filesystem::path& path);

/// CSV with header "x,y,v", one row per lattice point, x varying fastest.
void write_grid(const PotentialGrid& grid, std::ostream& out);
void write_grid(const PotentialGrid& grid, const std::filesystem::path& path);

/// CSV with header "x,y,truth" (truth is 0 or 1).
void write_scenario(const Scenario& scenario, std::ostream& out);
void write_scenario(const Scenario& scenario, const std::filesystem::path& path);

/// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);

}  // namespace qc
