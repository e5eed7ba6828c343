#include "qc/io.hpp"

#include "qc/error.hpp"
#include "qc/preprocess.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace qc {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string_view trim(std::string_view s) {
    const auto not_space = [](char c) { return c != ' ' && c != '\t' && c != '\r' && c != '\n'; };
    while (!s.empty() && !not_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && !not_space(s.back())) s.remove_suffix(1);
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
        s = trim(s.substr(1, s.size() - 2));
    }
    return s;
}

std::vector<std::string_view> split(std::string_view line, char delimiter) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(delimiter, start);
        if (pos == std::string_view::npos) {
            cells.push_back(line.substr(start));
            return cells;
        }
        cells.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

std::optional<double> parse_number(std::string_view cell, char decimal) {
    std::string text(trim(cell));
    if (text.empty()) return std::nullopt;
    if (decimal != '.') {
        if (text.find('.') != std::string::npos) return std::nullopt;
        std::replace(text.begin(), text.end(), decimal, '.');
    }
    const char* begin = text.data();
    const char* end = text.data() + text.size();
    if (*begin == '+') ++begin;
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end || !std::isfinite(value)) return std::nullopt;
    return value;
}

bool all_empty(const std::vector<std::string_view>& cells) {
    return std::all_of(cells.begin(), cells.end(), [](std::string_view c) { return trim(c).empty(); });
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path.string() + "' for reading");
    return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
    return out;
}

void finish_output(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) throw DataError("failed writing '" + path.string() + "'");
}

const char* mode_name(PotentialMode mode) {
    return mode == PotentialMode::Inverse ? "inverse" : "direct";
}

PotentialMode parse_mode_name(const std::string& s) {
    if (s == "direct") return PotentialMode::Direct;
    if (s == "inverse") return PotentialMode::Inverse;
    throw DataError("report has unknown mode '" + s + "'");
}

}  // namespace

std::string format_double(double value) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, ptr);
}

CsvTable parse_csv(std::istream& in, const CsvOptions& options) {
    if (options.delimiter == options.decimal) {
        throw InvalidArgument("CSV delimiter and decimal mark must differ");
    }

    // Read every non-blank row first so empty columns can be detected.
    std::vector<std::string> lines;
    std::vector<std::size_t> line_numbers;
    std::string line;
    std::size_t line_no = 0;
    std::size_t width = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto cells = split(line, options.delimiter);
        if (all_empty(cells)) continue;
        if (lines.empty()) {
            width = cells.size();
        } else if (cells.size() != width) {
            throw DataError("line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                            " cells, expected " + std::to_string(width));
        }
        lines.push_back(line);
        line_numbers.push_back(line_no);
    }
    if (lines.empty()) throw DataError("CSV input is empty");

    std::vector<std::size_t> columns = options.include_columns;
    if (columns.empty()) {
        columns.resize(width);
        for (std::size_t j = 0; j < width; ++j) columns[j] = j;
    }
    for (std::size_t c : columns) {
        if (c >= width) {
            throw InvalidArgument("column " + std::to_string(c) + " requested but rows have " +
                                  std::to_string(width) + " cells");
        }
    }
    std::erase_if(columns, [&](std::size_t c) {
        return std::find(options.exclude_columns.begin(), options.exclude_columns.end(), c) !=
               options.exclude_columns.end();
    });

    bool has_header = false;
    {
        const auto first = split(lines.front(), options.delimiter);
        if (options.header) {
            has_header = *options.header;
        } else {
            has_header = std::any_of(columns.begin(), columns.end(), [&](std::size_t c) {
                return !trim(first[c]).empty() && !parse_number(first[c], options.decimal);
            });
        }
    }

    CsvTable table;
    const std::size_t first_data = has_header ? 1 : 0;
    const std::size_t rows = lines.size() - first_data;

    if (options.drop_empty_columns) {
        std::vector<std::size_t> kept;
        for (std::size_t c : columns) {
            bool any = false;
            for (std::size_t r = first_data; r < lines.size() && !any; ++r) {
                any = !trim(split(lines[r], options.delimiter)[c]).empty();
            }
            if (any) {
                kept.push_back(c);
            } else {
                table.dropped_columns.push_back(c);
                table.diagnostics.push_back("dropped empty column " + std::to_string(c));
            }
        }
        columns = std::move(kept);
    }
    if (columns.empty()) throw DataError("CSV input has no usable columns");
    if (rows == 0) throw DataError("CSV input has a header but no data rows");

    if (has_header) {
        const auto head = split(lines.front(), options.delimiter);
        for (std::size_t c : columns) table.column_names.emplace_back(trim(head[c]));
    }

    Matrix data(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(columns.size()));
    for (std::size_t r = 0; r < rows; ++r) {
        const auto cells = split(lines[first_data + r], options.delimiter);
        for (std::size_t j = 0; j < columns.size(); ++j) {
            const auto value = parse_number(cells[columns[j]], options.decimal);
            if (!value) {
                throw DataError("unparsable cell '" + std::string(trim(cells[columns[j]])) + "' at line " +
                                std::to_string(line_numbers[first_data + r]) + ", column " +
                                std::to_string(columns[j]));
            }
            data(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = *value;
        }
    }

    if (options.missing_sentinel) {
        Imputed imp = impute_missing(data, *options.missing_sentinel);
        for (std::size_t dj : imp.dropped_columns) {
            table.dropped_columns.push_back(columns[dj]);
            table.diagnostics.push_back("dropped column " + std::to_string(columns[dj]) +
                                        ": every value is the missing marker");
        }
        std::vector<std::size_t> kept;
        std::vector<std::string> names;
        for (std::size_t kj : imp.kept_columns) {
            kept.push_back(columns[kj]);
            if (!table.column_names.empty()) names.push_back(table.column_names[kj]);
        }
        if (imp.replaced > 0) {
            table.diagnostics.push_back("imputed " + std::to_string(imp.replaced) + " missing values");
        }
        columns = std::move(kept);
        table.column_names = std::move(names);
        data = std::move(imp.data);
        if (columns.empty()) throw DataError("CSV input has no usable columns");
    }

    table.data = std::move(data);
    table.source_columns = std::move(columns);
    std::sort(table.dropped_columns.begin(), table.dropped_columns.end());
    return table;
}

CsvTable read_csv(const std::filesystem::path& path, const CsvOptions& options) {
    auto in = open_input(path);
    try {
        return parse_csv(in, options);
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options) {
    return Dataset(read_csv(path, options).data);
}

AirQualityData load_air_quality(std::istream& in, bool standardize_columns) {
    CsvOptions opts;
    opts.delimiter = ';';
    opts.decimal = ',';
    opts.header = true;
    opts.exclude_columns = {0, 1};
    opts.drop_empty_columns = true;
    opts.missing_sentinel = kAirQualityMissing;
    CsvTable table = parse_csv(in, opts);

    std::vector<std::string> names = table.column_names;
    std::vector<std::string> diagnostics = table.diagnostics;
    Matrix data = std::move(table.data);
    if (standardize_columns) {
        Standardized st = standardize(data);
        for (std::size_t j : st.dropped_columns) {
            diagnostics.push_back("dropped constant column " + std::to_string(table.source_columns[j]));
        }
        std::vector<std::string> kept_names;
        for (std::size_t j : st.kept_columns) {
            if (j < names.size()) kept_names.push_back(names[j]);
        }
        names = std::move(kept_names);
        data = std::move(st.data);
    }
    return AirQualityData{Dataset(std::move(data)), std::move(names), std::move(diagnostics)};
}

AirQualityData load_air_quality(const std::filesystem::path& path, bool standardize_columns) {
    auto in = open_input(path);
    try {
        return load_air_quality(in, standardize_columns);
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

RunReport make_report(const ClusterResult& result) {
    RunReport r;
    r.sigma = result.params.sigma;
    r.sigma_estimated = result.params.sigma_estimated;
    r.k = result.params.k;
    r.merge_radius = result.params.merge_radius;
    r.mode = result.params.mode;
    r.n = static_cast<std::size_t>(result.converged.rows());
    r.d = static_cast<std::size_t>(result.converged.cols());
    r.cluster_sizes = result.cluster_sizes;
    r.outlier_count = result.outlier_count();
    r.non_converged = result.non_converged;
    r.warnings = result.warnings;
    r.points.reserve(r.n);
    for (std::size_t i = 0; i < r.n; ++i) {
        PointRecord p;
        p.index = i;
        p.label = result.labels[i];
        p.outlier = result.outlier_flags[i];
        const auto row = result.converged.row(static_cast<Eigen::Index>(i));
        p.converged.assign(row.data(), row.data() + row.size());
        r.points.push_back(std::move(p));
    }
    return r;
}

std::string report_to_json(const RunReport& r) {
    ordered_json j;
    j["schema"] = kReportSchema;
    j["input"] = r.input;
    ordered_json params;
    params["sigma"] = r.sigma;
    params["sigma_estimated"] = r.sigma_estimated;
    params["k"] = r.k;
    params["merge_radius"] = r.merge_radius;
    params["mode"] = mode_name(r.mode);
    params["seed"] = r.seed ? ordered_json(*r.seed) : ordered_json(nullptr);
    params["standardized"] = r.standardized;
    params["pca_components"] = r.pca_components ? ordered_json(*r.pca_components) : ordered_json(nullptr);
    params["pca_explained_variance_ratio"] = r.pca_explained_variance_ratio;
    j["params"] = params;
    j["n"] = r.n;
    j["d"] = r.d;
    j["cluster_count"] = r.cluster_sizes.size();
    j["cluster_sizes"] = r.cluster_sizes;
    j["outlier_count"] = r.outlier_count;
    ordered_json points = ordered_json::array();
    for (const auto& p : r.points) {
        ordered_json e;
        e["index"] = p.index;
        e["label"] = p.label;
        e["outlier"] = p.outlier;
        e["converged"] = p.converged;
        points.push_back(std::move(e));
    }
    j["points"] = std::move(points);
    ordered_json diag;
    diag["non_converged"] = r.non_converged;
    diag["dropped_columns"] = r.dropped_columns;
    diag["warnings"] = r.warnings;
    j["diagnostics"] = diag;
    return j.dump(2) + "\n";
}

RunReport report_from_json(const std::string& text) {
    try {
        const auto j = ordered_json::parse(text);
        if (j.at("schema").get<std::string>() != kReportSchema) {
            throw DataError("unsupported report schema '" + j.at("schema").get<std::string>() + "'");
        }
        RunReport r;
        r.input = j.at("input").get<std::string>();
        const auto& p = j.at("params");
        r.sigma = p.at("sigma").get<double>();
        r.sigma_estimated = p.at("sigma_estimated").get<bool>();
        r.k = p.at("k").get<std::size_t>();
        r.merge_radius = p.at("merge_radius").get<double>();
        r.mode = parse_mode_name(p.at("mode").get<std::string>());
        if (!p.at("seed").is_null()) r.seed = p.at("seed").get<std::uint64_t>();
        r.standardized = p.at("standardized").get<bool>();
        if (!p.at("pca_components").is_null()) r.pca_components = p.at("pca_components").get<std::size_t>();
        r.pca_explained_variance_ratio = p.at("pca_explained_variance_ratio").get<std::vector<double>>();
        r.n = j.at("n").get<std::size_t>();
        r.d = j.at("d").get<std::size_t>();
        r.cluster_sizes = j.at("cluster_sizes").get<std::vector<std::size_t>>();
        if (j.at("cluster_count").get<std::size_t>() != r.cluster_sizes.size()) {
            throw DataError("report cluster_count disagrees with cluster_sizes");
        }
        r.outlier_count = j.at("outlier_count").get<std::size_t>();
        for (const auto& e : j.at("points")) {
            PointRecord pr;
            pr.index = e.at("index").get<std::size_t>();
            pr.label = e.at("label").get<std::size_t>();
            pr.outlier = e.at("outlier").get<bool>();
            pr.converged = e.at("converged").get<std::vector<double>>();
            r.points.push_back(std::move(pr));
        }
        const auto& diag = j.at("diagnostics");
        r.non_converged = diag.at("non_converged").get<std::size_t>();
        r.dropped_columns = diag.at("dropped_columns").get<std::vector<std::size_t>>();
        r.warnings = diag.at("warnings").get<std::vector<std::string>>();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed report: ") + e.what());
    }
}

void write_report(const RunReport& report, const std::filesystem::path& path) {
    auto out = open_output(path);
    out << report_to_json(report);
    finish_output(out, path);
}

RunReport read_report(const std::filesystem::path& path) {
    auto in = open_input(path);
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return report_from_json(buf.str());
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

void write_grid(const PotentialGrid& grid, std::ostream& out) {
    out << "x,y,v\n";
    for (std::size_t iy = 0; iy < grid.ys.size(); ++iy) {
        for (std::size_t ix = 0; ix < grid.xs.size(); ++ix) {
            out << format_double(grid.xs[ix]) << ',' << format_double(grid.ys[iy]) << ','
                << format_double(grid.values(static_cast<Eigen::Index>(iy), static_cast<Eigen::Index>(ix)))
                << '\n';
        }
    }
}

void write_grid(const PotentialGrid& grid, const std::filesystem::path& path) {
    auto out = open_output(path);
    write_grid(grid, out);
    finish_output(out, path);
}

void write_scenario(const Scenario& scenario, std::ostream& out) {
    const auto& pts = scenario.dataset.points();
    out << "x,y,truth\n";
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
        out << format_double(pts(i, 0)) << ',' << format_double(pts(i, 1)) << ','
            << (scenario.truth[static_cast<std::size_t>(i)] ? 1 : 0) << '\n';
    }
}

void write_scenario(const Scenario& scenario, const std::filesystem::path& path) {
    auto out = open_output(path);
    write_scenario(scenario, out);
    finish_output(out, path);
}

}  // namespace qc
