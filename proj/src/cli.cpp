#include "qc/cli.hpp"

#include "qc/clustering.hpp"
#include "qc/datagen.hpp"
#include "qc/error.hpp"
#include "qc/io.hpp"
#include "qc/preprocess.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <iostream>
#include <optional>
#include <sstream>

namespace qc {

namespace {

struct InputOptions {
    std::string path;
    std::string delimiter = ",";
    std::string decimal = ".";
    std::vector<std::size_t> columns;
    std::optional<double> missing;
};

struct DetectOptions {
    std::string sigma = "auto";
    std::optional<std::size_t> k;
    std::string merge_radius = "auto";
    std::string mode = "direct";
    std::optional<std::size_t> pca;
    bool standardize = false;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::size_t bins = kDefaultHistogramBins;
    std::size_t threads = 0;
    std::size_t max_iters = BfgsConfig{}.max_iters;
};

double parse_double_arg(const std::string& text, const std::string& what) {
    double value = 0.0;
    const char* begin = text.data();
    const char* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end) {
        throw InvalidArgument(what + " expects a number, got '" + text + "'");
    }
    return value;
}

std::optional<double> parse_auto(const std::string& text, const std::string& what) {
    if (text == "auto") return std::nullopt;
    return parse_double_arg(text, what);
}

std::vector<double> parse_list(const std::string& text, std::size_t expected, const std::string& what) {
    std::vector<double> values;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) values.push_back(parse_double_arg(item, what));
    if (values.size() != expected) {
        throw InvalidArgument(what + " expects " + std::to_string(expected) + " comma-separated values");
    }
    return values;
}

char single_char(const std::string& s, const std::string& what) {
    if (s.size() != 1) throw InvalidArgument(what + " must be a single character");
    return s[0];
}

PotentialMode parse_mode(const std::string& s) {
    if (s == "direct") return PotentialMode::Direct;
    if (s == "inverse") return PotentialMode::Inverse;
    throw InvalidArgument("--mode must be 'direct' or 'inverse'");
}

void add_input_options(CLI::App* cmd, InputOptions& in) {
    cmd->add_option("input", in.path, "CSV file with one point per row")->required();
    cmd->add_option("--delimiter", in.delimiter, "Field delimiter")->capture_default_str();
    cmd->add_option("--decimal", in.decimal, "Decimal mark")->capture_default_str();
    cmd->add_option("--columns", in.columns, "0-based columns to use (default: all but 'truth')")
        ->delimiter(',');
    cmd->add_option("--missing", in.missing, "Missing-value marker to impute with the column mean");
}

struct LoadedInput {
    Matrix data;
    std::vector<std::size_t> dropped_columns;
    std::vector<std::string> diagnostics;
};

LoadedInput load_input(const InputOptions& in) {
    CsvOptions opts;
    opts.delimiter = single_char(in.delimiter, "--delimiter");
    opts.decimal = single_char(in.decimal, "--decimal");
    opts.include_columns = in.columns;
    opts.missing_sentinel = in.missing;
    CsvTable table = read_csv(in.path, opts);
    LoadedInput out{std::move(table.data), table.dropped_columns, table.diagnostics};
    if (in.columns.empty()) {
        const auto it = std::find(table.column_names.begin(), table.column_names.end(), "truth");
        if (it != table.column_names.end()) {
            const auto drop = static_cast<Eigen::Index>(it - table.column_names.begin());
            Matrix kept(out.data.rows(), out.data.cols() - 1);
            for (Eigen::Index j = 0, c = 0; j < out.data.cols(); ++j) {
                if (j != drop) kept.col(c++) = out.data.col(j);
            }
            if (kept.cols() == 0) throw DataError("input has no coordinate columns besides 'truth'");
            out.data = std::move(kept);
        }
    }
    return out;
}

QcParams make_params(const DetectOptions& o) {
    QcParams p;
    p.sigma = parse_auto(o.sigma, "--sigma");
    if (p.sigma) KernelWidth check(*p.sigma);
    p.k = o.k;
    if (p.k && *p.k < 1) throw InvalidArgument("--k must be at least 1");
    p.merge_radius = parse_auto(o.merge_radius, "--merge-radius");
    if (p.merge_radius && !(*p.merge_radius > 0.0)) {
        throw InvalidArgument("--merge-radius must satisfy merge_radius > 0");
    }
    p.mode = parse_mode(o.mode);
    p.num_bins = o.bins;
    p.threads = o.threads;
    p.opt.max_iters = o.max_iters;
    return p;
}

void print_summary(const RunReport& r, std::ostream& out) {
    out << "n=" << r.n << " d=" << r.d << " sigma=" << format_double(r.sigma)
        << (r.sigma_estimated ? " (estimated)" : "") << " k=" << r.k
        << " merge_radius=" << format_double(r.merge_radius) << " clusters=" << r.cluster_count()
        << " outliers=" << r.outlier_count << "\n";
}

int run_pipeline(Matrix data, const std::string& input, const DetectOptions& o,
                 std::vector<std::size_t> dropped, std::vector<std::string> diagnostics,
                 bool standardized_already, std::ostream& out, std::ostream& err) {
    const QcParams params = make_params(o);
    RunReport report;
    bool standardized = standardized_already;
    if (o.standardize && !standardized_already) {
        Standardized st = standardize(data);
        for (std::size_t j : st.dropped_columns) {
            diagnostics.push_back("dropped constant column " + std::to_string(j));
        }
        data = std::move(st.data);
        standardized = true;
    }
    std::vector<double> ratios;
    std::optional<std::size_t> pca_m;
    if (o.pca) {
        const PcaModel model = pca_fit(data, *o.pca);
        for (const auto& msg : model.diagnostics) diagnostics.push_back(msg);
        data = pca_project(model, data);
        ratios = model.explained_variance_ratio;
        pca_m = model.component_count();
    }

    const Dataset dataset(std::move(data));
    const ClusterResult result = detect(dataset, params);
    report = make_report(result);
    report.input = input;
    report.seed = o.seed;
    report.standardized = standardized;
    report.pca_components = pca_m;
    report.pca_explained_variance_ratio = ratios;
    report.dropped_columns = std::move(dropped);
    report.warnings.insert(report.warnings.begin(), diagnostics.begin(), diagnostics.end());
    for (const auto& w : result.warnings) err << "warning: " << w << "\n";

    if (o.out.empty()) {
        out << report_to_json(report);
    } else {
        write_report(report, o.out);
        print_summary(report, out);
    }
    return kExitOk;
}

void add_detect_options(CLI::App* cmd, DetectOptions& o, bool with_pca) {
    cmd->add_option("--sigma", o.sigma, "Kernel width, or 'auto' for the distance-histogram estimate")
        ->capture_default_str();
    cmd->add_option("--k", o.k, "Clusters smaller than k are outliers (default max(2, ceil(0.05 n)))");
    cmd->add_option("--merge-radius", o.merge_radius, "Basin merge radius, or 'auto' for sigma/4")
        ->capture_default_str();
    cmd->add_option("--mode", o.mode, "direct or inverse")->capture_default_str();
    if (with_pca) {
        cmd->add_option("--pca", o.pca, "Project onto the top M principal components first");
        cmd->add_flag("--standardize", o.standardize, "Standardize columns first");
    }
    cmd->add_option("--seed", o.seed, "Seed recorded in the report");
    cmd->add_option("--out", o.out, "Report path (default: JSON to stdout)");
    cmd->add_option("--bins", o.bins, "Histogram bins for the sigma estimate")->capture_default_str();
    cmd->add_option("--threads", o.threads, "Descent threads (0: hardware)")->capture_default_str();
    cmd->add_option("--max-iters", o.max_iters, "BFGS iteration cap per point")->capture_default_str();
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Quantum clustering outlier detection"};
    app.name(args.empty() ? "qc" : args.front());
    app.require_subcommand(1);

    InputOptions detect_in;
    DetectOptions detect_opt;
    auto* detect_cmd = app.add_subcommand("detect", "Cluster a CSV dataset and flag small clusters");
    add_input_options(detect_cmd, detect_in);
    add_detect_options(detect_cmd, detect_opt, true);

    InputOptions grid_in;
    std::string grid_sigma = "auto";
    std::string grid_mode = "direct";
    std::string grid_bounds;
    std::string grid_resolution = "100,100";
    std::string grid_out;
    auto* grid_cmd = app.add_subcommand("grid", "Sample the potential of 2-D data on a lattice");
    add_input_options(grid_cmd, grid_in);
    grid_cmd->add_option("--sigma", grid_sigma, "Kernel width or 'auto'")->capture_default_str();
    grid_cmd->add_option("--mode", grid_mode, "direct or inverse")->capture_default_str();
    grid_cmd->add_option("--bounds", grid_bounds, "xlo,xhi,ylo,yhi (default: data box plus 3 sigma)");
    grid_cmd->add_option("--resolution", grid_resolution, "nx,ny")->capture_default_str();
    grid_cmd->add_option("--out", grid_out, "Grid CSV path (default: stdout)");

    std::string gen_scenario;
    std::uint64_t gen_seed = 1;
    std::string gen_params;
    std::string gen_out;
    auto* gen_cmd = app.add_subcommand("gen", "Generate a synthetic scenario with planted outliers");
    gen_cmd->add_option("--scenario", gen_scenario, "A..F")->required();
    gen_cmd->add_option("--seed", gen_seed, "Generator seed")->capture_default_str();
    gen_cmd->add_option("--params", gen_params, "Overrides, name=value,name=value");
    gen_cmd->add_option("--out", gen_out, "CSV path (default: stdout)");

    InputOptions sigma_in;
    std::size_t sigma_bins = kDefaultHistogramBins;
    auto* sigma_cmd = app.add_subcommand("sigma", "Estimate sigma and print the distance histogram");
    add_input_options(sigma_cmd, sigma_in);
    sigma_cmd->add_option("--bins", sigma_bins, "Histogram bins")->capture_default_str();

    std::string aq_path;
    DetectOptions aq_opt;
    aq_opt.sigma = "6";
    aq_opt.pca = 2;
    bool aq_no_standardize = false;
    auto* aq_cmd = app.add_subcommand("airquality",
                                      "UCI air-quality pipeline: standardize, PCA, detect");
    aq_cmd->add_option("path", aq_path, std::string("Path to ") + kAirQualityFileName)->required();
    add_detect_options(aq_cmd, aq_opt, false);
    aq_cmd->add_option("--pca", aq_opt.pca, "Principal components kept")->capture_default_str();
    aq_cmd->add_flag("--no-standardize", aq_no_standardize, "Skip column standardization");

    std::vector<std::string> argv_tail(args.size() > 1 ? args.begin() + 1 : args.end(), args.end());
    std::reverse(argv_tail.begin(), argv_tail.end());
    try {
        app.parse(argv_tail);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kExitUsage;
    }

    try {
        if (*detect_cmd) {
            LoadedInput in = load_input(detect_in);
            return run_pipeline(std::move(in.data), detect_in.path, detect_opt, std::move(in.dropped_columns),
                                std::move(in.diagnostics), false, out, err);
        }
        if (*grid_cmd) {
            const PotentialMode mode = parse_mode(grid_mode);
            std::optional<double> sigma = parse_auto(grid_sigma, "--sigma");
            const auto res = parse_list(grid_resolution, 2, "--resolution");
            for (double r : res) {
                if (!(r >= 2.0) || r != std::floor(r)) {
                    throw InvalidArgument("--resolution values must be integers >= 2");
                }
            }
            std::optional<std::vector<double>> bounds;
            if (!grid_bounds.empty()) bounds = parse_list(grid_bounds, 4, "--bounds");
            if (sigma) KernelWidth check(*sigma);
            LoadedInput in = load_input(grid_in);
            const Dataset dataset(std::move(in.data));
            const double s = sigma ? *sigma : estimate_sigma(dataset).sigma.value();
            const PotentialField field(dataset, KernelWidth(s), mode);
            GridSpec spec;
            if (bounds) {
                spec.lo = {(*bounds)[0], (*bounds)[2]};
                spec.hi = {(*bounds)[1], (*bounds)[3]};
            } else {
                if (dataset.dim() != 2) throw InvalidArgument("potential grids require 2-D data");
                const auto& pts = dataset.points();
                spec.lo = {pts.col(0).minCoeff() - 3 * s, pts.col(1).minCoeff() - 3 * s};
                spec.hi = {pts.col(0).maxCoeff() + 3 * s, pts.col(1).maxCoeff() + 3 * s};
            }
            spec.resolution = {static_cast<std::size_t>(res[0]), static_cast<std::size_t>(res[1])};
            const PotentialGrid grid = potential_grid(field, spec);
            if (grid_out.empty()) {
                write_grid(grid, out);
            } else {
                write_grid(grid, grid_out);
            }
            return kExitOk;
        }
        if (*gen_cmd) {
            const ScenarioId id = parse_scenario_id(gen_scenario);
            ScenarioParams params = ScenarioParams::defaults(id);
            params.apply_overrides(gen_params);
            const Scenario sc = generate(id, gen_seed, params);
            if (gen_out.empty()) {
                write_scenario(sc, out);
            } else {
                write_scenario(sc, gen_out);
                out << "scenario " << scenario_letter(id) << " seed " << gen_seed << ": n=" << sc.dataset.size()
                    << " planted=" << sc.planted_count() << "\n";
            }
            return kExitOk;
        }
        if (*sigma_cmd) {
            LoadedInput in = load_input(sigma_in);
            const SigmaEstimate est = estimate_sigma(Dataset(std::move(in.data)), sigma_bins);
            out << "sigma " << format_double(est.sigma.value()) << "\n";
            out << "bin_lo,bin_hi,count\n";
            for (std::size_t b = 0; b < est.histogram.counts.size(); ++b) {
                out << format_double(est.histogram.bin_edges[b]) << ','
                    << format_double(est.histogram.bin_edges[b + 1]) << ',' << est.histogram.counts[b] << "\n";
            }
            return kExitOk;
        }
        if (*aq_cmd) {
            make_params(aq_opt);   // validate flags before the expensive load
            AirQualityData aq = load_air_quality(std::filesystem::path(aq_path), !aq_no_standardize);
            return run_pipeline(aq.dataset.points(), aq_path, aq_opt, {}, std::move(aq.diagnostics),
                                !aq_no_standardize, out, err);
        }
    } catch (const InvalidArgument& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}

}  // namespace qc
