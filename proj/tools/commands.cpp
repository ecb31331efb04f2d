#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "funcirc/curve_io.hpp"
#include "funcirc/errors.hpp"
#include "funcirc/model_io.hpp"
#include "funcirc/regression.hpp"
#include "funcirc/simulation.hpp"

namespace funcirc::cli {

namespace {

namespace fs = std::filesystem;

/// Summary of one invocation, printed as JSON on the diagnostic stream.
struct RunReport {
    std::string command;
    std::uint64_t digest = 0xcbf29ce484222325ULL;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> outputs;
    std::vector<std::string> warnings;

    void absorb(std::string_view bytes) {
        for (unsigned char ch : bytes) {
            digest = (digest ^ ch) * 0x100000001b3ULL;
        }
    }
};

/// Failure that maps onto a specific exit code.
struct CommandFailure {
    int code;
    std::string message;
};

std::string read_file(const std::string& path, RunReport& report) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw CommandFailure{kUsageError, "cannot open '" + path + "'"};
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    std::string text = ss.str();
    report.absorb(text);
    return text;
}

/// Writes to a sibling temporary and renames it over `path`.
void write_file_atomic(const std::string& path, const std::string& content, RunReport& report) {
    const fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw CommandFailure{kUsageError, "cannot write '" + path + "'"};
        }
        out << content;
        out.close();
        if (!out) {
            throw CommandFailure{kUsageError, "failed writing '" + path + "'"};
        }
    }
    fs::rename(tmp, target);
    report.outputs.push_back(path);
}

std::string with_suffix(const std::string& path, const std::string& suffix) {
    fs::path p(path);
    const std::string stem = p.stem().string();
    return (p.parent_path() / (stem + suffix)).string();
}

std::string format_score(double x) { return std::isinf(x) ? std::string("inf") : format_double(x); }

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
    std::string scenario;
    std::string out;
    std::optional<std::size_t> replicates;
    std::optional<std::uint64_t> seed;
    unsigned threads = 0;
};

void cmd_simulate(const SimulateArgs& a, RunReport& report, std::ostream& log) {
    Scenario scenario;
    try {
        scenario = parse_scenario(nlohmann::json::parse(read_file(a.scenario, report)));
    } catch (const nlohmann::json::parse_error& e) {
        throw CommandFailure{kUsageError, "scenario is not valid JSON: " + std::string(e.what())};
    }
    std::ostringstream csv;
    write_results_header(csv);
    std::size_t feasible_cells = 0;
    for (ScenarioConfig cell : scenario.cells) {
        if (a.replicates) {
            cell.replicates = *a.replicates;
        }
        if (a.seed) {
            cell.seed = *a.seed;
        }
        cell.validate();
        report.seed = cell.seed;
        const AggregateRow row = run_replicates(cell, scenario.grid, a.threads);
        log << "simulate: " << regression_kind_name(cell.regression_kind) << ' ' << mode_name(cell.estimator)
            << " n=" << cell.n << " kappa=" << cell.kappa << " mean_case_cv=" << row.mean_case_cv << '\n';
        if (row.excluded > 0) {
            report.warnings.push_back(std::to_string(row.excluded) + " of " + std::to_string(cell.replicates) +
                                      " replicates excluded (no feasible smoothing parameter) for n=" +
                                      std::to_string(cell.n) + " kappa=" + format_double(cell.kappa));
        }
        if (row.excluded < cell.replicates) {
            ++feasible_cells;
        }
        write_results_row(csv, row);
    }
    if (feasible_cells == 0) {
        throw CommandFailure{kInfeasible, "cross-validation was infeasible in every replicate"};
    }
    write_file_atomic(a.out, csv.str(), report);
}

// ---------------------------------------------------------------- fit

struct FitArgs {
    std::string curves;
    std::string responses;
    std::string out_model;
    std::string out_trace;
    std::string kernel = "quadratic";
    std::string mode = "nw";
    BandwidthGridParams grid;
    std::optional<std::size_t> points;
    bool drop_incomplete = false;
};

bool looks_like_date(const std::string& id) {
    CalendarDate d;
    return parse_iso_date(id, d);
}

CurveTable load_curve_table(const std::string& path, std::optional<std::size_t> points, bool drop_incomplete,
                            RunReport& report) {
    const std::string text = read_file(path, report);
    CurveCsvOptions opts;
    opts.drop_incomplete = drop_incomplete;
    if (points && *points > 0) {
        opts.expected_points = points;
    }
    std::istringstream in(text);
    CurveTable table = read_curve_table(in, opts);
    if (!points && looks_like_date(table.ids.front()) && table.grid->size() != 144) {
        throw FormatError("daily curve file has " + std::to_string(table.grid->size()) +
                          " value columns, expected 144 (pass --points to override)");
    }
    for (std::size_t line : table.dropped_lines) {
        report.warnings.push_back("dropped incomplete row at line " + std::to_string(line));
    }
    return table;
}

void cmd_fit(const FitArgs& a, RunReport& report, std::ostream& log) {
    const Kernel kernel = parse_kernel(a.kernel);
    const EstimatorMode mode = parse_mode(a.mode);
    const CurveTable table = load_curve_table(a.curves, a.points, a.drop_incomplete, report);
    Dataset data = a.responses.empty()
                       ? Dataset(table.curves, responses_from_dates(table.ids), table.ids)
                       : [&] {
                             std::istringstream in(read_file(a.responses, report));
                             return attach_responses(table, read_responses_csv(in));
                         }();

    const LoocvProblem problem(data);
    std::ostringstream trace;
    trace << "candidate,score\n";
    std::optional<FittedModel> model;
    if (mode == EstimatorMode::nw) {
        const auto candidates = bandwidth_grid(problem.distances(), a.grid);
        const BandwidthSelection sel = select_bandwidth_cv(problem, kernel, candidates);
        for (std::size_t g = 0; g < sel.candidates.size(); ++g) {
            trace << format_double(sel.candidates[g]) << ',' << format_score(sel.scores[g]) << '\n';
        }
        log << "fit: h_cv=" << sel.bandwidth << " score=" << sel.scores[sel.index] << '\n';
        model.emplace(std::move(data), kernel, Bandwidth{sel.bandwidth});
    } else {
        std::vector<std::size_t> ks(data.size() - 1);
        for (std::size_t k = 0; k < ks.size(); ++k) {
            ks[k] = k + 1;
        }
        const NeighborSelection sel = select_k_cv(problem, ks);
        for (std::size_t g = 0; g < sel.candidates.size(); ++g) {
            trace << sel.candidates[g] << ',' << format_score(sel.scores[g]) << '\n';
        }
        log << "fit: k_cv=" << sel.neighbors << " score=" << sel.scores[sel.index] << '\n';
        model.emplace(std::move(data), kernel, NeighborCount{sel.neighbors});
    }
    const std::string trace_path = a.out_trace.empty() ? with_suffix(a.out_model, "_cv.csv") : a.out_trace;
    write_file_atomic(a.out_model, save_model(*model), report);
    write_file_atomic(trace_path, trace.str(), report);
}

// ---------------------------------------------------------------- predict

struct PredictArgs {
    std::string model;
    std::string curves;
    std::string out;
    std::optional<double> ci;
    std::optional<double> pilot_resid;
    std::optional<double> pilot_var;
    int year_length = 365;
    bool fallback_mean = false;
};

void cmd_predict(const PredictArgs& a, RunReport& report, std::ostream& log) {
    const FittedModel model = load_model(read_file(a.model, report));
    const CurveTable table = load_curve_table(a.curves, std::size_t{0}, false, report);
    if (!same_grid(table.grid, model.training().grid())) {
        throw IncompatibleGrids("curves in '" + a.curves + "' use a different grid (" +
                                std::to_string(table.grid->size()) + " points) than the model (" +
                                std::to_string(model.training().grid()->size()) + " points)");
    }

    std::optional<SineVarianceEstimator> variance;
    if (a.ci) {
        if (model.mode() != EstimatorMode::nw || model.kernel() != Kernel::uniform) {
            throw UnsupportedKernel(
                "--ci needs a Nadaraya-Watson model fitted with the uniform kernel; the interval's closed form "
                "only holds for K(u) = 1 on [0, 1]");
        }
        PilotBandwidths pilots;
        if (!a.pilot_resid || !a.pilot_var) {
            pilots = default_pilots(model);
        }
        if (a.pilot_resid) {
            pilots.residual = *a.pilot_resid;
        }
        if (a.pilot_var) {
            pilots.variance = *a.pilot_var;
        }
        log << "predict: pilots residual=" << pilots.residual << " variance=" << pilots.variance << '\n';
        variance.emplace(model, pilots);
    }

    std::ostringstream csv;
    csv << "id,pred_angle_rad,pred_day";
    if (a.ci) {
        csv << ",ci_lo_rad,ci_hi_rad";
    }
    csv << '\n';
    PredictOptions opts;
    opts.fallback_to_global_mean = a.fallback_mean;
    for (std::size_t i = 0; i < table.curves.size(); ++i) {
        const std::string& id = table.ids[i];
        CalendarDate date;
        const int ylen = parse_iso_date(id, date) ? year_length(date.year) : a.year_length;
        Angle pred;
        std::optional<CiEstimate> ci;
        if (a.ci) {
            ci = confidence_interval(model, table.curves[i], *a.ci, *variance);
            pred = ci->center;
        } else {
            pred = predict(model, table.curves[i], id, opts);
        }
        csv << id << ',' << format_double(pred.radians()) << ',' << format_double(angle_to_day(pred, ylen));
        if (ci) {
            csv << ',' << format_double(ci->lower()) << ',' << format_double(ci->upper());
        }
        csv << '\n';
    }
    write_file_atomic(a.out, csv.str(), report);
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
    std::string pairs;
    std::string out;
    std::string out_summary;
    std::optional<int> year;
};

void cmd_evaluate(const EvaluateArgs& a, RunReport& report, std::ostream&) {
    std::istringstream in(read_file(a.pairs, report));
    std::string line;
    if (!std::getline(in, line)) {
        throw FormatError("pairs file is empty: missing header");
    }
    const auto header = split_csv_line(line);
    auto column = [&](std::initializer_list<const char*> names) -> std::optional<std::size_t> {
        for (const char* name : names) {
            for (std::size_t c = 0; c < header.size(); ++c) {
                if (header[c] == name) {
                    return c;
                }
            }
        }
        return std::nullopt;
    };
    const auto id_col = column({"id"});
    const auto pred_col = column({"pred_angle_rad", "predicted_rad"});
    const auto obs_col = column({"observed_rad"});
    if (!id_col || !pred_col) {
        throw FormatError("pairs file needs 'id' and 'pred_angle_rad' (or 'predicted_rad') columns");
    }

    std::vector<Angle> observed;
    std::vector<Angle> predicted;
    std::vector<std::string> months;
    std::map<std::string, std::size_t> before_filter;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size()) {
            throw ParseError("line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                                 " cells, expected " + std::to_string(header.size()),
                             line_no, 0);
        }
        CalendarDate date;
        if (!parse_iso_date(cells[*id_col], date)) {
            throw ParseError("id '" + cells[*id_col] + "' at line " + std::to_string(line_no) +
                                 " is not a YYYY-MM-DD date",
                             line_no, *id_col + 1);
        }
        auto angle_cell = [&](std::size_t c) {
            const auto v = parse_double(cells[c]);
            if (!v) {
                throw ParseError("non-numeric angle at line " + std::to_string(line_no) + ", column " +
                                     std::to_string(c + 1),
                                 line_no, c + 1);
            }
            return Angle::from_radians(*v);
        };
        char month[3];
        std::snprintf(month, sizeof(month), "%02u", date.month);
        ++before_filter[month];
        if (a.year && date.year != *a.year) {
            continue;
        }
        observed.push_back(obs_col ? angle_cell(*obs_col) : date_to_angle(date));
        predicted.push_back(angle_cell(*pred_col));
        months.emplace_back(month);
    }
    for (const auto& [m, count] : before_filter) {
        if (std::find(months.begin(), months.end(), m) == months.end()) {
            report.warnings.push_back("month " + m + " has no rows after filtering; omitted");
        }
    }
    if (observed.empty()) {
        throw FormatError("no rows left to evaluate");
    }

    const auto per_month = cape(observed, predicted, months);
    std::ostringstream cape_csv;
    cape_csv << "month,n,cape\n";
    std::ostringstream summary_csv;
    summary_csv << "month,n,median_rad,lower_quartile_offset_rad,upper_quartile_offset_rad,mean_cos_error\n";
    for (const auto& [m, value] : per_month) {
        std::vector<Angle> errors;
        for (std::size_t i = 0; i < months.size(); ++i) {
            if (months[i] == m) {
                errors.push_back(observed[i] - predicted[i]);
            }
        }
        const CircularSummary s = circ_error_summary(errors);
        const int month_number = std::stoi(m);
        cape_csv << month_number << ',' << errors.size() << ',' << format_double(value) << '\n';
        summary_csv << month_number << ',' << errors.size() << ',' << format_double(s.median.radians()) << ','
                    << format_double(s.lower_quartile_offset) << ',' << format_double(s.upper_quartile_offset)
                    << ',' << format_double(s.mean_cosine_error) << '\n';
    }
    write_file_atomic(a.out, cape_csv.str(), report);
    write_file_atomic(a.out_summary.empty() ? with_suffix(a.out, "_summary.csv") : a.out_summary,
                      summary_csv.str(), report);
}

void print_report(const RunReport& report, double seconds, int code, std::ostream& log) {
    nlohmann::json j;
    j["command"] = report.command;
    char digest[17];
    std::snprintf(digest, sizeof(digest), "%016llx", static_cast<unsigned long long>(report.digest));
    j["config_digest"] = digest;
    j["seed"] = report.seed ? nlohmann::json(*report.seed) : nlohmann::json(nullptr);
    j["outputs"] = report.outputs;
    j["duration_s"] = seconds;
    j["warnings"] = report.warnings;
    j["exit_code"] = code;
    log << j.dump() << '\n';
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& log) {
    CLI::App app{"Nonparametric regression of circular responses on functional covariates", "funcirc"};
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo study of the estimator on simulated curves");
    simulate->add_option("--scenario", sim.scenario, "Scenario JSON")->required();
    simulate->add_option("--out", sim.out, "Results CSV")->required();
    simulate->add_option("--replicates", sim.replicates, "Override replicate count");
    simulate->add_option("--seed", sim.seed, "Override seed");
    simulate->add_option("--threads", sim.threads, "Worker threads (default FUNC_CIRC_THREADS or 1)");

    FitArgs fit_args;
    auto* fit_cmd = app.add_subcommand("fit", "Fit a model with cross-validated smoothing");
    fit_cmd->add_option("--curves", fit_args.curves, "Wide curve CSV")->required();
    fit_cmd->add_option("--responses", fit_args.responses, "Response CSV (id,angle_rad); default: from date ids");
    fit_cmd->add_option("--out-model", fit_args.out_model, "Model JSON")->required();
    fit_cmd->add_option("--out-trace", fit_args.out_trace, "CV trace CSV (default <model>_cv.csv)");
    fit_cmd->add_option("--kernel", fit_args.kernel, "uniform or quadratic")
        ->required()
        ->check(CLI::IsMember({"uniform", "quadratic"}));
    fit_cmd->add_option("--mode", fit_args.mode, "nw or knn")->check(CLI::IsMember({"nw", "knn"}));
    fit_cmd->add_option("--grid-size", fit_args.grid.size, "Number of candidate bandwidths");
    fit_cmd->add_option("--grid-lo", fit_args.grid.lo_q, "Lower distance quantile of the bandwidth grid");
    fit_cmd->add_option("--grid-hi", fit_args.grid.hi_q, "Upper distance quantile of the bandwidth grid");
    fit_cmd->add_option("--points", fit_args.points, "Required value columns (0 disables; default 144 for dated rows)");
    fit_cmd->add_flag("--drop-incomplete", fit_args.drop_incomplete, "Drop rows with missing cells");

    PredictArgs pred;
    auto* predict_cmd = app.add_subcommand("predict", "Predict directions for new curves");
    predict_cmd->add_option("--model", pred.model, "Model JSON")->required();
    predict_cmd->add_option("--curves", pred.curves, "Wide curve CSV")->required();
    predict_cmd->add_option("--out", pred.out, "Predictions CSV")->required();
    predict_cmd->add_option("--ci", pred.ci, "Confidence interval level alpha")->check(CLI::Range(0.0, 1.0));
    predict_cmd->add_option("--pilot-resid", pred.pilot_resid, "Pilot bandwidth of the residual fit");
    predict_cmd->add_option("--pilot-var", pred.pilot_var, "Pilot bandwidth of the variance fit");
    predict_cmd->add_option("--year-length", pred.year_length, "Days per year for non-date ids");
    predict_cmd->add_flag("--fallback-mean", pred.fallback_mean,
                          "Use the global circular mean when the local direction is undefined");

    EvaluateArgs eval;
    auto* evaluate = app.add_subcommand("evaluate", "Monthly CAPE and circular error summaries");
    evaluate->add_option("--pairs", eval.pairs, "CSV with id and predicted angle (e.g. predict output)")->required();
    evaluate->add_option("--out", eval.out, "CAPE CSV")->required();
    evaluate->add_option("--out-summary", eval.out_summary, "Summary CSV (default <out>_summary.csv)");
    evaluate->add_option("--year", eval.year, "Only evaluate rows from this year");

    std::vector<std::string> owned(args.begin(), args.end());
    if (owned.empty()) {
        owned.emplace_back("funcirc");
    }
    std::vector<char*> argv;
    for (auto& s : owned) {
        argv.push_back(s.data());
    }
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, log, log);
        return code == 0 ? kSuccess : kUsageError;
    }

    RunReport report;
    for (std::size_t i = 1; i < owned.size(); ++i) {
        report.command += (i > 1 ? " " : "") + owned[i];
    }
    report.absorb(report.command);
    const auto start = std::chrono::steady_clock::now();
    int code = kSuccess;
    try {
        if (*simulate) {
            cmd_simulate(sim, report, log);
        } else if (*fit_cmd) {
            cmd_fit(fit_args, report, log);
        } else if (*predict_cmd) {
            cmd_predict(pred, report, log);
        } else if (*evaluate) {
            cmd_evaluate(eval, report, log);
        }
    } catch (const CommandFailure& f) {
        log << "error: " << f.message << '\n';
        code = f.code;
    } catch (const NoFeasibleBandwidth& e) {
        log << "error: " << e.what() << '\n';
        code = kInfeasible;
    } catch (const EmptyNeighborhood& e) {
        log << "error: " << e.what() << " (bandwidth too small for this curve)\n";
        code = kInfeasible;
    } catch (const DegenerateDataset& e) {
        log << "error: " << e.what() << '\n';
        code = kInfeasible;
    } catch (const DegenerateDirection& e) {
        log << "error: " << e.what() << '\n';
        code = kInfeasible;
    } catch (const Error& e) {
        log << "error: " << e.what() << '\n';
        code = kUsageError;
    } catch (const fs::filesystem_error& e) {
        log << "error: " << e.what() << '\n';
        code = kUsageError;
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    print_report(report, seconds, code, log);
    return code;
}

}  // namespace funcirc::cli
