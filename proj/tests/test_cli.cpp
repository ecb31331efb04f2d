#include <doctest.h>

#include <cmath>
#include <numbers>

#include <nlohmann/json.hpp>

#include "cli_support.hpp"
#include "test_support.hpp"
#include "funcirc/circular.hpp"
#include "funcirc/curve_io.hpp"
#include "funcirc/functional.hpp"
#include "funcirc/model_io.hpp"
#include "funcirc/regression.hpp"

using namespace funcirc;
using testing::run_cli;
using testing::read_text;
using testing::write_text;
using std::numbers::pi;

namespace {

std::vector<std::string> daily_ids(int year, int count, int step) {
    std::vector<std::string> ids;
    for (int i = 0; i < count; ++i) {
        const int doy = 1 + i * step;
        // Walk the calendar by hand: enough for doy <= 365.
        static constexpr int days[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
        int m = 0, d = doy;
        while (d > days[m]) {
            d -= days[m];
            ++m;
        }
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", year, m + 1, d);
        ids.emplace_back(buf);
    }
    return ids;
}

std::vector<double> date_angles(const std::vector<std::string>& ids) {
    std::vector<double> out;
    for (const Angle a : responses_from_dates(ids)) {
        out.push_back(a.radians());
    }
    return out;
}

}  // namespace

TEST_CASE("usage errors") {
    CHECK(run_cli({}) == cli::kUsageError);
    CHECK(run_cli({"bogus"}) == cli::kUsageError);
    CHECK(run_cli({"--help"}) == cli::kSuccess);
    CHECK(run_cli({"fit", "--curves", "x.csv"}) == cli::kUsageError);
    CHECK(run_cli({"fit", "--curves", "/nonexistent/x.csv", "--out-model", "/nonexistent/m.json", "--kernel",
                   "uniform"}) == cli::kUsageError);
    CHECK(run_cli({"fit", "--curves", "x.csv", "--out-model", "m.json", "--kernel", "gaussian"}) ==
          cli::kUsageError);
}

TEST_CASE("simulate") {
    testing::TempDir dir("sim");
    write_text(dir / "s.json", R"({"regression_kind": "r1", "n": 50, "kappa": 5, "replicates": 5, "seed": 4})");
    std::string log;
    REQUIRE(run_cli({"simulate", "--scenario", dir / "s.json", "--out", dir / "a.csv"}, &log) == 0);
    REQUIRE(run_cli({"simulate", "--scenario", dir / "s.json", "--out", dir / "b.csv", "--threads", "2"}) == 0);
    const std::string a = read_text(dir / "a.csv");
    CHECK(a == read_text(dir / "b.csv"));
    const auto lines = testing::split_lines(a);
    REQUIRE(lines.size() == 2);
    CHECK(lines[0] == "kind,estimator,n,kappa,replicates,mean_case_cv,mean_case_oracle,excluded");
    CHECK(lines[1].rfind("r1,nw,50,5,5,", 0) == 0);

    // The run report is the last JSON line of the log.
    const auto log_lines = testing::split_lines(log);
    const auto report = nlohmann::json::parse(log_lines.back());
    CHECK(report["exit_code"] == 0);
    CHECK(report["seed"] == 4);
    CHECK(report["outputs"][0] == dir / "a.csv");

    REQUIRE(run_cli({"simulate", "--scenario", dir / "s.json", "--out", dir / "c.csv", "--seed", "5"}) == 0);
    CHECK(read_text(dir / "c.csv") != a);

    write_text(dir / "bad.json", R"({"n": 50, "kapa": 5})");
    CHECK(run_cli({"simulate", "--scenario", dir / "bad.json", "--out", dir / "d.csv"}) == cli::kUsageError);
    write_text(dir / "broken.json", "{");
    CHECK(run_cli({"simulate", "--scenario", dir / "broken.json", "--out", dir / "d.csv"}) == cli::kUsageError);
    CHECK(!std::filesystem::exists(dir / "d.csv"));
}

TEST_CASE("fit, trace and predict") {
    testing::TempDir dir("fit");
    const auto ids = daily_ids(2019, 40, 9);
    const auto angles = date_angles(ids);
    write_text(dir / "train.csv", testing::angle_curves_csv(ids, angles, 144));

    std::string log;
    REQUIRE(run_cli({"fit", "--curves", dir / "train.csv", "--out-model", dir / "m.json", "--kernel", "uniform"},
                    &log) == 0);
    const FittedModel m = load_model(read_text(dir / "m.json"));
    CHECK(m.training().size() == 40);

    // Trace sorted by candidate; its argmin is the stored bandwidth.
    const auto trace = testing::split_lines(read_text(dir / "m_cv.csv"));
    REQUIRE(trace.front() == "candidate,score");
    double prev = -1, best = INFINITY, best_h = 0;
    for (std::size_t i = 1; i < trace.size(); ++i) {
        const auto cells = split_csv_line(trace[i]);
        const double h = *parse_double(cells[0]);
        const double score = cells[1] == "inf" ? INFINITY : *parse_double(cells[1]);
        CHECK(h > prev);
        prev = h;
        if (score < best) {
            best = score;
            best_h = h;
        }
    }
    CHECK(best_h == m.bandwidth());

    REQUIRE(run_cli({"fit", "--curves", dir / "train.csv", "--out-model", dir / "m2.json", "--kernel", "uniform"}) ==
            0);
    CHECK(read_text(dir / "m.json") == read_text(dir / "m2.json"));
    CHECK(read_text(dir / "m_cv.csv") == read_text(dir / "m2_cv.csv"));

    REQUIRE(run_cli({"predict", "--model", dir / "m.json", "--curves", dir / "train.csv", "--out", dir / "p.csv"}) ==
            0);
    REQUIRE(run_cli({"predict", "--model", dir / "m.json", "--curves", dir / "train.csv", "--out", dir / "p2.csv"}) ==
            0);
    CHECK(read_text(dir / "p.csv") == read_text(dir / "p2.csv"));
    const auto preds = testing::split_lines(read_text(dir / "p.csv"));
    REQUIRE(preds.size() == 41);
    CHECK(preds[0] == "id,pred_angle_rad,pred_day");
    for (std::size_t i = 1; i < preds.size(); ++i) {
        const auto cells = split_csv_line(preds[i]);
        const double a = *parse_double(cells[1]);
        CHECK(a >= 0.0);
        CHECK(a < kTwoPi);
        CHECK(*parse_double(cells[2]) == doctest::Approx(angle_to_day(Angle::from_radians(a), 365)));
    }

    SUBCASE("kNN mode") {
        REQUIRE(run_cli({"fit", "--curves", dir / "train.csv", "--out-model", dir / "k.json", "--kernel", "uniform",
                         "--mode", "knn"}) == 0);
        const FittedModel k = load_model(read_text(dir / "k.json"));
        CHECK(k.mode() == EstimatorMode::knn);
        const auto kt = testing::split_lines(read_text(dir / "k_cv.csv"));
        CHECK(kt.size() == 40);
        CHECK(run_cli({"predict", "--model", dir / "k.json", "--curves", dir / "train.csv", "--out", dir / "kp.csv",
                       "--ci", "0.05"}) == cli::kUsageError);
    }
    SUBCASE("quadratic kernel rejects intervals") {
        REQUIRE(run_cli({"fit", "--curves", dir / "train.csv", "--out-model", dir / "q.json", "--kernel",
                         "quadratic"}) == 0);
        std::string qlog;
        CHECK(run_cli({"predict", "--model", dir / "q.json", "--curves", dir / "train.csv", "--out", dir / "qp.csv",
                       "--ci", "0.05"},
                      &qlog) == cli::kUsageError);
        CHECK(qlog.find("uniform kernel") != std::string::npos);
    }
    SUBCASE("grid mismatch") {
        write_text(dir / "short.csv", testing::angle_curves_csv(ids, angles, 100));
        CHECK(run_cli({"predict", "--model", dir / "m.json", "--curves", dir / "short.csv", "--out", dir / "x.csv"}) ==
              cli::kUsageError);
    }
}

TEST_CASE("daily layout column count") {
    testing::TempDir dir("cols");
    const auto ids = daily_ids(2003, 12, 30);
    const auto angles = date_angles(ids);
    write_text(dir / "ok.csv", testing::angle_curves_csv(ids, angles, 144));
    write_text(dir / "short.csv", testing::angle_curves_csv(ids, angles, 143));
    CHECK(run_cli({"fit", "--curves", dir / "ok.csv", "--out-model", dir / "m.json", "--kernel", "quadratic"}) == 0);
    std::string log;
    CHECK(run_cli({"fit", "--curves", dir / "short.csv", "--out-model", dir / "n.json", "--kernel", "quadratic"},
                  &log) == cli::kUsageError);
    CHECK(log.find("143") != std::string::npos);
    CHECK(run_cli({"fit", "--curves", dir / "short.csv", "--out-model", dir / "n.json", "--kernel", "quadratic",
                   "--points", "143"}) == 0);

    // Ragged row: ingestion error carries the line number.
    std::string text = read_text(dir / "ok.csv");
    text.pop_back();
    text += ",1.5\n";
    write_text(dir / "ragged.csv", text);
    CHECK(run_cli({"fit", "--curves", dir / "ragged.csv", "--out-model", dir / "r.json", "--kernel", "quadratic"},
                  &log) == cli::kUsageError);
    CHECK(log.find("13") != std::string::npos);
}

TEST_CASE("infeasible fit") {
    testing::TempDir dir("inf");
    // All curves identical: no positive distance, no bandwidth grid.
    const std::vector<std::string> ids{"a", "b", "c"};
    write_text(dir / "c.csv", testing::angle_curves_csv(ids, {1.0, 1.0, 1.0}, 4));
    write_text(dir / "r.csv", "id,angle_rad\na,0.1\nb,0.2\nc,0.3\n");
    CHECK(run_cli({"fit", "--curves", dir / "c.csv", "--responses", dir / "r.csv", "--out-model", dir / "m.json",
                   "--kernel", "uniform"}) == cli::kInfeasible);
}

TEST_CASE("confidence interval output echoes the formula") {
    testing::TempDir dir("ci");
    std::vector<std::string> ids;
    std::vector<double> curve_angles, responses;
    std::ostringstream r;
    r << "id,angle_rad\n";
    std::mt19937_64 gen(8);
    std::normal_distribution<double> noise(0.0, 0.2);
    for (int i = 0; i < 60; ++i) {
        ids.push_back("c" + std::to_string(i));
        curve_angles.push_back(kTwoPi * i / 60.0);
        responses.push_back(Angle::from_radians(curve_angles.back() + noise(gen)).radians());
        r << ids.back() << ',' << format_double(responses.back()) << '\n';
    }
    write_text(dir / "c.csv", testing::angle_curves_csv(ids, curve_angles, 10));
    write_text(dir / "r.csv", r.str());
    REQUIRE(run_cli({"fit", "--curves", dir / "c.csv", "--responses", dir / "r.csv", "--out-model", dir / "m.json",
                     "--kernel", "uniform"}) == 0);
    REQUIRE(run_cli({"predict", "--model", dir / "m.json", "--curves", dir / "c.csv", "--out", dir / "p.csv", "--ci",
                     "0.05", "--pilot-resid", "0.8", "--pilot-var", "1.2"}) == 0);
    const FittedModel m = load_model(read_text(dir / "m.json"));
    const SineVarianceEstimator var(m, {0.8, 1.2});
    const auto lines = testing::split_lines(read_text(dir / "p.csv"));
    REQUIRE(lines[0] == "id,pred_angle_rad,pred_day,ci_lo_rad,ci_hi_rad");
    CurveCsvOptions opts;
    std::istringstream in(read_text(dir / "c.csv"));
    const CurveTable table = read_curve_table(in, opts);
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto cells = split_csv_line(lines[i]);
        const double lo = *parse_double(cells[3]);
        const double hi = *parse_double(cells[4]);
        const Curve& x = table.curves[i - 1];
        const auto dist = distances_to(m.training(), x);
        double inside = 0;
        for (double d : dist) {
            inside += d <= m.bandwidth() ? 1.0 : 0.0;
        }
        const double f = inside / static_cast<double>(dist.size());
        const double half = 1.959963984540054 * std::sqrt(var.at(x)) / (estimate_ell(m, x) * std::sqrt(60.0 * f));
        REQUIRE(hi - lo == doctest::Approx(2 * half).epsilon(1e-9));
        REQUIRE((hi + lo) / 2 == doctest::Approx(*parse_double(cells[1])).epsilon(1e-12));
    }
    REQUIRE(run_cli({"predict", "--model", dir / "m.json", "--curves", dir / "c.csv", "--out", dir / "p2.csv", "--ci",
                     "0.05", "--pilot-resid", "0.8", "--pilot-var", "1.2"}) == 0);
    CHECK(read_text(dir / "p.csv") == read_text(dir / "p2.csv"));
}

TEST_CASE("quarter-year shift gives CAPE 1") {
    testing::TempDir dir("shift");
    // Training curves encode angles 2 pi j / 36 and respond with the same angle.
    std::vector<std::string> ids;
    std::vector<double> angles;
    std::ostringstream r;
    r << "id,angle_rad\n";
    for (int j = 0; j < 36; ++j) {
        ids.push_back("t" + std::to_string(j));
        angles.push_back(kTwoPi * j / 36.0);
        r << ids.back() << ',' << format_double(angles.back()) << '\n';
    }
    write_text(dir / "train.csv", testing::angle_curves_csv(ids, angles, 20));
    write_text(dir / "resp.csv", r.str());
    REQUIRE(run_cli({"fit", "--curves", dir / "train.csv", "--responses", dir / "resp.csv", "--out-model",
                     dir / "m.json", "--kernel", "quadratic"}) == 0);

    // Query j is the training curve of j + 9, a quarter turn ahead.
    std::vector<double> shifted;
    for (int j = 0; j < 36; ++j) {
        shifted.push_back(angles[(j + 9) % 36]);
    }
    write_text(dir / "query.csv", testing::angle_curves_csv(ids, shifted, 20));
    REQUIRE(run_cli({"predict", "--model", dir / "m.json", "--curves", dir / "query.csv", "--out", dir / "p.csv"}) ==
            0);
    const auto preds = testing::split_lines(read_text(dir / "p.csv"));
    std::ostringstream pairs;
    pairs << "id,pred_angle_rad,observed_rad\n";
    for (int j = 0; j < 36; ++j) {
        const auto cells = split_csv_line(preds[j + 1]);
        CHECK(testing::arc(*parse_double(cells[1]), shifted[j]) < 1e-12);
        pairs << (j < 18 ? "2019-01-" : "2019-02-") << (10 + j % 18) << ',' << cells[1] << ','
              << format_double(angles[j]) << '\n';
    }
    write_text(dir / "pairs.csv", pairs.str());
    REQUIRE(run_cli({"evaluate", "--pairs", dir / "pairs.csv", "--out", dir / "cape.csv"}) == 0);
    const auto cape_lines = testing::split_lines(read_text(dir / "cape.csv"));
    REQUIRE(cape_lines.size() == 3);
    for (std::size_t i = 1; i < 3; ++i) {
        const auto cells = split_csv_line(cape_lines[i]);
        CHECK(cells[1] == "18");
        CHECK(std::fabs(*parse_double(cells[2]) - 1.0) <= 1e-12);
    }
}

TEST_CASE("evaluate") {
    testing::TempDir dir("eval");
    SUBCASE("observed equals predicted") {
        const auto ids = daily_ids(2019, 30, 12);
        std::ostringstream s;
        s << "id,pred_angle_rad\n";
        for (std::size_t i = 0; i < ids.size(); ++i) {
            s << ids[i] << ',' << format_double(date_angles({ids[i]})[0]) << '\n';
        }
        write_text(dir / "p.csv", s.str());
        REQUIRE(run_cli({"evaluate", "--pairs", dir / "p.csv", "--out", dir / "c.csv"}) == 0);
        for (const auto& line : testing::split_lines(read_text(dir / "c.csv"))) {
            if (line != "month,n,cape") {
                CHECK(*parse_double(split_csv_line(line)[2]) == 0.0);
            }
        }
        CHECK(std::filesystem::exists(dir / "c_summary.csv"));
        REQUIRE(run_cli({"evaluate", "--pairs", dir / "p.csv", "--out", dir / "c2.csv"}) == 0);
        CHECK(read_text(dir / "c.csv") == read_text(dir / "c2.csv"));
        CHECK(read_text(dir / "c_summary.csv") == read_text(dir / "c2_summary.csv"));
    }
    SUBCASE("half-year lag in one month") {
        std::ostringstream s;
        s << "id,pred_angle_rad,observed_rad\n";
        s << "2019-03-01,0.5," << format_double(0.5 + pi) << '\n';
        s << "2019-03-02,1.5," << format_double(1.5 + pi) << '\n';
        s << "2019-04-01,2.0,2.0\n";
        write_text(dir / "p.csv", s.str());
        REQUIRE(run_cli({"evaluate", "--pairs", dir / "p.csv", "--out", dir / "c.csv"}) == 0);
        const auto lines = testing::split_lines(read_text(dir / "c.csv"));
        REQUIRE(lines.size() == 3);
        CHECK(lines[1].rfind("3,2,", 0) == 0);
        CHECK(std::fabs(*parse_double(split_csv_line(lines[1])[2]) - 2.0) <= 1e-12);
        CHECK(lines[2] == "4,1,0");
    }
    SUBCASE("random file matches a direct recomputation") {
        std::mt19937_64 gen(21);
        std::uniform_real_distribution<double> u(0.0, kTwoPi);
        std::ostringstream s;
        s << "id,pred_angle_rad,observed_rad\n";
        std::map<int, std::pair<double, int>> sums;
        for (int i = 0; i < 50; ++i) {
            const int month = 1 + i % 5;
            const double p = u(gen), o = u(gen);
            char id[16];
            std::snprintf(id, sizeof(id), "2018-%02d-%02d", month, 1 + i / 5);
            s << id << ',' << format_double(p) << ',' << format_double(o) << '\n';
            sums[month].first += 1.0 - std::cos(o - p);
            sums[month].second += 1;
        }
        write_text(dir / "p.csv", s.str());
        REQUIRE(run_cli({"evaluate", "--pairs", dir / "p.csv", "--out", dir / "c.csv"}) == 0);
        const auto lines = testing::split_lines(read_text(dir / "c.csv"));
        REQUIRE(lines.size() == 6);
        for (std::size_t i = 1; i < lines.size(); ++i) {
            const auto cells = split_csv_line(lines[i]);
            const auto& [sum, count] = sums.at(std::stoi(cells[0]));
            CHECK(std::stoi(cells[1]) == count);
            CHECK(*parse_double(cells[2]) == doctest::Approx(sum / count).epsilon(1e-12));
        }
    }
    SUBCASE("month emptied by the year filter") {
        write_text(dir / "p.csv", "id,pred_angle_rad\n2019-01-05,0.1\n2020-02-05,0.2\n");
        std::string log;
        REQUIRE(run_cli({"evaluate", "--pairs", dir / "p.csv", "--out", dir / "c.csv", "--year", "2019"}, &log) ==
                0);
        CHECK(log.find("month 02") != std::string::npos);
        CHECK(testing::split_lines(read_text(dir / "c.csv")).size() == 2);
    }
    SUBCASE("bad ids") {
        write_text(dir / "p.csv", "id,pred_angle_rad\nfoo,0.1\n");
        CHECK(run_cli({"evaluate", "--pairs", dir / "p.csv", "--out", dir / "c.csv"}) == cli::kUsageError);
    }
}
