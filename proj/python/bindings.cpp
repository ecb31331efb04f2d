#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include "funcirc/errors.hpp"
#include "funcirc/model_io.hpp"
#include "funcirc/random.hpp"
#include "funcirc/regression.hpp"
#include "funcirc/simulation.hpp"

namespace py = pybind11;
using namespace funcirc;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

GridPtr make_grid(std::size_t points, const std::optional<std::vector<double>>& grid) {
    if (!grid) {
        return Grid::uniform(points);
    }
    if (grid->size() != points) {
        throw InvalidArgument("grid has " + std::to_string(grid->size()) + " points but curves have " +
                              std::to_string(points));
    }
    return std::make_shared<const Grid>(*grid);
}

std::vector<Curve> to_curves(const Array& values, const GridPtr& grid) {
    if (values.ndim() != 2) {
        throw InvalidArgument("curves must be a 2-d array (one row per curve)");
    }
    const auto r = values.unchecked<2>();
    std::vector<Curve> out;
    out.reserve(static_cast<std::size_t>(r.shape(0)));
    for (py::ssize_t i = 0; i < r.shape(0); ++i) {
        out.emplace_back(grid, std::vector<double>(r.data(i, 0), r.data(i, 0) + r.shape(1)));
    }
    return out;
}

std::vector<Angle> to_angles(const std::vector<double>& radians) {
    std::vector<Angle> out;
    out.reserve(radians.size());
    for (double a : radians) {
        out.push_back(Angle::from_radians(a));
    }
    return out;
}

Dataset to_dataset(const Array& curves, const std::vector<double>& responses,
                   const std::optional<std::vector<double>>& grid) {
    if (curves.ndim() != 2) {
        throw InvalidArgument("curves must be a 2-d array (one row per curve)");
    }
    return Dataset(to_curves(curves, make_grid(static_cast<std::size_t>(curves.shape(1)), grid)),
                   to_angles(responses));
}

Kernel kernel_of(const std::string& name) { return parse_kernel(name); }

/// Query curves on the model's grid.
std::vector<Curve> queries(const FittedModel& m, Array curves) {
    const Array two_d = curves.ndim() == 1 ? Array(curves.reshape({py::ssize_t{1}, curves.shape(0)})) : curves;
    const GridPtr& g = m.training().grid();
    if (two_d.ndim() != 2 || static_cast<std::size_t>(two_d.shape(1)) != g->size()) {
        throw IncompatibleGrids("query curves must have " + std::to_string(g->size()) + " points");
    }
    return to_curves(two_d, g);
}

py::dict ci_dict(const CiEstimate& ci) {
    py::dict d;
    d["center"] = ci.center.radians();
    d["half_width"] = ci.half_width;
    d["lower"] = ci.lower();
    d["upper"] = ci.upper();
    d["level"] = ci.level;
    d["sigma1_hat"] = ci.sigma1_hat;
    d["ell_hat"] = ci.ell_hat;
    d["f_hat"] = ci.f_hat;
    d["n"] = ci.n;
    return d;
}

}  // namespace

PYBIND11_MODULE(_funcirc, m) {
    m.doc() = "Nonparametric regression of a circular response on a functional covariate";

    auto base = py::register_exception<Error>(m, "FuncircError", PyExc_RuntimeError);
    py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
    py::register_exception<IncompatibleGrids>(m, "IncompatibleGrids", base.ptr());
    py::register_exception<EmptyNeighborhood>(m, "EmptyNeighborhood", base.ptr());
    py::register_exception<DegenerateDirection>(m, "DegenerateDirection", base.ptr());
    py::register_exception<UnsupportedKernel>(m, "UnsupportedKernel", base.ptr());
    py::register_exception<NoFeasibleBandwidth>(m, "NoFeasibleBandwidth", base.ptr());
    py::register_exception<FormatError>(m, "FormatError", base.ptr());

    py::class_<FittedModel>(m, "Model")
        .def_property_readonly("kernel", [](const FittedModel& f) { return std::string(kernel_name(f.kernel())); })
        .def_property_readonly("mode", [](const FittedModel& f) { return std::string(mode_name(f.mode())); })
        .def_property_readonly("bandwidth",
                               [](const FittedModel& f) -> std::optional<double> {
                                   if (f.mode() != EstimatorMode::nw) {
                                       return std::nullopt;
                                   }
                                   return f.bandwidth();
                               })
        .def_property_readonly("neighbors",
                               [](const FittedModel& f) -> std::optional<std::size_t> {
                                   if (f.mode() != EstimatorMode::knn) {
                                       return std::nullopt;
                                   }
                                   return f.neighbors();
                               })
        .def_property_readonly("n", [](const FittedModel& f) { return f.training().size(); })
        .def(
            "predict",
            [](const FittedModel& f, const Array& curves, bool fallback_mean) {
                PredictOptions opts;
                opts.fallback_to_global_mean = fallback_mean;
                std::vector<double> out;
                for (const Curve& c : queries(f, curves)) {
                    out.push_back(predict(f, c, {}, opts).radians());
                }
                return out;
            },
            py::arg("curves"), py::arg("fallback_mean") = false,
            "Predicted directions in [0, 2pi) for one curve or a 2-d array of curves.")
        .def(
            "components",
            [](const FittedModel& f, const Array& curve) {
                const Components c = predict_components(f, queries(f, curve).front());
                return py::make_tuple(c.sin, c.cos);
            },
            py::arg("curve"))
        .def(
            "confidence_interval",
            [](const FittedModel& f, const Array& curve, double alpha, std::optional<double> pilot_resid,
               std::optional<double> pilot_var) {
                PilotBandwidths pilots = default_pilots(f);
                pilots.residual = pilot_resid.value_or(pilots.residual);
                pilots.variance = pilot_var.value_or(pilots.variance);
                return ci_dict(confidence_interval(f, queries(f, curve).front(), alpha, pilots));
            },
            py::arg("curve"), py::arg("alpha") = 0.05, py::arg("pilot_resid") = py::none(),
            py::arg("pilot_var") = py::none())
        .def("to_json", [](const FittedModel& f) { return save_model(f); })
        .def_static("from_json", [](const std::string& text) { return load_model(text); }, py::arg("text"));

    m.def(
        "fit",
        [](const Array& curves, const std::vector<double>& responses, const std::string& kernel,
           std::optional<double> bandwidth, std::optional<std::size_t> neighbors,
           const std::optional<std::vector<double>>& grid) {
            if (bandwidth.has_value() == neighbors.has_value()) {
                throw InvalidArgument("give exactly one of bandwidth and neighbors");
            }
            Smoothing s = bandwidth ? Smoothing{Bandwidth{*bandwidth}} : Smoothing{NeighborCount{*neighbors}};
            return fit(to_dataset(curves, responses, grid), kernel_of(kernel), s);
        },
        py::arg("curves"), py::arg("responses"), py::arg("kernel") = "quadratic", py::arg("bandwidth") = py::none(),
        py::arg("neighbors") = py::none(), py::arg("grid") = py::none());

    m.def(
        "select_bandwidth",
        [](const Array& curves, const std::vector<double>& responses, const std::string& kernel,
           std::optional<std::vector<double>> candidates, std::size_t grid_size, double lo_q, double hi_q,
           const std::optional<std::vector<double>>& grid) {
            const Dataset d = to_dataset(curves, responses, grid);
            const LoocvProblem problem(d);
            const std::vector<double> c =
                candidates ? *candidates : bandwidth_grid(problem.distances(), {grid_size, lo_q, hi_q});
            const BandwidthSelection sel = select_bandwidth_cv(problem, kernel_of(kernel), c);
            return py::make_tuple(sel.bandwidth, sel.candidates, sel.scores);
        },
        py::arg("curves"), py::arg("responses"), py::arg("kernel") = "quadratic", py::arg("candidates") = py::none(),
        py::arg("grid_size") = 25, py::arg("lo_q") = 0.05, py::arg("hi_q") = 1.0, py::arg("grid") = py::none(),
        "Cross-validated bandwidth: (h, sorted candidates, scores).");

    m.def(
        "select_neighbors",
        [](const Array& curves, const std::vector<double>& responses, std::optional<std::vector<std::size_t>> ks,
           const std::optional<std::vector<double>>& grid) {
            const Dataset d = to_dataset(curves, responses, grid);
            std::vector<std::size_t> k_grid;
            if (ks) {
                k_grid = *ks;
            } else {
                for (std::size_t k = 1; k < d.size(); ++k) {
                    k_grid.push_back(k);
                }
            }
            const NeighborSelection sel = select_k_cv(d, k_grid);
            return py::make_tuple(sel.neighbors, sel.candidates, sel.scores);
        },
        py::arg("curves"), py::arg("responses"), py::arg("ks") = py::none(), py::arg("grid") = py::none());

    m.def(
        "loocv_score",
        [](const Array& curves, const std::vector<double>& responses, const std::string& kernel, double h,
           const std::optional<std::vector<double>>& grid) {
            return loocv_score(to_dataset(curves, responses, grid), kernel_of(kernel), h);
        },
        py::arg("curves"), py::arg("responses"), py::arg("kernel"), py::arg("h"), py::arg("grid") = py::none());

    m.def(
        "distance_matrix",
        [](const Array& curves, const std::optional<std::vector<double>>& grid) {
            const auto cs = to_curves(curves, make_grid(static_cast<std::size_t>(curves.shape(1)), grid));
            const DistanceMatrix dm = distance_matrix(cs);
            py::array_t<double> out({dm.size(), dm.size()});
            auto w = out.mutable_unchecked<2>();
            for (std::size_t i = 0; i < dm.size(); ++i) {
                for (std::size_t j = 0; j < dm.size(); ++j) {
                    w(i, j) = dm(i, j);
                }
            }
            return out;
        },
        py::arg("curves"), py::arg("grid") = py::none());

    m.def(
        "simulate_curves",
        [](const std::vector<double>& u, std::size_t grid_size) {
            const GridPtr g = Grid::uniform(grid_size);
            py::array_t<double> out({u.size(), grid_size});
            auto w = out.mutable_unchecked<2>();
            for (std::size_t i = 0; i < u.size(); ++i) {
                const Curve c = simulate_curve(u[i], g);
                for (std::size_t j = 0; j < grid_size; ++j) {
                    w(i, j) = c.values()[j];
                }
            }
            return out;
        },
        py::arg("u"), py::arg("grid_size") = 101);

    m.def(
        "sample_von_mises",
        [](double mu, double kappa, std::size_t size, std::uint64_t seed) {
            Rng rng(seed);
            std::vector<double> out(size);
            for (double& x : out) {
                x = sample_von_mises(Angle::from_radians(mu), kappa, rng).radians();
            }
            return out;
        },
        py::arg("mu"), py::arg("kappa"), py::arg("size"), py::arg("seed") = 1);

    m.def(
        "circ_mean", [](const std::vector<double>& a) { return circ_mean(to_angles(a)).radians(); }, py::arg("angles"));
    m.def(
        "case_error",
        [](const std::vector<double>& pred, const std::vector<double>& truth) {
            return case_error(to_angles(pred), to_angles(truth));
        },
        py::arg("predicted"), py::arg("truth"));
    m.def(
        "regression_truth",
        [](const std::string& kind, double integral) {
            return regression_truth_from_integral(parse_regression_kind(kind), integral).radians();
        },
        py::arg("kind"), py::arg("integral"));
    m.def(
        "day_to_angle", [](double day, int year_length) { return day_to_angle(day, year_length).radians(); },
        py::arg("day"), py::arg("year_length") = 365);
    m.def(
        "angle_to_day",
        [](double angle, int year_length) { return angle_to_day(Angle::from_radians(angle), year_length); },
        py::arg("angle"), py::arg("year_length") = 365);

    m.def(
        "run_scenario",
        [](const std::string& kind, std::size_t n, double kappa, std::size_t replicates, const std::string& estimator,
           const std::string& kernel, std::uint64_t seed, std::size_t grid_size, unsigned threads) {
            ScenarioConfig cfg;
            cfg.regression_kind = parse_regression_kind(kind);
            cfg.n = n;
            cfg.kappa = kappa;
            cfg.replicates = replicates;
            cfg.estimator = parse_mode(estimator);
            cfg.kernel = kernel_of(kernel);
            cfg.seed = seed;
            cfg.grid_size = grid_size;
            AggregateRow row;
            {
                py::gil_scoped_release release;
                row = run_replicates(cfg, {}, threads);
            }
            py::dict d;
            d["mean_case_cv"] = row.mean_case_cv;
            d["mean_case_oracle"] = row.mean_case_oracle;
            d["excluded"] = row.excluded;
            std::vector<double> cv, oracle, param;
            for (const ReplicateResult& r : row.replicates) {
                cv.push_back(r.case_cv);
                oracle.push_back(r.case_oracle);
                param.push_back(r.param_cv);
            }
            d["case_cv"] = cv;
            d["case_oracle"] = oracle;
            d["param_cv"] = param;
            return d;
        },
        py::arg("kind") = "r1", py::arg("n") = 50, py::arg("kappa") = 5.0, py::arg("replicates") = 100,
        py::arg("estimator") = "nw", py::arg("kernel") = "quadratic", py::arg("seed") = 1, py::arg("grid_size") = 101,
        py::arg("threads") = 0);

    m.def(
        "verify_variance_identity",
        [](double kappa, double direction, std::size_t n_mc, std::uint64_t seed) {
            const auto v = verify_variance_identity(kappa, Angle::from_radians(direction), n_mc, seed);
            py::dict d;
            d["sigma1_sq"] = v.sigma1_sq;
            d["sigma2_sq"] = v.sigma2_sq;
            d["sigma12"] = v.sigma12;
            d["s1_sq"] = v.s1_sq;
            d["s2_sq"] = v.s2_sq;
            d["gap"] = v.gap;
            d["gap_se"] = v.gap_se;
            return d;
        },
        py::arg("kappa"), py::arg("direction") = 0.0, py::arg("n_mc") = 100000, py::arg("seed") = 1);
}
