#include "funcirc/model_io.hpp"

#include "funcirc/errors.hpp"

namespace funcirc {

using nlohmann::json;

json model_to_json(const FittedModel& m) {
    const Dataset& d = m.training();
    json j;
    j["format"] = "funcirc-model";
    j["format_version"] = kModelFormatVersion;
    j["kernel"] = std::string(kernel_name(m.kernel()));
    j["mode"] = std::string(mode_name(m.mode()));
    if (m.mode() == EstimatorMode::nw) {
        j["bandwidth"] = m.bandwidth();
    } else {
        j["neighbors"] = m.neighbors();
    }
    const auto grid = d.grid()->points();
    j["grid"] = std::vector<double>(grid.begin(), grid.end());
    json curves = json::array();
    for (const Curve& c : d.curves()) {
        curves.push_back(std::vector<double>(c.values().begin(), c.values().end()));
    }
    j["curves"] = std::move(curves);
    json responses = json::array();
    for (Angle a : d.responses()) {
        responses.push_back(a.radians());
    }
    j["responses_rad"] = std::move(responses);
    j["ids"] = d.ids();
    return j;
}

FittedModel model_from_json(const json& j) {
    try {
        if (j.at("format").get<std::string>() != "funcirc-model") {
            throw FormatError("not a funcirc model document");
        }
        const int version = j.at("format_version").get<int>();
        if (version != kModelFormatVersion) {
            throw FormatError("unsupported model format version " + std::to_string(version));
        }
        const Kernel kernel = parse_kernel(j.at("kernel").get<std::string>());
        const EstimatorMode mode = parse_mode(j.at("mode").get<std::string>());
        auto grid = std::make_shared<const Grid>(j.at("grid").get<std::vector<double>>());
        std::vector<Curve> curves;
        for (const auto& row : j.at("curves")) {
            curves.emplace_back(grid, row.get<std::vector<double>>());
        }
        std::vector<Angle> responses;
        for (const auto& r : j.at("responses_rad")) {
            responses.push_back(Angle::from_radians(r.get<double>()));
        }
        auto ids = j.value("ids", std::vector<std::string>{});
        Dataset d(std::move(curves), std::move(responses), std::move(ids));
        Smoothing s = mode == EstimatorMode::nw ? Smoothing(Bandwidth{j.at("bandwidth").get<double>()})
                                                : Smoothing(NeighborCount{j.at("neighbors").get<std::size_t>()});
        return FittedModel(std::move(d), kernel, s);
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed model document: ") + e.what());
    } catch (const InvalidArgument& e) {
        throw FormatError(std::string("invalid model document: ") + e.what());
    }
}

std::string save_model(const FittedModel& m) { return model_to_json(m).dump(1) + "\n"; }

FittedModel load_model(std::string_view text) {
    json j;
    try {
        j = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw FormatError(std::string("model file is not valid JSON: ") + e.what());
    }
    return model_from_json(j);
}

bool identical(const FittedModel& a, const FittedModel& b) {
    const Dataset& x = a.training();
    const Dataset& y = b.training();
    if (a.kernel() != b.kernel() || a.mode() != b.mode() || x.size() != y.size() || x.ids() != y.ids() ||
        !(*x.grid() == *y.grid())) {
        return false;
    }
    if (a.mode() == EstimatorMode::nw ? a.bandwidth() != b.bandwidth() : a.neighbors() != b.neighbors()) {
        return false;
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
        const auto u = x.curves()[i].values();
        const auto v = y.curves()[i].values();
        if (!std::equal(u.begin(), u.end(), v.begin(), v.end()) || x.responses()[i] != y.responses()[i]) {
            return false;
        }
    }
    return true;
}

}  // namespace funcirc
