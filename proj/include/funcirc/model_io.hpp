#ifndef FUNCIRC_MODEL_IO_HPP
#define FUNCIRC_MODEL_IO_HPP

#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "funcirc/regression.hpp"

namespace funcirc {

inline constexpr int kModelFormatVersion = 1;

/**
 * JSON document for a fitted model:
 *
 *   { "format": "funcirc-model", "format_version": 1,
 *     "kernel": "quadratic", "mode": "nw", "bandwidth": 0.81,   (or "neighbors": 7 for knn)
 *     "grid": [...], "curves": [[...], ...], "responses_rad": [...], "ids": [...] }
 *
 * Doubles are written in shortest round-trip form, so load(save(m)) is exact.
 */
nlohmann::json model_to_json(const FittedModel& m);
FittedModel model_from_json(const nlohmann::json& j);

std::string save_model(const FittedModel& m);
/// Throws FormatError on malformed or unsupported documents.
FittedModel load_model(std::string_view text);

/// Exact equality of training data, kernel and smoothing parameter.
bool identical(const FittedModel& a, const FittedModel& b);

}  // namespace funcirc

#endif
