#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "hstc/hawkes.hpp"

namespace hstc {

/// Versioned JSON document holding constrained parameters, circuit order,
/// saturation form and fit metadata. save -> load is value-exact.
[[nodiscard]] std::string model_to_json(const HawkesModel& model);
[[nodiscard]] HawkesModel model_from_json(std::string_view text);

void save_model(const HawkesModel& model, const std::filesystem::path& path);
[[nodiscard]] HawkesModel load_model(const std::filesystem::path& path);

}  // namespace hstc
