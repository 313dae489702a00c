#pragma once

#include <filesystem>
#include <span>
#include <string>

#include "hstc/conformal.hpp"
#include "hstc/eval.hpp"

namespace hstc {

/// `id,bin,lower_raw,lower_clamped,upper,width`, one row per circuit per
/// forecast, forecasts in the order given.
void write_circuit_intervals(const std::filesystem::path& path, std::span<const IntervalForecast> forecasts,
                             const NetworkTopology& topo);
/// Same columns for the aggregated substation bounds.
void write_substation_intervals(const std::filesystem::path& path, std::span<const IntervalForecast> forecasts,
                                const NetworkTopology& topo);

/// Scores, quantiles, scales, target-bin scenarios and the resulting
/// intervals; enough to recompute every bound by hand.
[[nodiscard]] std::string audit_to_json(const PipelineResult& result, const NetworkTopology& topo);
void write_audit(const std::filesystem::path& path, const PipelineResult& result, const NetworkTopology& topo);

[[nodiscard]] std::string scores_to_json(const ScoreSet& scores, const QuantileEstimate& q,
                                         const NetworkTopology& topo);

/// Key/value metrics followed by a per-bin table.
[[nodiscard]] std::string metrics_text(const EvalReport& report);
void write_metrics(const std::filesystem::path& path, const EvalReport& report);
/// `level,id,bin,truth,lower_raw,lower_clamped,upper,width,std_width,covered`.
void write_eval_cells(const std::filesystem::path& path, const EvalReport& report);

/// `step,bin,level,id,lower_raw,lower_clamped,upper,width,cum_lower,cum_upper,truth`;
/// H x (n + m) rows. truth is empty past the end of the panel.
void write_horizon_csv(const std::filesystem::path& path, const HorizonForecast& forecast,
                       const NetworkTopology& topo, const CountPanel& panel);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace hstc
