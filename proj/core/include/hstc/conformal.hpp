#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hstc/hawkes.hpp"
#include "hstc/panel.hpp"
#include "hstc/topology.hpp"

namespace hstc {

/// Per-circuit calibration scores in bin order, with the frozen
/// standardization scale.
struct ScoreSet {
    std::vector<std::vector<double>> scores;  // [circuit][calibration step]
    std::vector<std::size_t> bins;            // panel bin of each step
    Vector scale;
    double alpha = 0.05;

    [[nodiscard]] std::size_t circuits() const noexcept { return scores.size(); }
    [[nodiscard]] std::size_t length() const noexcept { return bins.size(); }
    /// Appends one calibration step (one score per circuit).
    void append(std::size_t bin, const Vector& step_scores);
};

enum class QuantileMethod { empirical, quantile_regression };

[[nodiscard]] std::string_view to_string(QuantileMethod method) noexcept;
[[nodiscard]] QuantileMethod parse_quantile_method(std::string_view text);

struct QuantileEstimate {
    Vector q;  // standardized units
    QuantileMethod method = QuantileMethod::empirical;
};

/// Circuit bounds from scenario envelopes widened by the de-standardized
/// quantile; substation bounds are C^T of the raw circuit bounds.
struct IntervalForecast {
    Vector lower;
    Vector upper;
    Vector sub_lower;
    Vector sub_upper;
    double alpha = 0.05;
    std::size_t bin = 0;

    /// Reported view: raw lower bounds clamped at zero.
    [[nodiscard]] Vector lower_clamped() const { return lower.cwiseMax(0.0); }
    [[nodiscard]] Vector sub_lower_clamped() const { return sub_lower.cwiseMax(0.0); }

    friend bool operator==(const IntervalForecast&, const IntervalForecast&);
};

/// s_i = max(1, population standard deviation of circuit i over `train`).
[[nodiscard]] Vector standardization_scale(const CountPanel& panel, BinRange train);

/// Smallest substation maximum error over the scenarios:
///   min_k max_{i' in group} |y_i' - yhat^(k)_i'| / s_i'.
/// Ties resolve to the first scenario.
[[nodiscard]] double nonconformity_score(const CountVector& truth, const ScenarioSet& scenarios,
                                         std::span<const std::size_t> group, const Vector& scale);

/// Score of every circuit, using its shared-membership row as the group.
[[nodiscard]] Vector nonconformity_scores(const CountVector& truth, const ScenarioSet& scenarios,
                                          const NetworkTopology& topo, const Vector& scale);

/// Seed of the scenario batch for bin t. Calibration, prediction, rolling
/// evaluation and horizon forecasts all draw bin t's scenarios from it.
[[nodiscard]] std::uint64_t scenario_seed(std::uint64_t run_seed, std::size_t bin) noexcept;

/// Scores every calibration bin against K scenarios drawn from the observed
/// history before that bin. The scale comes from `train`.
[[nodiscard]] ScoreSet calibrate(const CountPanel& panel, const HawkesModel& model, const NetworkTopology& topo,
                                 BinRange train, BinRange cal, std::size_t k, std::uint64_t seed, double alpha,
                                 std::size_t threads = 1);

/// ceil((1 - alpha)(n + 1))-th smallest value, capped at rank n.
[[nodiscard]] std::size_t conformal_rank(std::size_t n, double alpha);
[[nodiscard]] double empirical_quantile(std::span<const double> scores, double alpha);
[[nodiscard]] QuantileEstimate empirical_quantile(const ScoreSet& scores);

/// Linear (1 - alpha)-quantile regression of each score on its previous
/// `window` scores plus an intercept, evaluated at the latest window and
/// clamped at zero.
[[nodiscard]] double qr_quantile(std::span<const double> scores, std::size_t window, double alpha);
[[nodiscard]] QuantileEstimate qr_quantile(const ScoreSet& scores, std::size_t window);

[[nodiscard]] QuantileEstimate estimate_quantiles(const ScoreSet& scores, QuantileMethod method,
                                                  std::size_t window);

[[nodiscard]] IntervalForecast build_interval(const ScenarioSet& scenarios, const QuantileEstimate& q,
                                              const Vector& scale, const NetworkTopology& topo, double alpha);

struct PipelineConfig {
    FitConfig fit;
    std::size_t k = 10;
    double alpha = 0.05;
    QuantileMethod method = QuantileMethod::empirical;
    std::size_t qr_window = 10;
    std::uint64_t seed = 0;
    std::size_t threads = 1;

    void validate() const;
};

struct PipelineAudit {
    HawkesModel model;
    PanelSplit split;
    ScoreSet scores;
    QuantileEstimate quantiles;
    ScenarioSet scenarios;  // target bin
};

struct PipelineResult {
    IntervalForecast forecast;
    PipelineAudit audit;
};

/// fit -> calibrate -> quantile -> simulate the bin after the calibration
/// window -> intervals. The model is fitted on the training bins unless
/// `pretrained` is given.
[[nodiscard]] PipelineResult hst_conformal_pipeline(const CountPanel& panel, const NetworkTopology& topo,
                                                    const SplitSpec& split_spec, const PipelineConfig& cfg,
                                                    const HawkesModel* pretrained = nullptr);

}  // namespace hstc
