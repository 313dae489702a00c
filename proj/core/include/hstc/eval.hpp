#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "hstc/conformal.hpp"

namespace hstc {

/// One-step-ahead interval source that the rolling harness can drive.
class IntervalPredictor {
public:
    virtual ~IntervalPredictor() = default;
    /// Intervals for bin t using only panel bins < t.
    virtual IntervalForecast predict(const CountPanel& panel, std::size_t t) = 0;
    /// Bin t's truth has been revealed to the predictor.
    virtual void observe(const CountPanel& panel, std::size_t t) { (void)panel, (void)t; }
};

/// The conformal predictor. Fits once on the training bins and extends the
/// calibration scores as test bins are revealed; with `refit_each_step` it
/// instead refits and recalibrates on a window sliding with t.
class HstConformalPredictor final : public IntervalPredictor {
public:
    HstConformalPredictor(const NetworkTopology& topo, const PanelSplit& split, PipelineConfig cfg,
                          bool refit_each_step = false);

    IntervalForecast predict(const CountPanel& panel, std::size_t t) override;
    void observe(const CountPanel& panel, std::size_t t) override;

    [[nodiscard]] const ScoreSet& scores() const noexcept { return scores_; }
    [[nodiscard]] const HawkesModel& model() const noexcept { return model_; }
    /// Scenarios behind the latest prediction.
    [[nodiscard]] const ScenarioSet& last_scenarios() const noexcept { return last_scenarios_; }
    [[nodiscard]] const QuantileEstimate& last_quantiles() const noexcept { return last_quantiles_; }

private:
    void prepare(const CountPanel& panel, std::size_t t);

    const NetworkTopology* topo_;
    PanelSplit split_;
    PipelineConfig cfg_;
    bool refit_each_step_;
    bool fitted_ = false;
    HawkesModel model_;
    ScoreSet scores_;
    ScenarioSet last_scenarios_;
    QuantileEstimate last_quantiles_;
};

struct CellRecord {
    std::size_t bin = 0;
    std::size_t unit = 0;  // circuit or substation index
    double truth = 0.0;
    double lower = 0.0;    // raw
    double upper = 0.0;
    double scale = 1.0;    // s_i, or sum of s_i over a substation
    bool covered = false;

    [[nodiscard]] double width() const noexcept { return upper - lower; }
};

struct BinMetrics {
    std::size_t bin = 0;
    double val = 0.0;
    double agg_val = 0.0;
    double size = 0.0;
};

struct EvalReport {
    double val = 0.0;       // circuit coverage
    double agg_val = 0.0;   // substation coverage
    double size = 0.0;      // mean (U - L) / s_i over circuit cells
    double raw_size = 0.0;  // mean U - L over circuit cells
    std::vector<BinMetrics> per_bin;
    std::vector<CellRecord> circuit_cells;
    std::vector<CellRecord> substation_cells;
    std::vector<IntervalForecast> intervals;

    std::vector<std::string> circuit_ids;
    std::vector<std::string> substation_ids;
    double alpha = 0.05;
    std::size_t k = 10;
    QuantileMethod method = QuantileMethod::empirical;
    std::uint64_t seed = 0;
    bool refit_each_step = false;
};

/// Drives `predictor` over split.test, scoring y_t against the circuit
/// intervals and C^T y_t against the aggregated (unclamped) bounds.
[[nodiscard]] EvalReport evaluate_predictor(const CountPanel& panel, const NetworkTopology& topo,
                                            const PanelSplit& split, IntervalPredictor& predictor);

[[nodiscard]] EvalReport rolling_evaluate(const CountPanel& panel, const NetworkTopology& topo,
                                          const SplitSpec& spec, const PipelineConfig& cfg,
                                          bool refit_each_step = false);

/// Keeps floor(n/2) circuits chosen with `seed` (or all of them when
/// keep_all is set), restricts panel and topology, then runs
/// rolling_evaluate.
[[nodiscard]] EvalReport half_nodes_trial(const CountPanel& panel, const NetworkTopology& topo, const SplitSpec& spec,
                                          const PipelineConfig& cfg, std::uint64_t seed, bool keep_all = false,
                                          std::vector<std::size_t>* kept = nullptr);

/// Sorted random subset of `count` indices out of n.
[[nodiscard]] std::vector<std::size_t> sample_circuits(std::size_t n, std::size_t count, std::uint64_t seed);

struct HorizonForecast {
    std::vector<IntervalForecast> steps;  // per-bin counts, one per horizon step
    /// Cumulative counts including the observed total up to the forecast
    /// origin: base + [min_k, max_k] of each trajectory's running sum, widened
    /// by q_i s_i. Rows are horizon steps.
    Matrix cumulative_lower;  // H x n
    Matrix cumulative_upper;
    Matrix sub_cumulative_lower;  // H x m, C^T of the circuit rows
    Matrix sub_cumulative_upper;
    Vector base;  // observed per-circuit totals before the first step
    QuantileEstimate quantiles;
    Vector scale;
    std::size_t first_bin = 0;
};

/// Fits and calibrates as the pipeline does, then simulates K recursive
/// trajectories from the end of the calibration window and applies the
/// one-step quantiles at every step.
[[nodiscard]] HorizonForecast horizon_forecast(const CountPanel& panel, const NetworkTopology& topo,
                                               const SplitSpec& spec, const PipelineConfig& cfg,
                                               std::size_t horizon, const HawkesModel* pretrained = nullptr);

}  // namespace hstc
