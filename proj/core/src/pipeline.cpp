#include "hstc/conformal.hpp"
#include "hstc/error.hpp"
#include "hstc/random.hpp"

namespace hstc {

void PipelineConfig::validate() const {
    fit.validate();
    if (k == 0) throw PreconditionError("K must be >= 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw PreconditionError("alpha must lie in (0, 1)");
    if (method == QuantileMethod::quantile_regression && qr_window == 0) {
        throw PreconditionError("qr_window must be positive");
    }
}

PipelineResult hst_conformal_pipeline(const CountPanel& panel, const NetworkTopology& topo,
                                      const SplitSpec& split_spec, const PipelineConfig& cfg,
                                      const HawkesModel* pretrained) {
    cfg.validate();
    if (panel.circuits() != topo.n()) throw PreconditionError("pipeline: panel and topology circuit counts differ");

    PipelineResult result;
    auto& audit = result.audit;
    audit.split = split(panel, split_spec);

    if (pretrained != nullptr) {
        if (pretrained->n() != topo.n()) throw PreconditionError("pipeline: model circuit count does not match");
        audit.model = *pretrained;
    } else {
        FitConfig fit_cfg = cfg.fit;
        fit_cfg.seed = derive_seed(cfg.seed, "fit");
        audit.model = fit(slice_bins(panel, audit.split.train), topo, fit_cfg);
    }

    audit.scores = calibrate(panel, audit.model, topo, audit.split.train, audit.split.cal, cfg.k, cfg.seed,
                             cfg.alpha, cfg.threads);
    audit.quantiles = estimate_quantiles(audit.scores, cfg.method, cfg.qr_window);

    const std::size_t target = audit.split.cal.end;
    const HawkesState state(audit.model, panel.counts.topRows(static_cast<Eigen::Index>(target)));
    audit.scenarios =
        simulate_bin(audit.model, state, cfg.k, scenario_seed(cfg.seed, target), lagged_covariates(panel, target));
    result.forecast = build_interval(audit.scenarios, audit.quantiles, audit.scores.scale, topo, cfg.alpha);
    return result;
}

}  // namespace hstc
