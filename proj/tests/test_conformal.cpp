#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "hstc/conformal.hpp"
#include "hstc/error.hpp"
#include "hstc/synthetic.hpp"
#include "support.hpp"

using namespace hstc;
using doctest::Approx;
using hstc::test::numbered_ids;

namespace {

ScenarioSet scenarios_of(std::initializer_list<std::initializer_list<std::int64_t>> rows) {
    ScenarioSet s;
    s.samples.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
    Eigen::Index r = 0;
    for (const auto& row : rows) {
        Eigen::Index c = 0;
        for (auto v : row) s.samples(r, c++) = v;
        ++r;
    }
    return s;
}

CountVector counts_of(std::initializer_list<std::int64_t> v) {
    CountVector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (auto x : v) out(i++) = x;
    return out;
}

// Independent recomputation with plain loops over k and the group.
double brute_score(const CountVector& y, const ScenarioSet& s, const std::vector<std::size_t>& group,
                   const Vector& scale) {
    double best = INFINITY;
    for (Eigen::Index k = 0; k < s.samples.rows(); ++k) {
        double worst = 0.0;
        for (std::size_t j : group) {
            const auto jj = static_cast<Eigen::Index>(j);
            worst = std::max(worst, std::abs(static_cast<double>(y(jj) - s.samples(k, jj))) / scale(jj));
        }
        best = std::min(best, worst);
    }
    return best;
}

}  // namespace

TEST_CASE("score examples") {
    const std::vector<std::size_t> pair{0, 1};
    const Vector ones = Vector::Ones(2);
    CHECK(nonconformity_score(counts_of({3, 5}), scenarios_of({{3, 9}, {1, 5}}), pair, ones) == 2.0);
    CHECK(nonconformity_score(counts_of({3, 5}), scenarios_of({{0, 0}, {3, 5}}), pair, ones) == 0.0);

    const std::vector<std::size_t> solo{1};
    Vector scale(2);
    scale << 1.0, 2.0;
    CHECK(nonconformity_score(counts_of({3, 5}), scenarios_of({{3, 9}, {1, 8}}), solo, scale) == 1.5);
}

TEST_CASE("property: scores equal a brute-force loop") {
    Rng rng(123);
    for (int rep = 0; rep < 300; ++rep) {
        const std::size_t m = 1 + static_cast<std::size_t>(rng.below(3));
        const std::size_t n = m + static_cast<std::size_t>(rng.below(4));
        const auto k = static_cast<Eigen::Index>(1 + rng.below(5));
        const auto topo = test::random_topology(rng, n, m);
        ScenarioSet s;
        s.samples = test::random_counts(rng, static_cast<std::size_t>(k), n, 2.0);
        const CountVector y = test::random_counts(rng, 1, n, 2.0).row(0).transpose();
        Vector scale = Vector::NullaryExpr(static_cast<Eigen::Index>(n), [&] { return rng.uniform(1.0, 3.0); });
        const Vector got = nonconformity_scores(y, s, topo, scale);
        for (std::size_t i = 0; i < n; ++i) {
            const auto row = topo.shared_row(i);
            CHECK(got(static_cast<Eigen::Index>(i)) ==
                  brute_score(y, s, std::vector<std::size_t>(row.begin(), row.end()), scale));
        }
    }
}

TEST_CASE("standardization scale") {
    CountMatrix y(4, 2);
    y << 0, 0, 0, 4, 0, 0, 0, 4;
    const auto p = make_panel(y, numbered_ids("C", 2));
    const Vector s = standardization_scale(p, BinRange{0, 4});
    CHECK(s(0) == 1.0);
    CHECK(s(1) == Approx(2.0));
}

TEST_CASE("calibration scores match a brute-force recomputation") {
    Rng rng(44);
    const std::size_t n = 2;
    const auto topo = NetworkTopology::from_assignment(numbered_ids("C", n), {"A", "A"});
    const auto model = test::random_model(rng, n);
    const auto panel = make_panel(test::random_counts(rng, 8, n, 1.5), numbered_ids("C", n));
    const BinRange train{0, 5}, cal{5, 8};
    const std::size_t k = 2;
    const std::uint64_t seed = 17;
    const auto scores = calibrate(panel, model, topo, train, cal, k, seed, 0.1);
    REQUIRE(scores.length() == 3);
    REQUIRE(scores.circuits() == n);
    const Vector scale = standardization_scale(panel, train);
    for (std::size_t t = cal.begin; t < cal.end; ++t) {
        const CountMatrix hist = panel.counts.topRows(static_cast<Eigen::Index>(t));
        const auto sc = simulate_bin(model, hist, k, scenario_seed(seed, t));
        const CountVector y = panel.counts.row(static_cast<Eigen::Index>(t)).transpose();
        for (std::size_t i = 0; i < n; ++i) {
            double best = INFINITY;
            for (std::size_t kk = 0; kk < k; ++kk) {
                double worst = 0.0;
                for (std::size_t j = 0; j < n; ++j) {
                    const auto jj = static_cast<Eigen::Index>(j);
                    worst = std::max(worst, std::abs(static_cast<double>(
                                                y(jj) - sc.samples(static_cast<Eigen::Index>(kk), jj))) /
                                                scale(jj));
                }
                best = std::min(best, worst);
            }
            CHECK(scores.scores[i][t - cal.begin] == best);
        }
        CHECK(scores.bins[t - cal.begin] == t);
    }
    CHECK(scores.scale == scale);
}

TEST_CASE("calibration bookkeeping and degenerate models") {
    const auto topo = NetworkTopology::from_assignment(numbered_ids("C", 3), {"A", "B", "B"});
    const auto zero = make_model(Vector::Zero(3), Matrix::Zero(3, 3), 1.0);
    const auto panel = make_panel(CountMatrix::Zero(6, 3), numbered_ids("C", 3));
    const auto one = calibrate(panel, zero, topo, BinRange{0, 5}, BinRange{5, 6}, 4, 1, 0.05);
    for (const auto& s : one.scores) {
        CHECK(s.size() == 1);
        CHECK(s[0] == 0.0);
    }
    CHECK_THROWS_AS((void)calibrate(panel, zero, topo, BinRange{0, 5}, BinRange{4, 6}, 4, 1, 0.05),
                    PreconditionError);
    CHECK_THROWS_AS((void)calibrate(panel, zero, topo, BinRange{0, 5}, BinRange{5, 5}, 4, 1, 0.05),
                    PreconditionError);
}

TEST_CASE("calibration is thread-count independent") {
    const auto d = generate_synthetic(SyntheticConfig::preset("small"), 2);
    const auto a = calibrate(d.panel, d.truth, d.topology, BinRange{0, 100}, BinRange{100, 140}, 10, 5, 0.05, 1);
    const auto b = calibrate(d.panel, d.truth, d.topology, BinRange{0, 100}, BinRange{100, 140}, 10, 5, 0.05, 4);
    CHECK(a.scores == b.scores);
}

TEST_CASE("interval construction") {
    const auto solo = NetworkTopology::from_assignment({"C0"}, {"S"});
    QuantileEstimate q;
    q.q = Vector::Constant(1, 1.5);
    const auto iv = build_interval(scenarios_of({{2}, {5}, {4}}), q, Vector::Ones(1), solo, 0.05);
    CHECK(iv.lower(0) == 0.5);
    CHECK(iv.upper(0) == 6.5);

    q.q = Vector::Zero(1);
    const auto point = build_interval(scenarios_of({{3}}), q, Vector::Ones(1), solo, 0.05);
    CHECK(point.lower(0) == 3.0);
    CHECK(point.upper(0) == 3.0);

    const auto block = NetworkTopology::from_assignment(numbered_ids("C", 4), {"A", "A", "B", "B"});
    QuantileEstimate q4;
    q4.q = Vector::Constant(4, 1.0);
    Vector scale(4);
    scale << 1, 2, 1, 3;
    const auto b = build_interval(scenarios_of({{1, 0, 2, 3}, {2, 4, 0, 1}}), q4, scale, block, 0.05);
    // circuit bounds: [0,3], [-2,6], [-1,3], [-2,6]
    CHECK(b.sub_lower(0) == -2.0);
    CHECK(b.sub_upper(0) == 9.0);
    CHECK(b.sub_lower(1) == -3.0);
    CHECK(b.sub_upper(1) == 9.0);
    CHECK(b.sub_lower_clamped()(0) == 0.0);
    CHECK(b.lower_clamped()(1) == 0.0);
}

TEST_CASE("pipeline determinism and alpha monotonicity") {
    auto scfg = SyntheticConfig::preset("small");
    scfg.circuits = 3;
    scfg.substations = 2;
    scfg.bins = 60;
    const auto d = generate_synthetic(scfg, 4);
    PipelineConfig cfg;
    cfg.fit.epochs = 200;
    cfg.seed = 12;
    const SplitSpec spec{30, 0};
    const auto a = hst_conformal_pipeline(d.panel, d.topology, spec, cfg);
    const auto b = hst_conformal_pipeline(d.panel, d.topology, spec, cfg);
    CHECK(a.forecast == b.forecast);
    CHECK(a.audit.model == b.audit.model);
    CHECK(a.forecast.bin == 60);

    cfg.alpha = 0.01;
    const auto wide = hst_conformal_pipeline(d.panel, d.topology, spec, cfg, &a.audit.model);
    cfg.alpha = 0.2;
    const auto narrow = hst_conformal_pipeline(d.panel, d.topology, spec, cfg, &a.audit.model);
    CHECK((wide.forecast.upper - wide.forecast.lower).mean() >=
          (narrow.forecast.upper - narrow.forecast.lower).mean());
}

TEST_CASE("pipeline coverage over Monte-Carlo repetitions") {
    // Known model, fresh data per repetition; the interval for the bin after
    // calibration should cover the realized counts at the nominal rate.
    auto scfg = SyntheticConfig::preset("small");
    scfg.circuits = 6;
    scfg.substations = 2;
    scfg.bins = 61;
    const auto base = generate_synthetic(scfg, 100);
    PipelineConfig cfg;
    cfg.alpha = 0.05;
    std::size_t covered = 0, cells = 0;
    for (std::uint64_t rep = 0; rep < 500; ++rep) {
        const auto d = generate_synthetic(scfg, base.truth, derive_seed(500, rep));
        cfg.seed = rep;
        // 20 training bins, 40 calibration bins, predict the final bin.
        SplitSpec spec{20, 1};
        const auto r = hst_conformal_pipeline(d.panel, d.topology, spec, cfg, &base.truth);
        for (std::size_t i = 0; i < d.topology.n(); ++i) {
            const double y = static_cast<double>(d.panel.counts(60, static_cast<Eigen::Index>(i)));
            covered += y >= r.forecast.lower(static_cast<Eigen::Index>(i)) &&
                       y <= r.forecast.upper(static_cast<Eigen::Index>(i));
            ++cells;
        }
    }
    CHECK(static_cast<double>(covered) / static_cast<double>(cells) >= 0.90);
}

TEST_CASE("pipeline preconditions") {
    const auto d = generate_synthetic(SyntheticConfig::preset("small"), 1);
    PipelineConfig cfg;
    cfg.k = 0;
    CHECK_THROWS_AS(cfg.validate(), PreconditionError);
    cfg = PipelineConfig{};
    cfg.alpha = 1.0;
    CHECK_THROWS_AS(cfg.validate(), PreconditionError);
    cfg = PipelineConfig{};
    CHECK_THROWS_AS((void)hst_conformal_pipeline(d.panel, d.topology, SplitSpec{1, 0}, cfg), PreconditionError);
    CHECK_THROWS_AS((void)hst_conformal_pipeline(d.panel, d.topology, SplitSpec{199, 1}, cfg), PreconditionError);
}
