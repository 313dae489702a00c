#include <cmath>

#include "doctest.h"
#include "hstc/error.hpp"
#include "hstc/hawkes.hpp"
#include "support.hpp"

using namespace hstc;
using doctest::Approx;
using hstc::test::numbered_ids;

namespace {

HawkesModel single(double mu, double a, double beta, double cap = INFINITY) {
    Vector m(1);
    m << mu;
    Matrix e(1, 1);
    e << a;
    SaturationParams sat;
    sat.cap = cap;
    return make_model(m, e, beta, sat);
}

double central_difference(const HawkesModel& model, const CountPanel& panel, std::size_t coord, double step) {
    auto p = to_unconstrained(model);
    const double x = p.values(static_cast<Eigen::Index>(coord));
    p.values(static_cast<Eigen::Index>(coord)) = x + step;
    const double up = log_likelihood(from_unconstrained(p, model), panel);
    p.values(static_cast<Eigen::Index>(coord)) = x - step;
    const double down = log_likelihood(from_unconstrained(p, model), panel);
    return (up - down) / (2.0 * step);
}

double gradient_error(const HawkesModel& model, const CountPanel& panel) {
    const auto g = log_likelihood_gradient(model, panel);
    const auto p = to_unconstrained(model);
    double num = 0.0, den = 0.0;
    for (Eigen::Index j = 0; j < p.values.size(); ++j) {
        if (!std::isfinite(p.values(j))) continue;
        const double fd = central_difference(model, panel, static_cast<std::size_t>(j), 1e-5);
        num = std::max(num, std::abs(fd - g.gradient(j)));
        den = std::max(den, std::abs(fd));
    }
    return den > 0 ? num / den : num;
}

}  // namespace

TEST_CASE("intensity examples") {
    Vector mu(3);
    mu << 0.3, 0.7, 1.1;
    const auto m = make_model(mu, Matrix::Constant(3, 3, 0.2), 1.0);
    HawkesState fresh(m);
    CHECK(fresh.intensity() == mu);

    const auto one = single(0.5, 1.0, 1.0);
    CountMatrix hist(1, 1);
    hist << 2;
    CHECK(intensity(one, hist)(0) == Approx(0.5 + 2.0 * std::exp(-1.0)).epsilon(1e-12));
    CHECK(intensity(one, hist)(0) == Approx(1.23576).epsilon(1e-5));

    const auto capped = single(0.5, 1.0, 1.0, 10.0);
    CountMatrix full(3, 1);
    full << 4, 3, 3;
    CHECK(intensity(capped, full)(0) == 0.0);
}

TEST_CASE("state recursion matches a direct kernel sum") {
    Rng rng(17);
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t n = 1 + static_cast<std::size_t>(rng.below(4));
        const auto model = test::random_model(rng, n, rng.uniform(50, 400));
        const auto hist = test::random_counts(rng, 1 + static_cast<std::size_t>(rng.below(20)), n, 1.0);
        const Vector got = intensity(model, hist);
        const auto T = hist.rows();
        double cum = static_cast<double>(hist.sum());
        const double gamma = std::max(model.saturation.floor, 1.0 - cum / model.saturation.cap);
        for (std::size_t i = 0; i < n; ++i) {
            double excite = 0.0;
            for (std::size_t j = 0; j < n; ++j)
                for (Eigen::Index s = 0; s < T; ++s)
                    excite += model.excitation(i, j) * static_cast<double>(hist(s, j)) *
                              std::exp(-model.beta * static_cast<double>(T - s));
            const double expect = gamma * (model.mu(i) + model.beta * excite);
            CHECK(got(i) == Approx(expect).epsilon(1e-12));
        }
    }
}

TEST_CASE("log-likelihood examples") {
    Rng rng(1);
    const std::size_t n = 3, bins = 7;
    auto m = make_model(Vector::Ones(3), Matrix::Zero(3, 3), 1.0);
    const auto zeros = make_panel(CountMatrix::Zero(bins, n), numbered_ids("C", n));
    CHECK(log_likelihood(m, zeros) == Approx(-static_cast<double>(n * bins)));

    CountMatrix y(1, 1);
    y << 3;
    const auto p = make_panel(y, {"C0"});
    CHECK(log_likelihood(single(2.0, 0.0, 1.0), p) == Approx(3.0 * std::log(2.0) - 2.0).epsilon(1e-12));
    CHECK(log_likelihood(single(2.0, 0.0, 1.0), p) == Approx(0.07944).epsilon(1e-4));

    CountMatrix two(2, 1);
    two << 5, 1;
    // Cap reached after the first bin: the second bin has zero intensity but a count.
    CHECK(log_likelihood(single(1.0, 0.0, 1.0, 5.0), make_panel(two, {"C0"})) == -INFINITY);
    CountMatrix quiet(2, 1);
    quiet << 5, 0;
    CHECK(std::isfinite(log_likelihood(single(1.0, 0.0, 1.0, 5.0), make_panel(quiet, {"C0"}))));
}

TEST_CASE("parameter transform round trip") {
    Rng rng(5);
    for (int rep = 0; rep < 20; ++rep) {
        auto m = test::random_model(rng, 3, rep % 2 ? 100.0 : INFINITY);
        m.excitation(0, 1) = 0.0;
        const auto back = from_unconstrained(to_unconstrained(m), m);
        CHECK(back.mu.isApprox(m.mu, 1e-12));
        CHECK(back.excitation.isApprox(m.excitation, 1e-12));
        CHECK(back.excitation(0, 1) == 0.0);
        CHECK(back.beta == Approx(m.beta).epsilon(1e-12));
        if (std::isinf(m.saturation.cap)) CHECK(std::isinf(back.saturation.cap));
        else CHECK(back.saturation.cap == Approx(m.saturation.cap).epsilon(1e-12));
    }
    for (double y : {1e-8, 0.3, 1.0, 30.0, 800.0}) CHECK(softplus(softplus_inverse(y)) == Approx(y).epsilon(1e-10));
}

TEST_CASE("gradient agrees with central differences") {
    Rng rng(4242);
    double worst = 0.0;
    for (int rep = 0; rep < 40; ++rep) {
        const std::size_t n = 1 + static_cast<std::size_t>(rng.below(4));
        const std::size_t bins = 5 + static_cast<std::size_t>(rng.below(30));
        const auto counts = test::random_counts(rng, bins, n, rng.uniform(0.2, 3.0));
        const double total = static_cast<double>(counts.sum());
        const double cap = rep % 3 == 0 ? INFINITY : rng.uniform(1.5, 4.0) * (total + 1.0);
        const auto model = test::random_model(rng, n, cap);
        const auto panel = make_panel(counts, numbered_ids("C", n));
        worst = std::max(worst, gradient_error(model, panel));
    }
    CHECK(worst < 1e-5);
}

TEST_CASE("gradient with covariate modulation") {
    Rng rng(31);
    const std::size_t n = 3, bins = 20, p = 2;
    auto panel = make_panel(test::random_counts(rng, bins, n, 1.5), numbered_ids("C", n));
    for (std::size_t t = 0; t < bins; ++t)
        panel.covariates.push_back(Matrix::NullaryExpr(n, p, [&] { return rng.uniform(-1, 1); }));
    auto model = test::random_model(rng, n, 500.0);
    model.covariate_weights = Vector::NullaryExpr(p, [&] { return rng.uniform(-0.5, 0.5); });
    CHECK(gradient_error(model, panel) < 1e-5);
}

TEST_CASE("gradient structure") {
    Rng rng(12);
    const auto panel = make_panel(test::random_counts(rng, 15, 2, 1.0), numbered_ids("C", 2));
    auto flat = make_model(Vector::Constant(2, 0.8), Matrix::Zero(2, 2), 1.7);
    const auto g = log_likelihood_gradient(flat, panel);
    CHECK(g.gradient(static_cast<Eigen::Index>(to_unconstrained(flat).beta_offset())) == 0.0);

    CountMatrix sym(6, 2);
    sym << 1, 1, 0, 0, 2, 2, 1, 1, 3, 3, 0, 0;
    Matrix a(2, 2);
    a << 0.1, 0.2, 0.2, 0.1;
    const auto m = make_model(Vector::Constant(2, 0.6), a, 0.9);
    const auto gs = log_likelihood_gradient(m, make_panel(sym, numbered_ids("C", 2)));
    CHECK(gs.gradient(0) == Approx(gs.gradient(1)).epsilon(1e-12));
    CHECK(gs.value == Approx(log_likelihood(m, make_panel(sym, numbered_ids("C", 2)))).epsilon(1e-12));
}

TEST_CASE("branching ratio warning") {
    std::vector<std::string> warnings;
    auto prev = set_warning_handler([&](const std::string& w) { warnings.push_back(w); });
    (void)make_model(Vector::Ones(2), Matrix::Constant(2, 2, 0.1), 1.0);
    CHECK(warnings.empty());
    (void)make_model(Vector::Ones(2), Matrix::Constant(2, 2, 2.0), 1.0);
    set_warning_handler(prev);
    CHECK(warnings.size() == 1);
    CHECK_THROWS_AS((void)make_model(Vector::Constant(2, -1.0), Matrix::Zero(2, 2), 1.0), PreconditionError);
    CHECK_THROWS_AS((void)make_model(Vector::Ones(2), Matrix::Zero(2, 2), 0.0), PreconditionError);
}
