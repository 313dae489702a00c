#pragma once

#include "hstc/types.hpp"

namespace hstc {

[[nodiscard]] double pinball_loss(double residual, double tau) noexcept;

struct QuantileRegressionFit {
    Vector coefficients;
    double objective = 0.0;  // sum of pinball losses
    std::size_t pivots = 0;
};

/// Linear quantile regression min_b sum_r rho_tau(y_r - x_r . b), solved
/// exactly as a linear program with a dense primal simplex (Bland's rule).
/// The caller supplies any intercept column in X.
[[nodiscard]] QuantileRegressionFit fit_quantile_regression(const Matrix& x, const Vector& y, double tau);

}  // namespace hstc
