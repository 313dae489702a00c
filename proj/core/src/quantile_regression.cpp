#include "hstc/quantile_regression.hpp"

#include <cmath>
#include <vector>

#include "hstc/error.hpp"

namespace hstc {

double pinball_loss(double residual, double tau) noexcept {
    return residual >= 0.0 ? tau * residual : (tau - 1.0) * residual;
}

QuantileRegressionFit fit_quantile_regression(const Matrix& x, const Vector& y, double tau) {
    if (!(tau > 0.0 && tau < 1.0)) throw PreconditionError("quantile regression: tau must lie in (0, 1)");
    if (x.rows() != y.size() || x.rows() == 0) throw PreconditionError("quantile regression: shape mismatch");
    const Eigen::Index rows = x.rows();
    const Eigen::Index p = x.cols();

    // Columns: b+ (p), b- (p), u+ (rows), u- (rows), then the right-hand side.
    const Eigen::Index vars = 2 * p + 2 * rows;
    Matrix tab = Matrix::Zero(rows, vars + 1);
    Vector cost = Vector::Zero(vars);
    cost.segment(2 * p, rows).setConstant(tau);
    cost.segment(2 * p + rows, rows).setConstant(1.0 - tau);

    std::vector<Eigen::Index> basis(static_cast<std::size_t>(rows));
    for (Eigen::Index r = 0; r < rows; ++r) {
        const double sign = y(r) >= 0.0 ? 1.0 : -1.0;
        tab.block(r, 0, 1, p) = sign * x.row(r);
        tab.block(r, p, 1, p) = -sign * x.row(r);
        tab(r, 2 * p + r) = sign;
        tab(r, 2 * p + rows + r) = -sign;
        tab(r, vars) = sign * y(r);
        basis[static_cast<std::size_t>(r)] = sign > 0 ? 2 * p + r : 2 * p + rows + r;
    }

    const double scale = std::max(1.0, y.cwiseAbs().maxCoeff());
    const double eps = 1e-11 * scale;
    const double pivot_eps = 1e-12;
    const std::size_t max_pivots = 200 * static_cast<std::size_t>(vars + rows);

    Vector reduced(vars);
    std::size_t pivots = 0;
    for (;;) {
        // reduced_j = c_j - c_B^T B^{-1} A_j, with B^{-1}A held in the tableau.
        reduced = cost;
        for (Eigen::Index r = 0; r < rows; ++r) {
            const double cb = cost(basis[static_cast<std::size_t>(r)]);
            if (cb != 0.0) reduced -= cb * tab.row(r).head(vars).transpose();
        }
        Eigen::Index enter = -1;
        for (Eigen::Index j = 0; j < vars; ++j) {
            if (reduced(j) < -1e-12) {
                enter = j;
                break;
            }
        }
        if (enter < 0) break;

        Eigen::Index leave = -1;
        double best_ratio = 0.0;
        for (Eigen::Index r = 0; r < rows; ++r) {
            const double a = tab(r, enter);
            if (a <= pivot_eps) continue;
            const double ratio = tab(r, vars) / a;
            if (leave < 0 || ratio < best_ratio - eps ||
                (std::abs(ratio - best_ratio) <= eps &&
                 basis[static_cast<std::size_t>(r)] < basis[static_cast<std::size_t>(leave)])) {
                leave = r;
                best_ratio = ratio;
            }
        }
        if (leave < 0) throw NumericalError("quantile regression: LP reported unbounded");

        tab.row(leave) /= tab(leave, enter);
        for (Eigen::Index r = 0; r < rows; ++r) {
            if (r == leave) continue;
            const double f = tab(r, enter);
            if (f != 0.0) tab.row(r) -= f * tab.row(leave);
        }
        basis[static_cast<std::size_t>(leave)] = enter;
        if (++pivots > max_pivots) throw NumericalError("quantile regression: simplex did not terminate");
    }

    Vector primal = Vector::Zero(vars);
    for (Eigen::Index r = 0; r < rows; ++r) primal(basis[static_cast<std::size_t>(r)]) = tab(r, vars);

    QuantileRegressionFit fit;
    fit.coefficients = primal.head(p) - primal.segment(p, p);
    const Vector resid = y - x * fit.coefficients;
    for (Eigen::Index r = 0; r < rows; ++r) fit.objective += pinball_loss(resid(r), tau);
    fit.pivots = pivots;
    return fit;
}

}  // namespace hstc
