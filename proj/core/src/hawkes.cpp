#include "hstc/hawkes.hpp"

#include <cmath>
#include <sstream>

#include "hstc/error.hpp"

namespace hstc {
namespace {

template <class A, class B>
bool same_shape_equal(const A& a, const B& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
}

double sigmoid(double x) noexcept { return 1.0 / (1.0 + std::exp(-x)); }

void check_history(const HawkesModel& model, const CountMatrix& history) {
    if (history.rows() > 0 && static_cast<std::size_t>(history.cols()) != model.n()) {
        throw PreconditionError("history has " + std::to_string(history.cols()) + " circuits, model has " +
                                std::to_string(model.n()));
    }
}

void check_panel(const HawkesModel& model, const CountPanel& panel, BinRange bins) {
    if (panel.circuits() != model.n()) {
        throw PreconditionError("panel has " + std::to_string(panel.circuits()) + " circuits, model has " +
                                std::to_string(model.n()));
    }
    if (bins.end > panel.bins() || bins.begin > bins.end) throw PreconditionError("bin range outside the panel");
    if (model.uses_covariates() && panel.covariate_dim() != static_cast<std::size_t>(model.covariate_weights.size())) {
        throw PreconditionError("model covariate weights do not match panel covariates");
    }
}

// Baseline mu_it including the optional covariate modulation.
Vector baseline(const HawkesModel& model, const Matrix* z_prev) {
    if (!model.uses_covariates()) return model.mu;
    if (z_prev == nullptr) throw PreconditionError("model uses covariates but none were supplied");
    if (z_prev->rows() != model.mu.size() || z_prev->cols() != model.covariate_weights.size()) {
        throw PreconditionError("covariate matrix shape mismatch");
    }
    return model.mu.cwiseProduct(((*z_prev) * model.covariate_weights).array().exp().matrix());
}

// y log lambda - lambda with the zero-intensity conventions.
double poisson_term(std::int64_t y, double lambda) {
    if (lambda <= 0.0) return y > 0 ? -std::numeric_limits<double>::infinity() : 0.0;
    return static_cast<double>(y) * std::log(lambda) - lambda;
}

}  // namespace

double SaturationParams::gamma(double cumulative) const noexcept {
    if (std::isinf(cap)) return std::max(floor, 1.0);
    return std::max(floor, 1.0 - cumulative / cap);
}

double HawkesModel::branching_ratio() const {
    if (excitation.size() == 0) return 0.0;
    const double kernel_mass = beta * std::exp(-beta) / (-std::expm1(-beta));
    return excitation.rowwise().sum().maxCoeff() * kernel_mass;
}

void HawkesModel::validate() const {
    const auto n = mu.size();
    if (n == 0) throw PreconditionError("model: no circuits");
    if (excitation.rows() != n || excitation.cols() != n) throw PreconditionError("model: excitation must be n x n");
    if (!circuit_ids.empty() && static_cast<Eigen::Index>(circuit_ids.size()) != n) {
        throw PreconditionError("model: circuit id count mismatch");
    }
    if (!mu.allFinite() || mu.minCoeff() < 0.0) throw PreconditionError("model: mu must be finite and >= 0");
    if (!excitation.allFinite() || excitation.minCoeff() < 0.0) {
        throw PreconditionError("model: excitation must be finite and >= 0");
    }
    if (!(beta > 0.0) || !std::isfinite(beta)) throw PreconditionError("model: beta must be positive");
    if (!(saturation.cap > 0.0)) throw PreconditionError("model: saturation cap must be positive");
    if (!(saturation.floor >= 0.0 && saturation.floor < 1.0)) {
        throw PreconditionError("model: saturation floor must lie in [0, 1)");
    }
    if (uses_covariates() && !covariate_weights.allFinite()) {
        throw PreconditionError("model: covariate weights must be finite");
    }
    if (const double r = branching_ratio(); r > 1.0) {
        std::ostringstream os;
        os << "model is in the explosive regime (branching ratio " << r << " > 1)";
        warn(os.str());
    }
}

bool operator==(const HawkesModel& a, const HawkesModel& b) {
    return same_shape_equal(a.mu, b.mu) && same_shape_equal(a.excitation, b.excitation) && a.beta == b.beta &&
           a.saturation == b.saturation && same_shape_equal(a.covariate_weights, b.covariate_weights) &&
           a.circuit_ids == b.circuit_ids && a.fit_info == b.fit_info;
}

HawkesModel make_model(Vector mu, Matrix excitation, double beta, SaturationParams saturation) {
    HawkesModel m;
    m.mu = std::move(mu);
    m.excitation = std::move(excitation);
    m.beta = beta;
    m.saturation = saturation;
    m.validate();
    return m;
}

HawkesState::HawkesState(const HawkesModel& model)
    : model_(&model), decay_(std::exp(-model.beta)), decayed_(Vector::Zero(model.mu.size())) {}

HawkesState::HawkesState(const HawkesModel& model, const CountMatrix& history) : HawkesState(model) {
    check_history(model, history);
    for (Eigen::Index t = 0; t < history.rows(); ++t) advance_row(history.row(t));
}

void HawkesState::advance(const CountVector& counts) {
    if (counts.size() != decayed_.size()) throw PreconditionError("advance: count vector length mismatch");
    decayed_ = decay_ * (decayed_ + counts.cast<double>());
    cumulative_ += static_cast<double>(counts.sum());
    ++bin_;
}

Vector HawkesState::intensity(const Matrix* covariates_prev) const {
    const double gamma = model_->saturation.gamma(cumulative_);
    Vector rate = baseline(*model_, covariates_prev) + model_->beta * (model_->excitation * decayed_);
    return gamma * rate;
}

Vector intensity(const HawkesModel& model, const CountMatrix& history, const Matrix* covariates_prev) {
    return HawkesState(model, history).intensity(covariates_prev);
}

const Matrix* lagged_covariates(const CountPanel& panel, std::size_t t) {
    if (panel.covariates.empty()) return nullptr;
    return &panel.covariates[t == 0 ? 0 : std::min(t - 1, panel.covariates.size() - 1)];
}

double log_likelihood(const HawkesModel& model, const CountPanel& panel, BinRange bins) {
    check_panel(model, panel, bins);
    HawkesState state(model);
    double total = 0.0;
    for (std::size_t t = 0; t < bins.end; ++t) {
        const auto row = panel.counts.row(static_cast<Eigen::Index>(t));
        if (t >= bins.begin) {
            const Vector lambda = state.intensity(lagged_covariates(panel, t));
            for (Eigen::Index i = 0; i < lambda.size(); ++i) total += poisson_term(row(i), lambda(i));
        }
        state.advance_row(row);
    }
    return total;
}

double log_likelihood(const HawkesModel& model, const CountPanel& panel) {
    return log_likelihood(model, panel, {0, panel.bins()});
}

double softplus(double x) noexcept {
    if (x > 30.0) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

double softplus_inverse(double y) noexcept {
    if (y > 30.0) return y + std::log(-std::expm1(-y));
    return std::log(std::expm1(y));
}

ParameterVector to_unconstrained(const HawkesModel& model) {
    ParameterVector p;
    p.n = model.n();
    p.covariates = static_cast<std::size_t>(model.covariate_weights.size());
    p.values.resize(static_cast<Eigen::Index>(ParameterVector::size_for(p.n, p.covariates)));
    const auto n = static_cast<Eigen::Index>(p.n);
    p.values.head(n) = model.mu.array().log().matrix();
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            p.values(static_cast<Eigen::Index>(p.excitation_offset()) + i * n + j) = std::log(model.excitation(i, j));
        }
    }
    p.values(static_cast<Eigen::Index>(p.beta_offset())) = softplus_inverse(model.beta);
    p.values(static_cast<Eigen::Index>(p.cap_offset())) = std::log(model.saturation.cap);
    if (p.covariates > 0) {
        p.values.segment(static_cast<Eigen::Index>(p.covariate_offset()), static_cast<Eigen::Index>(p.covariates)) =
            model.covariate_weights;
    }
    return p;
}

HawkesModel from_unconstrained(const ParameterVector& p, const HawkesModel& like) {
    HawkesModel m = like;
    const auto n = static_cast<Eigen::Index>(p.n);
    m.mu = p.values.head(n).array().exp().matrix();
    m.excitation.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            m.excitation(i, j) = std::exp(p.values(static_cast<Eigen::Index>(p.excitation_offset()) + i * n + j));
        }
    }
    m.beta = softplus(p.values(static_cast<Eigen::Index>(p.beta_offset())));
    m.saturation.cap = std::exp(p.values(static_cast<Eigen::Index>(p.cap_offset())));
    if (p.covariates > 0) {
        m.covariate_weights =
            p.values.segment(static_cast<Eigen::Index>(p.covariate_offset()), static_cast<Eigen::Index>(p.covariates));
    } else {
        m.covariate_weights.resize(0);
    }
    return m;
}

LikelihoodGradient log_likelihood_gradient(const HawkesModel& model, const CountPanel& panel, BinRange bins) {
    check_panel(model, panel, bins);
    const auto n = static_cast<Eigen::Index>(model.n());
    const auto p = model.covariate_weights.size();
    const double beta = model.beta;
    const double decay = std::exp(-beta);
    const double cap = model.saturation.cap;

    Vector d_mu = Vector::Zero(n);
    Matrix d_a = Matrix::Zero(n, n);
    double d_beta = 0.0;
    double d_cap = 0.0;
    Vector d_w = Vector::Zero(p);

    Vector h = Vector::Zero(n);  // sum y e^{-beta lag}
    Vector g = Vector::Zero(n);  // sum y lag e^{-beta lag} = -dh/dbeta
    double cumulative = 0.0;
    double total = 0.0;

    for (std::size_t t = 0; t < bins.end; ++t) {
        const auto row = panel.counts.row(static_cast<Eigen::Index>(t));
        if (t >= bins.begin) {
            const Matrix* z = lagged_covariates(panel, t);
            const Vector base = baseline(model, z);
            const Vector ah = model.excitation * h;
            const Vector u = base + beta * ah;
            const double gamma = model.saturation.gamma(cumulative);
            const bool cap_active = std::isfinite(cap) && (1.0 - cumulative / cap) > model.saturation.floor;

            Vector w(n);
            for (Eigen::Index i = 0; i < n; ++i) {
                const double lambda = gamma * u(i);
                total += poisson_term(row(i), lambda);
                w(i) = lambda > 0.0 ? static_cast<double>(row(i)) / lambda - 1.0 : -1.0;
            }
            if (!std::isfinite(total)) break;

            const Vector wg = gamma * w;
            d_mu += wg.cwiseProduct(base);
            d_a.noalias() += beta * wg * h.transpose();
            d_beta += wg.dot(model.excitation * (h - beta * g));
            if (cap_active) d_cap += w.dot(u) * cumulative / cap;
            if (p > 0) d_w += z->transpose() * wg.cwiseProduct(base);
        }
        const Vector y = row.transpose().cast<double>();
        g = decay * (g + h + y);
        h = decay * (h + y);
        cumulative += y.sum();
    }

    if (!std::isfinite(total)) {
        throw NumericalError("log-likelihood is not finite; gradient undefined (zero intensity on a positive count)");
    }

    LikelihoodGradient out;
    out.value = total;
    ParameterVector layout;
    layout.n = model.n();
    layout.covariates = static_cast<std::size_t>(p);
    out.gradient.resize(static_cast<Eigen::Index>(ParameterVector::size_for(layout.n, layout.covariates)));
    out.gradient.head(n) = d_mu;
    d_a = d_a.cwiseProduct(model.excitation);  // chain rule through A = exp(theta)
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            out.gradient(static_cast<Eigen::Index>(layout.excitation_offset()) + i * n + j) = d_a(i, j);
        }
    }
    out.gradient(static_cast<Eigen::Index>(layout.beta_offset())) = d_beta * sigmoid(softplus_inverse(beta));
    out.gradient(static_cast<Eigen::Index>(layout.cap_offset())) = d_cap;
    if (p > 0) out.gradient.segment(static_cast<Eigen::Index>(layout.covariate_offset()), p) = d_w;
    return out;
}

LikelihoodGradient log_likelihood_gradient(const HawkesModel& model, const CountPanel& panel) {
    return log_likelihood_gradient(model, panel, {0, panel.bins()});
}

}  // namespace hstc
