#include "hstc/model_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "hstc/error.hpp"
#include "json.hpp"

namespace hstc {
using json = nlohmann::json;

namespace {

constexpr int kModelFormatVersion = 1;
constexpr const char* kGammaForm = "linear_saturation";

// JSON has no infinities; +inf is written as null.
json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double number_or_inf(const json& j) {
    return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

}  // namespace

std::string model_to_json(const HawkesModel& model) {
    json j;
    j["format"] = "hstc-model";
    j["version"] = kModelFormatVersion;
    j["n"] = model.n();
    j["circuit_ids"] = model.circuit_ids;
    j["gamma_form"] = kGammaForm;
    j["mu"] = std::vector<double>(model.mu.data(), model.mu.data() + model.mu.size());
    json rows = json::array();
    for (Eigen::Index i = 0; i < model.excitation.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index k = 0; k < model.excitation.cols(); ++k) row.push_back(model.excitation(i, k));
        rows.push_back(std::move(row));
    }
    j["excitation"] = std::move(rows);
    j["beta"] = model.beta;
    j["saturation"] = {{"cap", number_or_null(model.saturation.cap)}, {"floor", model.saturation.floor}};
    j["covariate_weights"] = std::vector<double>(model.covariate_weights.data(),
                                                 model.covariate_weights.data() + model.covariate_weights.size());
    j["fit"] = {
        {"epochs_run", model.fit_info.epochs_run},
        {"initial_log_likelihood", number_or_null(model.fit_info.initial_log_likelihood)},
        {"final_log_likelihood", number_or_null(model.fit_info.final_log_likelihood)},
        {"seed", model.fit_info.seed},
        {"converged", model.fit_info.converged},
    };
    return j.dump(1) + "\n";
}

HawkesModel model_from_json(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(std::string("model: malformed JSON: ") + e.what());
    }
    try {
        if (j.at("format") != "hstc-model") throw DataError("model: wrong document format");
        if (j.at("version").get<int>() != kModelFormatVersion) throw DataError("model: unsupported version");
        if (j.at("gamma_form") != kGammaForm) throw DataError("model: unknown gamma form");
        HawkesModel m;
        const auto n = j.at("n").get<std::size_t>();
        m.circuit_ids = j.at("circuit_ids").get<std::vector<std::string>>();
        const auto mu = j.at("mu").get<std::vector<double>>();
        if (mu.size() != n) throw DataError("model: mu length mismatch");
        m.mu = Eigen::Map<const Vector>(mu.data(), static_cast<Eigen::Index>(n));
        const auto& rows = j.at("excitation");
        if (rows.size() != n) throw DataError("model: excitation row count mismatch");
        m.excitation.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i) {
            if (rows[i].size() != n) throw DataError("model: excitation must be square");
            for (std::size_t k = 0; k < n; ++k) {
                m.excitation(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k].get<double>();
            }
        }
        m.beta = j.at("beta").get<double>();
        m.saturation.cap = number_or_inf(j.at("saturation").at("cap"));
        m.saturation.floor = j.at("saturation").at("floor").get<double>();
        const auto w = j.value("covariate_weights", std::vector<double>{});
        m.covariate_weights = Eigen::Map<const Vector>(w.data(), static_cast<Eigen::Index>(w.size()));
        if (j.contains("fit")) {
            const auto& f = j["fit"];
            m.fit_info.epochs_run = f.at("epochs_run").get<std::size_t>();
            m.fit_info.initial_log_likelihood = number_or_inf(f.at("initial_log_likelihood"));
            m.fit_info.final_log_likelihood = number_or_inf(f.at("final_log_likelihood"));
            m.fit_info.seed = f.at("seed").get<std::uint64_t>();
            m.fit_info.converged = f.at("converged").get<bool>();
        }
        try {
            m.validate();
        } catch (const PreconditionError& e) {
            throw DataError(e.what());
        }
        return m;
    } catch (const json::exception& e) {
        throw DataError(std::string("model: ") + e.what());
    }
}

void save_model(const HawkesModel& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw PreconditionError("cannot write " + path.string());
    out << model_to_json(model);
}

HawkesModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return model_from_json(buf.str());
}

}  // namespace hstc
