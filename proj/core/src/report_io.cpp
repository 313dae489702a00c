#include "hstc/report_io.hpp"

#include <fstream>
#include <sstream>

#include "hstc/csv.hpp"
#include "hstc/error.hpp"
#include "json.hpp"

namespace hstc {
using json = nlohmann::json;
using csv::format_double;

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw PreconditionError("cannot write " + path.string());
    return out;
}

json to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

void interval_row(std::ostream& out, const std::string& id, std::size_t bin, double lower, double upper) {
    out << id << ',' << bin << ',' << format_double(lower) << ',' << format_double(std::max(0.0, lower)) << ','
        << format_double(upper) << ',' << format_double(upper - lower) << '\n';
}

constexpr const char* kIntervalHeader = "id,bin,lower_raw,lower_clamped,upper,width\n";

}  // namespace

void write_text(const std::filesystem::path& path, const std::string& text) { open_out(path) << text; }

void write_circuit_intervals(const std::filesystem::path& path, std::span<const IntervalForecast> forecasts,
                             const NetworkTopology& topo) {
    auto out = open_out(path);
    out << kIntervalHeader;
    for (const auto& f : forecasts) {
        for (std::size_t i = 0; i < topo.n(); ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            interval_row(out, topo.circuit_ids()[i], f.bin, f.lower(ii), f.upper(ii));
        }
    }
}

void write_substation_intervals(const std::filesystem::path& path, std::span<const IntervalForecast> forecasts,
                                const NetworkTopology& topo) {
    auto out = open_out(path);
    out << kIntervalHeader;
    for (const auto& f : forecasts) {
        for (std::size_t j = 0; j < topo.m(); ++j) {
            const auto jj = static_cast<Eigen::Index>(j);
            interval_row(out, topo.substation_ids()[j], f.bin, f.sub_lower(jj), f.sub_upper(jj));
        }
    }
}

std::string audit_to_json(const PipelineResult& result, const NetworkTopology& topo) {
    const auto& a = result.audit;
    const auto& f = result.forecast;
    json j;
    j["format"] = "hstc-audit";
    j["version"] = 1;
    j["alpha"] = f.alpha;
    j["target_bin"] = f.bin;
    j["k"] = a.scenarios.k();
    j["split"] = {{"train", {a.split.train.begin, a.split.train.end}},
                  {"cal", {a.split.cal.begin, a.split.cal.end}},
                  {"test", {a.split.test.begin, a.split.test.end}}};
    j["quantile_method"] = std::string(to_string(a.quantiles.method));
    j["calibration_bins"] = a.scores.bins;

    json circuits = json::array();
    for (std::size_t i = 0; i < topo.n(); ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        json c;
        c["id"] = topo.circuit_ids()[i];
        c["substation"] = topo.substation_ids()[topo.substation_of(i)];
        c["scale"] = a.scores.scale(ii);
        c["quantile"] = a.quantiles.q(ii);
        c["scores"] = a.scores.scores[i];
        json samples = json::array();
        for (Eigen::Index k = 0; k < a.scenarios.samples.rows(); ++k) samples.push_back(a.scenarios.samples(k, ii));
        c["scenarios"] = std::move(samples);
        c["lower_raw"] = f.lower(ii);
        c["lower_clamped"] = std::max(0.0, f.lower(ii));
        c["upper"] = f.upper(ii);
        circuits.push_back(std::move(c));
    }
    j["circuits"] = std::move(circuits);

    json subs = json::array();
    for (std::size_t s = 0; s < topo.m(); ++s) {
        const auto ss = static_cast<Eigen::Index>(s);
        json members = json::array();
        for (const auto i : topo.members(s)) members.push_back(topo.circuit_ids()[i]);
        subs.push_back({{"id", topo.substation_ids()[s]},
                        {"members", std::move(members)},
                        {"lower_raw", f.sub_lower(ss)},
                        {"upper", f.sub_upper(ss)}});
    }
    j["substations"] = std::move(subs);
    j["model_fit"] = {{"epochs_run", a.model.fit_info.epochs_run},
                      {"final_log_likelihood", a.model.fit_info.final_log_likelihood},
                      {"seed", a.model.fit_info.seed}};
    return j.dump(1) + "\n";
}

void write_audit(const std::filesystem::path& path, const PipelineResult& result, const NetworkTopology& topo) {
    write_text(path, audit_to_json(result, topo));
}

std::string scores_to_json(const ScoreSet& scores, const QuantileEstimate& q, const NetworkTopology& topo) {
    json j;
    j["format"] = "hstc-scores";
    j["version"] = 1;
    j["alpha"] = scores.alpha;
    j["quantile_method"] = std::string(to_string(q.method));
    j["calibration_bins"] = scores.bins;
    j["scale"] = to_json(scores.scale);
    j["quantiles"] = to_json(q.q);
    json per = json::object();
    for (std::size_t i = 0; i < topo.n(); ++i) per[topo.circuit_ids()[i]] = scores.scores[i];
    j["scores"] = std::move(per);
    return j.dump(1) + "\n";
}

std::string metrics_text(const EvalReport& r) {
    std::ostringstream os;
    os << "# hstc evaluation report v1\n";
    os << "val = " << format_double(r.val) << '\n';
    os << "agg_val = " << format_double(r.agg_val) << '\n';
    os << "size = " << format_double(r.size) << '\n';
    os << "raw_size = " << format_double(r.raw_size) << '\n';
    os << "circuit_cells = " << r.circuit_cells.size() << '\n';
    os << "substation_cells = " << r.substation_cells.size() << '\n';
    os << "circuits = " << r.circuit_ids.size() << '\n';
    os << "substations = " << r.substation_ids.size() << '\n';
    os << "alpha = " << format_double(r.alpha) << '\n';
    os << "k = " << r.k << '\n';
    os << "quantile_method = " << to_string(r.method) << '\n';
    os << "seed = " << r.seed << '\n';
    os << "refit_each_step = " << (r.refit_each_step ? "true" : "false") << '\n';
    os << "\n[per_bin]\nbin,val,agg_val,size\n";
    for (const auto& b : r.per_bin) {
        os << b.bin << ',' << format_double(b.val) << ',' << format_double(b.agg_val) << ',' << format_double(b.size)
           << '\n';
    }
    return os.str();
}

void write_metrics(const std::filesystem::path& path, const EvalReport& report) {
    write_text(path, metrics_text(report));
}

void write_eval_cells(const std::filesystem::path& path, const EvalReport& r) {
    auto out = open_out(path);
    out << "level,id,bin,truth,lower_raw,lower_clamped,upper,width,std_width,covered\n";
    auto emit = [&](const char* level, const std::vector<std::string>& ids, const std::vector<CellRecord>& cells) {
        for (const auto& c : cells) {
            out << level << ',' << ids[c.unit] << ',' << c.bin << ',' << format_double(c.truth) << ','
                << format_double(c.lower) << ',' << format_double(std::max(0.0, c.lower)) << ','
                << format_double(c.upper) << ',' << format_double(c.width()) << ','
                << format_double(c.width() / c.scale) << ',' << (c.covered ? 1 : 0) << '\n';
        }
    };
    emit("circuit", r.circuit_ids, r.circuit_cells);
    emit("substation", r.substation_ids, r.substation_cells);
}

void write_horizon_csv(const std::filesystem::path& path, const HorizonForecast& fc, const NetworkTopology& topo,
                       const CountPanel& panel) {
    auto out = open_out(path);
    out << "step,bin,level,id,lower_raw,lower_clamped,upper,width,cum_lower,cum_upper,truth\n";
    for (std::size_t h = 0; h < fc.steps.size(); ++h) {
        const auto& f = fc.steps[h];
        const auto hh = static_cast<Eigen::Index>(h);
        const bool known = f.bin < panel.bins();
        CountVector y;
        CountVector y_sub;
        if (known) {
            y = panel.counts.row(static_cast<Eigen::Index>(f.bin)).transpose();
            y_sub = topo.aggregate(y);
        }
        for (std::size_t i = 0; i < topo.n(); ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            out << h + 1 << ',' << f.bin << ",circuit," << topo.circuit_ids()[i] << ',' << format_double(f.lower(ii))
                << ',' << format_double(std::max(0.0, f.lower(ii))) << ',' << format_double(f.upper(ii)) << ','
                << format_double(f.upper(ii) - f.lower(ii)) << ',' << format_double(fc.cumulative_lower(hh, ii)) << ','
                << format_double(fc.cumulative_upper(hh, ii)) << ',';
            if (known) out << y(ii);
            out << '\n';
        }
        for (std::size_t j = 0; j < topo.m(); ++j) {
            const auto jj = static_cast<Eigen::Index>(j);
            out << h + 1 << ',' << f.bin << ",substation," << topo.substation_ids()[j] << ','
                << format_double(f.sub_lower(jj)) << ',' << format_double(std::max(0.0, f.sub_lower(jj))) << ','
                << format_double(f.sub_upper(jj)) << ',' << format_double(f.sub_upper(jj) - f.sub_lower(jj)) << ','
                << format_double(fc.sub_cumulative_lower(hh, jj)) << ','
                << format_double(fc.sub_cumulative_upper(hh, jj)) << ',';
            if (known) out << y_sub(jj);
            out << '\n';
        }
    }
}

}  // namespace hstc
