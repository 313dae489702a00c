#include "hstc/panel.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include "hstc/csv.hpp"
#include "hstc/error.hpp"
#include "json.hpp"

namespace hstc {
namespace chr = std::chrono;
using json = nlohmann::json;

namespace {

constexpr int kPanelFormatVersion = 1;

int parse_fixed_int(std::string_view s, std::size_t pos, std::size_t len, std::string_view whole) {
    int v = 0;
    if (pos + len > s.size()) throw DataError("unparseable timestamp '" + std::string(whole) + "'");
    for (std::size_t i = pos; i < pos + len; ++i) {
        if (s[i] < '0' || s[i] > '9') throw DataError("unparseable timestamp '" + std::string(whole) + "'");
        v = v * 10 + (s[i] - '0');
    }
    return v;
}

std::size_t bin_index(const std::vector<Timestamp>& bounds, Timestamp ts) {
    // bounds holds T+1 edges; result is T when ts falls outside.
    if (ts < bounds.front() || ts >= bounds.back()) return bounds.size() - 1;
    const auto it = std::upper_bound(bounds.begin(), bounds.end(), ts);
    return static_cast<std::size_t>(it - bounds.begin()) - 1;
}

std::vector<Timestamp> grid_edges(Timestamp start, BinLength len, Timestamp end) {
    std::vector<Timestamp> edges{start};
    while (edges.back() < end) edges.push_back(len.advance(start, static_cast<std::int64_t>(edges.size())));
    return edges;
}

}  // namespace

Timestamp parse_timestamp(std::string_view text) {
    std::string_view s = text;
    while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    if (s.size() < 10 || s[4] != '-' || s[7] != '-') {
        throw DataError("unparseable timestamp '" + std::string(text) + "'");
    }
    const int y = parse_fixed_int(s, 0, 4, text);
    const int mo = parse_fixed_int(s, 5, 2, text);
    const int d = parse_fixed_int(s, 8, 2, text);
    const chr::year_month_day ymd{chr::year{y}, chr::month{static_cast<unsigned>(mo)},
                                  chr::day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) throw DataError("invalid calendar date '" + std::string(text) + "'");
    int hh = 0, mm = 0, ss = 0;
    std::size_t pos = 10;
    if (pos < s.size()) {
        if (s[pos] != 'T' && s[pos] != ' ') throw DataError("unparseable timestamp '" + std::string(text) + "'");
        hh = parse_fixed_int(s, pos + 1, 2, text);
        if (pos + 3 >= s.size() || s[pos + 3] != ':') {
            throw DataError("unparseable timestamp '" + std::string(text) + "'");
        }
        mm = parse_fixed_int(s, pos + 4, 2, text);
        pos += 6;
        if (pos < s.size() && s[pos] == ':') {
            ss = parse_fixed_int(s, pos + 1, 2, text);
            pos += 3;
        }
        if (pos < s.size() && s[pos] == 'Z') ++pos;
        if (pos != s.size() || hh > 23 || mm > 59 || ss > 60) {
            throw DataError("unparseable timestamp '" + std::string(text) + "'");
        }
    }
    return chr::sys_days{ymd} + chr::hours{hh} + chr::minutes{mm} + chr::seconds{ss};
}

std::string format_timestamp(Timestamp ts) {
    const auto day = chr::floor<chr::days>(ts);
    const chr::year_month_day ymd{day};
    const auto secs = (ts - day).count();
    char buf[64];
    if (secs == 0) {
        std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                      static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    } else {
        std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02lld:%02lld:%02lldZ", static_cast<int>(ymd.year()),
                      static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                      static_cast<long long>(secs / 3600), static_cast<long long>(secs / 60 % 60),
                      static_cast<long long>(secs % 60));
    }
    return buf;
}

BinLength BinLength::parse(std::string_view text) {
    if (text.size() < 2) throw PreconditionError("bin length must look like 6M, 1Y or 7D");
    BinLength len;
    len.count = 0;
    for (std::size_t i = 0; i + 1 < text.size(); ++i) {
        if (text[i] < '0' || text[i] > '9') throw PreconditionError("bad bin length '" + std::string(text) + "'");
        len.count = len.count * 10 + (text[i] - '0');
    }
    if (len.count <= 0) throw PreconditionError("bin length must be positive");
    switch (text.back()) {
        case 'D': len.unit = Unit::day; break;
        case 'M': len.unit = Unit::month; break;
        case 'Y': len.unit = Unit::year; break;
        default: throw PreconditionError("bad bin length unit in '" + std::string(text) + "'");
    }
    return len;
}

std::string BinLength::to_string() const {
    const char u = unit == Unit::day ? 'D' : unit == Unit::month ? 'M' : 'Y';
    return std::to_string(count) + u;
}

Timestamp BinLength::advance(Timestamp from, std::int64_t steps) const {
    if (unit == Unit::day) return from + chr::days{count * steps};
    const auto day = chr::floor<chr::days>(from);
    const auto tod = from - day;
    const chr::year_month_day ymd{day};
    if (static_cast<unsigned>(ymd.day()) > 28) {
        throw PreconditionError("month/year bins need a grid start on day 1..28");
    }
    const auto months = unit == Unit::month ? count * steps : 12 * count * steps;
    const auto shifted = ymd + chr::months{months};
    return chr::sys_days{shifted} + tod;
}

void CountPanel::validate() const {
    if (static_cast<std::size_t>(counts.cols()) != circuit_ids.size()) {
        throw DataError("panel: circuit id count does not match count matrix width");
    }
    if (counts.size() > 0 && counts.minCoeff() < 0) throw DataError("panel: negative count");
    if (!covariates.empty()) {
        if (covariates.size() != bins()) throw DataError("panel: covariate bin count mismatch");
        const auto p = covariates.front().cols();
        for (const auto& z : covariates) {
            if (static_cast<std::size_t>(z.rows()) != circuits() || z.cols() != p) {
                throw DataError("panel: covariate shape mismatch");
            }
        }
    }
}

bool operator==(const CountPanel& a, const CountPanel& b) {
    if (a.counts.rows() != b.counts.rows() || a.counts.cols() != b.counts.cols()) return false;
    if (a.counts != b.counts) return false;
    if (a.covariates.size() != b.covariates.size()) return false;
    for (std::size_t t = 0; t < a.covariates.size(); ++t) {
        if (a.covariates[t].rows() != b.covariates[t].rows() || a.covariates[t].cols() != b.covariates[t].cols() ||
            a.covariates[t] != b.covariates[t]) {
            return false;
        }
    }
    return a.start == b.start && a.bin_length == b.bin_length && a.circuit_ids == b.circuit_ids;
}

CountPanel make_panel(CountMatrix counts, std::vector<std::string> circuit_ids, Timestamp start,
                      BinLength bin_length) {
    CountPanel p;
    p.counts = std::move(counts);
    p.circuit_ids = std::move(circuit_ids);
    p.start = start;
    p.bin_length = bin_length;
    p.validate();
    return p;
}

CountPanel slice_bins(const CountPanel& panel, BinRange range) {
    if (range.end > panel.bins() || range.begin > range.end) throw PreconditionError("slice_bins: bad range");
    CountPanel out;
    out.counts = panel.counts.middleRows(static_cast<Eigen::Index>(range.begin),
                                         static_cast<Eigen::Index>(range.size()));
    if (!panel.covariates.empty()) {
        out.covariates.assign(panel.covariates.begin() + static_cast<std::ptrdiff_t>(range.begin),
                              panel.covariates.begin() + static_cast<std::ptrdiff_t>(range.end));
    }
    out.start = panel.start_of(range.begin);
    out.bin_length = panel.bin_length;
    out.circuit_ids = panel.circuit_ids;
    return out;
}

CountPanel restrict_circuits(const CountPanel& panel, std::span<const std::size_t> keep) {
    CountPanel out;
    out.counts.resize(panel.counts.rows(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t c = 0; c < keep.size(); ++c) {
        if (keep[c] >= panel.circuits()) throw PreconditionError("restrict_circuits: index out of range");
        out.counts.col(static_cast<Eigen::Index>(c)) = panel.counts.col(static_cast<Eigen::Index>(keep[c]));
        out.circuit_ids.push_back(panel.circuit_ids[keep[c]]);
    }
    for (const auto& z : panel.covariates) {
        Matrix r(static_cast<Eigen::Index>(keep.size()), z.cols());
        for (std::size_t c = 0; c < keep.size(); ++c) {
            r.row(static_cast<Eigen::Index>(c)) = z.row(static_cast<Eigen::Index>(keep[c]));
        }
        out.covariates.push_back(std::move(r));
    }
    out.start = panel.start;
    out.bin_length = panel.bin_length;
    return out;
}

CountPanel concat_bins(std::span<const CountPanel> parts) {
    if (parts.empty()) throw PreconditionError("concat_bins: nothing to concatenate");
    CountPanel out;
    out.start = parts.front().start;
    out.bin_length = parts.front().bin_length;
    out.circuit_ids = parts.front().circuit_ids;
    Eigen::Index rows = 0;
    for (const auto& p : parts) {
        if (p.circuit_ids != out.circuit_ids || !(p.bin_length == out.bin_length)) {
            throw PreconditionError("concat_bins: incompatible panels");
        }
        if (out.bin_length.advance(out.start, rows) != p.start) {
            throw PreconditionError("concat_bins: bin grids are not contiguous");
        }
        rows += p.counts.rows();
    }
    out.counts.resize(rows, static_cast<Eigen::Index>(out.circuit_ids.size()));
    Eigen::Index at = 0;
    for (const auto& p : parts) {
        out.counts.middleRows(at, p.counts.rows()) = p.counts;
        at += p.counts.rows();
        out.covariates.insert(out.covariates.end(), p.covariates.begin(), p.covariates.end());
    }
    out.validate();
    return out;
}

CountPanel ingest_events(const std::filesystem::path& events_file, const NetworkTopology& topo,
                         BinLength bin_length, Timestamp start, Timestamp end, IngestStats* stats) {
    if (!(start < end)) throw PreconditionError("ingest_events: start must precede end");
    const auto edges = grid_edges(start, bin_length, end);
    const std::size_t bins = edges.size() - 1;

    std::unordered_map<std::string, std::size_t> circuit_index;
    for (std::size_t i = 0; i < topo.n(); ++i) circuit_index.emplace(topo.circuit_ids()[i], i);

    const auto table = csv::read(events_file);
    const auto ci = table.column("circuit_id");
    const auto ti = table.column("timestamp");

    CountMatrix counts = CountMatrix::Zero(static_cast<Eigen::Index>(bins), static_cast<Eigen::Index>(topo.n()));
    std::set<std::string> unknown;
    IngestStats st;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        ++st.events_read;
        Timestamp ts;
        try {
            ts = parse_timestamp(row[ti]);
        } catch (const DataError& e) {
            throw DataError(events_file.string() + ":" + std::to_string(table.lines[r]) + ": " + e.what());
        }
        const auto it = circuit_index.find(row[ci]);
        if (it == circuit_index.end()) {
            unknown.insert(row[ci]);
            continue;
        }
        if (ts >= end) {
            ++st.events_dropped;
            continue;
        }
        const auto t = bin_index(edges, ts);
        if (t >= bins) {
            ++st.events_dropped;
            continue;
        }
        ++counts(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(it->second));
        ++st.events_binned;
    }
    if (!unknown.empty()) {
        std::ostringstream os;
        os << "events reference " << unknown.size() << " circuit id(s) missing from the topology:";
        std::size_t shown = 0;
        for (const auto& id : unknown) {
            if (shown++ == 20) {
                os << " ...";
                break;
            }
            os << ' ' << id;
        }
        throw DataError(os.str());
    }
    if (st.events_dropped > 0) {
        warn("ingest: " + std::to_string(st.events_dropped) + " event(s) outside the bin window were dropped");
    }
    if (stats) *stats = st;
    return make_panel(std::move(counts), topo.circuit_ids(), start, bin_length);
}

void save_events_csv(const CountPanel& panel, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw PreconditionError("cannot write " + path.string());
    out << "circuit_id,timestamp\n";
    for (std::size_t t = 0; t < panel.bins(); ++t) {
        const auto stamp = format_timestamp(panel.start_of(t));
        for (std::size_t i = 0; i < panel.circuits(); ++i) {
            const auto c = panel.counts(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(i));
            for (std::int64_t k = 0; k < c; ++k) out << panel.circuit_ids[i] << ',' << stamp << '\n';
        }
    }
}

void load_covariates_csv(CountPanel& panel, const std::filesystem::path& path) {
    const auto table = csv::read(path);
    const auto ci = table.column("circuit_id");
    const auto bi = table.column("bin_start");
    std::vector<std::size_t> cov_cols;
    for (std::size_t c = 0; c < table.header.size(); ++c) {
        if (c != ci && c != bi) cov_cols.push_back(c);
    }
    if (cov_cols.empty()) throw DataError(path.string() + ": no covariate columns");

    std::unordered_map<std::string, std::size_t> circuit_index;
    for (std::size_t i = 0; i < panel.circuits(); ++i) circuit_index.emplace(panel.circuit_ids[i], i);
    std::map<Timestamp, std::size_t> bin_of;
    for (std::size_t t = 0; t < panel.bins(); ++t) bin_of.emplace(panel.start_of(t), t);

    const auto p = static_cast<Eigen::Index>(cov_cols.size());
    std::vector<Matrix> z(panel.bins(), Matrix::Zero(static_cast<Eigen::Index>(panel.circuits()), p));
    std::vector<char> seen(panel.bins() * panel.circuits(), 0);
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const std::string where = path.string() + ":" + std::to_string(table.lines[r]) + ": ";
        const auto cit = circuit_index.find(row[ci]);
        if (cit == circuit_index.end()) throw DataError(where + "unknown circuit_id '" + row[ci] + "'");
        Timestamp ts;
        try {
            ts = parse_timestamp(row[bi]);
        } catch (const DataError& e) {
            throw DataError(where + e.what());
        }
        const auto bit = bin_of.find(ts);
        if (bit == bin_of.end()) continue;  // rows off the panel window are ignored
        auto& flag = seen[bit->second * panel.circuits() + cit->second];
        if (flag) throw DataError(where + "duplicate covariate row");
        flag = 1;
        for (Eigen::Index k = 0; k < p; ++k) {
            try {
                z[bit->second](static_cast<Eigen::Index>(cit->second), k) =
                    csv::parse_double(row[cov_cols[static_cast<std::size_t>(k)]]);
            } catch (const DataError& e) {
                throw DataError(where + e.what());
            }
        }
    }
    const auto missing = std::count(seen.begin(), seen.end(), 0);
    if (missing > 0) {
        throw DataError(path.string() + ": " + std::to_string(missing) + " (bin, circuit) covariate cells missing");
    }
    panel.covariates = std::move(z);
}

std::string panel_to_json(const CountPanel& panel) {
    json j;
    j["format"] = "hstc-panel";
    j["version"] = kPanelFormatVersion;
    j["bin_length"] = panel.bin_length.to_string();
    j["start"] = format_timestamp(panel.start);
    j["circuit_ids"] = panel.circuit_ids;
    json starts = json::array();
    for (std::size_t t = 0; t < panel.bins(); ++t) starts.push_back(format_timestamp(panel.start_of(t)));
    j["bin_starts"] = std::move(starts);
    json rows = json::array();
    for (Eigen::Index t = 0; t < panel.counts.rows(); ++t) {
        json row = json::array();
        for (Eigen::Index i = 0; i < panel.counts.cols(); ++i) row.push_back(panel.counts(t, i));
        rows.push_back(std::move(row));
    }
    j["counts"] = std::move(rows);
    if (!panel.covariates.empty()) {
        json cov = json::array();
        for (const auto& z : panel.covariates) {
            json bin = json::array();
            for (Eigen::Index i = 0; i < z.rows(); ++i) {
                json r = json::array();
                for (Eigen::Index k = 0; k < z.cols(); ++k) r.push_back(z(i, k));
                bin.push_back(std::move(r));
            }
            cov.push_back(std::move(bin));
        }
        j["covariates"] = std::move(cov);
    }
    return j.dump(1) + "\n";
}

CountPanel panel_from_json(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(std::string("panel: malformed JSON: ") + e.what());
    }
    try {
        if (j.at("format") != "hstc-panel") throw DataError("panel: wrong document format");
        if (j.at("version").get<int>() != kPanelFormatVersion) throw DataError("panel: unsupported version");
        CountPanel p;
        p.bin_length = BinLength::parse(j.at("bin_length").get<std::string>());
        p.start = parse_timestamp(j.at("start").get<std::string>());
        p.circuit_ids = j.at("circuit_ids").get<std::vector<std::string>>();
        const auto& rows = j.at("counts");
        const auto n = static_cast<Eigen::Index>(p.circuit_ids.size());
        p.counts.resize(static_cast<Eigen::Index>(rows.size()), n);
        for (std::size_t t = 0; t < rows.size(); ++t) {
            if (static_cast<Eigen::Index>(rows[t].size()) != n) throw DataError("panel: ragged count row");
            for (Eigen::Index i = 0; i < n; ++i) {
                p.counts(static_cast<Eigen::Index>(t), i) = rows[t][static_cast<std::size_t>(i)].get<std::int64_t>();
            }
        }
        if (j.contains("bin_starts")) {
            const auto& starts = j["bin_starts"];
            if (starts.size() != rows.size()) throw DataError("panel: bin_starts length mismatch");
            for (std::size_t t = 0; t < starts.size(); ++t) {
                if (parse_timestamp(starts[t].get<std::string>()) != p.start_of(t)) {
                    throw DataError("panel: bin grid is not evenly spaced from start");
                }
            }
        }
        if (j.contains("covariates")) {
            for (const auto& bin : j["covariates"]) {
                const auto p_dim = bin.empty() ? 0 : static_cast<Eigen::Index>(bin[0].size());
                Matrix z(static_cast<Eigen::Index>(bin.size()), p_dim);
                for (std::size_t i = 0; i < bin.size(); ++i) {
                    if (static_cast<Eigen::Index>(bin[i].size()) != p_dim) throw DataError("panel: ragged covariates");
                    for (Eigen::Index k = 0; k < p_dim; ++k) {
                        z(static_cast<Eigen::Index>(i), k) = bin[i][static_cast<std::size_t>(k)].get<double>();
                    }
                }
                p.covariates.push_back(std::move(z));
            }
        }
        p.validate();
        return p;
    } catch (const json::exception& e) {
        throw DataError(std::string("panel: ") + e.what());
    }
}

void save_panel(const CountPanel& panel, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw PreconditionError("cannot write " + path.string());
    out << panel_to_json(panel);
}

CountPanel load_panel(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return panel_from_json(buf.str());
}

PanelSplit split(const CountPanel& panel, const SplitSpec& spec) {
    const std::size_t t_total = panel.bins();
    if (spec.train_bins < 2) throw PreconditionError("split: need at least 2 training bins");
    if (spec.train_bins + spec.test_bins >= t_total) {
        throw PreconditionError("split: calibration window is empty (train " + std::to_string(spec.train_bins) +
                                " + test " + std::to_string(spec.test_bins) + " >= " +
                                std::to_string(t_total) + " bins)");
    }
    PanelSplit s;
    s.train = {0, spec.train_bins};
    s.cal = {spec.train_bins, t_total - spec.test_bins};
    s.test = {t_total - spec.test_bins, t_total};
    return s;
}

}  // namespace hstc
