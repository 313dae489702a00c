#include "hstc/topology.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "hstc/csv.hpp"
#include "hstc/error.hpp"

namespace hstc {
namespace {

void require_unique(const std::vector<std::string>& ids, const char* what) {
    std::unordered_set<std::string> seen;
    for (const auto& id : ids) {
        if (!seen.insert(id).second) throw DataError(std::string("duplicate ") + what + " id '" + id + "'");
    }
}

}  // namespace

NetworkTopology NetworkTopology::from_assignment(std::vector<std::string> circuit_ids,
                                                 const std::vector<std::string>& substation_of) {
    if (circuit_ids.size() != substation_of.size()) {
        throw PreconditionError("topology: circuit and substation label counts differ");
    }
    if (circuit_ids.empty()) throw DataError("topology: no circuits");
    require_unique(circuit_ids, "circuit");

    NetworkTopology topo;
    topo.circuit_ids_ = std::move(circuit_ids);
    std::unordered_map<std::string, std::size_t> index;
    topo.substation_of_.reserve(substation_of.size());
    for (const auto& label : substation_of) {
        auto [it, inserted] = index.try_emplace(label, topo.substation_ids_.size());
        if (inserted) topo.substation_ids_.push_back(label);
        topo.substation_of_.push_back(it->second);
    }
    topo.index_members(EmptySubstationPolicy::reject);
    return topo;
}

NetworkTopology::NetworkTopology(const IndexMatrix& incidence, std::vector<std::string> circuit_ids,
                                 std::vector<std::string> substation_ids,
                                 EmptySubstationPolicy empty_policy)
    : circuit_ids_(std::move(circuit_ids)), substation_ids_(std::move(substation_ids)) {
    const auto n = static_cast<Eigen::Index>(circuit_ids_.size());
    const auto m = static_cast<Eigen::Index>(substation_ids_.size());
    if (incidence.rows() != n || incidence.cols() != m) {
        throw PreconditionError("topology: incidence matrix shape does not match id lists");
    }
    if (n == 0 || m == 0) throw DataError("topology: no circuits or substations");
    require_unique(circuit_ids_, "circuit");
    require_unique(substation_ids_, "substation");

    substation_of_.resize(circuit_ids_.size());
    for (Eigen::Index i = 0; i < n; ++i) {
        int ones = 0;
        for (Eigen::Index j = 0; j < m; ++j) {
            const int c = incidence(i, j);
            if (c != 0 && c != 1) throw DataError("topology: incidence entries must be 0 or 1");
            if (c == 1) {
                ++ones;
                substation_of_[static_cast<std::size_t>(i)] = static_cast<std::size_t>(j);
            }
        }
        if (ones != 1) {
            std::ostringstream os;
            os << "topology: circuit '" << circuit_ids_[static_cast<std::size_t>(i)]
               << "' attaches to " << ones << " substations (exactly one required)";
            throw DataError(os.str());
        }
    }
    index_members(empty_policy);
}

void NetworkTopology::index_members(EmptySubstationPolicy empty_policy) {
    members_.assign(substation_ids_.size(), {});
    for (std::size_t i = 0; i < substation_of_.size(); ++i) members_[substation_of_[i]].push_back(i);
    for (std::size_t j = 0; j < members_.size(); ++j) {
        if (!members_[j].empty()) continue;
        const std::string msg = "topology: substation '" + substation_ids_[j] + "' has no circuits";
        if (empty_policy == EmptySubstationPolicy::reject) throw DataError(msg);
        warn(msg);
    }
}

IndexMatrix NetworkTopology::incidence() const {
    IndexMatrix c = IndexMatrix::Zero(static_cast<Eigen::Index>(n()), static_cast<Eigen::Index>(m()));
    for (std::size_t i = 0; i < n(); ++i) {
        c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(substation_of_[i])) = 1;
    }
    return c;
}

IndexMatrix NetworkTopology::shared_membership() const {
    const IndexMatrix c = incidence();
    IndexMatrix s = c * c.transpose();
    return s.cwiseMin(1);
}

Vector NetworkTopology::aggregate(const Vector& v) const {
    if (static_cast<std::size_t>(v.size()) != n()) {
        throw PreconditionError("aggregate: vector length does not match circuit count");
    }
    Vector out = Vector::Zero(static_cast<Eigen::Index>(m()));
    // Fixed summation order (ascending circuit index) so recounts are exact.
    for (std::size_t i = 0; i < n(); ++i) {
        out(static_cast<Eigen::Index>(substation_of_[i])) += v(static_cast<Eigen::Index>(i));
    }
    return out;
}

CountVector NetworkTopology::aggregate(const CountVector& v) const {
    if (static_cast<std::size_t>(v.size()) != n()) {
        throw PreconditionError("aggregate: vector length does not match circuit count");
    }
    CountVector out = CountVector::Zero(static_cast<Eigen::Index>(m()));
    for (std::size_t i = 0; i < n(); ++i) {
        out(static_cast<Eigen::Index>(substation_of_[i])) += v(static_cast<Eigen::Index>(i));
    }
    return out;
}

NetworkTopology NetworkTopology::subsample_circuits(std::span<const std::size_t> keep) const {
    if (keep.empty()) throw PreconditionError("subsample_circuits: keep set is empty");
    std::vector<std::size_t> sorted(keep.begin(), keep.end());
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw PreconditionError("subsample_circuits: duplicate circuit index");
    }
    if (sorted.back() >= n()) throw PreconditionError("subsample_circuits: circuit index out of range");

    std::vector<bool> used(m(), false);
    for (const auto i : sorted) used[substation_of_[i]] = true;
    std::vector<std::size_t> remap(m(), 0);

    NetworkTopology out;
    for (std::size_t j = 0; j < m(); ++j) {
        if (!used[j]) continue;
        remap[j] = out.substation_ids_.size();
        out.substation_ids_.push_back(substation_ids_[j]);
    }
    for (const auto i : sorted) {
        out.circuit_ids_.push_back(circuit_ids_[i]);
        out.substation_of_.push_back(remap[substation_of_[i]]);
    }
    out.index_members(EmptySubstationPolicy::reject);
    return out;
}

NetworkTopology load_topology_csv(const std::filesystem::path& path) {
    const auto table = csv::read(path);
    const auto ci = table.column("circuit_id");
    const auto si = table.column("substation_id");
    std::vector<std::string> circuits;
    std::vector<std::string> subs;
    std::unordered_map<std::string, std::size_t> seen;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        if (row[ci].empty() || row[si].empty()) {
            throw DataError(path.string() + ":" + std::to_string(table.lines[r]) + ": empty id");
        }
        if (auto [it, ok] = seen.try_emplace(row[ci], table.lines[r]); !ok) {
            throw DataError(path.string() + ":" + std::to_string(table.lines[r]) + ": duplicate circuit_id '" +
                            row[ci] + "' (first on line " + std::to_string(it->second) + ")");
        }
        circuits.push_back(row[ci]);
        subs.push_back(row[si]);
    }
    return NetworkTopology::from_assignment(std::move(circuits), subs);
}

void save_topology_csv(const NetworkTopology& topo, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw PreconditionError("cannot write " + path.string());
    out << "circuit_id,substation_id\n";
    for (std::size_t i = 0; i < topo.n(); ++i) {
        out << topo.circuit_ids()[i] << ',' << topo.substation_ids()[topo.substation_of(i)] << '\n';
    }
}

}  // namespace hstc
