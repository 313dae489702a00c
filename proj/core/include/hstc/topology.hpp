#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "hstc/types.hpp"

namespace hstc {

enum class EmptySubstationPolicy { warn, reject };

/// Circuit -> substation partition. Circuit order is file order and is the
/// index space shared by every panel, model and interval in a run.
class NetworkTopology {
public:
    /// Builds from a per-circuit substation label. Substations are indexed in
    /// order of first appearance.
    static NetworkTopology from_assignment(std::vector<std::string> circuit_ids,
                                           const std::vector<std::string>& substation_of);

    /// Builds from an explicit n x m binary incidence matrix. Every row must
    /// hold exactly one 1.
    NetworkTopology(const IndexMatrix& incidence, std::vector<std::string> circuit_ids,
                    std::vector<std::string> substation_ids,
                    EmptySubstationPolicy empty_policy = EmptySubstationPolicy::warn);

    [[nodiscard]] std::size_t n() const noexcept { return circuit_ids_.size(); }
    [[nodiscard]] std::size_t m() const noexcept { return substation_ids_.size(); }

    [[nodiscard]] const std::vector<std::string>& circuit_ids() const noexcept { return circuit_ids_; }
    [[nodiscard]] const std::vector<std::string>& substation_ids() const noexcept {
        return substation_ids_;
    }

    [[nodiscard]] std::size_t substation_of(std::size_t circuit) const { return substation_of_.at(circuit); }
    /// Circuits attached to substation j, ascending.
    [[nodiscard]] std::span<const std::size_t> members(std::size_t substation) const {
        return members_.at(substation);
    }
    /// Indices i' with s_{ii'} = 1; always contains i.
    [[nodiscard]] std::span<const std::size_t> shared_row(std::size_t circuit) const {
        return members(substation_of(circuit));
    }

    [[nodiscard]] IndexMatrix incidence() const;
    /// S = C C^T clamped to {0,1}.
    [[nodiscard]] IndexMatrix shared_membership() const;

    /// C^T v.
    [[nodiscard]] Vector aggregate(const Vector& v) const;
    [[nodiscard]] CountVector aggregate(const CountVector& v) const;

    /// Restriction to the kept circuits (kept in ascending index order);
    /// substations left empty are dropped, survivors keep relative order.
    [[nodiscard]] NetworkTopology subsample_circuits(std::span<const std::size_t> keep) const;

    friend bool operator==(const NetworkTopology&, const NetworkTopology&) = default;

private:
    NetworkTopology() = default;
    void index_members(EmptySubstationPolicy empty_policy);

    std::vector<std::string> circuit_ids_;
    std::vector<std::string> substation_ids_;
    std::vector<std::size_t> substation_of_;
    std::vector<std::vector<std::size_t>> members_;
};

/// CSV with header `circuit_id,substation_id`.
[[nodiscard]] NetworkTopology load_topology_csv(const std::filesystem::path& path);
void save_topology_csv(const NetworkTopology& topo, const std::filesystem::path& path);

}  // namespace hstc
