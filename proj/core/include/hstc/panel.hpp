#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hstc/topology.hpp"
#include "hstc/types.hpp"

namespace hstc {

using Timestamp = std::chrono::sys_seconds;

/// Parses `YYYY-MM-DD`, optionally followed by `THH:MM[:SS]` and `Z`.
[[nodiscard]] Timestamp parse_timestamp(std::string_view text);
/// `YYYY-MM-DD` at midnight, `YYYY-MM-DDTHH:MM:SSZ` otherwise.
[[nodiscard]] std::string format_timestamp(Timestamp ts);

/// Calendar bin width such as "6M", "1Y" or "14D".
struct BinLength {
    enum class Unit { day, month, year };
    int count = 6;
    Unit unit = Unit::month;

    static BinLength parse(std::string_view text);
    [[nodiscard]] std::string to_string() const;
    [[nodiscard]] Timestamp advance(Timestamp from, std::int64_t steps) const;

    friend bool operator==(const BinLength&, const BinLength&) = default;
};

/// Half-open range of bin indices.
struct BinRange {
    std::size_t begin = 0;
    std::size_t end = 0;

    [[nodiscard]] std::size_t size() const noexcept { return end - begin; }
    [[nodiscard]] bool empty() const noexcept { return end <= begin; }
    [[nodiscard]] bool contains(std::size_t t) const noexcept { return t >= begin && t < end; }

    friend bool operator==(const BinRange&, const BinRange&) = default;
};

/// Installation counts per bin and circuit, plus optional bin-level
/// covariates. Bin t covers [start_of(t), start_of(t+1)).
struct CountPanel {
    CountMatrix counts;  // T x n
    /// Empty, or one n x p matrix per bin.
    std::vector<Matrix> covariates;
    Timestamp start{};
    BinLength bin_length{};
    std::vector<std::string> circuit_ids;

    [[nodiscard]] std::size_t bins() const noexcept { return static_cast<std::size_t>(counts.rows()); }
    [[nodiscard]] std::size_t circuits() const noexcept { return static_cast<std::size_t>(counts.cols()); }
    [[nodiscard]] std::size_t covariate_dim() const noexcept {
        return covariates.empty() ? 0 : static_cast<std::size_t>(covariates.front().cols());
    }
    [[nodiscard]] Timestamp start_of(std::size_t t) const {
        return bin_length.advance(start, static_cast<std::int64_t>(t));
    }
    [[nodiscard]] std::int64_t total() const { return counts.sum(); }

    /// Throws DataError on negative counts or mismatched covariate shapes.
    void validate() const;

    friend bool operator==(const CountPanel&, const CountPanel&);
};

[[nodiscard]] CountPanel make_panel(CountMatrix counts, std::vector<std::string> circuit_ids,
                                    Timestamp start = parse_timestamp("2010-01-01"),
                                    BinLength bin_length = {});

/// Copy of the bins in `range`; bin grid start shifts accordingly.
[[nodiscard]] CountPanel slice_bins(const CountPanel& panel, BinRange range);
/// Copy restricted to the listed circuits, in the order given.
[[nodiscard]] CountPanel restrict_circuits(const CountPanel& panel, std::span<const std::size_t> keep);
/// Stacks panels with contiguous bin grids and identical circuits.
[[nodiscard]] CountPanel concat_bins(std::span<const CountPanel> parts);

struct IngestStats {
    std::size_t events_read = 0;
    std::size_t events_binned = 0;
    std::size_t events_dropped = 0;
};

/// Bins an events CSV (`circuit_id,timestamp`) onto the grid that starts at
/// `start` and covers [start, end). Events outside the window are dropped
/// with a warning; an event on a boundary belongs to the later bin.
[[nodiscard]] CountPanel ingest_events(const std::filesystem::path& events_file, const NetworkTopology& topo,
                                       BinLength bin_length, Timestamp start, Timestamp end,
                                       IngestStats* stats = nullptr);

/// Writes one row per counted event, stamped at its bin start.
void save_events_csv(const CountPanel& panel, const std::filesystem::path& path);

/// Loads `circuit_id,bin_start,cov_1..cov_p` into panel.covariates. Every
/// (bin, circuit) cell must be present exactly once.
void load_covariates_csv(CountPanel& panel, const std::filesystem::path& path);

void save_panel(const CountPanel& panel, const std::filesystem::path& path);
[[nodiscard]] CountPanel load_panel(const std::filesystem::path& path);
[[nodiscard]] std::string panel_to_json(const CountPanel& panel);
[[nodiscard]] CountPanel panel_from_json(std::string_view text);

/// Train = bins [0, train_bins), calibration = up to the test suffix,
/// test = the last test_bins bins.
struct SplitSpec {
    std::size_t train_bins = 0;
    std::size_t test_bins = 0;
};

struct PanelSplit {
    BinRange train;
    BinRange cal;
    BinRange test;
};

/// Requires >= 2 training bins and a nonempty calibration window.
[[nodiscard]] PanelSplit split(const CountPanel& panel, const SplitSpec& spec);

}  // namespace hstc
