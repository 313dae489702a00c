#include "doctest.h"
#include "hstc/error.hpp"
#include "hstc/panel.hpp"
#include "hstc/synthetic.hpp"
#include "support.hpp"

using namespace hstc;
using hstc::test::numbered_ids;

namespace {

NetworkTopology two_by_two() {
    return NetworkTopology::from_assignment({"a", "b", "c"}, {"X", "X", "Y"});
}

CountPanel ingest_text(const std::string& events, const std::string& start, const std::string& end,
                       const std::string& bin = "6M", IngestStats* stats = nullptr) {
    test::TempDir dir("ingest");
    test::spit(dir / "events.csv", events);
    return ingest_events(dir / "events.csv", two_by_two(), BinLength::parse(bin), parse_timestamp(start),
                         parse_timestamp(end), stats);
}

}  // namespace

TEST_CASE("timestamps and bin lengths") {
    CHECK(format_timestamp(parse_timestamp("2011-07-01")) == "2011-07-01");
    CHECK(parse_timestamp("2011-07-01T00:00:00Z") == parse_timestamp("2011-07-01"));
    CHECK(parse_timestamp("2011-07-01T12:30") > parse_timestamp("2011-07-01"));
    CHECK_THROWS_AS((void)parse_timestamp("2011-13-01"), DataError);
    CHECK_THROWS_AS((void)parse_timestamp("yesterday"), DataError);

    const auto six = BinLength::parse("6M");
    CHECK(six.to_string() == "6M");
    CHECK(format_timestamp(six.advance(parse_timestamp("2010-01-01"), 3)) == "2011-07-01");
    CHECK(format_timestamp(BinLength::parse("1Y").advance(parse_timestamp("2010-03-05"), 2)) == "2012-03-05");
    CHECK(format_timestamp(BinLength::parse("10D").advance(parse_timestamp("2010-12-25"), 1)) == "2011-01-04");
    CHECK_THROWS((void)BinLength::parse("0M"));
    CHECK_THROWS((void)BinLength::parse("6Q"));
}

TEST_CASE("ingestion examples") {
    SUBCASE("empty event file gives zeros of the requested shape") {
        const auto p = ingest_text("circuit_id,timestamp\n", "2010-01-01", "2012-01-01");
        CHECK(p.bins() == 4);
        CHECK(p.circuits() == 3);
        CHECK(p.total() == 0);
    }
    SUBCASE("three events in one cell") {
        const auto p = ingest_text("circuit_id,timestamp\nb,2010-02-01\nb,2010-03-15\nb,2010-06-30T23:59:59\n",
                                   "2010-01-01", "2011-01-01");
        CHECK(p.counts(0, 1) == 3);
        CHECK(p.total() == 3);
    }
    SUBCASE("boundary events fall in the later bin") {
        const auto p = ingest_text("circuit_id,timestamp\na,2010-07-01\na,2010-01-01\n", "2010-01-01", "2011-01-01");
        CHECK(p.counts(0, 0) == 1);
        CHECK(p.counts(1, 0) == 1);
    }
    SUBCASE("events outside the window are dropped and counted") {
        IngestStats st;
        std::vector<std::string> warnings;
        auto prev = set_warning_handler([&](const std::string& w) { warnings.push_back(w); });
        const auto p = ingest_text("circuit_id,timestamp\na,2009-12-31\nc,2010-03-01\na,2011-01-01\n", "2010-01-01",
                                   "2011-01-01", "6M", &st);
        set_warning_handler(prev);
        CHECK(p.total() == 1);
        CHECK(st.events_read == 3);
        CHECK(st.events_binned == 1);
        CHECK(st.events_dropped == 2);
        CHECK_FALSE(warnings.empty());
    }
    SUBCASE("unknown circuits and bad timestamps are data errors") {
        CHECK_THROWS_AS(ingest_text("circuit_id,timestamp\nzz,2010-02-01\n", "2010-01-01", "2011-01-01"),
                        DataError);
        try {
            (void)ingest_text("circuit_id,timestamp\na,2010-02-01\na,not-a-date\n", "2010-01-01", "2011-01-01");
            FAIL("expected a data error");
        } catch (const DataError& e) {
            CHECK(std::string(e.what()).find("3") != std::string::npos);
        }
    }
}

TEST_CASE("property: ingestion conserves in-range events") {
    Rng rng(99);
    const auto topo = two_by_two();
    for (int rep = 0; rep < 30; ++rep) {
        std::string text = "circuit_id,timestamp\n";
        std::size_t in_range = 0;
        const int events = static_cast<int>(rng.below(60));
        for (int e = 0; e < events; ++e) {
            const int year = 2009 + static_cast<int>(rng.below(4));
            const int month = 1 + static_cast<int>(rng.below(12));
            const int day = 1 + static_cast<int>(rng.below(28));
            if (year >= 2010 && year <= 2011) ++in_range;
            char buf[64];
            std::snprintf(buf, sizeof buf, "%s,%04d-%02d-%02d\n", topo.circuit_ids()[rng.below(3)].c_str(), year,
                          month, day);
            text += buf;
        }
        auto prev = set_warning_handler([](const std::string&) {});
        const auto p = ingest_text(text, "2010-01-01", "2012-01-01");
        set_warning_handler(prev);
        CHECK(p.total() == static_cast<std::int64_t>(in_range));
    }
}

TEST_CASE("split arithmetic and partition") {
    Rng rng(3);
    const auto p = make_panel(test::random_counts(rng, 10, 2, 1.0), numbered_ids("C", 2));
    // Five training bins (first five), three calibration bins, two test bins.
    const auto s = split(p, SplitSpec{5, 2});
    CHECK(s.train == BinRange{0, 5});
    CHECK(s.cal == BinRange{5, 8});
    CHECK(s.test == BinRange{8, 10});
    const std::vector<CountPanel> parts{slice_bins(p, s.train), slice_bins(p, s.cal), slice_bins(p, s.test)};
    CHECK(concat_bins(parts) == p);

    CHECK_THROWS_AS((void)split(p, SplitSpec{1, 2}), PreconditionError);
    CHECK_THROWS_AS((void)split(p, SplitSpec{0, 2}), PreconditionError);
    CHECK_THROWS_AS((void)split(p, SplitSpec{8, 2}), PreconditionError);
    CHECK_THROWS_AS((void)split(p, SplitSpec{5, 10}), PreconditionError);
    CHECK_NOTHROW((void)split(p, SplitSpec{9, 0}));
}

TEST_CASE("property: random splits partition the panel") {
    Rng rng(8);
    for (int rep = 0; rep < 100; ++rep) {
        const std::size_t bins = 4 + static_cast<std::size_t>(rng.below(30));
        const auto p = make_panel(test::random_counts(rng, bins, 3, 2.0), numbered_ids("C", 3));
        const std::size_t test_bins = static_cast<std::size_t>(rng.below(bins - 3));
        const std::size_t train = 2 + static_cast<std::size_t>(rng.below(bins - test_bins - 2));
        const auto s = split(p, SplitSpec{train, test_bins});
        CHECK(s.train.begin == 0);
        CHECK(s.train.end == s.cal.begin);
        CHECK(s.cal.end == s.test.begin);
        CHECK(s.test.end == bins);
        CHECK_FALSE(s.cal.empty());
        const std::vector<CountPanel> parts{slice_bins(p, s.train), slice_bins(p, s.cal), slice_bins(p, s.test)};
        CHECK(concat_bins(parts) == p);
    }
}

TEST_CASE("synthetic generation") {
    const auto cfg = SyntheticConfig::preset("small");
    CHECK(cfg.circuits == 20);
    CHECK(cfg.substations == 5);
    CHECK(cfg.bins == 200);
    const auto a = generate_synthetic(cfg, 7);
    const auto b = generate_synthetic(cfg, 7);
    CHECK(a.panel == b.panel);
    CHECK(a.topology == b.topology);
    CHECK(a.truth == b.truth);
    CHECK(a.panel.total() > 0);
    CHECK((a.panel.counts.array() >= 0).all());
    CHECK((a.truth.mu.array() >= 0.2).all());
    CHECK((a.truth.mu.array() <= 1.0).all());
    for (Eigen::Index i = 0; i < a.truth.excitation.rows(); ++i)
        CHECK(a.truth.excitation.row(i).sum() == doctest::Approx(0.5 / a.truth.beta));
    for (std::size_t j = 0; j < a.topology.m(); ++j) CHECK_FALSE(a.topology.members(j).empty());
    CHECK_FALSE(generate_synthetic(cfg, 8).panel == a.panel);

    auto bad = cfg;
    bad.circuits = 3;
    bad.substations = 4;
    CHECK_THROWS_AS((void)generate_synthetic(bad, 1), PreconditionError);
    bad = cfg;
    bad.bins = 1;
    CHECK_THROWS_AS((void)generate_synthetic(bad, 1), PreconditionError);
}

TEST_CASE("synthetic cap bounds the cumulative network total") {
    auto cfg = SyntheticConfig::preset("small");
    cfg.cap = 50;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto d = generate_synthetic(cfg, seed);
        std::int64_t cum = 0;
        bool crossed = false;
        for (std::size_t t = 0; t < d.panel.bins(); ++t) {
            const auto row = d.panel.counts.row(static_cast<Eigen::Index>(t)).sum();
            if (crossed) CHECK(row == 0);
            const std::int64_t before = cum;
            cum += row;
            if (!crossed && cum >= 50) {
                crossed = true;
                CHECK(cum <= 50 + row);
                CHECK(before < 50);
            }
        }
    }
}

TEST_CASE("synthetic panel survives the event-file round trip") {
    test::TempDir dir("roundtrip");
    auto cfg = SyntheticConfig::preset("small");
    cfg.bins = 40;
    const auto d = generate_synthetic(cfg, 3);
    save_events_csv(d.panel, dir / "events.csv");
    const auto end = d.panel.start_of(d.panel.bins());
    const auto back = ingest_events(dir / "events.csv", d.topology, d.panel.bin_length, d.panel.start, end);
    CHECK(back.counts == d.panel.counts);
    CHECK(back.circuit_ids == d.panel.circuit_ids);
}

TEST_CASE("covariate file loading") {
    test::TempDir dir("cov");
    auto p = make_panel(CountMatrix::Zero(2, 2), {"a", "b"}, parse_timestamp("2010-01-01"), BinLength::parse("6M"));
    test::spit(dir / "cov.csv",
               "circuit_id,bin_start,cov_1,cov_2\n"
               "a,2010-01-01,1,2\nb,2010-01-01,3,4\na,2010-07-01,5,6\nb,2010-07-01,7,8\n");
    load_covariates_csv(p, dir / "cov.csv");
    CHECK(p.covariate_dim() == 2);
    CHECK(p.covariates.at(1)(1, 0) == 7.0);

    auto q = make_panel(CountMatrix::Zero(2, 2), {"a", "b"}, parse_timestamp("2010-01-01"), BinLength::parse("6M"));
    test::spit(dir / "short.csv", "circuit_id,bin_start,cov_1\na,2010-01-01,1\n");
    CHECK_THROWS_AS(load_covariates_csv(q, dir / "short.csv"), DataError);
}
