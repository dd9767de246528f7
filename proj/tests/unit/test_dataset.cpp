#include <doctest.h>

#include <algorithm>
#include <bit>
#include <limits>
#include <numeric>
#include <sstream>

#include "cam/dataset.hpp"
#include "cam/rng.hpp"
#include "../support.hpp"

using namespace cam;
using camtest::kNan;

namespace {

MaskedDataset parse(const std::string& text, const std::string& response = "y") {
    std::istringstream in(text);
    CsvSchema schema;
    schema.response = response;
    return ingest_csv(in, schema);
}

std::string error_of(const std::string& text) {
    try {
        parse(text);
    } catch (const DataError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_CASE("ingest_csv marks missing cells and keeps row order") {
    const auto ds = parse("a,b,y\n1.5,NA,0.3\nNA,NA,1.0\n2,3,4\n");
    REQUIRE(ds.n() == 3);
    REQUIRE(ds.d() == 2);
    CHECK(ds.x(0, 0) == 1.5);
    CHECK(ds.observed(0, 0));
    CHECK_FALSE(ds.observed(0, 1));
    CHECK(ds.y(0) == 0.3);
    CHECK(ds.pattern(0).to_string() == "01");
    CHECK(ds.pattern(1).to_string() == "11");
    CHECK(ds.pattern(1).observed_count() == 0);
    CHECK(ds.y(1) == 1.0);
    CHECK(ds.pattern(2).is_complete());
    CHECK(ds.feature_names() == std::vector<std::string>{"a", "b"});
}

TEST_CASE("ingest_csv rejects bad rows with 1-based positions") {
    CHECK(error_of("a,b,y\n1,2,3\n1.0,2.0,NA\n") == "row 2: missing response value");
    CHECK(error_of("a,b,y\n1,x,3\n") == "row 1, column 'b': non-numeric value 'x'");
    CHECK(error_of("a,b,y\n1,2\n").find("row 1") != std::string::npos);
    CHECK(error_of("a,b,y\n1,2,\n") == "row 1: missing response value");
}

TEST_CASE("ingest_csv honours quoting, custom markers and column selection") {
    std::istringstream in("\"first, quoted\",skip,y\n\" 4 \",9,1\n.,9,2\n");
    CsvSchema schema;
    schema.features = {"first, quoted"};
    schema.response = "y";
    schema.na_markers = {"."};
    const auto ds = ingest_csv(in, schema);
    REQUIRE(ds.d() == 1);
    CHECK(ds.x(0, 0) == 4.0);
    CHECK_FALSE(ds.observed(1, 0));
}

TEST_CASE("ingest_csv without a response column yields zero responses") {
    std::istringstream in("u,v\n1,2\n3,NA\n");
    const auto ds = ingest_csv(in, {});
    CHECK(ds.d() == 2);
    CHECK(ds.y(1) == 0.0);
}

TEST_CASE("pattern encoding round-trips for every pattern up to d = 16") {
    for (int d = 1; d <= 16; ++d) {
        const std::uint64_t total = 1ULL << d;
        const std::uint64_t step = d <= 12 ? 1 : 7;
        for (std::uint64_t b = 0; b < total; b += step) {
            const Pattern m(b, d);
            const auto s = m.to_string();
            REQUIRE(s.size() == static_cast<std::size_t>(d));
            CHECK(Pattern::from_string(s) == m);
            CHECK(m.observed_count() == d - std::popcount(b));
        }
    }
    CHECK(Pattern::from_string("100").missing(0));
    CHECK_THROWS_AS(Pattern::from_string("10a"), PatternError);
}

TEST_CASE("pattern partial order and lattice operations") {
    const auto a = Pattern::from_string("100");
    const auto b = Pattern::from_string("110");
    CHECK(a.subset_of(b));
    CHECK_FALSE(b.subset_of(a));
    CHECK(pmin(a, Pattern::from_string("011")).is_complete());
    CHECK(pmax(a, Pattern::from_string("011")) == Pattern::all_missing(3));
}

TEST_CASE("group_by_pattern partitions the rows") {
    const auto ds = camtest::make_dataset(2, {{1, 2, 0}, {3, 4, 0}, {kNan, 5, 0}});
    const auto g = group_by_pattern(ds);
    CHECK(g.complete() == std::vector<std::size_t>{0, 1});
    CHECK(g.rows(Pattern::from_string("10")) == std::vector<std::size_t>{2});
    CHECK(g.n() == 3);

    const auto none = group_by_pattern(camtest::make_dataset(1, {{kNan, 1}, {kNan, 2}}));
    CHECK(none.n0() == 0);
    CHECK_THROWS_AS(select_adjustment_set(none), InsufficientData);
}

TEST_CASE("group_by_pattern on random data is a permutation of the rows") {
    Rng rng = make_rng(3);
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < 300; ++i) {
        std::vector<double> r;
        for (int j = 0; j < 4; ++j) r.push_back(uniform01(rng) < 0.3 ? kNan : standard_normal(rng));
        r.push_back(standard_normal(rng));
        rows.push_back(r);
    }
    const auto ds = camtest::make_dataset(4, rows);
    const auto g = group_by_pattern(ds);
    std::vector<std::size_t> all;
    for (const auto& [m, idx] : g.groups) {
        all.insert(all.end(), idx.begin(), idx.end());
        CHECK_NOTHROW(project(ds, idx, m));
    }
    std::sort(all.begin(), all.end());
    std::vector<std::size_t> expected(ds.n());
    std::iota(expected.begin(), expected.end(), std::size_t{0});
    CHECK(all == expected);
}

TEST_CASE("select_adjustment_set applies the count threshold") {
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < 50; ++i) rows.push_back({1, 2, 3, 0});
    for (int i = 0; i < 30; ++i) rows.push_back({kNan, 2, kNan, 0});
    for (int i = 0; i < 10; ++i) rows.push_back({kNan, kNan, 3, 0});
    const auto g = group_by_pattern(camtest::make_dataset(3, rows));
    const auto adj = select_adjustment_set(g, 20);
    REQUIRE(adj.size() == 1);
    CHECK(adj.entries[0].pattern.to_string() == "101");

    const auto all = select_adjustment_set(g, 1);
    REQUIRE(all.size() == 2);
    CHECK(all.entries[0].pattern < all.entries[1].pattern);
}

TEST_CASE("integration pools nested patterns") {
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < 5; ++i) rows.push_back({1, 2, 0});
    for (int i = 0; i < 30; ++i) rows.push_back({kNan, 2, 0});
    for (int i = 0; i < 15; ++i) rows.push_back({kNan, kNan, 0});
    const auto g = group_by_pattern(camtest::make_dataset(2, rows));
    const auto adj = select_adjustment_set(g, 20, true);
    const auto k = adj.index_of(Pattern::from_string("11"));
    REQUIRE(k);
    CHECK(adj.entries[*k].rows.size() == 45);
    CHECK(adj.entries[*adj.index_of(Pattern::from_string("10"))].rows.size() == 30);

    const auto plain = select_adjustment_set(g, 20, false);
    CHECK(plain.size() == 1);

    const auto one = select_adjustment_set(group_by_pattern(camtest::make_dataset(2, {{1, 1, 0}, {kNan, 1, 0}})), 1);
    CHECK(one.size() == 1);
    CHECK(one.entries[0].rows.size() == 1);
}

TEST_CASE("integration sets are monotone in the partial order") {
    Rng rng = make_rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<std::vector<double>> rows;
        for (int i = 0; i < 200; ++i) {
            std::vector<double> r;
            for (int j = 0; j < 3; ++j) r.push_back(i < 10 || uniform01(rng) < 0.6 ? 1.0 : kNan);
            r.push_back(0.0);
            rows.push_back(r);
        }
        const auto g = group_by_pattern(camtest::make_dataset(3, rows));
        for (std::uint64_t a = 1; a < 8; ++a)
            for (std::uint64_t b = 1; b < 8; ++b) {
                const Pattern m1(a, 3), m2(b, 3);
                if (!m1.subset_of(m2)) continue;
                const auto s1 = integration_rows(g, m1), s2 = integration_rows(g, m2);
                CHECK(std::includes(s2.begin(), s2.end(), s1.begin(), s1.end()));
                for (auto r : s1) CHECK_FALSE(std::binary_search(g.complete().begin(), g.complete().end(), r));
            }
    }
}

TEST_CASE("project keeps the observed coordinates in row order") {
    const auto ds = camtest::make_dataset(2, {{1, 10, 100}, {2, 20, 200}, {3, kNan, 300}});
    const std::vector<std::size_t> a0{0, 1};
    const auto p = project(ds, a0, Pattern::from_string("10"));
    REQUIRE(p.size() == 2);
    CHECK(p.dim() == 1);
    CHECK(p.x(1)[0] == 20);
    CHECK(p.y(0) == 100);

    const auto r = project(ds, a0, Pattern::from_string("11"));
    CHECK(r.dim() == 0);
    CHECK(r.y(1) == 200);

    const std::vector<std::size_t> bad{2};
    try {
        project(ds, bad, Pattern::from_string("10"));
        FAIL("expected a pattern error");
    } catch (const PatternError& e) {
        CHECK(std::string(e.what()).find("row 3") != std::string::npos);
    }
}

TEST_CASE("MaskedDataset validates its inputs") {
    CHECK_THROWS_AS(MaskedDataset(1, {1.0}, {kNan}), DataError);
    CHECK_THROWS_AS(MaskedDataset(2, {1.0}, {1.0}), DimensionMismatch);
    CHECK_THROWS_AS(MaskedDataset(1, {std::numeric_limits<double>::infinity()}, {1.0}), DataError);
}
