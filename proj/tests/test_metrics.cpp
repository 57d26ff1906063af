#include "scimet/metrics.hpp"

#include "scimet/error.hpp"
#include "scimet/rng.hpp"
#include "scimet/synth.hpp"

#include <doctest.h>

#include "helpers.hpp"

#include <cmath>
#include <unordered_set>

using namespace scimet;
using namespace testutil;

TEST_SUITE_BEGIN("metrics");

namespace {

// Brute-force triad oracle straight off the record sets, independent of the
// CitationIndex path.
TriadCounts triad_oracle(const Corpus& corpus, uint32_t focal) {
    const auto& fp = corpus.paper(focal);
    std::unordered_set<std::string> focal_refs(fp.references.begin(), fp.references.end());
    // Only references that exist in the corpus count (dropped otherwise).
    std::unordered_set<std::string> kept_refs;
    for (const auto& r : fp.references)
        if (corpus.paper_index(r)) kept_refs.insert(r);

    TriadCounts t;
    for (uint32_t q = 0; q < corpus.size(); ++q) {
        if (q == focal) continue;
        const auto& qp = corpus.paper(q);
        bool cites_focal = false;
        bool cites_ref = false;
        for (const auto& r : qp.references) {
            if (r == fp.paper_id) cites_focal = true;
            if (kept_refs.count(r)) cites_ref = true;
        }
        if (cites_focal && cites_ref)
            ++t.n_b;
        else if (cites_focal)
            ++t.n_f;
        else if (cites_ref)
            ++t.n_r;
    }
    return t;
}

} // namespace

TEST_CASE("novelty is zero for all-zero embeddings") {
    auto table = make_table({"a", "b"}, {{0.f, 0.f}, {0.f, 0.f}}, {{0.f, 0.f}, {0.f, 0.f}});
    auto p = paper("P1", 2000, {"a", "b"});
    REQUIRE(novelty(p, table).has_value());
    CHECK(*novelty(p, table) == 0.0);
}

TEST_CASE("novelty hand dot-product oracle") {
    // in_a.out_b = 0.5 and in_b.out_a = -2 -> N = mean(-0.5, 2) = 0.75
    auto table = make_table({"a", "b"}, {{0.5f, 0.f}, {0.f, -2.f}}, {{0.f, 1.f}, {1.f, 0.f}});
    auto p = paper("P1", 2000, {"a", "b"});
    REQUIRE(novelty(p, table).has_value());
    CHECK(*novelty(p, table) == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("novelty undefined below two in-vocabulary keywords") {
    auto table = make_table({"a"}, {{1.f}}, {{1.f}});
    CHECK_FALSE(novelty(paper("P1", 2000, {"a"}), table).has_value());
    uint64_t oov = 0;
    CHECK_FALSE(novelty(paper("P2", 2000, {"a", "zz"}), table, &oov).has_value());
    CHECK(oov == 1);
}

TEST_CASE("novelty is invariant under keyword order and duplicates") {
    auto table = make_table({"a", "b", "c"},
                            {{0.3f, -0.2f}, {0.1f, 0.4f}, {-0.5f, 0.2f}},
                            {{0.2f, 0.1f}, {-0.3f, 0.6f}, {0.4f, -0.1f}});
    auto p1 = paper("P1", 2000, {"a", "b", "c"});
    PaperRecord p2 = p1;
    p2.keywords = {"c", "a", "b"};
    CHECK(*novelty(p1, table) == doctest::Approx(*novelty(p2, table)).epsilon(1e-12));
    PaperRecord p3 = p1;
    p3.keywords = {"a", "b", "b", "c", "a"};
    CHECK(*novelty(p1, table) == doctest::Approx(*novelty(p3, table)).epsilon(1e-12));
}

TEST_CASE("scaling every vector by s scales novelty by s^2") {
    auto table = make_table({"a", "b", "c"},
                            {{0.3f, -0.2f}, {0.1f, 0.4f}, {-0.5f, 0.2f}},
                            {{0.2f, 0.1f}, {-0.3f, 0.6f}, {0.4f, -0.1f}});
    auto p = paper("P1", 2000, {"a", "b", "c"});
    auto scale_by = [&](float s) {
        EmbeddingTable scaled = table;
        for (auto& v : scaled.in_vecs) v *= s;
        for (auto& v : scaled.out_vecs) v *= s;
        return scaled;
    };
    // Powers of two scale float components exactly, so equality is exact.
    CHECK(*novelty(p, scale_by(4.f)) == 16.0 * *novelty(p, table));
    // General scales round at float precision.
    CHECK(*novelty(p, scale_by(3.f)) ==
          doctest::Approx(9.0 * *novelty(p, table)).epsilon(1e-5));
}

TEST_CASE("developmental index extreme values") {
    SUBCASE("only direct citations: D = -1") {
        Corpus c({paper("F", 2000), paper("C1", 2001, {}, {"F"}), paper("C2", 2002, {}, {"F"})},
                 {});
        auto idx = build_citation_index(c);
        auto d = developmental_index(c, idx, *c.paper_index("F"));
        REQUIRE(d.has_value());
        CHECK(*d == -1.0);
    }
    SUBCASE("only consolidating citations: D = 1") {
        Corpus c({paper("R", 1990), paper("F", 2000, {}, {"R"}),
                  paper("C1", 2001, {}, {"F", "R"}), paper("C2", 2002, {}, {"F", "R"}),
                  paper("C3", 2003, {}, {"F", "R"})},
                 {});
        auto idx = build_citation_index(c);
        auto d = developmental_index(c, idx, *c.paper_index("F"));
        REQUIRE(d.has_value());
        CHECK(*d == 1.0);
    }
    SUBCASE("no interactions: undefined") {
        Corpus c({paper("F", 2000)}, {});
        auto idx = build_citation_index(c);
        CHECK_FALSE(developmental_index(c, idx, 0).has_value());
    }
}

TEST_CASE("developmental index 0.25 on the explicit small graph") {
    // n_f = 1 (A), n_b = 2 (B, C), n_r = 1 (E) -> D = (2-1)/4
    Corpus c({paper("R", 1990), paper("F", 2000, {}, {"R"}), paper("A", 2001, {}, {"F"}),
              paper("B", 2002, {}, {"F", "R"}), paper("C", 2003, {}, {"F", "R"}),
              paper("E", 2004, {}, {"R"})},
             {});
    auto idx = build_citation_index(c);
    uint32_t f = *c.paper_index("F");
    TriadCounts t = developmental_counts(c, idx, f);
    CHECK(t.n_f == 1);
    CHECK(t.n_b == 2);
    CHECK(t.n_r == 1);
    CHECK(*developmental_index(c, idx, f) == 0.25);
}

TEST_CASE("developmental index equals the brute-force oracle on random graphs") {
    Rng rng(99);
    for (int rep = 0; rep < 25; ++rep) {
        uint32_t n = 10 + uint32_t(rng.below(190));
        std::vector<PaperRecord> papers;
        for (uint32_t i = 0; i < n; ++i) {
            std::vector<std::string> refs;
            if (i > 0) {
                uint32_t m = uint32_t(rng.below(std::min<uint32_t>(i, 6) + 1));
                for (auto r : rng.sample_without_replacement(i, m))
                    refs.push_back("N" + std::to_string(r));
            }
            papers.push_back(paper("N" + std::to_string(i), 1900 + int(i), {}, refs));
        }
        Corpus c(std::move(papers), {});
        auto idx = build_citation_index(c);
        for (uint32_t f = 0; f < n; ++f) {
            TriadCounts got = developmental_counts(c, idx, f);
            TriadCounts want = triad_oracle(c, f);
            CHECK(got.n_f == want.n_f);
            CHECK(got.n_b == want.n_b);
            CHECK(got.n_r == want.n_r);
            // partition property: n_f + n_b is the citing-paper count
            CHECK(got.n_f + got.n_b == idx.cited_by[f].size());
            auto d = developmental_index(c, idx, f);
            if (want.denominator() == 0)
                CHECK_FALSE(d.has_value());
            else
                CHECK(*d == (double(want.n_b) - double(want.n_f)) / double(want.denominator()));
        }
    }
}

TEST_CASE("zero-reference focal cited by anyone has D = -1") {
    Corpus c({paper("F", 2000), paper("C", 2001, {}, {"F"})}, {});
    auto idx = build_citation_index(c);
    uint32_t f = *c.paper_index("F");
    CHECK(*developmental_index(c, idx, f) == -1.0);
}

TEST_CASE("strict subsequence mode filters same-year citers") {
    // C published the same year as F.
    Corpus c({paper("F", 2000), paper("C", 2000, {}, {"F"})}, {});
    auto idx = build_citation_index(c);
    uint32_t f = *c.paper_index("F");
    CHECK(developmental_index(c, idx, f).has_value()); // default counts it
    MetricsOptions strict;
    strict.strict_subsequence = true;
    CHECK_FALSE(developmental_index(c, idx, f, strict).has_value());
}

TEST_CASE("impact windows") {
    SUBCASE("no citations") {
        ImpactWindows w = windows_from_offsets({});
        CHECK(w.impact_short == 0);
        CHECK(w.impact_long == 0);
    }
    SUBCASE("one citation per year 0..30") {
        std::vector<int> offsets;
        for (int i = 0; i <= 30; ++i) offsets.push_back(i);
        ImpactWindows w = windows_from_offsets(offsets);
        CHECK(w.impact_short == 11); // years 0..10
        CHECK(w.impact_long == 10);  // years 21..30; 11..20 in neither window
    }
    SUBCASE("window boundaries") {
        CHECK(windows_from_offsets(std::vector<int>{10}).impact_short == 1);
        CHECK(windows_from_offsets(std::vector<int>{11}).impact_short == 0);
        CHECK(windows_from_offsets(std::vector<int>{11}).impact_long == 0);
        CHECK(windows_from_offsets(std::vector<int>{20}).impact_long == 0);
        CHECK(windows_from_offsets(std::vector<int>{21}).impact_long == 1);
    }
    SUBCASE("negative offsets are anomalies") {
        ImpactWindows w = windows_from_offsets(std::vector<int>{-1, 0, 5});
        CHECK(w.anomalies == 1);
        CHECK(w.impact_short == 2);
    }
    SUBCASE("corpus path") {
        Corpus c({paper("F", 2000), paper("C1", 2000, {}, {"F"}), paper("C2", 2021, {}, {"F"}),
                  paper("C3", 2015, {}, {"F"}), paper("C4", 1999, {}, {"F"})},
                 {});
        auto idx = build_citation_index(c);
        ImpactWindows w = impact_windows(c, idx, *c.paper_index("F"));
        CHECK(w.impact_short == 1); // year 0
        CHECK(w.impact_long == 1);  // year 21
        CHECK(w.anomalies == 1);    // 1999 citer
    }
}

TEST_CASE("monotonicity: adding citations never shrinks a window") {
    Rng rng(55);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<int> offsets;
        uint32_t n = uint32_t(rng.below(40));
        for (uint32_t i = 0; i < n; ++i) offsets.push_back(int(rng.below(35)));
        ImpactWindows base = windows_from_offsets(offsets);
        offsets.push_back(int(rng.below(35)));
        ImpactWindows more = windows_from_offsets(offsets);
        CHECK(more.impact_short >= base.impact_short);
        CHECK(more.impact_long >= base.impact_long);
        CHECK(base.impact_short + base.impact_long <= n);
    }
}

TEST_CASE("productivity counts papers in the focal year") {
    Corpus c({paper("P1", 2005, {"k"}), paper("P2", 2005, {"k"}), paper("P3", 2005, {"k"}),
              paper("P4", 2004, {"k"})},
             {author("P1", "A1", 1, Role::Lead), author("P2", "A1", 1, Role::Lead),
              author("P3", "A1", 1, Role::Lead), author("P4", "A2", 1, Role::Lead)});
    CHECK(productivity(c, "A1", 2005) == 3);
    CHECK(productivity(c, "A2", 2005) == 0);
    CHECK(productivity(c, "A2", 2004) == 1);
    CHECK_THROWS_AS((void)productivity(c, "A9", 2005), Error);
}

TEST_CASE("team metrics") {
    SUBCASE("boundary l_ratio = 0.5 classifies Tall") {
        Corpus c({paper("P1", 2000)},
                 {author("P1", "A1", 1, Role::Lead), author("P1", "A2", 2, Role::Lead),
                  author("P1", "A3", 3, Role::Support), author("P1", "A4", 4, Role::Support)});
        TeamMetrics tm = team_metrics(c, 0);
        CHECK(tm.l_ratio == 0.5);
        CHECK(tm.team_size == 4);
        CHECK(tm.hierarchy_class == Hierarchy::Tall);

        MetricsOptions flat_at_half;
        flat_at_half.boundary_half_is_tall = false;
        CHECK(team_metrics(c, 0, flat_at_half).hierarchy_class == Hierarchy::Flat);
    }
    SUBCASE("solo lead author") {
        Corpus c({paper("P1", 2000)}, {author("P1", "A1", 1, Role::Lead)});
        TeamMetrics tm = team_metrics(c, 0);
        CHECK(tm.l_ratio == 1.0);
        CHECK(tm.hierarchy_class == Hierarchy::Flat);
        CHECK_FALSE(tm.support_productivity.has_value());
        CHECK(tm.lead_productivity == 1.0); // the focal paper itself counts
    }
    SUBCASE("lead productivity is the mean over lead authors") {
        // A1 has 2 papers in 2000, A2 has 4.
        std::vector<PaperRecord> papers{paper("P1", 2000)};
        std::vector<AuthorshipRecord> auths{author("P1", "A1", 1, Role::Lead),
                                            author("P1", "A2", 2, Role::Lead),
                                            author("P1", "A3", 3, Role::Support)};
        for (int i = 0; i < 1; ++i) {
            papers.push_back(paper("Q" + std::to_string(i), 2000));
            auths.push_back(author("Q" + std::to_string(i), "A1", 1, Role::Lead));
        }
        for (int i = 0; i < 3; ++i) {
            papers.push_back(paper("R" + std::to_string(i), 2000));
            auths.push_back(author("R" + std::to_string(i), "A2", 1, Role::Lead));
        }
        Corpus c(std::move(papers), std::move(auths));
        TeamMetrics tm = team_metrics(c, *c.paper_index("P1"));
        CHECK(tm.lead_productivity == 3.0); // mean of {2, 4}
        CHECK(tm.support_productivity == 1.0);
    }
    SUBCASE("zero-author paper is an error") {
        Corpus c({paper("P1", 2000)}, {});
        CHECK_THROWS_AS((void)team_metrics(c, 0), Error);
    }
}

TEST_CASE("hierarchy class ignores author identities") {
    auto make = [](const std::string& prefix) {
        return Corpus({paper("P1", 2000)},
                      {author("P1", prefix + "1", 1, Role::Lead),
                       author("P1", prefix + "2", 2, Role::Support),
                       author("P1", prefix + "3", 3, Role::Support)});
    };
    CHECK(team_metrics(make("X"), 0).hierarchy_class == team_metrics(make("Y"), 0).hierarchy_class);
}

TEST_CASE("hierarchy trend") {
    SUBCASE("all flat gives zero fractions") {
        Corpus c({paper("P1", 2000), paper("P2", 2003)},
                 {author("P1", "A1", 1, Role::Lead), author("P2", "A2", 1, Role::Lead)});
        auto points = hierarchy_trend(c, {}, 5);
        REQUIRE(points.size() == 1);
        CHECK(points[0].fraction_tall == 0.0);
        CHECK(points[0].n_papers == 2);
    }
    SUBCASE("one tall of four") {
        std::vector<PaperRecord> papers;
        std::vector<AuthorshipRecord> auths;
        for (int i = 0; i < 4; ++i) {
            std::string id = "P" + std::to_string(i);
            papers.push_back(paper(id, 2001));
            auths.push_back(author(id, "A" + std::to_string(2 * i), 1, Role::Lead));
            // paper 0 gets two supports: l_ratio = 1/3 -> Tall
            if (i == 0) {
                auths.push_back(author(id, "S1", 2, Role::Support));
                auths.push_back(author(id, "S2", 3, Role::Support));
            }
        }
        Corpus c(std::move(papers), std::move(auths));
        auto points = hierarchy_trend(c, {}, 5);
        REQUIRE(points.size() == 1);
        CHECK(points[0].fraction_tall == 0.25);
    }
    SUBCASE("funded-only filter") {
        auto p1 = paper("P1", 2000);
        p1.is_funded = true;
        p1.grant_count = 1;
        p1.grant_amount = 100;
        Corpus c({p1, paper("P2", 2000)},
                 {author("P1", "A1", 1, Role::Lead), author("P1", "A2", 2, Role::Support),
                  author("P2", "A3", 1, Role::Lead)});
        auto funded = hierarchy_trend(c, TrendFilter{true}, 5);
        REQUIRE(funded.size() == 1);
        CHECK(funded[0].n_papers == 1);
        CHECK(funded[0].fraction_tall == 1.0); // P1: 1 lead of 2 -> 0.5 -> Tall
    }
    SUBCASE("bucket_years below 1 is rejected") {
        Corpus c({paper("P1", 2000)}, {author("P1", "A1", 1, Role::Lead)});
        CHECK_THROWS_AS((void)hierarchy_trend(c, {}, 0), Error);
    }
}

TEST_CASE("metrics csv round trip") {
    GeneratorConfig gc;
    gc.seed = 8;
    gc.n_papers = 120;
    gc.n_keywords = 30;
    auto [corpus, truth] = generate(gc);
    auto index = build_citation_index(corpus);
    TrainConfig tc;
    tc.dimension = 8;
    tc.epochs = 1;
    PairStream s = build_pair_stream(corpus, 0);
    EmbeddingTable table = train_skipgram(s, tc);

    MetricsSummary summary;
    auto rows = compute_paper_metrics(corpus, index, table, {}, &summary);
    REQUIRE(rows.size() == corpus.size());

    TempDir dir;
    write_metrics_csv(dir.file("m.csv"), rows, "deadbeef");
    auto loaded = read_metrics_csv(dir.file("m.csv"));
    REQUIRE(loaded.size() == rows.size());
    for (size_t i = 0; i < rows.size(); ++i) {
        CHECK(loaded[i].paper_id == rows[i].paper_id);
        CHECK(loaded[i].year == rows[i].year);
        CHECK(loaded[i].team_size == rows[i].team_size);
        CHECK(loaded[i].hierarchy_class == rows[i].hierarchy_class);
        CHECK(loaded[i].novelty.has_value() == rows[i].novelty.has_value());
        if (rows[i].novelty)
            CHECK(*loaded[i].novelty == doctest::Approx(*rows[i].novelty).epsilon(1e-9));
        CHECK(loaded[i].impact_short == rows[i].impact_short);
        CHECK(loaded[i].impact_long == rows[i].impact_long);
    }

    std::string text = read_file(dir.file("m.csv"));
    CHECK(text.rfind("# manifest_hash=deadbeef\n", 0) == 0);
    CHECK(text.find("paper_id,year,field_id,team_size,l_ratio,hierarchy_class,novelty,"
                    "developmental,impact_short,impact_long,lead_productivity,"
                    "support_productivity\n") != std::string::npos);
}

TEST_SUITE_END();
