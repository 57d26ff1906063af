#include "scimet/synth.hpp"

#include "scimet/error.hpp"
#include "scimet/metrics.hpp"

#include <doctest.h>

#include "helpers.hpp"

#include <cmath>

using namespace scimet;
using namespace testutil;

TEST_SUITE_BEGIN("synth");

TEST_CASE("same seed twice produces byte-identical outputs") {
    GeneratorConfig cfg;
    cfg.seed = 123;
    cfg.n_papers = 250;
    cfg.n_authors = 50;
    cfg.n_keywords = 40;
    cfg.funded_fraction = 0.5;
    PlantedModel pm;
    cfg.planted = pm;

    TempDir d1, d2;
    generate_files(cfg, d1.path);
    generate_files(cfg, d2.path);
    for (const char* name : {"papers.jsonl", "authorships.jsonl", "truth.json"})
        CHECK(read_file(d1.file(name)) == read_file(d2.file(name)));
}

TEST_CASE("zero papers gives a valid empty corpus and empty truth") {
    GeneratorConfig cfg;
    cfg.n_papers = 0;
    auto [corpus, truth] = generate(cfg);
    CHECK(corpus.size() == 0);
    CHECK(truth.trend.empty());
    CHECK_FALSE(truth.has_planted);
    CHECK(validate(corpus).clean());
}

TEST_CASE("generated corpora validate with zero anomalies") {
    GeneratorConfig cfg;
    cfg.seed = 7;
    cfg.n_papers = 800;
    cfg.n_authors = 100;
    cfg.n_keywords = 60;
    cfg.refs_max = 6;
    auto [corpus, truth] = generate(cfg);
    ValidationReport r = validate(corpus);
    CHECK(r.self_citations_removed == 0);
    CHECK(r.year_order_anomalies == 0);
    CHECK(r.zero_keyword_papers == 0);
    CHECK(r.zero_author_papers == 0);
    CHECK(r.dropped_references == 0);
    CHECK(r.clean());
}

TEST_CASE("infeasible configurations are rejected") {
    GeneratorConfig cfg;
    cfg.n_authors = 3;
    cfg.team_max = 10;
    CHECK_THROWS_AS((void)generate(cfg), Error);

    cfg = GeneratorConfig{};
    cfg.keywords_max = 100;
    cfg.n_keywords = 10;
    CHECK_THROWS_AS((void)generate(cfg), Error);

    cfg = GeneratorConfig{};
    cfg.tall_start = 1.4;
    CHECK_THROWS_AS((void)generate(cfg), Error);
}

TEST_CASE("planted Tall fraction is recovered within 0.02 in a single bucket") {
    GeneratorConfig cfg;
    cfg.seed = 55;
    cfg.n_papers = 10000;
    cfg.n_authors = 800;
    cfg.team_min = 2;
    cfg.year_min = 2000;
    cfg.year_max = 2004; // one 5-year bucket
    cfg.tall_start = 0.6;
    cfg.tall_end = 0.6;
    auto [corpus, truth] = generate(cfg);
    REQUIRE(truth.trend.size() == 1);
    CHECK(std::fabs(truth.trend[0].empirical_fraction - 0.6) < 0.02);

    // The trend computed by the metrics module agrees with the recorded
    // empirical fraction exactly.
    auto points = hierarchy_trend(corpus, {}, 5);
    REQUIRE(points.size() == 1);
    CHECK(points[0].fraction_tall == doctest::Approx(truth.trend[0].empirical_fraction)
                                         .epsilon(1e-12));
    CHECK(points[0].n_papers == truth.trend[0].n_papers);
}

TEST_CASE("trend truth follows the planted ramp") {
    GeneratorConfig cfg;
    cfg.seed = 9;
    cfg.n_papers = 20000;
    cfg.n_authors = 2000;
    cfg.team_min = 2;
    cfg.year_min = 1950;
    cfg.year_max = 1999;
    cfg.tall_start = 0.2;
    cfg.tall_end = 0.8;
    auto [corpus, truth] = generate(cfg);
    REQUIRE(truth.trend.size() == 10);
    // Targets rise monotonically along the ramp.
    for (size_t i = 1; i < truth.trend.size(); ++i)
        CHECK(truth.trend[i].target_fraction > truth.trend[i - 1].target_fraction);
    // First bucket target near 0.2 + ramp slope over 1950..1954.
    CHECK(truth.trend.front().target_fraction ==
          doctest::Approx(0.2 + 0.6 * (2.0 / 49.0)).epsilon(0.02));
}

TEST_CASE("planted model truth is internally consistent") {
    GeneratorConfig cfg;
    cfg.seed = 31;
    cfg.n_papers = 500;
    cfg.n_authors = 100;
    cfg.team_min = 2;
    cfg.team_max = 5;
    PlantedModel pm;
    pm.beta_l_ratio = 1.2;
    pm.gamma_team_size = 0.4;
    pm.gamma_is_funded = 0.6;
    pm.snr = 1.0;
    cfg.planted = pm;
    auto [corpus, truth] = generate(cfg);

    REQUIRE(truth.has_planted);
    CHECK(truth.beta_l_ratio == 1.2);
    CHECK(truth.sigma_noise > 0.0);
    CHECK(truth.r2_full_expected > truth.r2_restricted_expected);
    CHECK(truth.r2_full_expected == doctest::Approx(0.5).epsilon(0.02)); // snr 1
    CHECK(truth.planted_rows.values.size() == corpus.authorships().size());
    CHECK(truth.expected_dependent.size() == corpus.size());

    // Truth survives a JSON round trip.
    TempDir dir;
    write_truth_json(dir.file("t.json"), truth);
    SynthTruth loaded = read_truth_json(dir.file("t.json"));
    CHECK(loaded.beta_l_ratio == truth.beta_l_ratio);
    CHECK(loaded.sigma_noise == truth.sigma_noise);
    CHECK(loaded.planted_rows.values.size() == truth.planted_rows.values.size());
    CHECK(loaded.trend.size() == truth.trend.size());
    for (const auto& [k, v] : truth.planted_rows.values)
        CHECK(loaded.planted_rows.values.at(k) == v);
}

TEST_CASE("keyword clusters are balanced round-robin") {
    GeneratorConfig cfg;
    cfg.seed = 1;
    cfg.n_papers = 10;
    cfg.n_keywords = 20;
    cfg.n_clusters = 4;
    auto [corpus, truth] = generate(cfg);
    std::vector<int> sizes(4, 0);
    for (const auto& [kw, c] : truth.keyword_cluster) ++sizes[c];
    for (int s : sizes) CHECK(s == 5);
}

TEST_SUITE_END();
