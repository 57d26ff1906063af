#pragma once

#include "scimet/corpus.hpp"
#include "scimet/econometrics.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace scimet {

// Row-level planted fixed-effect model:
//   y = author_effect + field_effect + beta * l_ratio + gamma . controls + noise
// The noise scale is derived from the realized signal variance and `snr`.
struct PlantedModel {
    double beta_l_ratio = 1.0;
    double gamma_team_size = 0.0;
    double gamma_is_funded = 0.0;
    double gamma_grant_count = 0.0;
    double gamma_grant_amount_musd = 0.0;
    double sigma_author = 0.5;
    double sigma_field = 0.5;
    double snr = 1.0; // Var(non-FE systematic) / Var(noise)
};

struct GeneratorConfig {
    uint64_t seed = 0;
    uint32_t n_papers = 1000;
    uint32_t n_authors = 200;
    uint32_t n_keywords = 100;
    uint32_t n_fields = 8;
    int year_min = 1950;
    int year_max = 2015;

    // Keyword co-occurrence structure
    uint32_t n_clusters = 10;
    double within_cluster_rate = 0.9; // probability a keyword comes from the paper's home cluster
    uint32_t keywords_min = 3;
    uint32_t keywords_max = 6;

    // Teams and planted hierarchy trend (linear Tall-fraction ramp over years)
    uint32_t team_min = 1;
    uint32_t team_max = 6;
    double tall_start = 0.48;
    double tall_end = 0.75;
    int trend_bucket_years = 5;

    // Citations: year-respecting preferential attachment
    uint32_t refs_min = 0;
    uint32_t refs_max = 8;
    double attachment_preference = 0.7; // probability of a degree-proportional draw

    double funded_fraction = 0.3;

    std::optional<PlantedModel> planted;

    // Throws Config on infeasible settings.
    void check() const;
};

struct TrendTruthPoint {
    int bucket_start = 0;
    double target_fraction = 0.0;    // mean of the planted ramp over the bucket's papers
    double empirical_fraction = 0.0; // realized Tall fraction
    uint32_t n_papers = 0;
};

struct SynthTruth {
    int schema_version = 1;
    uint64_t seed = 0;
    std::unordered_map<std::string, uint32_t> keyword_cluster;
    std::vector<TrendTruthPoint> trend;
    int trend_bucket_years = 5;

    bool has_planted = false;
    double beta_l_ratio = 0.0;
    double gamma_team_size = 0.0;
    double gamma_is_funded = 0.0;
    double gamma_grant_count = 0.0;
    double gamma_grant_amount_musd = 0.0;
    double sigma_noise = 0.0;
    double r2_full_expected = 0.0;
    double r2_restricted_expected = 0.0;
    double additional_variance_expected_pct = 0.0;
    // Realized row-level outcomes, regressable through the standard pipeline.
    DependentOverride planted_rows;
    // Paper-level systematic component (including the field effect).
    std::unordered_map<std::string, double> expected_dependent;
};

struct SynthResult {
    Corpus corpus;
    SynthTruth truth;
};

// Deterministic per seed; the emitted corpus passes validate() with zero
// anomalies.
SynthResult generate(const GeneratorConfig& config);

void write_truth_json(const std::filesystem::path& path, const SynthTruth& truth,
                      const std::string& manifest_hash = {});

SynthTruth read_truth_json(const std::filesystem::path& path);

// generate() + papers.jsonl / authorships.jsonl / truth.json under out_dir.
SynthResult generate_files(const GeneratorConfig& config, const std::filesystem::path& out_dir,
                           const std::string& manifest_hash = {});

} // namespace scimet
