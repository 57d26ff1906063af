#pragma once

#include "scimet/corpus.hpp"
#include "scimet/embedding.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace scimet {

enum class Hierarchy : uint8_t { Flat, Tall };

std::string_view hierarchy_name(Hierarchy h);

struct MetricsOptions {
    // Strict subsequence: only papers with year > focal year enter the triad
    // counts of the developmental index.
    bool strict_subsequence = false;
    // A team with l_ratio exactly 0.5 classifies as Tall ("flat" requires
    // l_ratio strictly above 0.5); set false to assign the boundary to Flat.
    bool boundary_half_is_tall = true;
};

// Triad counts over papers other than the focal one:
//   n_f cite the focal work only, n_b cite it and >= 1 of its references,
//   n_r cite >= 1 of its references but not the focal work.
struct TriadCounts {
    uint64_t n_f = 0;
    uint64_t n_b = 0;
    uint64_t n_r = 0;

    uint64_t denominator() const { return n_f + n_b + n_r; }
};

struct ImpactWindows {
    uint32_t impact_short = 0;  // citations in years 0..10 after publication
    uint32_t impact_long = 0;   // citations from year 21 on
    uint32_t anomalies = 0;     // citations dated before the focal year, excluded
};

struct TeamMetrics {
    double l_ratio = 0.0;
    int team_size = 0;
    double lead_productivity = 0.0;
    std::optional<double> support_productivity;
    Hierarchy hierarchy_class = Hierarchy::Flat;
};

struct PaperMetrics {
    std::string paper_id;
    int year = 0;
    std::string field_id;
    std::optional<int> team_size;
    std::optional<double> l_ratio;
    std::optional<Hierarchy> hierarchy_class;
    std::optional<double> novelty;
    std::optional<double> developmental;
    uint32_t impact_short = 0;
    uint32_t impact_long = 0;
    std::optional<double> lead_productivity;
    std::optional<double> support_productivity;
    bool zero_reference_focal = false; // D defined with no references (always -1)
};

struct MetricsSummary {
    uint64_t novelty_undefined = 0;
    uint64_t developmental_undefined = 0;
    uint64_t oov_keywords_dropped = 0;
    uint64_t zero_reference_defined_d = 0;
    uint64_t citation_year_anomalies = 0;
    uint64_t zero_author_papers = 0;
};

// Mean of -(in_i . out_j) over ordered pairs i != j from the paper's
// in-vocabulary keywords; nullopt (undefined, distinct from 0) when fewer than
// two keywords are in vocabulary.
std::optional<double> novelty(const PaperRecord& paper, const EmbeddingTable& table,
                              uint64_t* oov_dropped = nullptr);

TriadCounts developmental_counts(const Corpus& corpus, const CitationIndex& index,
                                 uint32_t focal, const MetricsOptions& options = {});

// (n_b - n_f) / (n_f + n_b + n_r); nullopt when the denominator is zero.
std::optional<double> developmental_index(const Corpus& corpus, const CitationIndex& index,
                                          uint32_t focal, const MetricsOptions& options = {});

ImpactWindows impact_windows(const Corpus& corpus, const CitationIndex& index, uint32_t focal);

// Window sums over year offsets relative to the focal year; negative offsets
// count as anomalies. impact_windows delegates here.
ImpactWindows windows_from_offsets(std::span<const int> year_offsets);

// Number of the author's papers published in `year` (the focal paper counts).
// Throws Precondition for an unknown author.
int productivity(const Corpus& corpus, std::string_view author_id, int year);

// Throws Precondition when the paper has no authorships.
TeamMetrics team_metrics(const Corpus& corpus, uint32_t focal, const MetricsOptions& options = {});

struct TrendPoint {
    int bucket_start = 0; // first calendar year of the bucket
    double fraction_tall = 0.0;
    uint32_t n_papers = 0;
};

struct TrendFilter {
    bool funded_only = false;
};

// Fraction of Tall papers per bucket of `bucket_years` calendar years
// (buckets anchored at year 0); buckets with no qualifying papers emit no
// point. Papers without authorships have no hierarchy class and are skipped.
std::vector<TrendPoint> hierarchy_trend(const Corpus& corpus, const TrendFilter& filter,
                                        int bucket_years, const MetricsOptions& options = {});

std::vector<PaperMetrics> compute_paper_metrics(const Corpus& corpus, const CitationIndex& index,
                                                const EmbeddingTable& table,
                                                const MetricsOptions& options = {},
                                                MetricsSummary* summary = nullptr);

// CSV with the fixed header; absent values are empty cells. A single leading
// '#' comment line carries provenance when manifest_hash is non-empty.
void write_metrics_csv(const std::filesystem::path& path,
                       const std::vector<PaperMetrics>& rows,
                       const std::string& manifest_hash = {});

std::vector<PaperMetrics> read_metrics_csv(const std::filesystem::path& path);

} // namespace scimet
