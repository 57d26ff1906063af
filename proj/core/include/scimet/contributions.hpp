#pragma once

#include "scimet/corpus.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace scimet {

struct ContributionOptions {
    // Raw overlap is intersection cardinality by default; Jaccard is the
    // documented alternative (equivalent up to ranking under min-max scaling).
    bool jaccard_overlap = false;
    // Prior papers are strictly earlier than the focal year; set true to also
    // admit same-year papers (the focal itself stays excluded).
    bool include_same_year = false;
};

// Everything known about an author strictly before the focal paper.
struct PriorProfile {
    std::string author_id;
    std::string as_of_paper;
    std::vector<std::string> prior_references; // sorted unique union
    std::vector<std::string> prior_keywords;   // sorted unique union
    int first_pub_year = 0;                    // focal year for debut authors
    uint64_t prior_citations = 0;              // citations to prior papers from papers before focal year
    uint32_t prior_publication_count = 0;
    uint32_t prior_first_author_count = 0;
    uint32_t prior_corresponding_count = 0;
};

inline constexpr size_t kContributionIndexCount = 8;
inline constexpr std::array<const char*, kContributionIndexCount> kContributionIndexNames = {
    "ref_contrib",       "topic_contrib",  "first_author_prob", "corresponding_prob",
    "career_age",        "citation_stock", "topic_diversity",   "publication_stock",
};

struct ContributionRow {
    std::string paper_id;
    std::string author_id;
    Role role = Role::Support;
    // Indices 0..1 min-max scaled within the team, 2..3 raw probabilities,
    // 4..7 raw until population_scale() min-max scales them across all rows.
    std::array<double, kContributionIndexCount> values{};

    double& operator[](size_t i) { return values[i]; }
    double operator[](size_t i) const { return values[i]; }
};

PriorProfile build_prior_profile(const Corpus& corpus, const CitationIndex& index,
                                 std::string_view author_id, uint32_t focal,
                                 const ContributionOptions& options = {});

// One row per author of the focal paper, ordered by author position.
std::vector<ContributionRow> contribution_indices(const Corpus& corpus,
                                                  const CitationIndex& index, uint32_t focal,
                                                  const ContributionOptions& options = {});

// Min-max scale career_age, citation_stock, topic_diversity and
// publication_stock across the whole row population; a degenerate range maps
// everything to 0.
void population_scale(std::vector<ContributionRow>& rows);

// Rows for every paper with at least one author, population-scaled.
std::vector<ContributionRow> all_contributions(const Corpus& corpus, const CitationIndex& index,
                                               const ContributionOptions& options = {});

struct GroupStat {
    double pop_mean = 0.0;
    double lead_mean = 0.0;
    std::optional<double> support_mean;
    std::optional<double> rel_lead;    // (lead - pop) / |pop|, absent when pop mean is 0
    std::optional<double> rel_support;
    std::optional<std::array<double, 2>> ci_lead;
    std::optional<std::array<double, 2>> ci_support;
    bool pop_mean_is_zero = false;
};

struct GroupDistanceReport {
    std::array<GroupStat, kContributionIndexCount> indices;
    uint32_t bootstrap_b = 0;
    double level = 0.95;
    uint64_t seed = 0;
};

// Group means and relative distances with percentile bootstrap confidence
// intervals. Resampling unit is the paper (cluster bootstrap); replicate r
// draws from an independent generator derived from (seed, r).
GroupDistanceReport group_distance_report(const std::vector<ContributionRow>& rows, uint32_t b,
                                          double level, uint64_t seed);

void write_contributions_csv(const std::filesystem::path& path,
                             const std::vector<ContributionRow>& rows,
                             const std::string& manifest_hash = {});

void write_group_distances_json(const std::filesystem::path& path,
                                const GroupDistanceReport& report,
                                const std::string& manifest_hash = {});

} // namespace scimet
