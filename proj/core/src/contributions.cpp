#include "scimet/contributions.hpp"

#include "scimet/error.hpp"
#include "scimet/rng.hpp"
#include "scimet/stats.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

namespace scimet {

using nlohmann::json;

namespace {

size_t intersection_size(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    size_t n = 0;
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() && ib != b.end()) {
        if (*ia < *ib)
            ++ia;
        else if (*ib < *ia)
            ++ib;
        else {
            ++n;
            ++ia;
            ++ib;
        }
    }
    return n;
}

double overlap(const std::vector<std::string>& focal, const std::vector<std::string>& prior,
               bool jaccard) {
    size_t inter = intersection_size(focal, prior);
    if (!jaccard) return double(inter);
    size_t uni = focal.size() + prior.size() - inter;
    return uni == 0 ? 0.0 : double(inter) / double(uni);
}

void merge_into(std::vector<std::string>& into, const std::vector<std::string>& from) {
    into.insert(into.end(), from.begin(), from.end());
}

void sort_unique(std::vector<std::string>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
}

} // namespace

PriorProfile build_prior_profile(const Corpus& corpus, const CitationIndex& index,
                                 std::string_view author_id, uint32_t focal,
                                 const ContributionOptions& options) {
    const auto& focal_paper = corpus.paper(focal);
    bool on_focal = false;
    for (uint32_t i : corpus.paper_authorships(focal))
        if (corpus.authorships()[i].author_id == author_id) on_focal = true;
    if (!on_focal)
        throw precondition_error("build_prior_profile: author '" + std::string(author_id) +
                                 "' is not on paper '" + focal_paper.paper_id + "'");

    PriorProfile profile;
    profile.author_id = std::string(author_id);
    profile.as_of_paper = focal_paper.paper_id;
    profile.first_pub_year = focal_paper.year;

    const int focal_year = focal_paper.year;
    auto is_prior = [&](uint32_t paper_idx) {
        if (paper_idx == focal) return false;
        int y = corpus.paper(paper_idx).year;
        return options.include_same_year ? y <= focal_year : y < focal_year;
    };

    for (uint32_t i : corpus.author_authorships(author_id)) {
        const auto& a = corpus.authorships()[i];
        uint32_t pidx = *corpus.paper_index(a.paper_id);
        if (!is_prior(pidx)) continue;
        const auto& p = corpus.paper(pidx);
        ++profile.prior_publication_count;
        if (a.position == 1) ++profile.prior_first_author_count;
        if (a.is_corresponding) ++profile.prior_corresponding_count;
        profile.first_pub_year = std::min(profile.first_pub_year, p.year);
        merge_into(profile.prior_references, p.references);
        merge_into(profile.prior_keywords, p.keywords);
        // Citation stock stays causal: only citations arriving before the
        // focal year count.
        for (uint32_t citing : index.cited_by[pidx])
            if (corpus.paper(citing).year < focal_year) ++profile.prior_citations;
    }
    sort_unique(profile.prior_references);
    sort_unique(profile.prior_keywords);
    return profile;
}

std::vector<ContributionRow> contribution_indices(const Corpus& corpus,
                                                  const CitationIndex& index, uint32_t focal,
                                                  const ContributionOptions& options) {
    auto auth_idxs = corpus.paper_authorships(focal);
    if (auth_idxs.empty())
        throw precondition_error("contribution_indices: paper '" + corpus.paper(focal).paper_id +
                                 "' has no authorships");

    std::vector<uint32_t> ordered(auth_idxs.begin(), auth_idxs.end());
    std::sort(ordered.begin(), ordered.end(), [&](uint32_t a, uint32_t b) {
        return corpus.authorships()[a].position < corpus.authorships()[b].position;
    });

    const auto& focal_paper = corpus.paper(focal);
    std::vector<ContributionRow> rows;
    rows.reserve(ordered.size());
    for (uint32_t i : ordered) {
        const auto& a = corpus.authorships()[i];
        PriorProfile prof = build_prior_profile(corpus, index, a.author_id, focal, options);

        ContributionRow row;
        row.paper_id = focal_paper.paper_id;
        row.author_id = a.author_id;
        row.role = a.role;
        row[0] = overlap(focal_paper.references, prof.prior_references, options.jaccard_overlap);
        row[1] = overlap(focal_paper.keywords, prof.prior_keywords, options.jaccard_overlap);
        if (prof.prior_publication_count > 0) {
            row[2] = double(prof.prior_first_author_count) / double(prof.prior_publication_count);
            row[3] = double(prof.prior_corresponding_count) / double(prof.prior_publication_count);
        }
        row[4] = double(focal_paper.year - prof.first_pub_year);
        row[5] = double(prof.prior_citations);
        row[6] = double(prof.prior_keywords.size());
        row[7] = double(prof.prior_publication_count);
        rows.push_back(std::move(row));
    }

    // Contribution-to-paper overlaps are min-max scaled within the team so
    // they compare across teams; a constant column carries no signal and maps
    // to 0.
    for (size_t idx : {size_t(0), size_t(1)}) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (const auto& r : rows) {
            lo = std::min(lo, r[idx]);
            hi = std::max(hi, r[idx]);
        }
        for (auto& r : rows) r[idx] = hi > lo ? (r[idx] - lo) / (hi - lo) : 0.0;
    }
    return rows;
}

void population_scale(std::vector<ContributionRow>& rows) {
    for (size_t idx = 4; idx < kContributionIndexCount; ++idx) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (const auto& r : rows) {
            lo = std::min(lo, r[idx]);
            hi = std::max(hi, r[idx]);
        }
        for (auto& r : rows) r[idx] = hi > lo ? (r[idx] - lo) / (hi - lo) : 0.0;
    }
}

std::vector<ContributionRow> all_contributions(const Corpus& corpus, const CitationIndex& index,
                                               const ContributionOptions& options) {
    std::vector<ContributionRow> rows;
    for (uint32_t p = 0; p < corpus.size(); ++p) {
        if (corpus.paper_authorships(p).empty()) continue;
        auto team = contribution_indices(corpus, index, p, options);
        rows.insert(rows.end(), std::make_move_iterator(team.begin()),
                    std::make_move_iterator(team.end()));
    }
    population_scale(rows);
    return rows;
}

// ---------------------------------------------------------------------------
// Group distances with cluster bootstrap

namespace {

struct GroupMeans {
    std::array<double, kContributionIndexCount> pop{}, lead{}, support{};
    size_t n_pop = 0, n_lead = 0, n_support = 0;
};

GroupMeans group_means(const std::vector<ContributionRow>& rows,
                       const std::vector<uint32_t>& row_ids) {
    GroupMeans g;
    for (uint32_t ri : row_ids) {
        const auto& r = rows[ri];
        ++g.n_pop;
        for (size_t i = 0; i < kContributionIndexCount; ++i) g.pop[i] += r[i];
        if (r.role == Role::Lead) {
            ++g.n_lead;
            for (size_t i = 0; i < kContributionIndexCount; ++i) g.lead[i] += r[i];
        } else {
            ++g.n_support;
            for (size_t i = 0; i < kContributionIndexCount; ++i) g.support[i] += r[i];
        }
    }
    for (size_t i = 0; i < kContributionIndexCount; ++i) {
        if (g.n_pop) g.pop[i] /= double(g.n_pop);
        if (g.n_lead) g.lead[i] /= double(g.n_lead);
        if (g.n_support) g.support[i] /= double(g.n_support);
    }
    return g;
}

std::optional<double> rel_distance(double group_mean, double pop_mean) {
    if (pop_mean == 0.0) return std::nullopt;
    return (group_mean - pop_mean) / std::fabs(pop_mean);
}

std::optional<std::array<double, 2>> percentile_ci(std::vector<double>& values, double level,
                                                   double point) {
    if (values.empty()) return std::nullopt;
    std::sort(values.begin(), values.end());
    double alpha = (1.0 - level) / 2.0;
    double lo = stats::percentile_sorted(values, alpha);
    double hi = stats::percentile_sorted(values, 1.0 - alpha);
    // The interval always brackets the point estimate.
    lo = std::min(lo, point);
    hi = std::max(hi, point);
    return std::array<double, 2>{lo, hi};
}

} // namespace

GroupDistanceReport group_distance_report(const std::vector<ContributionRow>& rows, uint32_t b,
                                          double level, uint64_t seed) {
    if (rows.empty()) throw precondition_error("group_distance_report: no rows");
    if (!(level > 0.0 && level < 1.0))
        throw precondition_error("group_distance_report: level must lie in (0, 1)");

    // Cluster rows by paper, first-appearance order.
    std::vector<std::vector<uint32_t>> clusters;
    {
        std::unordered_map<std::string, size_t> by_paper;
        for (uint32_t ri = 0; ri < rows.size(); ++ri) {
            auto [it, inserted] = by_paper.emplace(rows[ri].paper_id, clusters.size());
            if (inserted) clusters.emplace_back();
            clusters[it->second].push_back(ri);
        }
    }

    std::vector<uint32_t> all_rows(rows.size());
    for (uint32_t i = 0; i < rows.size(); ++i) all_rows[i] = i;
    GroupMeans point = group_means(rows, all_rows);
    if (point.n_lead == 0)
        throw precondition_error("group_distance_report: no lead rows");

    GroupDistanceReport report;
    report.bootstrap_b = b;
    report.level = level;
    report.seed = seed;

    for (size_t i = 0; i < kContributionIndexCount; ++i) {
        auto& s = report.indices[i];
        s.pop_mean = point.pop[i];
        s.lead_mean = point.lead[i];
        if (point.n_support) s.support_mean = point.support[i];
        s.pop_mean_is_zero = point.pop[i] == 0.0;
        s.rel_lead = rel_distance(point.lead[i], point.pop[i]);
        if (point.n_support) s.rel_support = rel_distance(point.support[i], point.pop[i]);
    }

    // Percentile bootstrap over papers; each replicate has its own generator
    // so replicates are order- and thread-independent.
    std::array<std::vector<double>, kContributionIndexCount> lead_samples, support_samples;
    std::vector<uint32_t> resampled;
    for (uint32_t rep = 0; rep < b; ++rep) {
        Rng rng(derive_seed(seed, "bootstrap") + rep);
        resampled.clear();
        for (size_t c = 0; c < clusters.size(); ++c) {
            const auto& cluster = clusters[rng.below(clusters.size())];
            resampled.insert(resampled.end(), cluster.begin(), cluster.end());
        }
        GroupMeans g = group_means(rows, resampled);
        for (size_t i = 0; i < kContributionIndexCount; ++i) {
            if (g.n_lead)
                if (auto rl = rel_distance(g.lead[i], g.pop[i])) lead_samples[i].push_back(*rl);
            if (g.n_support)
                if (auto rs = rel_distance(g.support[i], g.pop[i]))
                    support_samples[i].push_back(*rs);
        }
    }

    for (size_t i = 0; i < kContributionIndexCount; ++i) {
        auto& s = report.indices[i];
        if (s.rel_lead) s.ci_lead = percentile_ci(lead_samples[i], level, *s.rel_lead);
        if (s.rel_support) s.ci_support = percentile_ci(support_samples[i], level, *s.rel_support);
    }
    return report;
}

// ---------------------------------------------------------------------------
// Artifacts

void write_contributions_csv(const std::filesystem::path& path,
                             const std::vector<ContributionRow>& rows,
                             const std::string& manifest_hash) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write " + path.string());
    if (!manifest_hash.empty()) out << "# manifest_hash=" << manifest_hash << '\n';
    out << "paper_id,author_id,role";
    for (const char* name : kContributionIndexNames) out << ',' << name;
    out << '\n';
    char buf[64];
    for (const auto& r : rows) {
        out << r.paper_id << ',' << r.author_id << ',' << role_name(r.role);
        for (double v : r.values) {
            std::snprintf(buf, sizeof buf, "%.10g", v);
            out << ',' << buf;
        }
        out << '\n';
    }
}

void write_group_distances_json(const std::filesystem::path& path,
                                const GroupDistanceReport& report,
                                const std::string& manifest_hash) {
    json indices = json::object();
    for (size_t i = 0; i < kContributionIndexCount; ++i) {
        const auto& s = report.indices[i];
        json entry{{"pop", s.pop_mean},
                   {"lead", s.lead_mean},
                   {"B", report.bootstrap_b},
                   {"level", report.level},
                   {"seed", report.seed},
                   {"pop_mean_is_zero", s.pop_mean_is_zero}};
        entry["support"] = s.support_mean ? json(*s.support_mean) : json(nullptr);
        entry["rel_lead"] = s.rel_lead ? json(*s.rel_lead) : json(nullptr);
        entry["rel_support"] = s.rel_support ? json(*s.rel_support) : json(nullptr);
        entry["ci_lead"] =
            s.ci_lead ? json::array({(*s.ci_lead)[0], (*s.ci_lead)[1]}) : json(nullptr);
        entry["ci_support"] =
            s.ci_support ? json::array({(*s.ci_support)[0], (*s.ci_support)[1]}) : json(nullptr);
        indices[kContributionIndexNames[i]] = std::move(entry);
    }
    json doc{{"indices", std::move(indices)}};
    if (!manifest_hash.empty()) doc["manifest_hash"] = manifest_hash;

    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write " + path.string());
    out << doc.dump(2) << '\n';
}

} // namespace scimet
