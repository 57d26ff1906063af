#pragma once

#include "scimet/corpus.hpp"
#include "scimet/metrics.hpp"
#include "scimet/stats.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace scimet {

enum class Dependent {
    Novelty,
    Developmental,
    LeadProductivity,
    SupportProductivity,
    ImpactShort,
    ImpactLong,
};

inline constexpr std::array<Dependent, 6> kAllDependents = {
    Dependent::Novelty,         Dependent::Developmental, Dependent::LeadProductivity,
    Dependent::SupportProductivity, Dependent::ImpactShort, Dependent::ImpactLong,
};

std::string_view dependent_name(Dependent d);
std::optional<Dependent> parse_dependent(std::string_view name);

inline constexpr std::array<const char*, 8> kRegressorNames = {
    "l_ratio",        "team_size",   "career_age_mean", "career_age_std",
    "career_age_max", "is_funded",   "grant_count",     "grant_amount_musd",
};

struct EconOptions {
    double within_tol = 1e-8;
    int within_max_iter = 1000;
    int min_papers_per_author = 2;
    // log(1 + v) transform for the long-tailed count dependents (productivity
    // and citation windows); novelty and developmental always enter raw.
    bool log1p_counts = true;
    // HC1 by default; author-clustered CR1 standard errors as an option.
    bool cluster_by_author = false;
};

// One (author, paper) observation. grant_amount is in millions to keep the
// design matrix well-conditioned (pure reparameterization).
struct PanelRow {
    std::string author_id;
    std::string field_id;
    std::string paper_id;
    double dependent = 0.0;
    std::array<double, 8> regressors{}; // ordered as kRegressorNames
};

// Row-level dependent injection keyed by (paper_id, author_id); rows without
// an entry are dropped. Used to regress externally supplied outcomes (e.g. a
// generator's planted values) through the standard pipeline.
struct DependentOverride {
    std::unordered_map<std::string, double> values;

    static std::string key(std::string_view paper_id, std::string_view author_id) {
        std::string k(paper_id);
        k.push_back('\x1f');
        k.append(author_id);
        return k;
    }
};

struct BuildPanelResult {
    std::vector<PanelRow> rows;
    uint64_t dropped_undefined_dependent = 0;
};

// One row per (author, paper) for authors with >= min_papers_per_author
// papers in the corpus. `metrics` must be in corpus order.
BuildPanelResult build_panel(const Corpus& corpus, const std::vector<PaperMetrics>& metrics,
                             Dependent dependent, const EconOptions& options = {},
                             const DependentOverride* override_values = nullptr);

struct WithinReport {
    int iterations = 0;
    bool converged = false;
    double final_delta = 0.0;
};

// Alternating group demeaning of every column over one or two fixed-effect
// factors, in place, until the largest absolute cell change in a pass falls
// below tol. Throws Convergence when max_iter passes do not suffice.
WithinReport alternating_demean(Eigen::MatrixXd& data, std::span<const int32_t> factor1,
                                std::span<const int32_t> factor2, double tol, int max_iter);

// Iteratively remove rows whose author or field appears once in the sample
// (they carry no within-variation). Returns kept row indices.
std::vector<uint32_t> drop_singletons(std::span<const int32_t> factor1,
                                      std::span<const int32_t> factor2);

struct DemeanedPanel {
    Eigen::MatrixXd x;
    Eigen::VectorXd y;
    std::vector<uint32_t> kept_rows; // indices into the input rows
    uint64_t singletons_dropped = 0;
    size_t n_authors = 0;
    size_t n_fields = 0;
    WithinReport report;
};

DemeanedPanel demean_panel(const std::vector<PanelRow>& rows, const EconOptions& options = {});

struct OlsFit {
    std::vector<std::string> names; // kept columns
    Eigen::VectorXd beta;
    Eigen::VectorXd se;
    Eigen::VectorXd t;
    Eigen::VectorXd p;
    double r2 = 0.0;
    size_t n = 0;
    size_t rank = 0;
    std::vector<std::string> dropped_collinear;
};

struct OlsOptions {
    // Degrees of freedom absorbed by the within transformation, counted into
    // the HC1 small-sample scale and the t distribution.
    size_t df_absorbed = 0;
    // Cluster ids (one per row) switch the covariance to CR1.
    const std::vector<int32_t>* cluster_ids = nullptr;
};

// Least squares via rank-revealing column-pivoted QR; collinear columns are
// dropped with a warning in the fit. Standard errors are
// heteroskedasticity-consistent (HC1), or CR1 when cluster ids are given.
// R^2 is computed on the demeaned (within) scale.
OlsFit ols_robust(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                  std::vector<std::string> names, const OlsOptions& options = {});

// 100 * (R2_full - R2_restricted) / R2_restricted. Throws Precondition when
// the two fits ran on different samples; nullopt when R2_restricted is 0.
std::optional<double> additional_variance(const OlsFit& full, const OlsFit& restricted);

// Pearson correlation utility (generic tool shared across the suite).
inline stats::PearsonResult pearson(std::span<const double> x, std::span<const double> y) {
    return stats::pearson(x, y);
}

struct RegressionResult {
    std::string dependent;
    std::vector<std::string> coef_names;
    std::vector<double> coef, se, t, p;
    double r2_full = 0.0;
    double r2_restricted = 0.0;
    std::optional<double> additional_variance_pct;
    size_t n_obs = 0;
    uint64_t dropped_undefined_dependent = 0;
    uint64_t dropped_singletons = 0;
    int fe_iterations = 0;
    std::vector<std::string> dropped_collinear;
};

RegressionResult run_regression(const Corpus& corpus, const std::vector<PaperMetrics>& metrics,
                                Dependent dependent, const EconOptions& options = {},
                                const DependentOverride* override_values = nullptr);

// The six fixed-effect regressions; dependents whose panel is empty or too
// small are skipped with a note on stderr.
std::vector<RegressionResult> run_all_regressions(const Corpus& corpus,
                                                  const std::vector<PaperMetrics>& metrics,
                                                  const EconOptions& options = {});

void write_regressions_json(const std::filesystem::path& path,
                            const std::vector<RegressionResult>& results,
                            const EconOptions& options, uint64_t seed,
                            const std::string& manifest_hash = {});

} // namespace scimet
