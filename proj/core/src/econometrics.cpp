#include "scimet/econometrics.hpp"

#include "scimet/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>

namespace scimet {

using nlohmann::json;

std::string_view dependent_name(Dependent d) {
    switch (d) {
        case Dependent::Novelty: return "novelty";
        case Dependent::Developmental: return "developmental";
        case Dependent::LeadProductivity: return "lead_productivity";
        case Dependent::SupportProductivity: return "support_productivity";
        case Dependent::ImpactShort: return "impact_short";
        case Dependent::ImpactLong: return "impact_long";
    }
    return "unknown";
}

std::optional<Dependent> parse_dependent(std::string_view name) {
    for (Dependent d : kAllDependents)
        if (dependent_name(d) == name) return d;
    return std::nullopt;
}

namespace {

bool is_count_dependent(Dependent d) {
    return d == Dependent::LeadProductivity || d == Dependent::SupportProductivity ||
           d == Dependent::ImpactShort || d == Dependent::ImpactLong;
}

std::optional<double> dependent_value(const PaperMetrics& m, Dependent d) {
    switch (d) {
        case Dependent::Novelty: return m.novelty;
        case Dependent::Developmental: return m.developmental;
        case Dependent::LeadProductivity: return m.lead_productivity;
        case Dependent::SupportProductivity: return m.support_productivity;
        case Dependent::ImpactShort: return double(m.impact_short);
        case Dependent::ImpactLong: return double(m.impact_long);
    }
    return std::nullopt;
}

} // namespace

BuildPanelResult build_panel(const Corpus& corpus, const std::vector<PaperMetrics>& metrics,
                             Dependent dependent, const EconOptions& options,
                             const DependentOverride* override_values) {
    if (metrics.size() != corpus.size())
        throw precondition_error("build_panel: metrics table does not match the corpus");

    BuildPanelResult result;
    for (uint32_t p = 0; p < corpus.size(); ++p) {
        auto auth_idxs = corpus.paper_authorships(p);
        if (auth_idxs.empty()) continue;
        const auto& paper = corpus.paper(p);
        const auto& m = metrics[p];
        if (m.paper_id != paper.paper_id)
            throw precondition_error("build_panel: metrics row " + std::to_string(p) +
                                     " is for '" + m.paper_id + "', expected '" +
                                     paper.paper_id + "' (metrics must be in corpus order)");

        std::optional<double> dep;
        if (!override_values) {
            dep = dependent_value(m, dependent);
            if (dep && is_count_dependent(dependent) && options.log1p_counts)
                dep = std::log1p(*dep);
        }

        // Career-age summary over the focal team (population std: the team is
        // the full population of the paper).
        std::vector<double> ages;
        ages.reserve(auth_idxs.size());
        for (uint32_t i : auth_idxs) {
            const auto& a = corpus.authorships()[i];
            auto first = corpus.first_prior_publication_year(a.author_id, paper.year);
            ages.push_back(first ? double(paper.year - *first) : 0.0);
        }
        double age_mean = stats::mean(ages);
        double age_std = std::sqrt(stats::variance_population(ages));
        double age_max = *std::max_element(ages.begin(), ages.end());

        double l_ratio = m.l_ratio.value_or(0.0);
        double team_size = double(auth_idxs.size());

        for (uint32_t i : auth_idxs) {
            const auto& a = corpus.authorships()[i];
            if (corpus.author_paper_count(a.author_id) <
                size_t(options.min_papers_per_author))
                continue;

            std::optional<double> row_dep = dep;
            if (override_values) {
                auto it = override_values->values.find(
                    DependentOverride::key(paper.paper_id, a.author_id));
                if (it != override_values->values.end()) row_dep = it->second;
            }
            if (!row_dep) {
                ++result.dropped_undefined_dependent;
                continue;
            }

            PanelRow row;
            row.author_id = a.author_id;
            row.field_id = paper.field_id;
            row.paper_id = paper.paper_id;
            row.dependent = *row_dep;
            row.regressors = {l_ratio,
                              team_size,
                              age_mean,
                              age_std,
                              age_max,
                              paper.is_funded ? 1.0 : 0.0,
                              double(paper.grant_count),
                              paper.grant_amount / 1e6};
            result.rows.push_back(std::move(row));
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// Within transformation

WithinReport alternating_demean(Eigen::MatrixXd& data, std::span<const int32_t> factor1,
                                std::span<const int32_t> factor2, double tol, int max_iter) {
    const auto n = data.rows();
    if (n < 2) throw precondition_error("alternating_demean: need at least 2 rows");
    if (factor1.size() != size_t(n) || (!factor2.empty() && factor2.size() != size_t(n)))
        throw precondition_error("alternating_demean: factor length mismatch");

    auto group_count = [](std::span<const int32_t> f) {
        int32_t mx = -1;
        for (int32_t g : f) mx = std::max(mx, g);
        return size_t(mx + 1);
    };

    auto demean_by = [&](std::span<const int32_t> f, size_t groups) {
        Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(Eigen::Index(groups), data.cols());
        Eigen::VectorXd counts = Eigen::VectorXd::Zero(Eigen::Index(groups));
        for (Eigen::Index r = 0; r < n; ++r) {
            sums.row(f[size_t(r)]) += data.row(r);
            counts[f[size_t(r)]] += 1.0;
        }
        for (size_t g = 0; g < groups; ++g)
            if (counts[Eigen::Index(g)] > 0) sums.row(Eigen::Index(g)) /= counts[Eigen::Index(g)];
        for (Eigen::Index r = 0; r < n; ++r) data.row(r) -= sums.row(f[size_t(r)]);
    };

    const size_t g1 = group_count(factor1);
    const size_t g2 = factor2.empty() ? 0 : group_count(factor2);

    WithinReport report;
    Eigen::MatrixXd before;
    for (int it = 0; it < max_iter; ++it) {
        before = data;
        demean_by(factor1, g1);
        if (g2) demean_by(factor2, g2);
        report.iterations = it + 1;
        report.final_delta = (data - before).cwiseAbs().maxCoeff();
        if (report.final_delta < tol) {
            report.converged = true;
            return report;
        }
    }
    throw convergence_error("within transformation did not converge after " +
                            std::to_string(max_iter) + " iterations (residual change " +
                            std::to_string(report.final_delta) + ")");
}

std::vector<uint32_t> drop_singletons(std::span<const int32_t> factor1,
                                      std::span<const int32_t> factor2) {
    const size_t n = factor1.size();
    std::vector<bool> kept(n, true);
    bool changed = true;
    while (changed) {
        changed = false;
        std::unordered_map<int32_t, uint32_t> count1, count2;
        for (size_t r = 0; r < n; ++r) {
            if (!kept[r]) continue;
            ++count1[factor1[r]];
            if (!factor2.empty()) ++count2[factor2[r]];
        }
        for (size_t r = 0; r < n; ++r) {
            if (!kept[r]) continue;
            bool single = count1[factor1[r]] == 1 ||
                          (!factor2.empty() && count2[factor2[r]] == 1);
            if (single) {
                kept[r] = false;
                changed = true;
            }
        }
    }
    std::vector<uint32_t> out;
    for (size_t r = 0; r < n; ++r)
        if (kept[r]) out.push_back(uint32_t(r));
    return out;
}

namespace {

// Dense codes 0..G-1 in first-appearance order.
std::vector<int32_t> encode(const std::vector<PanelRow>& rows, const std::vector<uint32_t>& keep,
                            bool author, size_t* n_groups) {
    std::unordered_map<std::string, int32_t> codes;
    std::vector<int32_t> out;
    out.reserve(keep.size());
    for (uint32_t r : keep) {
        const std::string& id = author ? rows[r].author_id : rows[r].field_id;
        auto [it, inserted] = codes.emplace(id, int32_t(codes.size()));
        out.push_back(it->second);
    }
    if (n_groups) *n_groups = codes.size();
    return out;
}

} // namespace

DemeanedPanel demean_panel(const std::vector<PanelRow>& rows, const EconOptions& options) {
    if (rows.size() < 2) throw precondition_error("demean_panel: need at least 2 rows");

    std::vector<uint32_t> all(rows.size());
    std::iota(all.begin(), all.end(), 0u);
    auto f1_all = encode(rows, all, true, nullptr);
    auto f2_all = encode(rows, all, false, nullptr);
    auto kept = drop_singletons(f1_all, f2_all);

    DemeanedPanel panel;
    panel.singletons_dropped = rows.size() - kept.size();
    panel.kept_rows = kept;
    if (kept.size() < 2)
        throw precondition_error("demean_panel: fewer than 2 rows remain after singleton drops");

    auto f1 = encode(rows, kept, true, &panel.n_authors);
    auto f2 = encode(rows, kept, false, &panel.n_fields);

    const size_t p = kRegressorNames.size();
    Eigen::MatrixXd data(Eigen::Index(kept.size()), Eigen::Index(p + 1));
    for (size_t r = 0; r < kept.size(); ++r) {
        const auto& row = rows[kept[r]];
        data(Eigen::Index(r), 0) = row.dependent;
        for (size_t c = 0; c < p; ++c) data(Eigen::Index(r), Eigen::Index(c + 1)) = row.regressors[c];
    }
    panel.report = alternating_demean(data, f1, f2, options.within_tol, options.within_max_iter);
    panel.y = data.col(0);
    panel.x = data.rightCols(Eigen::Index(p));
    return panel;
}

// ---------------------------------------------------------------------------
// Robust least squares

OlsFit ols_robust(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                  std::vector<std::string> names, const OlsOptions& options) {
    const Eigen::Index n = x.rows();
    const Eigen::Index p = x.cols();
    if (y.rows() != n) throw precondition_error("ols_robust: X and y row counts differ");
    if (size_t(p) != names.size()) throw precondition_error("ols_robust: name count mismatch");

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
    qr.setThreshold(1e-10);
    const Eigen::Index rank = qr.rank();
    if (rank == 0) throw precondition_error("ols_robust: design matrix has rank 0");

    OlsFit fit;
    Eigen::MatrixXd xk;
    if (rank < p) {
        auto perm = qr.colsPermutation().indices();
        std::vector<Eigen::Index> kept(perm.data(), perm.data() + rank);
        std::sort(kept.begin(), kept.end());
        std::vector<bool> is_kept(size_t(p), false);
        for (Eigen::Index c : kept) is_kept[size_t(c)] = true;
        for (size_t c = 0; c < size_t(p); ++c)
            if (!is_kept[c]) fit.dropped_collinear.push_back(names[c]);
        xk.resize(n, rank);
        std::vector<std::string> kept_names;
        for (Eigen::Index i = 0; i < rank; ++i) {
            xk.col(i) = x.col(kept[size_t(i)]);
            kept_names.push_back(names[size_t(kept[size_t(i)])]);
        }
        fit.names = std::move(kept_names);
    } else {
        xk = x;
        fit.names = std::move(names);
    }

    const size_t df_model = size_t(rank) + options.df_absorbed;
    if (size_t(n) <= df_model)
        throw precondition_error("ols_robust: n (" + std::to_string(n) +
                                 ") must exceed the model degrees of freedom (" +
                                 std::to_string(df_model) + ")");

    Eigen::HouseholderQR<Eigen::MatrixXd> solver(xk);
    fit.beta = solver.solve(y);
    Eigen::VectorXd resid = y - xk * fit.beta;

    double ssr = resid.squaredNorm();
    double tss = y.squaredNorm(); // within scale: y is demeaned upstream
    fit.r2 = tss > 0.0 ? 1.0 - ssr / tss : 0.0;
    fit.n = size_t(n);
    fit.rank = size_t(rank);

    Eigen::MatrixXd xtx_inv =
        (xk.transpose() * xk).ldlt().solve(Eigen::MatrixXd::Identity(rank, rank));

    Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(rank, rank);
    double dof = double(n) - double(df_model);
    double t_df;
    if (options.cluster_ids) {
        const auto& cl = *options.cluster_ids;
        if (cl.size() != size_t(n))
            throw precondition_error("ols_robust: cluster id count mismatch");
        std::unordered_map<int32_t, Eigen::VectorXd> sums;
        for (Eigen::Index i = 0; i < n; ++i) {
            auto [it, inserted] = sums.emplace(cl[size_t(i)], Eigen::VectorXd::Zero(rank));
            it->second += resid[i] * xk.row(i).transpose();
        }
        for (const auto& [g, s] : sums) meat += s * s.transpose();
        double ng = double(sums.size());
        if (ng < 2) throw precondition_error("ols_robust: need at least 2 clusters");
        // CR1 small-sample scale
        meat *= (ng / (ng - 1.0)) * ((double(n) - 1.0) / dof);
        t_df = ng - 1.0;
    } else {
        for (Eigen::Index i = 0; i < n; ++i)
            meat += resid[i] * resid[i] * xk.row(i).transpose() * xk.row(i);
        meat *= double(n) / dof; // HC1
        t_df = dof;
    }

    Eigen::MatrixXd cov = xtx_inv * meat * xtx_inv;
    fit.se.resize(rank);
    fit.t.resize(rank);
    fit.p.resize(rank);
    for (Eigen::Index i = 0; i < rank; ++i) {
        fit.se[i] = std::sqrt(std::max(0.0, cov(i, i)));
        fit.t[i] = fit.se[i] > 0.0 ? fit.beta[i] / fit.se[i] : 0.0;
        fit.p[i] = stats::t_two_sided_p(fit.t[i], t_df);
    }
    return fit;
}

std::optional<double> additional_variance(const OlsFit& full, const OlsFit& restricted) {
    if (full.n != restricted.n)
        throw precondition_error("additional_variance: fits ran on different samples (" +
                                 std::to_string(full.n) + " vs " + std::to_string(restricted.n) +
                                 " rows)");
    if (restricted.r2 == 0.0) return std::nullopt;
    return 100.0 * (full.r2 - restricted.r2) / restricted.r2;
}

// ---------------------------------------------------------------------------
// Driver

namespace {

std::vector<int32_t> encode_cluster_ids(const std::vector<PanelRow>& rows,
                                        const std::vector<uint32_t>& kept) {
    std::unordered_map<std::string, int32_t> codes;
    std::vector<int32_t> out;
    out.reserve(kept.size());
    for (uint32_t r : kept) {
        auto [it, inserted] = codes.emplace(rows[r].author_id, int32_t(codes.size()));
        out.push_back(it->second);
    }
    return out;
}

} // namespace

RegressionResult run_regression(const Corpus& corpus, const std::vector<PaperMetrics>& metrics,
                                Dependent dependent, const EconOptions& options,
                                const DependentOverride* override_values) {
    auto built = build_panel(corpus, metrics, dependent, options, override_values);
    DemeanedPanel panel = demean_panel(built.rows, options);

    std::vector<int32_t> clusters;
    OlsOptions ols_opts;
    // Group means absorb (G1 - 1) + (G2 - 1) + 1 parameters.
    ols_opts.df_absorbed = panel.n_authors + panel.n_fields - 1;
    if (options.cluster_by_author) {
        clusters = encode_cluster_ids(built.rows, panel.kept_rows);
        ols_opts.cluster_ids = &clusters;
    }

    std::vector<std::string> names(kRegressorNames.begin(), kRegressorNames.end());
    OlsFit full = ols_robust(panel.x, panel.y, names, ols_opts);

    Eigen::MatrixXd x_restricted = panel.x.rightCols(panel.x.cols() - 1);
    std::vector<std::string> restricted_names(kRegressorNames.begin() + 1, kRegressorNames.end());
    OlsFit restricted = ols_robust(x_restricted, panel.y, restricted_names, ols_opts);

    RegressionResult res;
    res.dependent = std::string(dependent_name(dependent));
    res.coef_names = full.names;
    res.coef.assign(full.beta.data(), full.beta.data() + full.beta.size());
    res.se.assign(full.se.data(), full.se.data() + full.se.size());
    res.t.assign(full.t.data(), full.t.data() + full.t.size());
    res.p.assign(full.p.data(), full.p.data() + full.p.size());
    res.r2_full = full.r2;
    res.r2_restricted = restricted.r2;
    res.additional_variance_pct = additional_variance(full, restricted);
    res.n_obs = full.n;
    res.dropped_undefined_dependent = built.dropped_undefined_dependent;
    res.dropped_singletons = panel.singletons_dropped;
    res.fe_iterations = panel.report.iterations;
    res.dropped_collinear = full.dropped_collinear;
    return res;
}

std::vector<RegressionResult> run_all_regressions(const Corpus& corpus,
                                                  const std::vector<PaperMetrics>& metrics,
                                                  const EconOptions& options) {
    std::vector<RegressionResult> out;
    for (Dependent d : kAllDependents) {
        try {
            out.push_back(run_regression(corpus, metrics, d, options));
        } catch (const Error& e) {
            std::cerr << "regression '" << dependent_name(d) << "' skipped: " << e.what()
                      << '\n';
        }
    }
    return out;
}

void write_regressions_json(const std::filesystem::path& path,
                            const std::vector<RegressionResult>& results,
                            const EconOptions& options, uint64_t seed,
                            const std::string& manifest_hash) {
    json arr = json::array();
    for (const auto& r : results) {
        json coeffs = json::object();
        for (size_t i = 0; i < r.coef_names.size(); ++i) {
            coeffs[r.coef_names[i]] = {{"coef", r.coef[i]},
                                       {"se", r.se[i]},
                                       {"t", r.t[i]},
                                       {"p", r.p[i]}};
        }
        json entry{{"dependent", r.dependent},
                   {"coefficients", std::move(coeffs)},
                   {"r2_full", r.r2_full},
                   {"r2_restricted", r.r2_restricted},
                   {"n_obs", r.n_obs},
                   {"dropped_undefined_dependent", r.dropped_undefined_dependent},
                   {"dropped_singletons", r.dropped_singletons},
                   {"fe_iterations", r.fe_iterations},
                   {"dropped_collinear", r.dropped_collinear}};
        entry["additional_variance_pct"] =
            r.additional_variance_pct ? json(*r.additional_variance_pct) : json(nullptr);
        arr.push_back(std::move(entry));
    }
    json doc{{"results", std::move(arr)},
             {"config",
              {{"within_tol", options.within_tol},
               {"within_max_iter", options.within_max_iter},
               {"min_papers_per_author", options.min_papers_per_author},
               {"log1p_counts", options.log1p_counts},
               {"cluster_by_author", options.cluster_by_author},
               {"se_type", options.cluster_by_author ? "CR1" : "HC1"},
               {"seed", seed}}}};
    if (!manifest_hash.empty()) doc["manifest_hash"] = manifest_hash;

    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write " + path.string());
    out << doc.dump(2) << '\n';
}

} // namespace scimet
