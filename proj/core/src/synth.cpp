#include "scimet/synth.hpp"

#include "scimet/error.hpp"
#include "scimet/rng.hpp"
#include "scimet/stats.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

namespace scimet {

using nlohmann::json;

void GeneratorConfig::check() const {
    if (year_min > year_max) throw config_error("synth: year_min exceeds year_max");
    if (n_papers == 0) return; // empty corpus is valid regardless of the rest
    if (n_authors == 0) throw config_error("synth: n_authors must be positive");
    if (n_keywords == 0) throw config_error("synth: n_keywords must be positive");
    if (n_fields == 0) throw config_error("synth: n_fields must be positive");
    if (n_clusters == 0 || n_clusters > n_keywords)
        throw config_error("synth: n_clusters must lie in [1, n_keywords]");
    if (keywords_min < 1 || keywords_min > keywords_max)
        throw config_error("synth: keyword count range is invalid");
    if (keywords_max > n_keywords)
        throw config_error("synth: keywords_max exceeds n_keywords");
    if (team_min < 1 || team_min > team_max)
        throw config_error("synth: team size range is invalid");
    if (team_max > n_authors)
        throw config_error("synth: team_max (" + std::to_string(team_max) +
                           ") exceeds n_authors (" + std::to_string(n_authors) + ")");
    if (refs_min > refs_max) throw config_error("synth: reference count range is invalid");
    if (within_cluster_rate < 0.0 || within_cluster_rate > 1.0)
        throw config_error("synth: within_cluster_rate must lie in [0, 1]");
    if (attachment_preference < 0.0 || attachment_preference > 1.0)
        throw config_error("synth: attachment_preference must lie in [0, 1]");
    if (tall_start < 0.0 || tall_start > 1.0 || tall_end < 0.0 || tall_end > 1.0)
        throw config_error("synth: planted Tall fractions must lie in [0, 1]");
    if (funded_fraction < 0.0 || funded_fraction > 1.0)
        throw config_error("synth: funded_fraction must lie in [0, 1]");
    if (trend_bucket_years < 1) throw config_error("synth: trend_bucket_years must be >= 1");
    if (planted && planted->snr <= 0.0) throw config_error("synth: snr must be positive");
}

namespace {

std::string keyword_id(uint32_t i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "kw%05u", i);
    return buf;
}

std::string paper_id_str(uint32_t i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "p%07u", i);
    return buf;
}

std::string author_id_str(uint32_t i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "a%06u", i);
    return buf;
}

std::string field_id_str(uint32_t i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "f%02u", i);
    return buf;
}

// Mean squared residual of v after its best linear fit on [1, controls],
// solved by plain normal equations with partial pivoting. Tiny pivots mark a
// degenerate column whose coefficient is pinned to zero.
double residual_variance_on_controls(const std::vector<double>& v,
                                     const std::vector<std::array<double, 4>>& controls) {
    constexpr size_t p = 5; // intercept + 4 controls
    const size_t n = v.size();
    double a[p][p + 1] = {};
    for (size_t r = 0; r < n; ++r) {
        double x[p] = {1.0, controls[r][0], controls[r][1], controls[r][2], controls[r][3]};
        for (size_t i = 0; i < p; ++i) {
            for (size_t j = 0; j < p; ++j) a[i][j] += x[i] * x[j];
            a[i][p] += x[i] * v[r];
        }
    }
    size_t order[p] = {0, 1, 2, 3, 4};
    for (size_t col = 0; col < p; ++col) {
        size_t piv = col;
        for (size_t r = col + 1; r < p; ++r)
            if (std::fabs(a[order[r]][col]) > std::fabs(a[order[piv]][col])) piv = r;
        std::swap(order[col], order[piv]);
        double pivot = a[order[col]][col];
        if (std::fabs(pivot) < 1e-10) continue;
        for (size_t r = 0; r < p; ++r) {
            if (r == col) continue;
            double f = a[order[r]][col] / pivot;
            for (size_t j = col; j <= p; ++j) a[order[r]][j] -= f * a[order[col]][j];
        }
    }
    double coef[p];
    for (size_t i = 0; i < p; ++i) {
        double pivot = a[order[i]][i];
        coef[i] = std::fabs(pivot) < 1e-10 ? 0.0 : a[order[i]][p] / pivot;
    }
    double ss = 0.0;
    for (size_t r = 0; r < n; ++r) {
        double fit = coef[0] + coef[1] * controls[r][0] + coef[2] * controls[r][1] +
                     coef[3] * controls[r][2] + coef[4] * controls[r][3];
        double resid = v[r] - fit;
        ss += resid * resid;
    }
    return n > 0 ? ss / double(n) : 0.0;
}

struct DraftPaper {
    int year;
    uint32_t field;
    std::vector<uint32_t> keyword_ids;
    std::vector<uint32_t> team;  // author indices, position order
    uint32_t n_lead;
    uint32_t corresponding_pos;  // 1-based position
    bool tall;
    double tall_target;
    bool funded;
    int grant_count;
    double grant_amount;
};

} // namespace

SynthResult generate(const GeneratorConfig& config) {
    config.check();

    SynthResult result;
    SynthTruth& truth = result.truth;
    truth.seed = config.seed;
    truth.trend_bucket_years = config.trend_bucket_years;

    for (uint32_t k = 0; k < config.n_keywords; ++k)
        truth.keyword_cluster.emplace(keyword_id(k), k % config.n_clusters);

    if (config.n_papers == 0) {
        result.corpus = Corpus({}, {});
        return result;
    }

    // Keywords per cluster (round-robin assignment).
    std::vector<std::vector<uint32_t>> cluster_members(config.n_clusters);
    for (uint32_t k = 0; k < config.n_keywords; ++k)
        cluster_members[k % config.n_clusters].push_back(k);

    Rng rng(derive_seed(config.seed, "synth-corpus"));

    const double year_span = std::max(1, config.year_max - config.year_min);
    auto tall_target_at = [&](int year) {
        if (config.year_max == config.year_min) return config.tall_start;
        return config.tall_start +
               (config.tall_end - config.tall_start) * double(year - config.year_min) / year_span;
    };

    std::vector<DraftPaper> drafts;
    drafts.reserve(config.n_papers);
    for (uint32_t p = 0; p < config.n_papers; ++p) {
        DraftPaper d;
        d.year = int(rng.between(config.year_min, config.year_max));
        d.field = uint32_t(rng.below(config.n_fields));

        // Keywords: a home cluster plus cross-cluster leakage.
        uint32_t m = uint32_t(rng.between(config.keywords_min, config.keywords_max));
        uint32_t home = uint32_t(rng.below(config.n_clusters));
        std::vector<uint32_t> kws;
        int tries = 0;
        while (kws.size() < m && tries < 200) {
            ++tries;
            uint32_t kw;
            if (rng.bernoulli(config.within_cluster_rate) && !cluster_members[home].empty()) {
                const auto& mem = cluster_members[home];
                kw = mem[rng.below(mem.size())];
            } else {
                kw = uint32_t(rng.below(config.n_keywords));
            }
            if (std::find(kws.begin(), kws.end(), kw) == kws.end()) kws.push_back(kw);
        }
        d.keyword_ids = std::move(kws);

        // Team with the planted hierarchy class.
        uint32_t n = uint32_t(rng.between(config.team_min, config.team_max));
        auto team = rng.sample_without_replacement(config.n_authors, n);
        d.team.assign(team.begin(), team.end());
        d.tall_target = tall_target_at(d.year);
        bool want_tall = rng.bernoulli(d.tall_target) && n >= 2;
        if (want_tall)
            d.n_lead = uint32_t(rng.between(1, n / 2)); // l_ratio <= 0.5
        else
            d.n_lead = uint32_t(rng.between(int64_t(n / 2) + 1, n)); // l_ratio > 0.5
        d.tall = (double(d.n_lead) / double(n)) <= 0.5;
        d.corresponding_pos = uint32_t(rng.between(1, n));

        d.funded = rng.bernoulli(config.funded_fraction);
        d.grant_count = d.funded ? int(rng.between(1, 3)) : 0;
        d.grant_amount = d.funded ? std::floor(rng.uniform(5e4, 2e6)) : 0.0;
        drafts.push_back(std::move(d));
    }

    // Year order makes "earlier papers" a prefix for citation generation.
    std::stable_sort(drafts.begin(), drafts.end(),
                     [](const DraftPaper& a, const DraftPaper& b) { return a.year < b.year; });

    // References: preferential attachment over strictly earlier papers.
    std::vector<std::vector<uint32_t>> refs(drafts.size());
    {
        std::vector<uint32_t> pool; // one entry per received citation
        size_t prefix_end = 0;      // papers with year < current paper's year
        std::vector<uint32_t> chosen;
        for (size_t t = 0; t < drafts.size(); ++t) {
            while (prefix_end < t && drafts[prefix_end].year < drafts[t].year) ++prefix_end;
            size_t available = prefix_end;
            uint32_t want = uint32_t(rng.between(config.refs_min, config.refs_max));
            want = std::min<uint32_t>(want, uint32_t(available));
            chosen.clear();
            int attempts = 0;
            while (chosen.size() < want && attempts < int(want) * 4 + 32) {
                ++attempts;
                uint32_t target;
                if (!pool.empty() && rng.bernoulli(config.attachment_preference)) {
                    target = pool[rng.below(pool.size())];
                    if (target >= available) continue; // same-year entry, not yet citable
                } else {
                    target = uint32_t(rng.below(available));
                }
                if (std::find(chosen.begin(), chosen.end(), target) == chosen.end())
                    chosen.push_back(target);
            }
            refs[t] = chosen;
            for (uint32_t c : chosen) pool.push_back(c);
        }
    }

    // Assemble records; paper ids follow year order.
    std::vector<PaperRecord> papers;
    papers.reserve(drafts.size());
    std::vector<AuthorshipRecord> authorships;
    for (size_t t = 0; t < drafts.size(); ++t) {
        const auto& d = drafts[t];
        PaperRecord rec;
        rec.paper_id = paper_id_str(uint32_t(t));
        rec.year = d.year;
        rec.field_id = field_id_str(d.field);
        for (uint32_t kw : d.keyword_ids) rec.keywords.push_back(keyword_id(kw));
        for (uint32_t r : refs[t]) rec.references.push_back(paper_id_str(r));
        std::sort(rec.keywords.begin(), rec.keywords.end());
        std::sort(rec.references.begin(), rec.references.end());
        rec.is_funded = d.funded;
        rec.grant_count = d.grant_count;
        rec.grant_amount = d.grant_amount;
        papers.push_back(std::move(rec));

        for (uint32_t pos = 0; pos < d.team.size(); ++pos) {
            AuthorshipRecord a;
            a.paper_id = paper_id_str(uint32_t(t));
            a.author_id = author_id_str(d.team[pos]);
            a.position = int(pos) + 1;
            a.is_corresponding = (pos + 1 == d.corresponding_pos);
            a.role = pos < d.n_lead ? Role::Lead : Role::Support;
            authorships.push_back(std::move(a));
        }
    }

    // Trend truth per bucket.
    {
        std::map<int, std::array<double, 3>> buckets; // start -> {target sum, tall count, n}
        for (const auto& d : drafts) {
            int start = (d.year / config.trend_bucket_years) * config.trend_bucket_years;
            auto& b = buckets[start];
            b[0] += d.tall_target;
            b[1] += d.tall ? 1.0 : 0.0;
            b[2] += 1.0;
        }
        for (const auto& [start, b] : buckets)
            truth.trend.push_back({start, b[0] / b[2], b[1] / b[2], uint32_t(b[2])});
    }

    // Planted row-level fixed-effect model.
    if (config.planted) {
        const PlantedModel& pm = *config.planted;
        Rng prng(derive_seed(config.seed, "synth-planted"));
        std::vector<double> author_effect(config.n_authors);
        for (auto& v : author_effect) v = prng.normal(0.0, pm.sigma_author);
        std::vector<double> field_effect(config.n_fields);
        for (auto& v : field_effect) v = prng.normal(0.0, pm.sigma_field);

        // Row-level variance of the non-FE systematic component decides the
        // noise scale and the expected within-R2 values.
        std::vector<double> sys_rows, l_rows;
        std::vector<std::array<double, 4>> control_rows;
        for (const auto& d : drafts) {
            double l_ratio = double(d.n_lead) / double(d.team.size());
            std::array<double, 4> c{double(d.team.size()), d.funded ? 1.0 : 0.0,
                                    double(d.grant_count), d.grant_amount / 1e6};
            double controls = pm.gamma_team_size * c[0] + pm.gamma_is_funded * c[1] +
                              pm.gamma_grant_count * c[2] + pm.gamma_grant_amount_musd * c[3];
            double sys = pm.beta_l_ratio * l_ratio + controls;
            for (size_t i = 0; i < d.team.size(); ++i) {
                sys_rows.push_back(sys);
                l_rows.push_back(l_ratio);
                control_rows.push_back(c);
            }
        }
        double var_sys = stats::variance_population(sys_rows);
        double sigma_noise = std::sqrt(var_sys / pm.snr);

        // Restricted-model target: the controls also absorb the projection of
        // l_ratio onto their span (l_ratio is not independent of team size),
        // so R2_restricted = [Var(sys) - beta^2 Var(l | controls)] / Var(y).
        double var_l_resid = residual_variance_on_controls(l_rows, control_rows);

        truth.has_planted = true;
        truth.beta_l_ratio = pm.beta_l_ratio;
        truth.gamma_team_size = pm.gamma_team_size;
        truth.gamma_is_funded = pm.gamma_is_funded;
        truth.gamma_grant_count = pm.gamma_grant_count;
        truth.gamma_grant_amount_musd = pm.gamma_grant_amount_musd;
        truth.sigma_noise = sigma_noise;
        double var_total = var_sys + sigma_noise * sigma_noise;
        double var_restricted =
            var_sys - pm.beta_l_ratio * pm.beta_l_ratio * var_l_resid;
        truth.r2_full_expected = var_total > 0 ? var_sys / var_total : 0.0;
        truth.r2_restricted_expected =
            var_total > 0 ? std::max(0.0, var_restricted) / var_total : 0.0;
        truth.additional_variance_expected_pct =
            truth.r2_restricted_expected > 0
                ? 100.0 * (truth.r2_full_expected - truth.r2_restricted_expected) /
                      truth.r2_restricted_expected
                : 0.0;

        size_t row = 0;
        for (size_t t = 0; t < drafts.size(); ++t) {
            const auto& d = drafts[t];
            std::string pid = paper_id_str(uint32_t(t));
            truth.expected_dependent.emplace(pid, sys_rows[row] + field_effect[d.field]);
            for (uint32_t a : d.team) {
                double y = sys_rows[row] + field_effect[d.field] + author_effect[a] +
                           prng.normal(0.0, sigma_noise);
                truth.planted_rows.values.emplace(
                    DependentOverride::key(pid, author_id_str(a)), y);
                ++row;
            }
        }
    }

    result.corpus = Corpus(std::move(papers), std::move(authorships));
    return result;
}

// ---------------------------------------------------------------------------
// Truth persistence

void write_truth_json(const std::filesystem::path& path, const SynthTruth& truth,
                      const std::string& manifest_hash) {
    json doc{{"schema_version", truth.schema_version},
             {"seed", truth.seed},
             {"trend_bucket_years", truth.trend_bucket_years}};
    if (!manifest_hash.empty()) doc["manifest_hash"] = manifest_hash;

    json clusters = json::object();
    for (const auto& [kw, c] : truth.keyword_cluster) clusters[kw] = c;
    doc["keyword_cluster"] = std::move(clusters);

    json trend = json::array();
    for (const auto& t : truth.trend)
        trend.push_back({{"bucket_start", t.bucket_start},
                         {"target_fraction", t.target_fraction},
                         {"empirical_fraction", t.empirical_fraction},
                         {"n_papers", t.n_papers}});
    doc["trend"] = std::move(trend);

    if (truth.has_planted) {
        json rows = json::object();
        for (const auto& [key, y] : truth.planted_rows.values) {
            size_t sep = key.find('\x1f');
            rows[key.substr(0, sep) + "/" + key.substr(sep + 1)] = y;
        }
        json expected = json::object();
        for (const auto& [pid, v] : truth.expected_dependent) expected[pid] = v;
        doc["planted_model"] = {
            {"beta_l_ratio", truth.beta_l_ratio},
            {"gamma_team_size", truth.gamma_team_size},
            {"gamma_is_funded", truth.gamma_is_funded},
            {"gamma_grant_count", truth.gamma_grant_count},
            {"gamma_grant_amount_musd", truth.gamma_grant_amount_musd},
            {"sigma_noise", truth.sigma_noise},
            {"r2_full_expected", truth.r2_full_expected},
            {"r2_restricted_expected", truth.r2_restricted_expected},
            {"additional_variance_expected_pct", truth.additional_variance_expected_pct},
            {"row_outcomes", std::move(rows)},
            {"expected_dependent", std::move(expected)},
        };
    }

    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write " + path.string());
    out << doc.dump() << '\n';
}

SynthTruth read_truth_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw validation_error(path.string() + ": malformed truth file: " + e.what());
    }

    SynthTruth truth;
    truth.schema_version = doc.value("schema_version", 1);
    truth.seed = doc.value("seed", uint64_t(0));
    truth.trend_bucket_years = doc.value("trend_bucket_years", 5);
    if (doc.contains("keyword_cluster"))
        for (const auto& [kw, c] : doc["keyword_cluster"].items())
            truth.keyword_cluster.emplace(kw, c.get<uint32_t>());
    if (doc.contains("trend"))
        for (const auto& t : doc["trend"])
            truth.trend.push_back({t["bucket_start"].get<int>(),
                                   t["target_fraction"].get<double>(),
                                   t["empirical_fraction"].get<double>(),
                                   t["n_papers"].get<uint32_t>()});
    if (doc.contains("planted_model")) {
        const auto& pm = doc["planted_model"];
        truth.has_planted = true;
        truth.beta_l_ratio = pm["beta_l_ratio"].get<double>();
        truth.gamma_team_size = pm["gamma_team_size"].get<double>();
        truth.gamma_is_funded = pm["gamma_is_funded"].get<double>();
        truth.gamma_grant_count = pm["gamma_grant_count"].get<double>();
        truth.gamma_grant_amount_musd = pm["gamma_grant_amount_musd"].get<double>();
        truth.sigma_noise = pm["sigma_noise"].get<double>();
        truth.r2_full_expected = pm["r2_full_expected"].get<double>();
        truth.r2_restricted_expected = pm["r2_restricted_expected"].get<double>();
        truth.additional_variance_expected_pct =
            pm["additional_variance_expected_pct"].get<double>();
        for (const auto& [key, y] : pm["row_outcomes"].items()) {
            size_t sep = key.find('/');
            truth.planted_rows.values.emplace(
                DependentOverride::key(key.substr(0, sep), key.substr(sep + 1)),
                y.get<double>());
        }
        for (const auto& [pid, v] : pm["expected_dependent"].items())
            truth.expected_dependent.emplace(pid, v.get<double>());
    }
    return truth;
}

SynthResult generate_files(const GeneratorConfig& config, const std::filesystem::path& out_dir,
                           const std::string& manifest_hash) {
    SynthResult result = generate(config);
    std::filesystem::create_directories(out_dir);
    result.corpus.write_papers_jsonl(out_dir / "papers.jsonl");
    result.corpus.write_authorships_jsonl(out_dir / "authorships.jsonl");
    write_truth_json(out_dir / "truth.json", result.truth, manifest_hash);
    return result;
}

} // namespace scimet
