#include "pipeline.hpp"

#include "scimet/error.hpp"
#include "scimet/rng.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace scimet::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kToolName = "scimet";
constexpr const char* kToolVersion = "0.1.0";

template <typename T>
T get_field(const json& j, const char* key, T fallback) {
    auto it = j.find(key);
    if (it == j.end()) return fallback;
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        throw config_error(std::string("config: field '") + key + "' has the wrong type");
    }
}

} // namespace

PipelineConfig PipelineConfig::load_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw config_error("config parse error in " + path.string() + ": " + e.what());
    }
    if (!j.is_object()) throw config_error("config root must be a JSON object");

    PipelineConfig cfg;
    cfg.seed = get_field<uint64_t>(j, "seed", 0);
    if (j.contains("inputs")) {
        const auto& in_j = j["inputs"];
        cfg.papers_path = get_field<std::string>(in_j, "papers", "");
        cfg.authorships_path = get_field<std::string>(in_j, "authorships", "");
    }
    cfg.output_dir = get_field<std::string>(j, "output_dir", "out");

    if (j.contains("load")) {
        const auto& l = j["load"];
        cfg.load.min_year = get_field<int>(l, "min_year", cfg.load.min_year);
        cfg.load.max_year = get_field<int>(l, "max_year", cfg.load.max_year);
    }
    if (j.contains("train")) {
        const auto& t = j["train"];
        cfg.train.dimension = get_field<int>(t, "dimension", cfg.train.dimension);
        cfg.train.negatives = get_field<int>(t, "negatives", cfg.train.negatives);
        cfg.train.epochs = get_field<int>(t, "epochs", cfg.train.epochs);
        cfg.train.initial_lr = get_field<double>(t, "initial_lr", cfg.train.initial_lr);
        cfg.train.final_lr = get_field<double>(t, "final_lr", cfg.train.final_lr);
        cfg.train.subsample_threshold =
            get_field<double>(t, "subsample_threshold", cfg.train.subsample_threshold);
        cfg.train.smoothing_exponent =
            get_field<double>(t, "smoothing_exponent", cfg.train.smoothing_exponent);
        cfg.train.workers = get_field<int>(t, "workers", cfg.train.workers);
    }
    cfg.train.seed = derive_seed(cfg.seed, "train");

    if (j.contains("metrics")) {
        const auto& m = j["metrics"];
        cfg.metrics.strict_subsequence =
            get_field<bool>(m, "strict_subsequence", cfg.metrics.strict_subsequence);
        cfg.metrics.boundary_half_is_tall =
            get_field<bool>(m, "boundary_half_is_tall", cfg.metrics.boundary_half_is_tall);
    }
    if (j.contains("contributions")) {
        const auto& c = j["contributions"];
        cfg.contrib.jaccard_overlap =
            get_field<bool>(c, "jaccard_overlap", cfg.contrib.jaccard_overlap);
        cfg.contrib.include_same_year =
            get_field<bool>(c, "include_same_year", cfg.contrib.include_same_year);
        cfg.bootstrap_b = get_field<uint32_t>(c, "bootstrap_b", cfg.bootstrap_b);
        cfg.ci_level = get_field<double>(c, "ci_level", cfg.ci_level);
    }
    if (j.contains("econometrics")) {
        const auto& e = j["econometrics"];
        cfg.econ.within_tol = get_field<double>(e, "within_tol", cfg.econ.within_tol);
        cfg.econ.within_max_iter = get_field<int>(e, "within_max_iter", cfg.econ.within_max_iter);
        cfg.econ.min_papers_per_author =
            get_field<int>(e, "min_papers_per_author", cfg.econ.min_papers_per_author);
        cfg.econ.log1p_counts = get_field<bool>(e, "log1p_counts", cfg.econ.log1p_counts);
        cfg.econ.cluster_by_author =
            get_field<bool>(e, "cluster_by_author", cfg.econ.cluster_by_author);
    }
    if (j.contains("trend")) {
        const auto& t = j["trend"];
        cfg.trend_bucket_years = get_field<int>(t, "bucket_years", cfg.trend_bucket_years);
        cfg.trend_funded_only = get_field<bool>(t, "funded_only", cfg.trend_funded_only);
    }
    if (j.contains("synth")) {
        const auto& s = j["synth"];
        auto& g = cfg.synth;
        g.n_papers = get_field<uint32_t>(s, "n_papers", g.n_papers);
        g.n_authors = get_field<uint32_t>(s, "n_authors", g.n_authors);
        g.n_keywords = get_field<uint32_t>(s, "n_keywords", g.n_keywords);
        g.n_fields = get_field<uint32_t>(s, "n_fields", g.n_fields);
        g.year_min = get_field<int>(s, "year_min", g.year_min);
        g.year_max = get_field<int>(s, "year_max", g.year_max);
        g.n_clusters = get_field<uint32_t>(s, "n_clusters", g.n_clusters);
        g.within_cluster_rate = get_field<double>(s, "within_cluster_rate", g.within_cluster_rate);
        g.keywords_min = get_field<uint32_t>(s, "keywords_min", g.keywords_min);
        g.keywords_max = get_field<uint32_t>(s, "keywords_max", g.keywords_max);
        g.team_min = get_field<uint32_t>(s, "team_min", g.team_min);
        g.team_max = get_field<uint32_t>(s, "team_max", g.team_max);
        g.tall_start = get_field<double>(s, "tall_start", g.tall_start);
        g.tall_end = get_field<double>(s, "tall_end", g.tall_end);
        g.trend_bucket_years = get_field<int>(s, "trend_bucket_years", g.trend_bucket_years);
        g.refs_min = get_field<uint32_t>(s, "refs_min", g.refs_min);
        g.refs_max = get_field<uint32_t>(s, "refs_max", g.refs_max);
        g.attachment_preference =
            get_field<double>(s, "attachment_preference", g.attachment_preference);
        g.funded_fraction = get_field<double>(s, "funded_fraction", g.funded_fraction);
        if (s.contains("planted")) {
            const auto& p = s["planted"];
            PlantedModel pm;
            pm.beta_l_ratio = get_field<double>(p, "beta_l_ratio", pm.beta_l_ratio);
            pm.gamma_team_size = get_field<double>(p, "gamma_team_size", pm.gamma_team_size);
            pm.gamma_is_funded = get_field<double>(p, "gamma_is_funded", pm.gamma_is_funded);
            pm.gamma_grant_count = get_field<double>(p, "gamma_grant_count", pm.gamma_grant_count);
            pm.gamma_grant_amount_musd =
                get_field<double>(p, "gamma_grant_amount_musd", pm.gamma_grant_amount_musd);
            pm.sigma_author = get_field<double>(p, "sigma_author", pm.sigma_author);
            pm.sigma_field = get_field<double>(p, "sigma_field", pm.sigma_field);
            pm.snr = get_field<double>(p, "snr", pm.snr);
            g.planted = pm;
        }
    }
    cfg.synth.seed = derive_seed(cfg.seed, "synth");
    return cfg;
}

json PipelineConfig::echo() const {
    json j{{"seed", seed},
           {"inputs", {{"papers", papers_path.string()}, {"authorships", authorships_path.string()}}},
           {"output_dir", output_dir.string()},
           {"load", {{"min_year", load.min_year}, {"max_year", load.max_year}}},
           {"train",
            {{"dimension", train.dimension},
             {"negatives", train.negatives},
             {"epochs", train.epochs},
             {"initial_lr", train.initial_lr},
             {"final_lr", train.final_lr},
             {"subsample_threshold", train.subsample_threshold},
             {"smoothing_exponent", train.smoothing_exponent},
             {"workers", train.workers},
             {"seed", train.seed}}},
           {"metrics",
            {{"strict_subsequence", metrics.strict_subsequence},
             {"boundary_half_is_tall", metrics.boundary_half_is_tall}}},
           {"contributions",
            {{"jaccard_overlap", contrib.jaccard_overlap},
             {"include_same_year", contrib.include_same_year},
             {"bootstrap_b", bootstrap_b},
             {"ci_level", ci_level}}},
           {"econometrics",
            {{"within_tol", econ.within_tol},
             {"within_max_iter", econ.within_max_iter},
             {"min_papers_per_author", econ.min_papers_per_author},
             {"log1p_counts", econ.log1p_counts},
             {"cluster_by_author", econ.cluster_by_author}}},
           {"trend", {{"bucket_years", trend_bucket_years}, {"funded_only", trend_funded_only}}},
           {"synth",
            {{"seed", synth.seed},
             {"n_papers", synth.n_papers},
             {"n_authors", synth.n_authors},
             {"n_keywords", synth.n_keywords},
             {"n_fields", synth.n_fields},
             {"year_min", synth.year_min},
             {"year_max", synth.year_max},
             {"n_clusters", synth.n_clusters},
             {"within_cluster_rate", synth.within_cluster_rate},
             {"keywords_min", synth.keywords_min},
             {"keywords_max", synth.keywords_max},
             {"team_min", synth.team_min},
             {"team_max", synth.team_max},
             {"tall_start", synth.tall_start},
             {"tall_end", synth.tall_end},
             {"trend_bucket_years", synth.trend_bucket_years},
             {"refs_min", synth.refs_min},
             {"refs_max", synth.refs_max},
             {"attachment_preference", synth.attachment_preference},
             {"funded_fraction", synth.funded_fraction}}}};
    if (synth.planted) {
        const auto& pm = *synth.planted;
        j["synth"]["planted"] = {{"beta_l_ratio", pm.beta_l_ratio},
                                 {"gamma_team_size", pm.gamma_team_size},
                                 {"gamma_is_funded", pm.gamma_is_funded},
                                 {"gamma_grant_count", pm.gamma_grant_count},
                                 {"gamma_grant_amount_musd", pm.gamma_grant_amount_musd},
                                 {"sigma_author", pm.sigma_author},
                                 {"sigma_field", pm.sigma_field},
                                 {"snr", pm.snr}};
    }
    return j;
}

// ---------------------------------------------------------------------------
// Manifests

uint64_t fnv1a64_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot hash missing file " + path.string());
    uint64_t h = 1469598103934665603ULL;
    char buf[65536];
    while (in) {
        in.read(buf, sizeof buf);
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ULL;
        }
    }
    return h;
}

std::string hex64(uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

namespace {

uint64_t fnv1a64_str(std::string_view s) {
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

// The manifest hash covers tool identity, subcommand, config echo and input
// hashes; artifacts embed it, and the manifest file additionally records the
// hashes of the artifacts it produced.
class Manifest {
public:
    Manifest(const std::string& subcommand, const PipelineConfig& cfg) : cfg_(cfg) {
        core_ = json{{"tool", kToolName},
                     {"version", kToolVersion},
                     {"subcommand", subcommand},
                     {"config", cfg.echo()},
                     {"inputs", json::object()}};
        subcommand_ = subcommand;
    }

    void add_input(const fs::path& path) {
        core_["inputs"][path.string()] = hex64(fnv1a64_file(path));
    }

    std::string hash() const { return hex64(fnv1a64_str(core_.dump())); }

    void add_output(const fs::path& path) { outputs_.push_back(path); }

    void write() const {
        json doc = core_;
        doc["manifest_hash"] = hash();
        json outs = json::object();
        for (const auto& p : outputs_)
            outs[p.filename().string()] = hex64(fnv1a64_file(p));
        doc["outputs"] = std::move(outs);
        fs::path path = cfg_.output_dir / ("manifest-" + subcommand_ + ".json");
        std::ofstream out(path, std::ios::binary);
        if (!out) throw io_error("cannot write " + path.string());
        out << doc.dump(2) << '\n';
    }

private:
    const PipelineConfig& cfg_;
    std::string subcommand_;
    json core_;
    std::vector<fs::path> outputs_;
};

// ---------------------------------------------------------------------------
// Subcommand bodies

void require_input_files(const PipelineConfig& cfg) {
    if (cfg.papers_path.empty() || cfg.authorships_path.empty())
        throw config_error("config: inputs.papers and inputs.authorships are required");
    for (const auto& p : {cfg.papers_path, cfg.authorships_path})
        if (!fs::exists(p)) throw config_error("config: input file not found: " + p.string());
}

Corpus load_inputs(const PipelineConfig& cfg) {
    require_input_files(cfg);
    return load_corpus(cfg.papers_path, cfg.authorships_path, cfg.load);
}

fs::path embeddings_path(const PipelineConfig& cfg) { return cfg.output_dir / "embeddings.emb"; }
fs::path metrics_path(const PipelineConfig& cfg) { return cfg.output_dir / "metrics.csv"; }

void do_synth(const PipelineConfig& cfg, int verbosity) {
    Manifest manifest("synth", cfg);
    std::string h = manifest.hash();
    SynthResult r = generate_files(cfg.synth, cfg.output_dir, h);
    if (verbosity > 0)
        std::cerr << "synth: " << r.corpus.size() << " papers, "
                  << r.corpus.authorships().size() << " authorships\n";
    manifest.add_output(cfg.output_dir / "papers.jsonl");
    manifest.add_output(cfg.output_dir / "authorships.jsonl");
    manifest.add_output(cfg.output_dir / "truth.json");
    manifest.write();
}

void do_ingest(const PipelineConfig& cfg, int verbosity) {
    require_input_files(cfg);
    Manifest manifest("ingest", cfg);
    manifest.add_input(cfg.papers_path);
    manifest.add_input(cfg.authorships_path);

    Corpus corpus = load_corpus(cfg.papers_path, cfg.authorships_path, cfg.load);
    CitationIndex index = build_citation_index(corpus);
    ValidationReport report = validate(corpus, index);

    json doc{{"manifest_hash", manifest.hash()},
             {"paper_count", report.paper_count},
             {"authorship_count", report.authorship_count},
             {"citation_edges", index.edge_count()},
             {"self_citations_removed", report.self_citations_removed},
             {"year_order_anomalies", report.year_order_anomalies},
             {"zero_keyword_papers", report.zero_keyword_papers},
             {"zero_author_papers", report.zero_author_papers},
             {"dropped_references", report.dropped_references},
             {"clean", report.clean()}};
    fs::path path = cfg.output_dir / "validation.json";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write " + path.string());
    out << doc.dump(2) << '\n';
    out.close();
    if (verbosity > 0)
        std::cerr << "ingest: " << report.paper_count << " papers, "
                  << report.authorship_count << " authorships, "
                  << (report.clean() ? "clean" : "anomalies present") << '\n';
    manifest.add_output(path);
    manifest.write();
}

void do_train(const PipelineConfig& cfg, int verbosity) {
    Corpus corpus = load_inputs(cfg);
    Manifest manifest("train", cfg);
    manifest.add_input(cfg.papers_path);
    manifest.add_input(cfg.authorships_path);

    PairStream stream = build_pair_stream(corpus, cfg.train.seed, cfg.train.subsample_threshold);
    if (verbosity > 0)
        std::cerr << "train: vocab " << stream.vocab().size() << ", "
                  << stream.pairs_per_epoch() << " pairs/epoch\n";
    EmbeddingTable table = train_skipgram(stream, cfg.train);
    table.save(embeddings_path(cfg));
    table.export_tsv(cfg.output_dir / "embeddings.tsv");
    manifest.add_output(embeddings_path(cfg));
    manifest.add_output(cfg.output_dir / "embeddings.tsv");
    manifest.write();
}

void do_metrics(const PipelineConfig& cfg, int verbosity) {
    Corpus corpus = load_inputs(cfg);
    if (!fs::exists(embeddings_path(cfg)))
        throw precondition_error("metrics: embedding file " + embeddings_path(cfg).string() +
                                 " not found; run 'train' first");
    Manifest manifest("metrics", cfg);
    manifest.add_input(cfg.papers_path);
    manifest.add_input(cfg.authorships_path);
    manifest.add_input(embeddings_path(cfg));

    EmbeddingTable table = EmbeddingTable::load(embeddings_path(cfg));
    CitationIndex index = build_citation_index(corpus);
    MetricsSummary summary;
    auto rows = compute_paper_metrics(corpus, index, table, cfg.metrics, &summary);
    write_metrics_csv(metrics_path(cfg), rows, manifest.hash());
    if (verbosity > 0)
        std::cerr << "metrics: " << rows.size() << " rows (novelty undefined "
                  << summary.novelty_undefined << ", OOV keywords dropped "
                  << summary.oov_keywords_dropped << ", developmental undefined "
                  << summary.developmental_undefined << ", zero-reference D "
                  << summary.zero_reference_defined_d << ")\n";
    manifest.add_output(metrics_path(cfg));
    manifest.write();
}

void do_contributions(const PipelineConfig& cfg, int verbosity) {
    Corpus corpus = load_inputs(cfg);
    Manifest manifest("contributions", cfg);
    manifest.add_input(cfg.papers_path);
    manifest.add_input(cfg.authorships_path);

    CitationIndex index = build_citation_index(corpus);
    auto rows = all_contributions(corpus, index, cfg.contrib);
    if (rows.empty()) throw precondition_error("contributions: corpus has no authored papers");
    std::string h = manifest.hash();
    write_contributions_csv(cfg.output_dir / "contributions.csv", rows, h);
    auto report = group_distance_report(rows, cfg.bootstrap_b, cfg.ci_level,
                                        derive_seed(cfg.seed, "bootstrap"));
    write_group_distances_json(cfg.output_dir / "group_distances.json", report, h);
    if (verbosity > 0) std::cerr << "contributions: " << rows.size() << " rows\n";
    manifest.add_output(cfg.output_dir / "contributions.csv");
    manifest.add_output(cfg.output_dir / "group_distances.json");
    manifest.write();
}

void do_regress(const PipelineConfig& cfg, int verbosity) {
    Corpus corpus = load_inputs(cfg);
    if (!fs::exists(metrics_path(cfg)))
        throw precondition_error("regress: metrics file " + metrics_path(cfg).string() +
                                 " not found; run 'metrics' first");
    Manifest manifest("regress", cfg);
    manifest.add_input(cfg.papers_path);
    manifest.add_input(cfg.authorships_path);
    manifest.add_input(metrics_path(cfg));

    auto metric_rows = read_metrics_csv(metrics_path(cfg));
    auto results = run_all_regressions(corpus, metric_rows, cfg.econ);
    write_regressions_json(cfg.output_dir / "regressions.json", results, cfg.econ, cfg.seed,
                           manifest.hash());
    if (verbosity > 0) {
        std::printf("%-22s %10s %10s %8s %8s %9s %8s\n", "dependent", "l_ratio", "se",
                    "R2_full", "R2_restr", "addl_var%", "n");
        for (const auto& r : results) {
            double beta = r.coef.empty() ? 0.0 : r.coef[0];
            double se = r.se.empty() ? 0.0 : r.se[0];
            std::printf("%-22s %10.4f %10.4f %8.4f %8.4f %9.1f %8zu\n", r.dependent.c_str(),
                        beta, se, r.r2_full, r.r2_restricted,
                        r.additional_variance_pct.value_or(0.0), r.n_obs);
        }
    }
    manifest.add_output(cfg.output_dir / "regressions.json");
    manifest.write();
}

void do_trend(const PipelineConfig& cfg, int verbosity) {
    Corpus corpus = load_inputs(cfg);
    Manifest manifest("trend", cfg);
    manifest.add_input(cfg.papers_path);
    manifest.add_input(cfg.authorships_path);

    auto points = hierarchy_trend(corpus, TrendFilter{cfg.trend_funded_only},
                                  cfg.trend_bucket_years, cfg.metrics);
    fs::path path = cfg.output_dir / "trend.csv";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write " + path.string());
    out << "# manifest_hash=" << manifest.hash() << '\n';
    out << "bucket_start,fraction_tall,n_papers\n";
    char buf[64];
    for (const auto& p : points) {
        std::snprintf(buf, sizeof buf, "%.10g", p.fraction_tall);
        out << p.bucket_start << ',' << buf << ',' << p.n_papers << '\n';
    }
    out.close();
    if (verbosity > 0) std::cerr << "trend: " << points.size() << " buckets\n";
    manifest.add_output(path);
    manifest.write();
}

} // namespace

int run(const std::string& subcommand, const fs::path& config_path, int verbosity) {
    try {
        PipelineConfig cfg = PipelineConfig::load_file(config_path);
        std::error_code ec;
        fs::create_directories(cfg.output_dir, ec);
        if (ec) throw io_error("cannot create output directory " + cfg.output_dir.string());

        if (subcommand == "synth")
            do_synth(cfg, verbosity);
        else if (subcommand == "ingest")
            do_ingest(cfg, verbosity);
        else if (subcommand == "train")
            do_train(cfg, verbosity);
        else if (subcommand == "metrics")
            do_metrics(cfg, verbosity);
        else if (subcommand == "contributions")
            do_contributions(cfg, verbosity);
        else if (subcommand == "regress")
            do_regress(cfg, verbosity);
        else if (subcommand == "trend")
            do_trend(cfg, verbosity);
        else if (subcommand == "all") {
            do_ingest(cfg, verbosity);
            do_train(cfg, verbosity);
            do_metrics(cfg, verbosity);
            do_contributions(cfg, verbosity);
            do_regress(cfg, verbosity);
            do_trend(cfg, verbosity);
        } else {
            throw config_error("unknown subcommand '" + subcommand + "'");
        }
        return kExitOk;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        switch (e.kind()) {
            case ErrorKind::Config: return kExitConfig;
            case ErrorKind::Validation: return kExitValidation;
            case ErrorKind::Convergence: return kExitConvergence;
            case ErrorKind::Precondition: return kExitPrecondition;
            case ErrorKind::Io: return 1;
        }
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}

int main_entry(int argc, const char* const* argv) {
    CLI::App app{"scientometric metrics pipeline"};
    app.require_subcommand(1);

    std::string config_path;
    int verbosity = 0;

    std::string chosen;
    for (const char* name : {"synth", "ingest", "train", "metrics", "contributions", "regress",
                             "trend", "all"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("-c,--config", config_path, "JSON config file")->required();
        sub->add_flag("-v,--verbose", verbosity, "increase verbosity");
        sub->callback([name, &chosen] { chosen = name; });
    }

    try {
        app.parse(argc, const_cast<char**>(argv));
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }
    return run(chosen, config_path, verbosity);
}

} // namespace scimet::cli
