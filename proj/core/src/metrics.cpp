#include "scimet/metrics.hpp"

#include "scimet/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace scimet {

std::string_view hierarchy_name(Hierarchy h) { return h == Hierarchy::Flat ? "flat" : "tall"; }

std::optional<double> novelty(const PaperRecord& paper, const EmbeddingTable& table,
                              uint64_t* oov_dropped) {
    std::vector<uint32_t> ids;
    ids.reserve(paper.keywords.size());
    for (const auto& kw : paper.keywords) {
        if (auto idx = table.lookup(kw))
            ids.push_back(*idx);
        else if (oov_dropped)
            ++*oov_dropped;
    }
    // Keywords form a set; duplicate entries must not change the mean.
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    if (ids.size() < 2) return std::nullopt;
    double sum = 0.0;
    size_t n = 0;
    for (uint32_t i : ids)
        for (uint32_t j : ids)
            if (i != j) {
                sum += -table.dot(i, j);
                ++n;
            }
    return sum / double(n);
}

TriadCounts developmental_counts(const Corpus& corpus, const CitationIndex& index,
                                 uint32_t focal, const MetricsOptions& options) {
    if (focal >= corpus.size())
        throw precondition_error("developmental_counts: unknown focal paper index");
    const int focal_year = corpus.paper(focal).year;
    auto passes = [&](uint32_t citing) {
        return !options.strict_subsequence || corpus.paper(citing).year > focal_year;
    };

    TriadCounts counts;
    // Papers citing at least one of the focal's references, excluding the
    // focal itself (it cites them by construction).
    std::vector<uint32_t> cite_refs;
    for (uint32_t ref : index.cites[focal])
        for (uint32_t citing : index.cited_by[ref])
            if (citing != focal && passes(citing)) cite_refs.push_back(citing);
    std::sort(cite_refs.begin(), cite_refs.end());
    cite_refs.erase(std::unique(cite_refs.begin(), cite_refs.end()), cite_refs.end());

    uint64_t both = 0;
    for (uint32_t citing : index.cited_by[focal]) {
        if (!passes(citing)) continue;
        bool cites_ref = std::binary_search(cite_refs.begin(), cite_refs.end(), citing);
        if (cites_ref)
            ++both;
        else
            ++counts.n_f;
    }
    counts.n_b = both;
    counts.n_r = cite_refs.size() - both;
    return counts;
}

std::optional<double> developmental_index(const Corpus& corpus, const CitationIndex& index,
                                          uint32_t focal, const MetricsOptions& options) {
    TriadCounts c = developmental_counts(corpus, index, focal, options);
    if (c.denominator() == 0) return std::nullopt;
    return (double(c.n_b) - double(c.n_f)) / double(c.denominator());
}

ImpactWindows windows_from_offsets(std::span<const int> year_offsets) {
    ImpactWindows w;
    for (int i : year_offsets) {
        if (i < 0)
            ++w.anomalies;
        else if (i <= 10)
            ++w.impact_short;
        else if (i >= 21)
            ++w.impact_long;
        // offsets 11..20 fall in neither window
    }
    return w;
}

ImpactWindows impact_windows(const Corpus& corpus, const CitationIndex& index, uint32_t focal) {
    if (focal >= corpus.size())
        throw precondition_error("impact_windows: unknown focal paper index");
    const int focal_year = corpus.paper(focal).year;
    std::vector<int> offsets;
    offsets.reserve(index.cited_by[focal].size());
    for (uint32_t citing : index.cited_by[focal])
        offsets.push_back(corpus.paper(citing).year - focal_year);
    return windows_from_offsets(offsets);
}

int productivity(const Corpus& corpus, std::string_view author_id, int year) {
    if (!corpus.has_author(author_id))
        throw precondition_error("productivity: unknown author '" + std::string(author_id) + "'");
    int count = 0;
    for (uint32_t i : corpus.author_authorships(author_id)) {
        auto idx = corpus.paper_index(corpus.authorships()[i].paper_id);
        if (corpus.paper(*idx).year == year) ++count;
    }
    return count;
}

TeamMetrics team_metrics(const Corpus& corpus, uint32_t focal, const MetricsOptions& options) {
    auto idxs = corpus.paper_authorships(focal);
    if (idxs.empty())
        throw precondition_error("team_metrics: paper '" + corpus.paper(focal).paper_id +
                                 "' has no authorships");
    const int year = corpus.paper(focal).year;

    TeamMetrics tm;
    tm.team_size = int(idxs.size());
    double lead_sum = 0.0, support_sum = 0.0;
    int leads = 0, supports = 0;
    for (uint32_t i : idxs) {
        const auto& a = corpus.authorships()[i];
        double prod = double(productivity(corpus, a.author_id, year));
        if (a.role == Role::Lead) {
            ++leads;
            lead_sum += prod;
        } else {
            ++supports;
            support_sum += prod;
        }
    }
    tm.l_ratio = double(leads) / double(tm.team_size);
    tm.lead_productivity = lead_sum / double(leads);
    if (supports > 0) tm.support_productivity = support_sum / double(supports);

    bool flat = options.boundary_half_is_tall ? tm.l_ratio > 0.5 : tm.l_ratio >= 0.5;
    tm.hierarchy_class = flat ? Hierarchy::Flat : Hierarchy::Tall;
    return tm;
}

std::vector<TrendPoint> hierarchy_trend(const Corpus& corpus, const TrendFilter& filter,
                                        int bucket_years, const MetricsOptions& options) {
    if (bucket_years < 1) throw config_error("hierarchy_trend: bucket_years must be >= 1");

    std::map<int, std::pair<uint32_t, uint32_t>> buckets; // start year -> (tall, total)
    for (uint32_t p = 0; p < corpus.size(); ++p) {
        const auto& paper = corpus.paper(p);
        if (filter.funded_only && !paper.is_funded) continue;
        if (corpus.paper_authorships(p).empty()) continue;
        TeamMetrics tm = team_metrics(corpus, p, options);
        int start = (paper.year / bucket_years) * bucket_years;
        auto& [tall, total] = buckets[start];
        if (tm.hierarchy_class == Hierarchy::Tall) ++tall;
        ++total;
    }

    std::vector<TrendPoint> out;
    out.reserve(buckets.size());
    for (const auto& [start, counts] : buckets)
        out.push_back({start, double(counts.first) / double(counts.second), counts.second});
    return out;
}

std::vector<PaperMetrics> compute_paper_metrics(const Corpus& corpus, const CitationIndex& index,
                                                const EmbeddingTable& table,
                                                const MetricsOptions& options,
                                                MetricsSummary* summary) {
    MetricsSummary local;
    std::vector<PaperMetrics> rows;
    rows.reserve(corpus.size());
    for (uint32_t p = 0; p < corpus.size(); ++p) {
        const auto& paper = corpus.paper(p);
        PaperMetrics m;
        m.paper_id = paper.paper_id;
        m.year = paper.year;
        m.field_id = paper.field_id;

        m.novelty = novelty(paper, table, &local.oov_keywords_dropped);
        if (!m.novelty) ++local.novelty_undefined;

        m.developmental = developmental_index(corpus, index, p, options);
        if (!m.developmental)
            ++local.developmental_undefined;
        else if (index.cites[p].empty()) {
            m.zero_reference_focal = true;
            ++local.zero_reference_defined_d;
        }

        ImpactWindows w = impact_windows(corpus, index, p);
        m.impact_short = w.impact_short;
        m.impact_long = w.impact_long;
        local.citation_year_anomalies += w.anomalies;

        if (!corpus.paper_authorships(p).empty()) {
            TeamMetrics tm = team_metrics(corpus, p, options);
            m.team_size = tm.team_size;
            m.l_ratio = tm.l_ratio;
            m.hierarchy_class = tm.hierarchy_class;
            m.lead_productivity = tm.lead_productivity;
            m.support_productivity = tm.support_productivity;
        } else {
            ++local.zero_author_papers;
        }
        rows.push_back(std::move(m));
    }
    if (summary) *summary = local;
    return rows;
}

// ---------------------------------------------------------------------------
// CSV round trip

namespace {

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

constexpr const char* kHeader =
    "paper_id,year,field_id,team_size,l_ratio,hierarchy_class,novelty,developmental,"
    "impact_short,impact_long,lead_productivity,support_productivity";

} // namespace

void write_metrics_csv(const std::filesystem::path& path, const std::vector<PaperMetrics>& rows,
                       const std::string& manifest_hash) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write " + path.string());
    if (!manifest_hash.empty()) out << "# manifest_hash=" << manifest_hash << '\n';
    out << kHeader << '\n';
    for (const auto& m : rows) {
        out << m.paper_id << ',' << m.year << ',' << m.field_id << ',';
        if (m.team_size) out << *m.team_size;
        out << ',';
        if (m.l_ratio) out << fmt_double(*m.l_ratio);
        out << ',';
        if (m.hierarchy_class) out << hierarchy_name(*m.hierarchy_class);
        out << ',';
        if (m.novelty) out << fmt_double(*m.novelty);
        out << ',';
        if (m.developmental) out << fmt_double(*m.developmental);
        out << ',' << m.impact_short << ',' << m.impact_long << ',';
        if (m.lead_productivity) out << fmt_double(*m.lead_productivity);
        out << ',';
        if (m.support_productivity) out << fmt_double(*m.support_productivity);
        out << '\n';
    }
}

std::vector<PaperMetrics> read_metrics_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open " + path.string());
    std::string line;
    bool header_seen = false;
    std::vector<PaperMetrics> rows;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            if (line != kHeader)
                throw validation_error(path.string() + ": unexpected metrics.csv header");
            header_seen = true;
            continue;
        }
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        while (cells.size() < 12) cells.emplace_back();
        if (cells.size() != 12)
            throw validation_error(path.string() + ":" + std::to_string(line_no) +
                                   ": expected 12 cells");

        auto opt_double = [](const std::string& s) -> std::optional<double> {
            if (s.empty()) return std::nullopt;
            return std::stod(s);
        };
        try {
            PaperMetrics m;
            m.paper_id = cells[0];
            m.year = std::stoi(cells[1]);
            m.field_id = cells[2];
            if (!cells[3].empty()) m.team_size = std::stoi(cells[3]);
            m.l_ratio = opt_double(cells[4]);
            if (!cells[5].empty())
                m.hierarchy_class = cells[5] == "flat" ? Hierarchy::Flat : Hierarchy::Tall;
            m.novelty = opt_double(cells[6]);
            m.developmental = opt_double(cells[7]);
            m.impact_short = uint32_t(std::stoul(cells[8]));
            m.impact_long = uint32_t(std::stoul(cells[9]));
            m.lead_productivity = opt_double(cells[10]);
            m.support_productivity = opt_double(cells[11]);
            rows.push_back(std::move(m));
        } catch (const std::logic_error&) {
            throw validation_error(path.string() + ":" + std::to_string(line_no) +
                                   ": unparseable cell");
        }
    }
    if (!header_seen) throw validation_error(path.string() + ": missing metrics.csv header");
    return rows;
}

} // namespace scimet
