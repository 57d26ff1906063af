#include "scimet/corpus.hpp"

#include "scimet/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <set>

namespace scimet {

using nlohmann::json;

std::string_view role_name(Role r) { return r == Role::Lead ? "lead" : "support"; }

std::optional<Role> parse_role(std::string_view s) {
    if (s == "lead") return Role::Lead;
    if (s == "support") return Role::Support;
    return std::nullopt;
}

namespace {

void sort_unique(std::vector<std::string>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
}

[[noreturn]] void malformed(const std::filesystem::path& path, size_t line_no,
                            const std::string& what) {
    throw validation_error(path.filename().string() + ":" + std::to_string(line_no) +
                           ": " + what);
}

std::vector<std::string> read_string_array(const json& j, const char* key,
                                           const std::filesystem::path& path, size_t line_no) {
    std::vector<std::string> out;
    auto it = j.find(key);
    if (it == j.end()) return out;
    if (!it->is_array()) malformed(path, line_no, std::string(key) + " is not an array");
    out.reserve(it->size());
    for (const auto& e : *it) {
        if (!e.is_string()) malformed(path, line_no, std::string(key) + " entry is not a string");
        out.push_back(e.get<std::string>());
    }
    return out;
}

} // namespace

Corpus::Corpus(std::vector<PaperRecord> papers, std::vector<AuthorshipRecord> authorships,
               uint64_t self_citations_removed)
    : papers_(std::move(papers)),
      authorships_(std::move(authorships)),
      self_citations_removed_(self_citations_removed) {
    build_indexes();
}

void Corpus::build_indexes() {
    paper_by_id_.reserve(papers_.size() * 2);
    for (uint32_t i = 0; i < papers_.size(); ++i) {
        auto [it, inserted] = paper_by_id_.emplace(papers_[i].paper_id, i);
        if (!inserted)
            throw validation_error("duplicate paper_id '" + papers_[i].paper_id + "'");
    }
    auth_by_paper_.assign(papers_.size(), {});
    for (uint32_t i = 0; i < authorships_.size(); ++i) {
        const auto& a = authorships_[i];
        auto it = paper_by_id_.find(a.paper_id);
        if (it == paper_by_id_.end())
            throw validation_error("authorship references unknown paper '" + a.paper_id + "'");
        auth_by_paper_[it->second].push_back(i);
        auto [ait, inserted] = authors_.emplace(a.author_id, static_cast<uint32_t>(author_order_.size()));
        if (inserted) author_order_.push_back(a.author_id);
        auth_by_author_[a.author_id].push_back(i);
    }
    // Per-paper authorship invariants: unique authors, contiguous 1..n
    // positions, at least one lead.
    std::vector<int> positions;
    for (uint32_t p = 0; p < papers_.size(); ++p) {
        const auto& idxs = auth_by_paper_[p];
        if (idxs.empty()) continue;
        positions.clear();
        std::set<std::string_view> seen_authors;
        bool has_lead = false;
        for (uint32_t i : idxs) {
            const auto& a = authorships_[i];
            positions.push_back(a.position);
            if (!seen_authors.insert(a.author_id).second)
                throw validation_error("paper '" + papers_[p].paper_id +
                                       "': duplicate authorship for author '" + a.author_id + "'");
            if (a.role == Role::Lead) has_lead = true;
        }
        std::sort(positions.begin(), positions.end());
        for (size_t k = 0; k < positions.size(); ++k) {
            if (positions[k] != static_cast<int>(k + 1))
                throw validation_error("paper '" + papers_[p].paper_id +
                                       "': author positions are not a contiguous 1..n sequence");
        }
        if (!has_lead)
            throw validation_error("paper '" + papers_[p].paper_id + "' has no lead author");
    }
}

std::optional<uint32_t> Corpus::paper_index(std::string_view paper_id) const {
    auto it = paper_by_id_.find(std::string(paper_id));
    if (it == paper_by_id_.end()) return std::nullopt;
    return it->second;
}

std::span<const uint32_t> Corpus::paper_authorships(uint32_t paper_idx) const {
    return auth_by_paper_[paper_idx];
}

std::span<const uint32_t> Corpus::author_authorships(std::string_view author_id) const {
    auto it = auth_by_author_.find(std::string(author_id));
    if (it == auth_by_author_.end()) return {};
    return it->second;
}

bool Corpus::has_author(std::string_view author_id) const {
    return authors_.contains(std::string(author_id));
}

size_t Corpus::author_paper_count(std::string_view author_id) const {
    return author_authorships(author_id).size();
}

std::optional<int> Corpus::first_prior_publication_year(std::string_view author_id,
                                                        int focal_year) const {
    std::optional<int> first;
    for (uint32_t i : author_authorships(author_id)) {
        auto idx = paper_index(authorships_[i].paper_id);
        int y = papers_[*idx].year;
        if (y < focal_year && (!first || y < *first)) first = y;
    }
    return first;
}

Corpus load_corpus(const std::filesystem::path& papers_path,
                   const std::filesystem::path& authorships_path,
                   const LoadOptions& options) {
    std::ifstream pf(papers_path);
    if (!pf) throw io_error("cannot open " + papers_path.string());
    std::ifstream af(authorships_path);
    if (!af) throw io_error("cannot open " + authorships_path.string());

    std::vector<PaperRecord> papers;
    std::vector<AuthorshipRecord> authorships;
    uint64_t self_refs_removed = 0;

    std::string line;
    size_t line_no = 0;
    while (std::getline(pf, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            malformed(papers_path, line_no, std::string("malformed JSON: ") + e.what());
        }
        if (!j.is_object()) malformed(papers_path, line_no, "record is not an object");

        PaperRecord rec;
        if (!j.contains("paper_id") || !j["paper_id"].is_string())
            malformed(papers_path, line_no, "missing or non-string paper_id");
        rec.paper_id = j["paper_id"].get<std::string>();
        if (!j.contains("year") || !j["year"].is_number_integer())
            malformed(papers_path, line_no, "missing or non-integer year");
        rec.year = j["year"].get<int>();
        if (rec.year < options.min_year || rec.year > options.max_year)
            malformed(papers_path, line_no,
                      "year " + std::to_string(rec.year) + " outside configured bounds [" +
                          std::to_string(options.min_year) + ", " +
                          std::to_string(options.max_year) + "]");
        if (j.contains("field_id")) {
            if (!j["field_id"].is_string())
                malformed(papers_path, line_no, "field_id is not a string");
            rec.field_id = j["field_id"].get<std::string>();
        }
        rec.keywords = read_string_array(j, "keywords", papers_path, line_no);
        rec.references = read_string_array(j, "references", papers_path, line_no);
        sort_unique(rec.keywords);
        sort_unique(rec.references);
        // Self-citations are removed with a warning count; the triad logic
        // assumes focal is never among its own references.
        auto self = std::find(rec.references.begin(), rec.references.end(), rec.paper_id);
        if (self != rec.references.end()) {
            rec.references.erase(self);
            ++self_refs_removed;
        }
        if (j.contains("is_funded")) {
            if (!j["is_funded"].is_boolean())
                malformed(papers_path, line_no, "is_funded is not a boolean");
            rec.is_funded = j["is_funded"].get<bool>();
        }
        if (j.contains("grant_count")) {
            if (!j["grant_count"].is_number_integer())
                malformed(papers_path, line_no, "grant_count is not an integer");
            rec.grant_count = j["grant_count"].get<int>();
            if (rec.grant_count < 0)
                malformed(papers_path, line_no, "grant_count is negative");
        }
        if (j.contains("grant_amount")) {
            if (!j["grant_amount"].is_number())
                malformed(papers_path, line_no, "grant_amount is not a number");
            rec.grant_amount = j["grant_amount"].get<double>();
            if (rec.grant_amount < 0)
                malformed(papers_path, line_no, "grant_amount is negative");
        }
        if (!rec.is_funded && (rec.grant_count != 0 || rec.grant_amount != 0.0))
            malformed(papers_path, line_no,
                      "paper '" + rec.paper_id + "' is unfunded but has nonzero grant fields");
        papers.push_back(std::move(rec));
    }

    line_no = 0;
    while (std::getline(af, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            malformed(authorships_path, line_no, std::string("malformed JSON: ") + e.what());
        }
        if (!j.is_object()) malformed(authorships_path, line_no, "record is not an object");

        AuthorshipRecord rec;
        for (const char* key : {"paper_id", "author_id", "role"}) {
            if (!j.contains(key) || !j[key].is_string())
                malformed(authorships_path, line_no, std::string("missing or non-string ") + key);
        }
        rec.paper_id = j["paper_id"].get<std::string>();
        rec.author_id = j["author_id"].get<std::string>();
        if (!j.contains("position") || !j["position"].is_number_integer())
            malformed(authorships_path, line_no, "missing or non-integer position");
        rec.position = j["position"].get<int>();
        if (rec.position < 1)
            malformed(authorships_path, line_no, "position must be >= 1");
        if (j.contains("is_corresponding")) {
            if (!j["is_corresponding"].is_boolean())
                malformed(authorships_path, line_no, "is_corresponding is not a boolean");
            rec.is_corresponding = j["is_corresponding"].get<bool>();
        }
        auto role = parse_role(j["role"].get<std::string>());
        if (!role)
            malformed(authorships_path, line_no,
                      "role must be \"lead\" or \"support\", got \"" +
                          j["role"].get<std::string>() + "\"");
        rec.role = *role;
        authorships.push_back(std::move(rec));
    }

    return Corpus(std::move(papers), std::move(authorships), self_refs_removed);
}

CitationIndex build_citation_index(const Corpus& corpus) {
    CitationIndex index;
    const size_t n = corpus.size();
    index.cited_by.assign(n, {});
    index.cites.assign(n, {});
    for (uint32_t p = 0; p < n; ++p) {
        for (const auto& ref : corpus.paper(p).references) {
            auto target = corpus.paper_index(ref);
            if (!target) {
                ++index.dropped_references;
                continue;
            }
            index.cites[p].push_back(*target);
            index.cited_by[*target].push_back(p);
        }
    }
    for (auto& v : index.cited_by) std::sort(v.begin(), v.end());
    for (auto& v : index.cites) std::sort(v.begin(), v.end());
    return index;
}

uint64_t CitationIndex::edge_count() const {
    uint64_t n = 0;
    for (const auto& v : cites) n += v.size();
    return n;
}

ValidationReport validate(const Corpus& corpus) {
    return validate(corpus, build_citation_index(corpus));
}

ValidationReport validate(const Corpus& corpus, const CitationIndex& index) {
    ValidationReport report;
    report.paper_count = corpus.size();
    report.authorship_count = corpus.authorships().size();
    report.self_citations_removed = corpus.self_citations_removed();
    report.dropped_references = index.dropped_references;
    for (uint32_t p = 0; p < corpus.size(); ++p) {
        const auto& paper = corpus.paper(p);
        if (paper.keywords.empty()) ++report.zero_keyword_papers;
        if (corpus.paper_authorships(p).empty()) ++report.zero_author_papers;
        for (uint32_t citing : index.cited_by[p]) {
            if (corpus.paper(citing).year < paper.year) ++report.year_order_anomalies;
        }
    }
    return report;
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write " + path.string());
    return out;
}

} // namespace

void Corpus::write_papers_jsonl(const std::filesystem::path& path) const {
    auto out = open_out(path);
    for (const auto& p : papers_) {
        json j{{"paper_id", p.paper_id},
               {"year", p.year},
               {"field_id", p.field_id},
               {"keywords", p.keywords},
               {"references", p.references},
               {"is_funded", p.is_funded},
               {"grant_count", p.grant_count},
               {"grant_amount", p.grant_amount}};
        out << j.dump() << '\n';
    }
}

void Corpus::write_authorships_jsonl(const std::filesystem::path& path) const {
    auto out = open_out(path);
    for (const auto& a : authorships_) {
        json j{{"paper_id", a.paper_id},
               {"author_id", a.author_id},
               {"position", a.position},
               {"is_corresponding", a.is_corresponding},
               {"role", std::string(role_name(a.role))}};
        out << j.dump() << '\n';
    }
}

} // namespace scimet
