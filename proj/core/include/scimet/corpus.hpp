#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace scimet {

enum class Role : uint8_t { Lead, Support };

std::string_view role_name(Role r);
std::optional<Role> parse_role(std::string_view s);

struct PaperRecord {
    std::string paper_id;
    int year = 0;
    std::string field_id;
    std::vector<std::string> keywords;   // sorted, deduplicated
    std::vector<std::string> references; // sorted, deduplicated, self-reference removed
    bool is_funded = false;
    int grant_count = 0;
    double grant_amount = 0.0;

    bool operator==(const PaperRecord&) const = default;
};

struct AuthorshipRecord {
    std::string paper_id;
    std::string author_id;
    int position = 1; // 1-based author-list rank
    bool is_corresponding = false;
    Role role = Role::Support;

    bool operator==(const AuthorshipRecord&) const = default;
};

struct LoadOptions {
    int min_year = 1000;
    int max_year = 2999;
};

// Immutable after load; safe for unsynchronized concurrent reads.
class Corpus {
public:
    Corpus() = default;
    Corpus(std::vector<PaperRecord> papers, std::vector<AuthorshipRecord> authorships,
           uint64_t self_citations_removed = 0);

    const std::vector<PaperRecord>& papers() const { return papers_; }
    const std::vector<AuthorshipRecord>& authorships() const { return authorships_; }

    size_t size() const { return papers_.size(); }

    std::optional<uint32_t> paper_index(std::string_view paper_id) const;
    const PaperRecord& paper(uint32_t idx) const { return papers_[idx]; }

    // Indices into authorships(), grouped per paper / per author.
    std::span<const uint32_t> paper_authorships(uint32_t paper_idx) const;
    std::span<const uint32_t> author_authorships(std::string_view author_id) const;
    bool has_author(std::string_view author_id) const;
    size_t author_count() const { return authors_.size(); }
    const std::vector<std::string>& author_ids() const { return author_order_; }

    // Number of the author's in-corpus papers (any role).
    size_t author_paper_count(std::string_view author_id) const;

    // Earliest year among the author's papers strictly before the focal year;
    // nullopt when the author has no such paper.
    std::optional<int> first_prior_publication_year(std::string_view author_id,
                                                    int focal_year) const;

    uint64_t self_citations_removed() const { return self_citations_removed_; }

    void write_papers_jsonl(const std::filesystem::path& path) const;
    void write_authorships_jsonl(const std::filesystem::path& path) const;

private:
    void build_indexes();

    std::vector<PaperRecord> papers_;
    std::vector<AuthorshipRecord> authorships_;
    std::unordered_map<std::string, uint32_t> paper_by_id_;
    std::vector<std::vector<uint32_t>> auth_by_paper_;
    std::unordered_map<std::string, std::vector<uint32_t>> auth_by_author_;
    std::vector<std::string> author_order_; // first-appearance order
    std::unordered_map<std::string, uint32_t> authors_;
    uint64_t self_citations_removed_ = 0;
};

// Year-annotated bidirectional citation adjacency. cited_by and cites are
// exact transposes by construction; references to unknown papers are dropped
// and counted.
struct CitationIndex {
    std::vector<std::vector<uint32_t>> cited_by; // paper idx -> citing paper idxs, sorted
    std::vector<std::vector<uint32_t>> cites;    // paper idx -> kept reference idxs, sorted
    uint64_t dropped_references = 0;

    uint64_t edge_count() const;
};

struct ValidationReport {
    uint64_t self_citations_removed = 0;
    uint64_t year_order_anomalies = 0; // citing year < cited year
    uint64_t zero_keyword_papers = 0;
    uint64_t zero_author_papers = 0;
    uint64_t dropped_references = 0;
    uint64_t paper_count = 0;
    uint64_t authorship_count = 0;

    bool clean() const {
        return self_citations_removed == 0 && year_order_anomalies == 0 &&
               zero_keyword_papers == 0 && zero_author_papers == 0 &&
               dropped_references == 0;
    }
};

Corpus load_corpus(const std::filesystem::path& papers_path,
                   const std::filesystem::path& authorships_path,
                   const LoadOptions& options = {});

CitationIndex build_citation_index(const Corpus& corpus);

ValidationReport validate(const Corpus& corpus);
ValidationReport validate(const Corpus& corpus, const CitationIndex& index);

} // namespace scimet
