#pragma once

#include "scimet/corpus.hpp"
#include "scimet/embedding.hpp"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace testutil {

namespace fs = std::filesystem;

// Unique scratch directory, removed on destruction.
struct TempDir {
    fs::path path;

    TempDir() {
        static std::atomic<uint64_t> counter{0};
        path = fs::temp_directory_path() /
               ("scimet-test-" + std::to_string(::getpid()) + "-" +
                std::to_string(counter.fetch_add(1)));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    fs::path file(const std::string& name) const { return path / name; }
};

inline void write_file(const fs::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    out << content;
}

inline std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline scimet::PaperRecord paper(std::string id, int year, std::vector<std::string> keywords = {},
                                 std::vector<std::string> references = {},
                                 std::string field = "f0") {
    scimet::PaperRecord p;
    p.paper_id = std::move(id);
    p.year = year;
    p.field_id = std::move(field);
    p.keywords = std::move(keywords);
    p.references = std::move(references);
    std::sort(p.keywords.begin(), p.keywords.end());
    std::sort(p.references.begin(), p.references.end());
    return p;
}

inline scimet::AuthorshipRecord author(std::string paper_id, std::string author_id, int position,
                                       scimet::Role role, bool corresponding = false) {
    scimet::AuthorshipRecord a;
    a.paper_id = std::move(paper_id);
    a.author_id = std::move(author_id);
    a.position = position;
    a.is_corresponding = corresponding;
    a.role = role;
    return a;
}

// Embedding table with explicit per-keyword in/out vectors, for hand oracles.
inline scimet::EmbeddingTable make_table(const std::vector<std::string>& vocab,
                                         const std::vector<std::vector<float>>& in_rows,
                                         const std::vector<std::vector<float>>& out_rows) {
    scimet::EmbeddingTable t;
    t.vocab = vocab;
    t.dimension = int(in_rows.empty() ? 0 : in_rows[0].size());
    t.negatives = 5;
    for (uint32_t i = 0; i < vocab.size(); ++i) t.index.emplace(vocab[i], i);
    for (const auto& row : in_rows) t.in_vecs.insert(t.in_vecs.end(), row.begin(), row.end());
    for (const auto& row : out_rows) t.out_vecs.insert(t.out_vecs.end(), row.begin(), row.end());
    return t;
}

} // namespace testutil
