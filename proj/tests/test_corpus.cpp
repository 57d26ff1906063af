#include "scimet/corpus.hpp"

#include "scimet/error.hpp"
#include "scimet/synth.hpp"

#include <doctest.h>

#include "helpers.hpp"

#include <string>

using namespace scimet;
using namespace testutil;

TEST_SUITE_BEGIN("corpus");

namespace {

const char* kThreePapers = R"({"paper_id":"P1","year":2000,"field_id":"f1","keywords":["a","b"],"references":[],"is_funded":false,"grant_count":0,"grant_amount":0}
{"paper_id":"P2","year":2001,"field_id":"f1","keywords":["b","c"],"references":["P1"],"is_funded":true,"grant_count":2,"grant_amount":150000.5}
{"paper_id":"P3","year":2002,"field_id":"f2","keywords":["a","c"],"references":["P1","P2"]}
)";

const char* kFiveAuthorships = R"({"paper_id":"P1","author_id":"A1","position":1,"is_corresponding":true,"role":"lead"}
{"paper_id":"P1","author_id":"A2","position":2,"is_corresponding":false,"role":"support"}
{"paper_id":"P2","author_id":"A1","position":1,"is_corresponding":true,"role":"lead"}
{"paper_id":"P3","author_id":"A2","position":1,"is_corresponding":false,"role":"lead"}
{"paper_id":"P3","author_id":"A3","position":2,"is_corresponding":true,"role":"support"}
)";

} // namespace

TEST_CASE("load_corpus counts papers and authorships") {
    TempDir dir;
    write_file(dir.file("papers.jsonl"), kThreePapers);
    write_file(dir.file("auth.jsonl"), kFiveAuthorships);
    Corpus c = load_corpus(dir.file("papers.jsonl"), dir.file("auth.jsonl"));
    CHECK(c.papers().size() == 3);
    CHECK(c.authorships().size() == 5);
    CHECK(c.paper_index("P2").has_value());
    CHECK(c.paper(*c.paper_index("P2")).grant_amount == 150000.5);
    // missing funding keys default to false/0
    const auto& p3 = c.paper(*c.paper_index("P3"));
    CHECK(p3.is_funded == false);
    CHECK(p3.grant_count == 0);
}

TEST_CASE("empty papers file gives an empty corpus") {
    TempDir dir;
    write_file(dir.file("papers.jsonl"), "");
    write_file(dir.file("auth.jsonl"), "");
    Corpus c = load_corpus(dir.file("papers.jsonl"), dir.file("auth.jsonl"));
    CHECK(c.size() == 0);
    CHECK(c.authorships().empty());
}

TEST_CASE("dangling authorship names the missing paper") {
    TempDir dir;
    write_file(dir.file("papers.jsonl"), kThreePapers);
    write_file(dir.file("auth.jsonl"),
               R"({"paper_id":"P9","author_id":"A1","position":1,"role":"lead"})"
               "\n");
    try {
        load_corpus(dir.file("papers.jsonl"), dir.file("auth.jsonl"));
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Validation);
        CHECK(std::string(e.what()).find("P9") != std::string::npos);
    }
}

TEST_CASE("duplicate paper_id is rejected") {
    TempDir dir;
    write_file(dir.file("papers.jsonl"),
               R"({"paper_id":"P1","year":2000}
{"paper_id":"P1","year":2001}
)");
    write_file(dir.file("auth.jsonl"), "");
    CHECK_THROWS_AS(load_corpus(dir.file("papers.jsonl"), dir.file("auth.jsonl")), Error);
}

TEST_CASE("malformed line reports its line number") {
    TempDir dir;
    write_file(dir.file("papers.jsonl"),
               R"({"paper_id":"P1","year":2000}
not json at all
)");
    write_file(dir.file("auth.jsonl"), "");
    try {
        load_corpus(dir.file("papers.jsonl"), dir.file("auth.jsonl"));
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find(":2") != std::string::npos);
    }
}

TEST_CASE("year bounds are enforced at load") {
    TempDir dir;
    write_file(dir.file("papers.jsonl"), R"({"paper_id":"P1","year":1800}
)");
    write_file(dir.file("auth.jsonl"), "");
    LoadOptions opts;
    opts.min_year = 1900;
    opts.max_year = 2100;
    CHECK_THROWS_AS(load_corpus(dir.file("papers.jsonl"), dir.file("auth.jsonl"), opts), Error);
}

TEST_CASE("self-citation is removed and counted") {
    TempDir dir;
    write_file(dir.file("papers.jsonl"),
               R"({"paper_id":"P1","year":2000,"references":["P1","P2"]}
{"paper_id":"P2","year":1999}
)");
    write_file(dir.file("auth.jsonl"), "");
    Corpus c = load_corpus(dir.file("papers.jsonl"), dir.file("auth.jsonl"));
    CHECK(c.self_citations_removed() == 1);
    CHECK(c.paper(*c.paper_index("P1")).references == std::vector<std::string>{"P2"});
    ValidationReport r = validate(c);
    CHECK(r.self_citations_removed == 1);
}

TEST_CASE("unknown keys are ignored") {
    TempDir dir;
    write_file(dir.file("papers.jsonl"),
               R"({"paper_id":"P1","year":2000,"some_future_key":[1,2,3]}
)");
    write_file(dir.file("auth.jsonl"), "");
    Corpus c = load_corpus(dir.file("papers.jsonl"), dir.file("auth.jsonl"));
    CHECK(c.size() == 1);
}

TEST_CASE("inconsistent funding fields are rejected") {
    TempDir dir;
    write_file(dir.file("papers.jsonl"),
               R"({"paper_id":"P1","year":2000,"is_funded":false,"grant_count":3}
)");
    write_file(dir.file("auth.jsonl"), "");
    CHECK_THROWS_AS(load_corpus(dir.file("papers.jsonl"), dir.file("auth.jsonl")), Error);
}

TEST_CASE("authorship invariants: positions and lead presence") {
    std::vector<PaperRecord> papers{paper("P1", 2000)};
    SUBCASE("gap in positions") {
        std::vector<AuthorshipRecord> auths{author("P1", "A1", 1, Role::Lead),
                                            author("P1", "A2", 3, Role::Support)};
        CHECK_THROWS_AS(Corpus(papers, auths), Error);
    }
    SUBCASE("no lead author") {
        std::vector<AuthorshipRecord> auths{author("P1", "A1", 1, Role::Support)};
        CHECK_THROWS_AS(Corpus(papers, auths), Error);
    }
    SUBCASE("duplicate author on one paper") {
        std::vector<AuthorshipRecord> auths{author("P1", "A1", 1, Role::Lead),
                                            author("P1", "A1", 2, Role::Support)};
        CHECK_THROWS_AS(Corpus(papers, auths), Error);
    }
}

TEST_CASE("citation index single edge") {
    Corpus c({paper("A", 2001, {}, {"B"}), paper("B", 2000)}, {});
    CitationIndex idx = build_citation_index(c);
    uint32_t a = *c.paper_index("A");
    uint32_t b = *c.paper_index("B");
    CHECK(idx.cites[a] == std::vector<uint32_t>{b});
    CHECK(idx.cited_by[b] == std::vector<uint32_t>{a});
    CHECK(idx.cited_by[a].empty());
    CHECK(idx.dropped_references == 0);
}

TEST_CASE("citation index with no references") {
    Corpus c({paper("A", 2000), paper("B", 2001)}, {});
    CitationIndex idx = build_citation_index(c);
    CHECK(idx.edge_count() == 0);
    for (const auto& v : idx.cited_by) CHECK(v.empty());
}

TEST_CASE("unknown reference is dropped and counted") {
    Corpus c({paper("A", 2001, {}, {"Z"})}, {});
    CitationIndex idx = build_citation_index(c);
    CHECK(idx.dropped_references == 1);
    CHECK(idx.edge_count() == 0);
}

TEST_CASE("transpose invariant and edge count on a generated corpus") {
    GeneratorConfig cfg;
    cfg.seed = 11;
    cfg.n_papers = 400;
    cfg.n_authors = 80;
    cfg.n_keywords = 50;
    auto [corpus, truth] = generate(cfg);
    CitationIndex idx = build_citation_index(corpus);

    uint64_t kept_refs = 0;
    for (uint32_t p = 0; p < corpus.size(); ++p) {
        for (uint32_t q : idx.cites[p]) {
            const auto& cb = idx.cited_by[q];
            CHECK(std::binary_search(cb.begin(), cb.end(), p));
        }
        for (uint32_t q : idx.cited_by[p]) {
            const auto& cs = idx.cites[q];
            CHECK(std::binary_search(cs.begin(), cs.end(), p));
        }
        kept_refs += idx.cites[p].size();
    }
    CHECK(kept_refs == idx.edge_count());
}

TEST_CASE("validation counts zero-keyword and zero-author papers") {
    Corpus c({paper("P1", 2000, {"a"}), paper("P2", 2000)},
             {author("P1", "A1", 1, Role::Lead)});
    ValidationReport r = validate(c);
    CHECK(r.zero_keyword_papers == 1);
    CHECK(r.zero_author_papers == 1);
    CHECK(r.self_citations_removed == 0);
    CHECK(r.year_order_anomalies == 0);
}

TEST_CASE("validation counts year-order anomalies") {
    // B (1999) cites A (2005): citing year earlier than cited year
    Corpus c({paper("A", 2005), paper("B", 1999, {}, {"A"})}, {});
    ValidationReport r = validate(c);
    CHECK(r.year_order_anomalies == 1);
}

TEST_CASE("round trip through JSONL preserves the corpus exactly") {
    GeneratorConfig cfg;
    cfg.seed = 3;
    cfg.n_papers = 300;
    cfg.n_authors = 60;
    cfg.n_keywords = 40;
    cfg.funded_fraction = 0.4;
    auto [corpus, truth] = generate(cfg);

    TempDir dir;
    corpus.write_papers_jsonl(dir.file("p.jsonl"));
    corpus.write_authorships_jsonl(dir.file("a.jsonl"));
    Corpus reloaded = load_corpus(dir.file("p.jsonl"), dir.file("a.jsonl"));

    REQUIRE(reloaded.papers().size() == corpus.papers().size());
    CHECK(reloaded.papers() == corpus.papers());
    CHECK(reloaded.authorships() == corpus.authorships());
}

TEST_CASE("first prior publication year") {
    Corpus c({paper("P1", 2000), paper("P2", 2004), paper("P3", 2004)},
             {author("P1", "A1", 1, Role::Lead), author("P2", "A1", 1, Role::Lead),
              author("P3", "A1", 1, Role::Lead)});
    CHECK(c.first_prior_publication_year("A1", 2004) == 2000);
    CHECK(c.first_prior_publication_year("A1", 2000) == std::nullopt);
    CHECK(c.author_paper_count("A1") == 3);
}

TEST_SUITE_END();
