#include "pipeline.hpp"

#include "scimet/error.hpp"

#include <doctest.h>

#include "helpers.hpp"

#include <json.hpp>

#include <map>

using namespace scimet;
using namespace scimet::cli;
using namespace testutil;
using nlohmann::json;

TEST_SUITE_BEGIN("pipeline");

namespace {

std::string small_config(const fs::path& dir, uint64_t seed = 0) {
    json j{{"seed", seed},
           {"inputs",
            {{"papers", (dir / "papers.jsonl").string()},
             {"authorships", (dir / "authorships.jsonl").string()}}},
           {"output_dir", dir.string()},
           {"train", {{"dimension", 12}, {"epochs", 2}}},
           {"contributions", {{"bootstrap_b", 50}}},
           {"synth",
            {{"n_papers", 300},
             {"n_authors", 60},
             {"n_keywords", 30},
             {"n_clusters", 5},
             {"team_min", 2},
             {"team_max", 5},
             {"funded_fraction", 0.4}}}};
    return j.dump(2);
}

} // namespace

TEST_CASE("all subcommand produces every artifact") {
    TempDir dir;
    write_file(dir.file("config.json"), small_config(dir.path));
    REQUIRE(run("synth", dir.file("config.json")) == kExitOk);
    REQUIRE(run("all", dir.file("config.json")) == kExitOk);

    for (const char* name :
         {"validation.json", "embeddings.emb", "embeddings.tsv", "metrics.csv",
          "contributions.csv", "group_distances.json", "regressions.json", "trend.csv"})
        CHECK_MESSAGE(fs::exists(dir.file(name)), name);

    // JSON artifacts parse and reference the manifest.
    for (const char* name : {"validation.json", "group_distances.json", "regressions.json"}) {
        json doc = json::parse(read_file(dir.file(name)));
        CHECK(doc.contains("manifest_hash"));
    }
    // CSV artifacts carry the provenance comment.
    for (const char* name : {"metrics.csv", "contributions.csv", "trend.csv"})
        CHECK(read_file(dir.file(name)).rfind("# manifest_hash=", 0) == 0);

    json manifest = json::parse(read_file(dir.file("manifest-trend.json")));
    CHECK(manifest["tool"] == "scimet");
    CHECK(manifest.contains("outputs"));
}

TEST_CASE("metrics before train fails with the precondition exit code") {
    TempDir dir;
    write_file(dir.file("config.json"), small_config(dir.path));
    REQUIRE(run("synth", dir.file("config.json")) == kExitOk);
    CHECK(run("metrics", dir.file("config.json")) == kExitPrecondition);
    CHECK(run("regress", dir.file("config.json")) == kExitPrecondition);
}

TEST_CASE("config errors exit with code 2") {
    TempDir dir;
    SUBCASE("missing config file") {
        CHECK(run("ingest", dir.file("nope.json")) == kExitConfig);
    }
    SUBCASE("malformed config") {
        write_file(dir.file("bad.json"), "{ not json");
        CHECK(run("ingest", dir.file("bad.json")) == kExitConfig);
    }
    SUBCASE("unknown subcommand") {
        write_file(dir.file("config.json"), small_config(dir.path));
        CHECK(run("frobnicate", dir.file("config.json")) == kExitConfig);
    }
    SUBCASE("missing input paths") {
        write_file(dir.file("config.json"), json{{"output_dir", dir.path.string()}}.dump());
        CHECK(run("ingest", dir.file("config.json")) == kExitConfig);
    }
}

TEST_CASE("validation errors exit with code 3") {
    TempDir dir;
    write_file(dir.file("papers.jsonl"), "{\"paper_id\":\"P1\"}\n"); // missing year
    write_file(dir.file("authorships.jsonl"), "");
    write_file(dir.file("config.json"), small_config(dir.path));
    CHECK(run("ingest", dir.file("config.json")) == kExitValidation);
}

TEST_CASE("rerunning all with an identical config reproduces identical bytes") {
    TempDir dir;
    write_file(dir.file("config.json"), small_config(dir.path, 99));
    REQUIRE(run("synth", dir.file("config.json")) == kExitOk);
    REQUIRE(run("all", dir.file("config.json")) == kExitOk);

    std::vector<std::string> names{"validation.json",   "embeddings.emb",
                                   "embeddings.tsv",    "metrics.csv",
                                   "contributions.csv", "group_distances.json",
                                   "regressions.json",  "trend.csv",
                                   "manifest-train.json"};
    std::map<std::string, std::string> first;
    for (const auto& n : names) first[n] = read_file(dir.file(n));
    std::string papers_before = read_file(dir.file("papers.jsonl"));
    std::string auths_before = read_file(dir.file("authorships.jsonl"));

    REQUIRE(run("all", dir.file("config.json")) == kExitOk);
    for (const auto& n : names) CHECK_MESSAGE(read_file(dir.file(n)) == first[n], n);

    // No subcommand mutates its inputs.
    CHECK(read_file(dir.file("papers.jsonl")) == papers_before);
    CHECK(read_file(dir.file("authorships.jsonl")) == auths_before);
}

TEST_CASE("ingest reports corpus health") {
    TempDir dir;
    write_file(dir.file("config.json"), small_config(dir.path));
    REQUIRE(run("synth", dir.file("config.json")) == kExitOk);
    REQUIRE(run("ingest", dir.file("config.json")) == kExitOk);
    json doc = json::parse(read_file(dir.file("validation.json")));
    CHECK(doc["paper_count"] == 300);
    CHECK(doc["clean"] == true);
}

TEST_CASE("argv entry point") {
    TempDir dir;
    write_file(dir.file("config.json"), small_config(dir.path));
    std::string cfg_arg = dir.file("config.json").string();
    const char* argv[] = {"scimet", "synth", "--config", cfg_arg.c_str()};
    CHECK(main_entry(4, argv) == kExitOk);
    const char* bad[] = {"scimet", "bogus-subcommand"};
    CHECK(main_entry(2, bad) == kExitConfig);
}

TEST_SUITE_END();
