#pragma once

#include "scimet/contributions.hpp"
#include "scimet/corpus.hpp"
#include "scimet/econometrics.hpp"
#include "scimet/embedding.hpp"
#include "scimet/metrics.hpp"
#include "scimet/synth.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace scimet::cli {

// Exit codes per failure class.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitValidation = 3;
inline constexpr int kExitConvergence = 4;
inline constexpr int kExitPrecondition = 5;

// Everything that affects numbers lives in the config file; flags only select
// subcommand, config path and verbosity.
struct PipelineConfig {
    std::filesystem::path papers_path;
    std::filesystem::path authorships_path;
    std::filesystem::path output_dir = "out";
    uint64_t seed = 0;

    LoadOptions load;
    TrainConfig train;
    MetricsOptions metrics;
    ContributionOptions contrib;
    uint32_t bootstrap_b = 500;
    double ci_level = 0.95;
    EconOptions econ;
    int trend_bucket_years = 5;
    bool trend_funded_only = false;
    GeneratorConfig synth;

    // Parses the JSON config; component seeds are derived from the top-level
    // seed by fixed name-keyed derivation. Throws Config on any problem.
    static PipelineConfig load_file(const std::filesystem::path& path);

    nlohmann::json echo() const;
};

uint64_t fnv1a64_file(const std::filesystem::path& path);
std::string hex64(uint64_t v);

// Runs one subcommand: synth | ingest | train | metrics | contributions |
// regress | trend | all. Returns an exit code; never throws.
int run(const std::string& subcommand, const std::filesystem::path& config_path,
        int verbosity = 0);

// argv-level entry used by the binary and by tests.
int main_entry(int argc, const char* const* argv);

} // namespace scimet::cli
