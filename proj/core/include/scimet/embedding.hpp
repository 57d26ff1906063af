#pragma once

#include "scimet/corpus.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace scimet {

struct TrainConfig {
    int dimension = 100;
    int negatives = 5;
    int epochs = 5;
    double initial_lr = 0.025;
    double final_lr = 0.0001;
    double subsample_threshold = 0.0; // 0 = off
    double smoothing_exponent = 0.75; // unigram distribution raised to this power
    uint64_t seed = 0;
    int workers = 1; // 1 = deterministic mode

    // Throws Config on invalid values.
    void check() const;
};

// Dual item/context vector tables over the keyword vocabulary.
struct EmbeddingTable {
    std::vector<std::string> vocab; // row -> keyword
    std::unordered_map<std::string, uint32_t> index;
    int dimension = 0;
    int negatives = 0;
    uint64_t seed = 0;
    std::vector<float> in_vecs;  // |V| x d, row-major
    std::vector<float> out_vecs; // |V| x d, row-major

    size_t size() const { return vocab.size(); }

    std::optional<uint32_t> lookup(std::string_view keyword) const;

    const float* in_row(uint32_t i) const { return in_vecs.data() + size_t(i) * dimension; }
    const float* out_row(uint32_t j) const { return out_vecs.data() + size_t(j) * dimension; }

    // in_i . out_j accumulated in double precision.
    double dot(uint32_t i, uint32_t j) const;

    // Binary persistence: header {magic "EMB1", d, k, |V|, seed}, then vocab
    // strings, then both matrices row-major little-endian.
    void save(const std::filesystem::path& path) const;
    static EmbeddingTable load(const std::filesystem::path& path);

    // keyword \t d in-components \t d out-components
    void export_tsv(const std::filesystem::path& path) const;
};

// Materialized stream of ordered co-occurrence pairs. Every paper with >= 2
// distinct keywords contributes all ordered pairs (i, j), i != j, once per
// epoch pass; the pass order is a seeded shuffle.
class PairStream {
public:
    PairStream() = default;

    const std::vector<std::string>& vocab() const { return vocab_; }
    // Number of ordered pairs each keyword participates in as context; this is
    // the unigram distribution negative sampling smooths and draws from.
    const std::vector<uint64_t>& context_counts() const { return counts_; }
    size_t pairs_per_epoch() const { return base_pairs_.size(); }
    uint64_t seed() const { return seed_; }

    // A pure function of (stream seed, epoch): the shuffle always starts from
    // build order, whatever was requested before.
    std::span<const std::pair<uint32_t, uint32_t>> epoch(int epoch_index);

    // Pairs in build order (no shuffle), for oracle-style consumers.
    std::span<const std::pair<uint32_t, uint32_t>> unshuffled() const { return base_pairs_; }

private:
    friend PairStream build_pair_stream(const Corpus&, uint64_t, double);

    std::vector<std::string> vocab_;
    std::vector<uint64_t> counts_;
    std::vector<std::pair<uint32_t, uint32_t>> base_pairs_; // build order
    std::vector<std::pair<uint32_t, uint32_t>> pairs_;      // current epoch order
    uint64_t seed_ = 0;
    int shuffled_for_epoch_ = -1;
};

PairStream build_pair_stream(const Corpus& corpus, uint64_t seed,
                             double subsample_threshold = 0.0);

EmbeddingTable train_skipgram(PairStream& pairs, const TrainConfig& config);

// Exact shifted-PMI table over all co-occurring ordered keyword pairs.
struct PmiTable {
    std::vector<std::string> vocab;
    std::unordered_map<std::string, uint32_t> index;
    std::unordered_map<uint64_t, double> pmi; // key (i << 32) | j, unshifted PMI
    std::vector<uint64_t> marginals;          // ordered-pair participation per keyword
    uint64_t total_pairs = 0;
    double shift = 0.0; // log(k)

    static uint64_t key(uint32_t i, uint32_t j) { return (uint64_t(i) << 32) | j; }
    std::optional<double> unshifted(uint32_t i, uint32_t j) const;
    std::optional<double> shifted(uint32_t i, uint32_t j) const;
    size_t pair_count() const { return pmi.size(); }
};

// PMI(i,j) = log[p(i,j) / (p(i) p(j))] from ordered co-occurrence counts over
// all papers; shifted value subtracts log(k). Guarded by a vocabulary cap.
PmiTable exact_pmi(const Corpus& corpus, int k, size_t vocab_cap = 20000);

struct CorrelationReport {
    double pearson_r = 0.0;
    double p_value = 1.0;
    size_t n_pairs = 0;
};

// Pearson correlation between trained inner products in_i . out_j and the
// shifted PMI, over all pairs present in the PMI table.
CorrelationReport approximation_correlation(const EmbeddingTable& table, const PmiTable& pmi);

// Negative-sampling objective and its analytic gradient for one
// (target, context, negatives) sample, at double precision. The training loop
// applies exactly these gradients; the finite-difference check runs against
// the objective.
//   objective = log sigma(t.c) + sum_n log sigma(-t.n)
double sgns_objective(std::span<const double> target_in, std::span<const double> context_out,
                      std::span<const std::vector<double>> negatives_out);

struct SgnsGradient {
    std::vector<double> d_target;
    std::vector<double> d_context;
    std::vector<std::vector<double>> d_negatives;
};

SgnsGradient sgns_gradient(std::span<const double> target_in, std::span<const double> context_out,
                           std::span<const std::vector<double>> negatives_out);

// The fused update step the training loop runs: gradient ascent at rate lr on
// the rows in place, double accumulation, float storage. Exposed so tests can
// pin it to sgns_gradient.
void sgns_apply_update(float* target_in, float* context_out,
                       std::span<float* const> negatives_out, int d, double lr);

} // namespace scimet
