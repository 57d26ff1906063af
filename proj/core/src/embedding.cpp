#include "scimet/embedding.hpp"

#include "scimet/error.hpp"
#include "scimet/rng.hpp"
#include "scimet/stats.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <thread>

namespace scimet {

void TrainConfig::check() const {
    if (dimension < 2) throw config_error("TrainConfig: dimension must be >= 2");
    if (negatives < 1) throw config_error("TrainConfig: negatives must be >= 1");
    if (epochs < 1) throw config_error("TrainConfig: epochs must be >= 1");
    if (initial_lr <= 0.0 || final_lr <= 0.0)
        throw config_error("TrainConfig: learning rates must be positive");
    if (final_lr > initial_lr)
        throw config_error("TrainConfig: final_lr must not exceed initial_lr");
    if (subsample_threshold < 0.0)
        throw config_error("TrainConfig: subsample_threshold must be >= 0");
    if (smoothing_exponent < 0.0)
        throw config_error("TrainConfig: smoothing_exponent must be >= 0");
    if (workers < 1) throw config_error("TrainConfig: workers must be >= 1");
}

std::optional<uint32_t> EmbeddingTable::lookup(std::string_view keyword) const {
    auto it = index.find(std::string(keyword));
    if (it == index.end()) return std::nullopt;
    return it->second;
}

double EmbeddingTable::dot(uint32_t i, uint32_t j) const {
    const float* a = in_row(i);
    const float* b = out_row(j);
    double s = 0.0;
    for (int c = 0; c < dimension; ++c) s += double(a[c]) * double(b[c]);
    return s;
}

// ---------------------------------------------------------------------------
// Pair stream

PairStream build_pair_stream(const Corpus& corpus, uint64_t seed, double subsample_threshold) {
    PairStream stream;
    stream.seed_ = seed;

    std::unordered_map<std::string, uint32_t> vocab_index;
    auto intern = [&](const std::string& kw) -> uint32_t {
        auto [it, inserted] = vocab_index.emplace(kw, uint32_t(stream.vocab_.size()));
        if (inserted) stream.vocab_.push_back(kw);
        return it->second;
    };

    // Occurrence counts over eligible papers, for the subsampling frequencies.
    std::unordered_map<std::string, uint64_t> occurrences;
    uint64_t total_occurrences = 0;
    if (subsample_threshold > 0.0) {
        for (const auto& p : corpus.papers()) {
            if (p.keywords.size() < 2) continue;
            for (const auto& kw : p.keywords) {
                ++occurrences[kw];
                ++total_occurrences;
            }
        }
    }

    Rng sub_rng(derive_seed(seed, "subsample"));
    std::vector<uint32_t> kept;
    for (const auto& p : corpus.papers()) {
        if (p.keywords.size() < 2) continue;
        kept.clear();
        for (const auto& kw : p.keywords) {
            if (subsample_threshold > 0.0) {
                double freq = double(occurrences[kw]) / double(total_occurrences);
                double keep = std::min(1.0, std::sqrt(subsample_threshold / freq));
                if (!sub_rng.bernoulli(keep)) continue;
            }
            kept.push_back(intern(kw));
        }
        if (kept.size() < 2) continue;
        for (uint32_t a : kept)
            for (uint32_t b : kept)
                if (a != b) stream.base_pairs_.emplace_back(a, b);
    }

    stream.counts_.assign(stream.vocab_.size(), 0);
    for (const auto& [t, c] : stream.base_pairs_) {
        (void)t;
        ++stream.counts_[c];
    }
    return stream;
}

std::span<const std::pair<uint32_t, uint32_t>> PairStream::epoch(int epoch_index) {
    if (shuffled_for_epoch_ != epoch_index) {
        pairs_ = base_pairs_;
        Rng rng(derive_seed(seed_, "shuffle-epoch-" + std::to_string(epoch_index)));
        rng.shuffle(pairs_);
        shuffled_for_epoch_ = epoch_index;
    }
    return pairs_;
}

// ---------------------------------------------------------------------------
// Negative sampling

namespace {

// Vose alias table over an unnormalized weight vector.
class AliasTable {
public:
    explicit AliasTable(const std::vector<double>& weights) {
        const size_t n = weights.size();
        prob_.resize(n);
        alias_.resize(n);
        double total = 0.0;
        for (double w : weights) total += w;
        std::vector<double> scaled(n);
        std::vector<uint32_t> small, large;
        for (size_t i = 0; i < n; ++i) {
            scaled[i] = weights[i] * double(n) / total;
            (scaled[i] < 1.0 ? small : large).push_back(uint32_t(i));
        }
        while (!small.empty() && !large.empty()) {
            uint32_t s = small.back();
            small.pop_back();
            uint32_t l = large.back();
            large.pop_back();
            prob_[s] = scaled[s];
            alias_[s] = l;
            scaled[l] = (scaled[l] + scaled[s]) - 1.0;
            (scaled[l] < 1.0 ? small : large).push_back(l);
        }
        for (uint32_t i : large) prob_[i] = 1.0;
        for (uint32_t i : small) prob_[i] = 1.0;
    }

    uint32_t sample(Rng& rng) const {
        uint32_t i = uint32_t(rng.below(prob_.size()));
        return rng.uniform() < prob_[i] ? i : alias_[i];
    }

private:
    std::vector<double> prob_;
    std::vector<uint32_t> alias_;
};

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// One SGD step for a (target, context, negatives) sample; gradient ascent on
// the negative-sampling objective, accumulated in double precision. Matches
// sgns_gradient exactly: out-row updates read the pre-update target row and
// the target update reads the pre-update out rows.
void sgns_update(float* target_in, float* context_out, const std::vector<float*>& negatives_out,
                 int d, double lr, std::vector<double>& target_grad) {
    target_grad.assign(size_t(d), 0.0);

    double dot_tc = 0.0;
    for (int i = 0; i < d; ++i) dot_tc += double(target_in[i]) * double(context_out[i]);
    double g = 1.0 - sigmoid(dot_tc);
    for (int i = 0; i < d; ++i) {
        target_grad[i] += g * double(context_out[i]);
        context_out[i] = float(double(context_out[i]) + lr * g * double(target_in[i]));
    }

    for (float* neg : negatives_out) {
        double dot_tn = 0.0;
        for (int i = 0; i < d; ++i) dot_tn += double(target_in[i]) * double(neg[i]);
        double gn = -sigmoid(dot_tn);
        for (int i = 0; i < d; ++i) {
            target_grad[i] += gn * double(neg[i]);
            neg[i] = float(double(neg[i]) + lr * gn * double(target_in[i]));
        }
    }

    for (int i = 0; i < d; ++i)
        target_in[i] = float(double(target_in[i]) + lr * target_grad[i]);
}

} // namespace

void sgns_apply_update(float* target_in, float* context_out,
                       std::span<float* const> negatives_out, int d, double lr) {
    std::vector<double> scratch;
    std::vector<float*> negs(negatives_out.begin(), negatives_out.end());
    sgns_update(target_in, context_out, negs, d, lr, scratch);
}

namespace {

void check_finite(const EmbeddingTable& table, int epoch) {
    for (size_t i = 0; i < table.in_vecs.size(); ++i) {
        if (!std::isfinite(table.in_vecs[i]) || !std::isfinite(table.out_vecs[i]))
            throw convergence_error(
                "training produced a non-finite value at epoch " + std::to_string(epoch) +
                ", component " + std::to_string(i) +
                "; lower the learning rate or check the input corpus");
    }
}

} // namespace

EmbeddingTable train_skipgram(PairStream& pairs, const TrainConfig& config) {
    config.check();
    if (pairs.vocab().empty())
        throw precondition_error("train_skipgram: empty vocabulary (no paper has >= 2 keywords)");

    const int d = config.dimension;
    const size_t vocab_size = pairs.vocab().size();

    EmbeddingTable table;
    table.vocab = pairs.vocab();
    table.dimension = d;
    table.negatives = config.negatives;
    table.seed = config.seed;
    table.index.reserve(vocab_size * 2);
    for (uint32_t i = 0; i < vocab_size; ++i) table.index.emplace(table.vocab[i], i);

    // Classic asymmetric init: item vectors uniform in [-0.5/d, 0.5/d],
    // context vectors zero.
    table.in_vecs.resize(vocab_size * size_t(d));
    table.out_vecs.assign(vocab_size * size_t(d), 0.0f);
    Rng init_rng(derive_seed(config.seed, "init"));
    for (auto& v : table.in_vecs) v = float(init_rng.uniform(-0.5 / d, 0.5 / d));

    std::vector<double> weights(vocab_size);
    for (size_t i = 0; i < vocab_size; ++i)
        weights[i] = std::pow(double(pairs.context_counts()[i]), config.smoothing_exponent);
    AliasTable alias(weights);

    const size_t total_updates = size_t(config.epochs) * pairs.pairs_per_epoch();
    if (total_updates == 0)
        throw precondition_error("train_skipgram: pair stream is empty");
    std::atomic<size_t> done{0};

    auto run_span = [&](std::span<const std::pair<uint32_t, uint32_t>> span, Rng rng) {
        std::vector<double> scratch;
        std::vector<float*> negs;
        negs.reserve(size_t(config.negatives));
        size_t local = 0;
        double lr = config.initial_lr;
        for (const auto& [t, c] : span) {
            if ((local & 63) == 0) {
                size_t global = done.load(std::memory_order_relaxed) + local;
                double progress = double(global) / double(total_updates);
                lr = config.initial_lr - (config.initial_lr - config.final_lr) * progress;
                if (lr < config.final_lr) lr = config.final_lr;
            }
            negs.clear();
            for (int n = 0; n < config.negatives; ++n) {
                uint32_t neg = alias.sample(rng);
                int tries = 0;
                while (neg == c && ++tries <= 100) neg = alias.sample(rng);
                if (neg == c) continue; // could not avoid the true context; skip
                negs.push_back(table.out_vecs.data() + size_t(neg) * d);
            }
            sgns_update(table.in_vecs.data() + size_t(t) * d,
                        table.out_vecs.data() + size_t(c) * d, negs, d, lr, scratch);
            ++local;
        }
        done.fetch_add(local, std::memory_order_relaxed);
    };

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        auto span = pairs.epoch(epoch);
        if (config.workers == 1) {
            Rng rng(derive_seed(config.seed, "negatives-epoch-" + std::to_string(epoch)));
            run_span(span, std::move(rng));
        } else {
            // Asynchronous SGD: workers update the shared tables without
            // mutual exclusion; races are tolerated by contract.
            std::vector<std::thread> threads;
            size_t chunk = (span.size() + config.workers - 1) / size_t(config.workers);
            for (int w = 0; w < config.workers; ++w) {
                size_t lo = std::min(size_t(w) * chunk, span.size());
                size_t hi = std::min(lo + chunk, span.size());
                if (lo >= hi) break;
                Rng rng(derive_seed(config.seed, "negatives-epoch-" + std::to_string(epoch) +
                                                     "-worker-" + std::to_string(w)));
                threads.emplace_back(run_span, span.subspan(lo, hi - lo), std::move(rng));
            }
            for (auto& t : threads) t.join();
        }
        check_finite(table, epoch);
    }
    return table;
}

// ---------------------------------------------------------------------------
// Objective and analytic gradient (double precision reference)

double sgns_objective(std::span<const double> target_in, std::span<const double> context_out,
                      std::span<const std::vector<double>> negatives_out) {
    auto dot = [](std::span<const double> a, std::span<const double> b) {
        double s = 0.0;
        for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
        return s;
    };
    double obj = std::log(sigmoid(dot(target_in, context_out)));
    for (const auto& neg : negatives_out) obj += std::log(sigmoid(-dot(target_in, neg)));
    return obj;
}

SgnsGradient sgns_gradient(std::span<const double> target_in, std::span<const double> context_out,
                           std::span<const std::vector<double>> negatives_out) {
    const size_t d = target_in.size();
    SgnsGradient grad;
    grad.d_target.assign(d, 0.0);
    grad.d_context.assign(d, 0.0);
    grad.d_negatives.resize(negatives_out.size());

    double dot_tc = 0.0;
    for (size_t i = 0; i < d; ++i) dot_tc += target_in[i] * context_out[i];
    double g = 1.0 - sigmoid(dot_tc);
    for (size_t i = 0; i < d; ++i) {
        grad.d_target[i] += g * context_out[i];
        grad.d_context[i] = g * target_in[i];
    }
    for (size_t n = 0; n < negatives_out.size(); ++n) {
        const auto& neg = negatives_out[n];
        double dot_tn = 0.0;
        for (size_t i = 0; i < d; ++i) dot_tn += target_in[i] * neg[i];
        double gn = -sigmoid(dot_tn);
        grad.d_negatives[n].assign(d, 0.0);
        for (size_t i = 0; i < d; ++i) {
            grad.d_target[i] += gn * neg[i];
            grad.d_negatives[n][i] = gn * target_in[i];
        }
    }
    return grad;
}

// ---------------------------------------------------------------------------
// Exact PMI oracle

std::optional<double> PmiTable::unshifted(uint32_t i, uint32_t j) const {
    auto it = pmi.find(key(i, j));
    if (it == pmi.end()) return std::nullopt;
    return it->second;
}

std::optional<double> PmiTable::shifted(uint32_t i, uint32_t j) const {
    auto it = pmi.find(key(i, j));
    if (it == pmi.end()) return std::nullopt;
    return it->second - shift;
}

PmiTable exact_pmi(const Corpus& corpus, int k, size_t vocab_cap) {
    if (k < 1) throw config_error("exact_pmi: k must be >= 1");

    PmiTable table;
    table.shift = std::log(double(k));

    auto intern = [&](const std::string& kw) -> uint32_t {
        auto [it, inserted] = table.index.emplace(kw, uint32_t(table.vocab.size()));
        if (inserted) table.vocab.push_back(kw);
        return it->second;
    };

    std::unordered_map<uint64_t, uint64_t> pair_counts;
    std::vector<uint32_t> ids;
    for (const auto& p : corpus.papers()) {
        if (p.keywords.size() < 2) continue;
        ids.clear();
        for (const auto& kw : p.keywords) ids.push_back(intern(kw));
        if (table.vocab.size() > vocab_cap)
            throw precondition_error(
                "exact_pmi: vocabulary exceeds the cap of " + std::to_string(vocab_cap) +
                " keywords; raise the cap or run on a sampled sub-corpus");
        for (uint32_t a : ids)
            for (uint32_t b : ids)
                if (a != b) ++pair_counts[PmiTable::key(a, b)];
    }

    table.marginals.assign(table.vocab.size(), 0);
    uint64_t total = 0;
    for (const auto& [key, count] : pair_counts) {
        table.marginals[uint32_t(key >> 32)] += count;
        total += count;
    }
    table.total_pairs = total;

    table.pmi.reserve(pair_counts.size() * 2);
    for (const auto& [key, count] : pair_counts) {
        uint32_t i = uint32_t(key >> 32);
        uint32_t j = uint32_t(key & 0xffffffffu);
        // log[p(i,j) / (p(i) p(j))] = log[n_ij * N / (n_i * n_j)]; the ordered
        // pair construction makes first and second marginals identical.
        double v = std::log(double(count) * double(total) /
                            (double(table.marginals[i]) * double(table.marginals[j])));
        table.pmi.emplace(key, v);
    }
    return table;
}

CorrelationReport approximation_correlation(const EmbeddingTable& table, const PmiTable& pmi) {
    std::vector<uint64_t> keys;
    keys.reserve(pmi.pmi.size());
    for (const auto& [key, v] : pmi.pmi) {
        (void)v;
        keys.push_back(key);
    }
    std::sort(keys.begin(), keys.end());

    std::vector<double> dots, shifted;
    dots.reserve(keys.size());
    shifted.reserve(keys.size());
    for (uint64_t key : keys) {
        uint32_t i = uint32_t(key >> 32);
        uint32_t j = uint32_t(key & 0xffffffffu);
        auto ti = table.lookup(pmi.vocab[i]);
        auto tj = table.lookup(pmi.vocab[j]);
        if (!ti || !tj) continue;
        dots.push_back(table.dot(*ti, *tj));
        shifted.push_back(pmi.pmi.at(key) - pmi.shift);
    }
    if (dots.size() < 10)
        throw precondition_error("approximation_correlation: fewer than 10 common pairs (" +
                                 std::to_string(dots.size()) + ")");
    auto res = stats::pearson(dots, shifted);
    return CorrelationReport{res.r, res.p_value, res.n};
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

constexpr char kMagic[4] = {'E', 'M', 'B', '1'};

template <typename T>
void write_pod(std::ofstream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in, const std::filesystem::path& path) {
    T v;
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw io_error("truncated embedding file " + path.string());
    return v;
}

} // namespace

void EmbeddingTable::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write " + path.string());
    out.write(kMagic, 4);
    write_pod(out, uint32_t(dimension));
    write_pod(out, uint32_t(negatives));
    write_pod(out, uint64_t(vocab.size()));
    write_pod(out, seed);
    for (const auto& w : vocab) {
        write_pod(out, uint32_t(w.size()));
        out.write(w.data(), std::streamsize(w.size()));
    }
    out.write(reinterpret_cast<const char*>(in_vecs.data()),
              std::streamsize(in_vecs.size() * sizeof(float)));
    out.write(reinterpret_cast<const char*>(out_vecs.data()),
              std::streamsize(out_vecs.size() * sizeof(float)));
    if (!out) throw io_error("failed writing " + path.string());
}

EmbeddingTable EmbeddingTable::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw validation_error(path.string() + " is not an EMB1 embedding file");

    EmbeddingTable table;
    table.dimension = int(read_pod<uint32_t>(in, path));
    table.negatives = int(read_pod<uint32_t>(in, path));
    uint64_t vocab_size = read_pod<uint64_t>(in, path);
    table.seed = read_pod<uint64_t>(in, path);
    table.vocab.reserve(vocab_size);
    for (uint64_t i = 0; i < vocab_size; ++i) {
        uint32_t len = read_pod<uint32_t>(in, path);
        std::string w(len, '\0');
        in.read(w.data(), len);
        if (!in) throw io_error("truncated embedding file " + path.string());
        table.index.emplace(w, uint32_t(i));
        table.vocab.push_back(std::move(w));
    }
    size_t cells = size_t(vocab_size) * size_t(table.dimension);
    table.in_vecs.resize(cells);
    table.out_vecs.resize(cells);
    in.read(reinterpret_cast<char*>(table.in_vecs.data()), std::streamsize(cells * sizeof(float)));
    in.read(reinterpret_cast<char*>(table.out_vecs.data()), std::streamsize(cells * sizeof(float)));
    if (!in) throw io_error("truncated embedding file " + path.string());
    return table;
}

void EmbeddingTable::export_tsv(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write " + path.string());
    char buf[64];
    for (size_t i = 0; i < vocab.size(); ++i) {
        out << vocab[i];
        const float* in_v = in_row(uint32_t(i));
        const float* out_v = out_row(uint32_t(i));
        for (int c = 0; c < dimension; ++c) {
            std::snprintf(buf, sizeof buf, "%.8g", double(in_v[c]));
            out << '\t' << buf;
        }
        for (int c = 0; c < dimension; ++c) {
            std::snprintf(buf, sizeof buf, "%.8g", double(out_v[c]));
            out << '\t' << buf;
        }
        out << '\n';
    }
}

} // namespace scimet
