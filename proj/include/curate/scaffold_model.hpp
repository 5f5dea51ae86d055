#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "curate/document.hpp"
#include "curate/parallel.hpp"

namespace curate::scaffold {

struct ModelConfig {
    /// Power of two.
    std::uint32_t bucket_count = 1u << 20;
    std::uint32_t embedding_dim = 16;
    std::uint32_t word_ngram_order = 2;
    /// Inclusive code-point range; char_min = 0 disables character n-grams.
    std::uint32_t char_min = 3;
    std::uint32_t char_max = 6;

    /// Throws ConfigError on a non-power-of-two bucket count, zero dimension or bad ranges.
    void validate() const;
};

/// Hashed ids of word n-grams (orders 1..word_ngram_order) and character
/// n-grams of each "<word>", in text order.
std::vector<std::uint32_t> featurize(std::string_view text, const ModelConfig& config);

/// Linear bag-of-n-grams classifier: mean input embedding, dot output weights, logistic.
struct ScaffoldModel {
    ModelConfig config;
    /// bucket_count x embedding_dim, row-major.
    std::vector<float> input;
    std::vector<float> output;
    float bias = 0.0f;
    /// Decision threshold; absent until calibrated.
    std::optional<double> tau;

    /// Probability of the structured class.
    double score(std::string_view text) const;
    double score_features(const std::vector<std::uint32_t>& features) const;
    /// Logit for pre-computed features.
    double logit(const std::vector<std::uint32_t>& features) const;

    void save(const std::string& path) const;
    static ScaffoldModel load(const std::string& path);
};

struct LabeledExample {
    Document doc;
    bool structured = false;
};

using LabeledCorpus = std::vector<LabeledExample>;

/// Uses each document's "label" field; throws SchemaError when one is missing.
LabeledCorpus labeled_from_documents(std::vector<Document> docs);

struct TrainOptions {
    std::uint32_t epochs = 5;
    double learning_rate = 0.1;
    std::uint64_t seed = 0;
    /// Parallel mode trains per-thread shards and merges them after each epoch.
    /// Results depend on the thread count.
    Execution execution = Execution::Serial;
};

struct TrainResult {
    ScaffoldModel model;
    /// Mean log loss over each epoch, measured before each update.
    std::vector<double> epoch_loss;
};

/// SGD on log loss with a linearly decaying learning rate. Throws TrainingError
/// when the corpus lacks either class, ConfigError on a bad configuration.
TrainResult train_classifier(const LabeledCorpus& corpus, const ModelConfig& config = {},
                             const TrainOptions& options = {});

}  // namespace curate::scaffold
