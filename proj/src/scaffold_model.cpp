#include "curate/scaffold_model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include <omp.h>

#include "curate/error.hpp"
#include "curate/rng.hpp"
#include "curate/text.hpp"

namespace curate::scaffold {

namespace {

constexpr char kMagic[4] = {'S', 'C', 'F', 'M'};
constexpr std::uint32_t kVersion = 1;

double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

template <typename T>
void put(std::ostream& out, T value) {
    static_assert(std::endian::native == std::endian::little);
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) throw ParseError("model file is truncated");
    return value;
}

std::uint32_t bucket(std::string_view tag, std::string_view gram, std::uint32_t mask) {
    return static_cast<std::uint32_t>(text::mix64(text::fnv1a64(gram, text::fnv1a64(tag)))) & mask;
}

}  // namespace

void ModelConfig::validate() const {
    if (bucket_count == 0 || !std::has_single_bit(bucket_count))
        throw ConfigError("bucket_count must be a power of two");
    if (embedding_dim == 0) throw ConfigError("embedding_dim must be positive");
    if (word_ngram_order == 0) throw ConfigError("word_ngram_order must be at least 1");
    if (char_min > char_max) throw ConfigError("char n-gram range is empty");
}

std::vector<std::uint32_t> featurize(std::string_view text, const ModelConfig& config) {
    std::vector<std::uint32_t> ids;
    const auto words = text::split_words(text);
    const auto mask = config.bucket_count - 1;
    std::string gram;
    for (std::size_t i = 0; i < words.size(); ++i) {
        gram.assign(words[i]);
        ids.push_back(bucket("w", gram, mask));
        for (std::uint32_t n = 2; n <= config.word_ngram_order && i + n <= words.size(); ++n) {
            gram += ' ';
            gram += words[i + n - 1];
            ids.push_back(bucket("w", gram, mask));
        }
        if (config.char_min == 0) continue;
        // code point boundaries of "<word>"
        const std::string marked = "<" + std::string(words[i]) + ">";
        std::vector<std::size_t> starts;
        for (std::size_t p = 0; p < marked.size();) {
            starts.push_back(p);
            text::next_code_point(marked, p);
        }
        starts.push_back(marked.size());
        const auto cps = starts.size() - 1;
        for (std::size_t b = 0; b < cps; ++b) {
            for (std::uint32_t n = config.char_min; n <= config.char_max && b + n <= cps; ++n) {
                ids.push_back(bucket("c", std::string_view(marked).substr(starts[b], starts[b + n] - starts[b]), mask));
            }
        }
    }
    return ids;
}

double ScaffoldModel::logit(const std::vector<std::uint32_t>& features) const {
    const auto dim = config.embedding_dim;
    if (features.empty()) return bias;
    std::vector<double> h(dim, 0.0);
    for (auto f : features) {
        const float* row = &input[static_cast<std::size_t>(f) * dim];
        for (std::uint32_t d = 0; d < dim; ++d) h[d] += row[d];
    }
    double z = bias;
    const double inv = 1.0 / static_cast<double>(features.size());
    for (std::uint32_t d = 0; d < dim; ++d) z += h[d] * inv * output[d];
    return z;
}

double ScaffoldModel::score_features(const std::vector<std::uint32_t>& features) const {
    return sigmoid(logit(features));
}

double ScaffoldModel::score(std::string_view text) const { return score_features(featurize(text, config)); }

void ScaffoldModel::save(const std::string& path) const {
    const auto tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ConfigError("cannot write model file " + path);
        out.write(kMagic, 4);
        put(out, kVersion);
        put(out, config.bucket_count);
        put(out, config.embedding_dim);
        put(out, config.word_ngram_order);
        put(out, config.char_min);
        put(out, config.char_max);
        out.write(reinterpret_cast<const char*>(input.data()), static_cast<std::streamsize>(input.size() * sizeof(float)));
        out.write(reinterpret_cast<const char*>(output.data()),
                  static_cast<std::streamsize>(output.size() * sizeof(float)));
        put(out, bias);
        put(out, static_cast<std::uint8_t>(tau.has_value()));
        put(out, tau.value_or(0.0));
        if (!out) throw ConfigError("cannot write model file " + path);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) throw ConfigError("cannot write model file " + path);
}

ScaffoldModel ScaffoldModel::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open model file " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) throw ParseError(path + ": not a scaffold model file");
    if (get<std::uint32_t>(in) != kVersion) throw ParseError(path + ": unsupported model version");
    ScaffoldModel m;
    m.config.bucket_count = get<std::uint32_t>(in);
    m.config.embedding_dim = get<std::uint32_t>(in);
    m.config.word_ngram_order = get<std::uint32_t>(in);
    m.config.char_min = get<std::uint32_t>(in);
    m.config.char_max = get<std::uint32_t>(in);
    try {
        m.config.validate();
    } catch (const ConfigError& e) {
        throw ParseError(path + ": " + e.what());
    }
    m.input.resize(static_cast<std::size_t>(m.config.bucket_count) * m.config.embedding_dim);
    m.output.resize(m.config.embedding_dim);
    in.read(reinterpret_cast<char*>(m.input.data()), static_cast<std::streamsize>(m.input.size() * sizeof(float)));
    in.read(reinterpret_cast<char*>(m.output.data()), static_cast<std::streamsize>(m.output.size() * sizeof(float)));
    if (!in) throw ParseError(path + ": model file is truncated");
    m.bias = get<float>(in);
    const auto has_tau = get<std::uint8_t>(in);
    const auto tau = get<double>(in);
    if (has_tau) m.tau = tau;
    auto finite = [](float v) { return std::isfinite(v); };
    if (!std::all_of(m.input.begin(), m.input.end(), finite) || !std::all_of(m.output.begin(), m.output.end(), finite) ||
        !std::isfinite(m.bias))
        throw ParseError(path + ": non-finite weights");
    return m;
}

LabeledCorpus labeled_from_documents(std::vector<Document> docs) {
    LabeledCorpus out;
    out.reserve(docs.size());
    for (auto& d : docs) {
        if (!d.structured) throw SchemaError("document " + d.id + " has no label");
        const bool label = *d.structured;
        out.push_back({std::move(d), label});
    }
    return out;
}

namespace {

struct Example {
    std::vector<std::uint32_t> features;
    bool label;
};

/// One SGD step; returns the log loss before the update.
double sgd_step(ScaffoldModel& m, const Example& ex, double lr, std::vector<double>& h, std::vector<double>& grad) {
    const auto dim = m.config.embedding_dim;
    std::fill(h.begin(), h.end(), 0.0);
    const auto n = ex.features.size();
    if (n > 0) {
        for (auto f : ex.features) {
            const float* row = &m.input[static_cast<std::size_t>(f) * dim];
            for (std::uint32_t d = 0; d < dim; ++d) h[d] += row[d];
        }
        for (auto& v : h) v /= static_cast<double>(n);
    }
    double z = m.bias;
    for (std::uint32_t d = 0; d < dim; ++d) z += h[d] * m.output[d];
    const double p = sigmoid(z);
    const double y = ex.label ? 1.0 : 0.0;
    constexpr double eps = 1e-12;
    const double loss = ex.label ? -std::log(std::max(p, eps)) : -std::log(std::max(1.0 - p, eps));
    const double g = lr * (y - p);
    for (std::uint32_t d = 0; d < dim; ++d) {
        grad[d] = g * m.output[d];
        m.output[d] += static_cast<float>(g * h[d]);
    }
    m.bias += static_cast<float>(g);
    if (n > 0) {
        for (auto& v : grad) v /= static_cast<double>(n);
        for (auto f : ex.features) {
            float* row = &m.input[static_cast<std::size_t>(f) * dim];
            for (std::uint32_t d = 0; d < dim; ++d) row[d] += static_cast<float>(grad[d]);
        }
    }
    return loss;
}

}  // namespace

TrainResult train_classifier(const LabeledCorpus& corpus, const ModelConfig& config, const TrainOptions& options) {
    config.validate();
    if (!(options.learning_rate > 0.0) || !std::isfinite(options.learning_rate))
        throw ConfigError("learning_rate must be positive");
    const bool has_pos = std::any_of(corpus.begin(), corpus.end(), [](const auto& e) { return e.structured; });
    const bool has_neg = std::any_of(corpus.begin(), corpus.end(), [](const auto& e) { return !e.structured; });
    if (!has_pos || !has_neg) throw TrainingError("training corpus needs both structured and unstructured examples");

    TrainResult result;
    auto& m = result.model;
    m.config = config;
    const auto dim = config.embedding_dim;
    m.input.resize(static_cast<std::size_t>(config.bucket_count) * dim);
    auto init = rng::engine(options.seed, "scaffold.init");
    const double scale = 1.0 / static_cast<double>(dim);
    for (auto& v : m.input) v = static_cast<float>((2.0 * rng::open_unit(init) - 1.0) * scale);
    m.output.assign(dim, 0.0f);

    std::vector<Example> examples(corpus.size());
    const auto feats = map_indices(corpus.size(), options.execution,
                                   [&](std::size_t i) { return featurize(corpus[i].doc.text, config); });
    for (std::size_t i = 0; i < corpus.size(); ++i) examples[i] = {feats[i], corpus[i].structured};

    const double total_steps = static_cast<double>(options.epochs) * static_cast<double>(examples.size());
    std::vector<std::size_t> order(examples.size());
    std::size_t step = 0;
    for (std::uint32_t epoch = 0; epoch < options.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        auto gen = rng::engine(options.seed, "scaffold.shuffle", epoch);
        std::shuffle(order.begin(), order.end(), gen);
        double loss_sum = 0.0;

        if (options.execution == Execution::Serial) {
            std::vector<double> h(dim), grad(dim);
            for (auto idx : order) {
                const double lr = options.learning_rate * (1.0 - static_cast<double>(step++) / total_steps);
                loss_sum += sgd_step(m, examples[idx], lr, h, grad);
            }
        } else {
            // each thread trains a copy on a contiguous shard; deltas are summed
            // for the embeddings and averaged for the output layer
            const ScaffoldModel base = m;
            const int threads = std::max(1, omp_get_max_threads());
            std::vector<ScaffoldModel> shards(static_cast<std::size_t>(threads), base);
            std::vector<double> shard_loss(static_cast<std::size_t>(threads), 0.0);
            const auto epoch_start = step;
            const auto n = order.size();
#pragma omp parallel num_threads(threads)
            {
                const auto t = static_cast<std::size_t>(omp_get_thread_num());
                const auto nt = static_cast<std::size_t>(omp_get_num_threads());
                const auto begin = n * t / nt;
                const auto end = n * (t + 1) / nt;
                std::vector<double> h(dim), grad(dim);
                for (std::size_t k = begin; k < end; ++k) {
                    const auto local_step = epoch_start + (k - begin) * nt;
                    const double lr = options.learning_rate * (1.0 - static_cast<double>(local_step) / total_steps);
                    shard_loss[t] += sgd_step(shards[t], examples[order[k]], std::max(lr, 0.0), h, grad);
                }
            }
            step += n;
            for (std::size_t i = 0; i < m.input.size(); ++i) {
                double v = base.input[i];
                for (const auto& s : shards) v += s.input[i] - base.input[i];
                m.input[i] = static_cast<float>(v);
            }
            for (std::uint32_t d = 0; d < dim; ++d) {
                double v = 0.0;
                for (const auto& s : shards) v += s.output[d];
                m.output[d] = static_cast<float>(v / static_cast<double>(shards.size()));
            }
            double b = 0.0;
            for (const auto& s : shards) b += s.bias;
            m.bias = static_cast<float>(b / static_cast<double>(shards.size()));
            for (auto l : shard_loss) loss_sum += l;
        }
        result.epoch_loss.push_back(examples.empty() ? 0.0 : loss_sum / static_cast<double>(examples.size()));
    }
    return result;
}

}  // namespace curate::scaffold
