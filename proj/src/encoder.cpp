#include "wsd/encoder.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

#include "wsd/rng.hpp"

namespace wsd {

void EncoderConfig::validate() const {
    if (embedding_dim < 2) throw ConfigError("embedding_dim must be >= 2");
    if (hash_buckets < 2) throw ConfigError("hash_buckets must be >= 2");
    if (context_window < 1) throw ConfigError("context_window must be >= 1");
}

GradBuffer::GradBuffer(const EncoderConfig& config) {
    theta.embeddings.assign(config.hash_buckets * config.embedding_dim, 0.0);
    theta.projection.assign(config.embedding_dim * config.embedding_dim, 0.0);
    theta.bias.assign(config.embedding_dim, 0.0);
}

void GradBuffer::zero() {
    std::fill(theta.embeddings.begin(), theta.embeddings.end(), 0.0);
    std::fill(theta.projection.begin(), theta.projection.end(), 0.0);
    std::fill(theta.bias.begin(), theta.bias.end(), 0.0);
}

namespace {

EncoderParams init_params(const EncoderConfig& config, const char* label) {
    EncoderParams params;
    const std::size_t d = config.embedding_dim;
    params.embeddings.resize(config.hash_buckets * d);
    auto rng = derive_stream(config.seed, {label, "embeddings"});
    for (double& v : params.embeddings) v = rng.uniform(-0.05, 0.05);

    // Identity projection: the untrained encoder is already a usable frozen
    // featurizer.
    params.projection.assign(d * d, 0.0);
    for (std::size_t i = 0; i < d; ++i) params.projection[i * d + i] = 1.0;
    params.bias.assign(d, 0.0);
    return params;
}

}  // namespace

EncoderModel init_encoder(const EncoderConfig& config) {
    config.validate();
    EncoderModel model;
    model.config = config;
    model.theta = init_params(config, "theta");
    if (config.gloss_encoder) {
        model.phi = init_params(config, "phi");
        const std::size_t d = config.embedding_dim;
        model.gloss_projection.assign(d * d, 0.0);
        for (std::size_t i = 0; i < d; ++i) model.gloss_projection[i * d + i] = 1.0;
    }
    return model;
}

std::size_t parameter_count(const EncoderConfig& config) {
    const std::size_t d = config.embedding_dim;
    std::size_t n = config.hash_buckets * d + d * d + d;
    if (config.gloss_encoder) n += config.hash_buckets * d + d * d + d + d * d;
    return n;
}

std::vector<std::string> token_subunits(std::string_view token) {
    std::string lower(token);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });

    std::vector<std::string> units;
    units.push_back(lower);
    if (lower.size() >= 3) {
        for (std::size_t i = 0; i + 3 <= lower.size(); ++i) {
            units.push_back(lower.substr(i, 3));
        }
    }
    return units;
}

std::size_t subunit_bucket(std::string_view subunit, std::size_t hash_buckets) {
    return static_cast<std::size_t>(hash64(subunit) % hash_buckets);
}

namespace {

void add_token_vector(const EncoderParams& params, const EncoderConfig& config,
                      std::string_view token, double scale, std::vector<double>& out) {
    auto units = token_subunits(token);
    const double unit_scale = scale / static_cast<double>(units.size());
    const std::size_t d = config.embedding_dim;
    for (const auto& unit : units) {
        const double* row = &params.embeddings[subunit_bucket(unit, config.hash_buckets) * d];
        for (std::size_t i = 0; i < d; ++i) out[i] += unit_scale * row[i];
    }
}

void project(const EncoderParams& params, std::size_t d, const std::vector<double>& pooled,
             ContextVector& out) {
    out.assign(d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
        double acc = params.bias[i];
        const double* row = &params.projection[i * d];
        for (std::size_t j = 0; j < d; ++j) acc += row[j] * pooled[j];
        out[i] = acc;
    }
}

struct WindowSpan {
    std::size_t lo;
    std::size_t hi;  // inclusive
    std::size_t size() const { return hi - lo + 1; }
};

WindowSpan context_window_span(const Instance& instance, std::size_t window) {
    const std::size_t t = instance.target_index;
    const std::size_t lo = t >= window ? t - window : 0;
    const std::size_t hi = std::min(instance.tokens.size() - 1, t + window);
    return {lo, hi};
}

}  // namespace

ContextVector token_vector(const EncoderModel& model, std::string_view token) {
    std::vector<double> out(model.config.embedding_dim, 0.0);
    add_token_vector(model.theta, model.config, token, 1.0, out);
    return out;
}

ContextVector encode(const EncoderModel& model, const Instance& instance) {
    if (instance.tokens.empty() || instance.target_index >= instance.tokens.size()) {
        throw DataError("instance '" + instance.id + "' has an invalid target position");
    }
    const std::size_t d = model.config.embedding_dim;
    const auto span = context_window_span(instance, model.config.context_window);

    std::vector<double> pooled(d, 0.0);
    const double window_scale = 0.5 / static_cast<double>(span.size());
    for (std::size_t i = span.lo; i <= span.hi; ++i) {
        add_token_vector(model.theta, model.config, instance.tokens[i], window_scale, pooled);
    }
    add_token_vector(model.theta, model.config, instance.tokens[instance.target_index], 0.5,
                     pooled);

    ContextVector out;
    project(model.theta, d, pooled, out);
    return out;
}

ContextVector encode_gloss(const EncoderModel& model, const std::vector<std::string>& gloss) {
    if (!model.phi.has_value()) throw ConfigError("gloss encoder is not enabled on this model");
    if (gloss.empty()) throw DataError("cannot encode an empty gloss");

    const std::size_t d = model.config.embedding_dim;
    std::vector<double> pooled(d, 0.0);
    const double scale = 1.0 / static_cast<double>(gloss.size());
    for (const auto& token : gloss) {
        add_token_vector(*model.phi, model.config, token, scale, pooled);
    }

    ContextVector out;
    project(*model.phi, d, pooled, out);
    return out;
}

void encode_backward(const EncoderModel& model, const Instance& instance,
                     std::span<const double> upstream, GradBuffer& grads) {
    const std::size_t d = model.config.embedding_dim;
    if (upstream.size() != d) throw std::invalid_argument("upstream gradient has wrong dimension");
    const auto span = context_window_span(instance, model.config.context_window);

    // Recompute the pooled pre-projection vector.
    std::vector<double> pooled(d, 0.0);
    const double window_scale = 0.5 / static_cast<double>(span.size());
    for (std::size_t i = span.lo; i <= span.hi; ++i) {
        add_token_vector(model.theta, model.config, instance.tokens[i], window_scale, pooled);
    }
    add_token_vector(model.theta, model.config, instance.tokens[instance.target_index], 0.5,
                     pooled);

    // bias and projection
    for (std::size_t i = 0; i < d; ++i) {
        grads.theta.bias[i] += upstream[i];
        double* row = &grads.theta.projection[i * d];
        for (std::size_t j = 0; j < d; ++j) row[j] += upstream[i] * pooled[j];
    }

    // g_pooled = projection^T * upstream
    std::vector<double> g_pooled(d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
        const double* row = &model.theta.projection[i * d];
        for (std::size_t j = 0; j < d; ++j) g_pooled[j] += row[j] * upstream[i];
    }

    auto backprop_token = [&](std::string_view token, double coeff) {
        auto units = token_subunits(token);
        const double unit_scale = coeff / static_cast<double>(units.size());
        for (const auto& unit : units) {
            double* row =
                &grads.theta.embeddings[subunit_bucket(unit, model.config.hash_buckets) * d];
            for (std::size_t i = 0; i < d; ++i) row[i] += unit_scale * g_pooled[i];
        }
    };

    for (std::size_t i = span.lo; i <= span.hi; ++i) {
        backprop_token(instance.tokens[i], window_scale);
    }
    backprop_token(instance.tokens[instance.target_index], 0.5);
}

}  // namespace wsd
