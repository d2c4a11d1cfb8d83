#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wsd/types.hpp"

namespace wsd {

using ContextVector = std::vector<double>;

struct EncoderConfig {
    std::size_t embedding_dim = 16;
    std::size_t hash_buckets = 4096;
    std::size_t context_window = 5;  // tokens on each side of the target
    bool gloss_encoder = false;
    std::uint64_t seed = 0;

    void validate() const;
};

// One parameter set: hash-bucket embedding table, output projection, bias.
struct EncoderParams {
    std::vector<double> embeddings;  // hash_buckets x d, row-major
    std::vector<double> projection;  // d x d, row-major
    std::vector<double> bias;        // d
};

// Trainable context encoder. The instance encoding is
//
//   proj * pooled + bias,   pooled = 0.5 * mean(window token vectors)
//                                  + 0.5 * target token vector
//
// where the window spans context_window tokens on each side of the target
// (clipped to the sentence) and always contains the target itself. A token
// vector is the mean of its sub-unit embeddings; sub-units are the lowercased
// token plus its character trigrams. The gloss side, when enabled, uses a
// separate parameter set of the same shape plus a projection that maps gloss
// vectors into the context space.
struct EncoderModel {
    EncoderConfig config;
    EncoderParams theta;
    std::optional<EncoderParams> phi;      // gloss-side parameters
    std::vector<double> gloss_projection;  // d x d, empty unless gloss_encoder
};

// Gradient accumulator, shape-matched to EncoderModel::theta. The gloss side
// is inference-only and carries no gradients.
struct GradBuffer {
    explicit GradBuffer(const EncoderConfig& config);
    EncoderParams theta;
    void zero();
};

EncoderModel init_encoder(const EncoderConfig& config);

std::size_t parameter_count(const EncoderConfig& config);

std::vector<std::string> token_subunits(std::string_view token);

// Embedding-table row index for a sub-unit.
std::size_t subunit_bucket(std::string_view subunit, std::size_t hash_buckets);

// Mean of sub-unit embeddings under the context-side table.
ContextVector token_vector(const EncoderModel& model, std::string_view token);

ContextVector encode(const EncoderModel& model, const Instance& instance);

// Mean of gloss token vectors under the gloss-side parameters, projected and
// shifted like the context path. Requires the gloss encoder to be enabled.
ContextVector encode_gloss(const EncoderModel& model, const std::vector<std::string>& gloss);

// Accumulates d(upstream . encode(instance)) / d(theta) into grads.
void encode_backward(const EncoderModel& model, const Instance& instance,
                     std::span<const double> upstream, GradBuffer& grads);

}  // namespace wsd
