#pragma once

// A closed-form stand-in for the mutator, generator, embedder and rater.
//
// Prompts live in a D-dimensional vector space. A plain prompt embeds to a unit vector
// seeded by its text (its "anchor"). Mutation moves a prompt along its emitter's
// direction:  child = normalize(parent + step * direction(e) + jitter * N(0, I)),
// crossover goes to the normalized midpoint of the parents (plus jitter), and
// cell-directed mutation places the prompt at a target cell of the rater's grid. The
// child's coordinates are written into the prompt text itself,
//
//     <anchor> | moves: e3 x e7 | state: <base64url float32 LE>
//
// so embedding is a pure function of the text and nothing is remembered between calls.
// Generation adds Gaussian noise (generation_noise per coordinate, not renormalized)
// and encodes the resulting vector in the artifact ref.

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wander/providers/provider.hpp"

namespace wander {

struct EmitterMove {
    double step = 0.0;
    double jitter = 0.0;

    friend bool operator==(const EmitterMove&, const EmitterMove&) = default;
};

struct SyntheticWorldConfig {
    std::size_t dimension = 32;
    std::uint64_t seed = 0;
    /// Emitter step along its direction.
    double step_size = 0.8;
    /// Per-coordinate standard deviation of generation noise.
    double generation_noise = 0.05;
    /// Per-coordinate standard deviation of mutation/crossover jitter.
    double jitter = 0.02;
    /// Number of emitter directions in the orthonormal frame.
    std::size_t emitter_count = 10;
    /// Per-emitter replacements for (step_size, jitter).
    std::map<int, EmitterMove> emitter_overrides;
    /// Rater coordinates in [-rater_range, rater_range] are split evenly into bins.
    double rater_range = 0.70710678118654752;

    friend bool operator==(const SyntheticWorldConfig&, const SyntheticWorldConfig&) = default;
};

/// Throws ConfigError on a zero dimension, negative scales or a non-positive rater range.
void validate(const SyntheticWorldConfig& config);

class SyntheticWorld {
public:
    explicit SyntheticWorld(SyntheticWorldConfig config);

    const SyntheticWorldConfig& config() const noexcept { return config_; }
    std::size_t dimension() const noexcept { return config_.dimension; }

    /// Unit direction of an emitter. Directions of ids 1..emitter_count are mutually
    /// orthogonal when dimension >= emitter_count + 3.
    std::vector<double> direction(int emitter_id) const;
    EmitterMove move(int emitter_id) const;

    /// Rater axes: 0 and 1 bin the grid, 2 drives quality.
    const std::vector<double>& rater_axis(int which) const;

    /// Unit vector seeded by the text, rounded through float.
    std::vector<double> anchor_vector(std::string_view text) const;

    /// Embedding of any prompt: decoded state when present, else its anchor vector.
    std::vector<double> text_vector(std::string_view prompt) const;

    /// The anchor part of a prompt (the whole text for a plain prompt).
    static std::string_view anchor_of(std::string_view prompt);
    static std::string encode_prompt(std::string_view anchor, std::string_view moves,
                                     const std::vector<double>& state);

    std::vector<double> mutate_vector(const MutationContext& context) const;
    std::string mutate_prompt(const MutationContext& context) const;

    /// Noisy image vector for (prompt, seed).
    std::vector<float> render(std::string_view prompt, std::uint64_t seed) const;
    static std::string artifact_ref_for(std::span<const float> image);
    /// Throws ProtocolError for refs this world did not produce.
    static std::vector<float> decode_artifact(std::string_view ref);

    int rater_bin(double coordinate, int bins) const;
    double rater_bin_center(int bin, int bins) const;
    protocol::RateResponse rate_vector(std::span<const float> image, int axis1_bins, int axis2_bins) const;

private:
    std::vector<double> random_unit(std::uint64_t seed) const;

    SyntheticWorldConfig config_;
    // emitter_count emitter directions followed by the three rater axes.
    std::vector<std::vector<double>> frame_;
};

class SyntheticMutator final : public Mutator {
public:
    explicit SyntheticMutator(std::shared_ptr<const SyntheticWorld> world) : world_(std::move(world)) {}
    protocol::MutateResponse mutate(const protocol::MutateRequest& request,
                                    const MutationContext& context) const override;

private:
    std::shared_ptr<const SyntheticWorld> world_;
};

class SyntheticGenerator final : public Generator {
public:
    explicit SyntheticGenerator(std::shared_ptr<const SyntheticWorld> world) : world_(std::move(world)) {}
    protocol::GenerateResponse generate(const protocol::GenerateRequest& request) const override;

private:
    std::shared_ptr<const SyntheticWorld> world_;
};

class SyntheticEmbedder final : public Embedder {
public:
    explicit SyntheticEmbedder(std::shared_ptr<const SyntheticWorld> world) : world_(std::move(world)) {}
    protocol::EmbedResponse embed(const protocol::EmbedRequest& request) const override;

private:
    std::shared_ptr<const SyntheticWorld> world_;
};

/// Rating from image coordinates: bins from the projections on rater axes 0 and 1,
/// quality = clamp(0.5 + 0.5 * projection on axis 2, 0, 1).
class SyntheticRater final : public Rater {
public:
    explicit SyntheticRater(std::shared_ptr<const SyntheticWorld> world) : world_(std::move(world)) {}
    protocol::RateResponse rate(const protocol::RateRequest& request) const override;

private:
    std::shared_ptr<const SyntheticWorld> world_;
};

Providers make_synthetic_providers(const SyntheticWorldConfig& config);

}  // namespace wander
