#include "wander/providers/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "wander/encoding.hpp"
#include "wander/errors.hpp"
#include "wander/rng.hpp"

namespace wander {
namespace {

constexpr std::string_view kMovesMarker = " | moves: ";
constexpr std::string_view kStateMarker = " | state: ";
constexpr std::string_view kArtifactPrefix = "synthetic:";
constexpr std::size_t kMaxMovesKept = 12;

// Purpose tags for derive_seed so streams never collide.
enum : std::uint64_t { kFrameStream = 1, kAnchorStream, kJitterStream, kRenderStream, kExtraDirStream };

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// Returns false when the vector is numerically zero.
bool normalize(std::vector<double>& v) {
    const double n = std::sqrt(dot(v, v));
    if (!(n > 1e-12)) return false;
    for (double& x : v) x /= n;
    return true;
}

// Float round trip so a vector written into a prompt decodes to exactly itself.
std::vector<double> through_float(const std::vector<double>& v) {
    std::vector<double> out(v.size());
    std::transform(v.begin(), v.end(), out.begin(),
                   [](double x) { return static_cast<double>(static_cast<float>(x)); });
    return out;
}

void add_jitter(std::vector<double>& v, double scale, Rng& rng) {
    if (scale <= 0.0) return;
    for (double& x : v) x += scale * rng.normal();
}

std::string_view moves_of(std::string_view prompt) {
    const auto state_pos = prompt.rfind(kStateMarker);
    if (state_pos == std::string_view::npos) return {};
    const std::string_view head = prompt.substr(0, state_pos);
    const auto moves_pos = head.rfind(kMovesMarker);
    if (moves_pos == std::string_view::npos) return {};
    return head.substr(moves_pos + kMovesMarker.size());
}

std::string append_move(std::string_view previous, const std::string& move) {
    std::vector<std::string> tokens;
    std::istringstream in{std::string(previous)};
    for (std::string t; in >> t;) tokens.push_back(t);
    tokens.push_back(move);
    if (tokens.size() > kMaxMovesKept) {
        tokens.erase(tokens.begin(), tokens.end() - static_cast<std::ptrdiff_t>(kMaxMovesKept));
    }
    std::string out;
    for (const auto& t : tokens) {
        if (!out.empty()) out.push_back(' ');
        out += t;
    }
    return out;
}

}  // namespace

void validate(const SyntheticWorldConfig& c) {
    if (c.dimension == 0) throw ConfigError("synthetic world dimension must be positive");
    if (c.step_size < 0.0 || c.generation_noise < 0.0 || c.jitter < 0.0) {
        throw ConfigError("synthetic world scales must be non-negative");
    }
    if (c.emitter_count == 0) throw ConfigError("synthetic world needs at least one emitter direction");
    if (!(c.rater_range > 0.0 && c.rater_range <= 1.0)) {
        throw ConfigError("synthetic rater range must be in (0, 1]");
    }
    for (const auto& [id, m] : c.emitter_overrides) {
        if (m.step < 0.0 || m.jitter < 0.0) {
            throw ConfigError("emitter override " + std::to_string(id) + " has a negative scale");
        }
    }
}

SyntheticWorld::SyntheticWorld(SyntheticWorldConfig config) : config_(std::move(config)) {
    validate(config_);
    const std::size_t wanted = config_.emitter_count + 3;
    const std::size_t d = config_.dimension;
    // Gram-Schmidt over seeded Gaussian vectors; once the space is exhausted the
    // remaining entries are plain random unit vectors.
    for (std::size_t i = 0; i < wanted; ++i) {
        std::vector<double> v = random_unit(derive_seed(config_.seed, {kFrameStream, i}));
        if (i < d) {
            for (int pass = 0; pass < 2; ++pass) {
                for (const auto& u : frame_) {
                    const double p = dot(v, u);
                    for (std::size_t j = 0; j < d; ++j) v[j] -= p * u[j];
                }
            }
            normalize(v);
        }
        frame_.push_back(std::move(v));
    }
}

std::vector<double> SyntheticWorld::random_unit(std::uint64_t seed) const {
    Rng rng(seed);
    std::vector<double> v(config_.dimension);
    do {
        for (double& x : v) x = rng.normal();
    } while (!normalize(v));
    return v;
}

std::vector<double> SyntheticWorld::direction(int emitter_id) const {
    if (emitter_id >= 1 && static_cast<std::size_t>(emitter_id) <= config_.emitter_count) {
        return frame_[static_cast<std::size_t>(emitter_id - 1)];
    }
    return random_unit(derive_seed(config_.seed, {kExtraDirStream, static_cast<std::uint64_t>(emitter_id)}));
}

EmitterMove SyntheticWorld::move(int emitter_id) const {
    if (const auto it = config_.emitter_overrides.find(emitter_id); it != config_.emitter_overrides.end()) {
        return it->second;
    }
    return {config_.step_size, config_.jitter};
}

const std::vector<double>& SyntheticWorld::rater_axis(int which) const {
    if (which < 0 || which > 2) throw DomainError("rater axis index out of range");
    return frame_[config_.emitter_count + static_cast<std::size_t>(which)];
}

std::vector<double> SyntheticWorld::anchor_vector(std::string_view text) const {
    return through_float(random_unit(derive_seed(config_.seed, {kAnchorStream, encoding::fnv1a64(text)})));
}

std::string_view SyntheticWorld::anchor_of(std::string_view prompt) {
    const auto state_pos = prompt.rfind(kStateMarker);
    if (state_pos == std::string_view::npos) return prompt;
    const std::string_view head = prompt.substr(0, state_pos);
    const auto moves_pos = head.rfind(kMovesMarker);
    return moves_pos == std::string_view::npos ? head : head.substr(0, moves_pos);
}

std::string SyntheticWorld::encode_prompt(std::string_view anchor, std::string_view moves,
                                          const std::vector<double>& state) {
    std::vector<float> f(state.size());
    std::transform(state.begin(), state.end(), f.begin(), [](double x) { return static_cast<float>(x); });
    std::string out(anchor);
    out += kMovesMarker;
    out += moves;
    out += kStateMarker;
    out += encoding::base64_encode(encoding::floats_to_le_bytes(f), encoding::Base64Alphabet::url_safe);
    return out;
}

std::vector<double> SyntheticWorld::text_vector(std::string_view prompt) const {
    const auto state_pos = prompt.rfind(kStateMarker);
    if (state_pos == std::string_view::npos) return anchor_vector(prompt);
    std::vector<float> f;
    try {
        f = encoding::le_bytes_to_floats(encoding::base64_decode(prompt.substr(state_pos + kStateMarker.size())));
    } catch (const std::invalid_argument&) {
        // Not one of ours after all; treat the whole text as an anchor.
        return anchor_vector(prompt);
    }
    if (f.size() != config_.dimension) return anchor_vector(prompt);
    return {f.begin(), f.end()};
}

std::vector<double> SyntheticWorld::mutate_vector(const MutationContext& ctx) const {
    if (ctx.parent_prompts.empty()) throw DomainError("synthetic mutation without a parent prompt");
    Rng rng(derive_seed(config_.seed, {kJitterStream, ctx.seed}));
    std::vector<double> v = text_vector(ctx.parent_prompts.front());
    const std::size_t d = config_.dimension;

    switch (ctx.kind) {
        case MutationContext::Kind::mutation: {
            if (ctx.emitter_id) {
                const EmitterMove m = move(*ctx.emitter_id);
                const std::vector<double> dir = direction(*ctx.emitter_id);
                for (std::size_t j = 0; j < d; ++j) v[j] += m.step * dir[j];
                add_jitter(v, m.jitter, rng);
            } else {
                add_jitter(v, config_.jitter, rng);
            }
            break;
        }
        case MutationContext::Kind::crossover: {
            if (ctx.parent_prompts.size() != 2) throw DomainError("synthetic crossover needs two parents");
            const std::vector<double> other = text_vector(ctx.parent_prompts[1]);
            std::vector<double> mid(d);
            for (std::size_t j = 0; j < d; ++j) mid[j] = 0.5 * (v[j] + other[j]);
            add_jitter(mid, config_.jitter, rng);
            if (std::sqrt(dot(mid, mid)) > 1e-12) v = std::move(mid);
            break;
        }
        case MutationContext::Kind::target_cell: {
            if (!ctx.target_cell || ctx.axis1_bins < 1 || ctx.axis2_bins < 1) {
                throw DomainError("cell-directed mutation without a target cell");
            }
            const double x = rater_bin_center(ctx.target_cell->first, ctx.axis1_bins);
            const double y = rater_bin_center(ctx.target_cell->second, ctx.axis2_bins);
            const auto& u1 = rater_axis(0);
            const auto& u2 = rater_axis(1);
            normalize(v);
            const double p1 = dot(v, u1);
            const double p2 = dot(v, u2);
            std::vector<double> rest(d);
            for (std::size_t j = 0; j < d; ++j) rest[j] = v[j] - p1 * u1[j] - p2 * u2[j];
            const double rest_norm = std::sqrt(dot(rest, rest));
            const double room = std::sqrt(std::max(0.0, 1.0 - x * x - y * y));
            const double scale = rest_norm > 1e-12 ? room / rest_norm : 0.0;
            for (std::size_t j = 0; j < d; ++j) v[j] = x * u1[j] + y * u2[j] + scale * rest[j];
            add_jitter(v, config_.jitter, rng);
            break;
        }
    }
    if (!normalize(v)) v = text_vector(ctx.parent_prompts.front());
    return through_float(v);
}

std::string SyntheticWorld::mutate_prompt(const MutationContext& ctx) const {
    const std::vector<double> v = mutate_vector(ctx);
    const std::string_view parent = ctx.parent_prompts.front();
    std::string move;
    switch (ctx.kind) {
        case MutationContext::Kind::mutation:
            move = ctx.emitter_id ? "e" + std::to_string(*ctx.emitter_id) : "r";
            break;
        case MutationContext::Kind::crossover:
            move = "x";
            break;
        case MutationContext::Kind::target_cell:
            move = "c" + std::to_string(ctx.target_cell->first) + "." + std::to_string(ctx.target_cell->second);
            break;
    }
    return encode_prompt(anchor_of(parent), append_move(moves_of(parent), move), v);
}

std::vector<float> SyntheticWorld::render(std::string_view prompt, std::uint64_t seed) const {
    std::vector<double> v = text_vector(prompt);
    Rng rng(derive_seed(config_.seed, {kRenderStream, encoding::fnv1a64(prompt), seed}));
    add_jitter(v, config_.generation_noise, rng);
    std::vector<float> out(v.size());
    std::transform(v.begin(), v.end(), out.begin(), [](double x) { return static_cast<float>(x); });
    return out;
}

std::string SyntheticWorld::artifact_ref_for(std::span<const float> image) {
    return std::string(kArtifactPrefix) +
           encoding::base64_encode(encoding::floats_to_le_bytes(image), encoding::Base64Alphabet::url_safe);
}

std::vector<float> SyntheticWorld::decode_artifact(std::string_view ref) {
    if (!ref.starts_with(kArtifactPrefix)) {
        throw ProtocolError("artifact ref '" + std::string(ref.substr(0, 32)) + "' is not synthetic");
    }
    try {
        return encoding::le_bytes_to_floats(encoding::base64_decode(ref.substr(kArtifactPrefix.size())));
    } catch (const std::invalid_argument& e) {
        throw ProtocolError(std::string("corrupt synthetic artifact ref: ") + e.what());
    }
}

int SyntheticWorld::rater_bin(double coordinate, int bins) const {
    const double r = config_.rater_range;
    const double t = (coordinate + r) / (2.0 * r);
    const int bin = static_cast<int>(std::floor(t * bins));
    return std::clamp(bin, 0, bins - 1);
}

double SyntheticWorld::rater_bin_center(int bin, int bins) const {
    const double r = config_.rater_range;
    return -r + (static_cast<double>(bin) + 0.5) * (2.0 * r) / static_cast<double>(bins);
}

protocol::RateResponse SyntheticWorld::rate_vector(std::span<const float> image, int axis1_bins,
                                                   int axis2_bins) const {
    if (image.size() != config_.dimension) throw ProtocolError("synthetic image has the wrong dimension");
    std::vector<double> v(image.begin(), image.end());
    if (!normalize(v)) throw DomainError("cannot rate a zero image");
    protocol::RateResponse r;
    r.axis1_bin = rater_bin(dot(v, rater_axis(0)), axis1_bins);
    r.axis2_bin = rater_bin(dot(v, rater_axis(1)), axis2_bins);
    r.quality = std::clamp(0.5 + 0.5 * dot(v, rater_axis(2)), 0.0, 1.0);
    return r;
}

protocol::MutateResponse SyntheticMutator::mutate(const protocol::MutateRequest& request,
                                                  const MutationContext& context) const {
    protocol::MutateResponse r;
    r.output_text = world_->mutate_prompt(context);
    r.token_usage = protocol::TokenUsage{protocol::estimate_tokens(request.instruction),
                                         protocol::estimate_tokens(r.output_text), false};
    return r;
}

protocol::GenerateResponse SyntheticGenerator::generate(const protocol::GenerateRequest& request) const {
    const std::vector<float> image = world_->render(request.prompt, request.seed);
    return {SyntheticWorld::artifact_ref_for(image), encoding::sha256_hex(encoding::floats_to_le_bytes(image))};
}

protocol::EmbedResponse SyntheticEmbedder::embed(const protocol::EmbedRequest& request) const {
    if (request.modality == protocol::Modality::text) {
        return {EmbeddingVector::from_doubles(world_->text_vector(request.payload))};
    }
    return {EmbeddingVector(SyntheticWorld::decode_artifact(request.payload))};
}

protocol::RateResponse SyntheticRater::rate(const protocol::RateRequest& request) const {
    if (request.axes.size() != 2) throw ProtocolError("rate request needs exactly two axes");
    const auto image = SyntheticWorld::decode_artifact(request.artifact_ref);
    return world_->rate_vector(image, static_cast<int>(request.axes[0].bins.size()),
                               static_cast<int>(request.axes[1].bins.size()));
}

Providers make_synthetic_providers(const SyntheticWorldConfig& config) {
    auto world = std::make_shared<const SyntheticWorld>(config);
    Providers p;
    p.mutator = std::make_shared<SyntheticMutator>(world);
    p.generator = std::make_shared<SyntheticGenerator>(world);
    p.embedder = std::make_shared<SyntheticEmbedder>(world);
    p.rater = std::make_shared<SyntheticRater>(world);
    return p;
}

}  // namespace wander
