#pragma once

// Request/response bodies of the provider HTTP protocol. Field names on the wire are the
// snake_case member names below. Parsers reject missing or mistyped fields with
// ProtocolError; unknown fields are ignored.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "wander/core/embedding.hpp"

namespace wander::protocol {

struct TokenUsage {
    std::uint64_t prompt_tokens = 0;
    std::uint64_t completion_tokens = 0;
    /// Set by the adapter when the backend reported nothing and counts were estimated
    /// from characters. Not part of the wire body.
    bool estimated = false;

    std::uint64_t total() const noexcept { return prompt_tokens + completion_tokens; }
    friend bool operator==(const TokenUsage&, const TokenUsage&) = default;
};

/// ceil(chars / 4): the documented estimate for backends that do not report usage.
std::uint64_t estimate_tokens(std::string_view text) noexcept;

struct MutateRequest {
    std::string instruction;
    std::string model_id;
    double temperature = 1.0;
    std::uint32_t max_output_length = 256;

    friend bool operator==(const MutateRequest&, const MutateRequest&) = default;
};

struct MutateResponse {
    std::string output_text;
    /// Absent when the backend did not report usage.
    std::optional<TokenUsage> token_usage;

    friend bool operator==(const MutateResponse&, const MutateResponse&) = default;
};

struct GenerateRequest {
    std::string prompt;
    std::string model_id;
    std::string image_size = "512x512";
    std::uint64_t seed = 0;

    friend bool operator==(const GenerateRequest&, const GenerateRequest&) = default;
};

struct GenerateResponse {
    std::string artifact_ref;
    /// Lowercase hex SHA-256 of the artifact bytes.
    std::string content_digest;

    friend bool operator==(const GenerateResponse&, const GenerateResponse&) = default;
};

enum class Modality { text, image };

struct EmbedRequest {
    Modality modality = Modality::text;
    /// Text, or an artifact_ref for images.
    std::string payload;

    friend bool operator==(const EmbedRequest&, const EmbedRequest&) = default;
};

struct EmbedResponse {
    EmbeddingVector embedding;

    friend bool operator==(const EmbedResponse&, const EmbedResponse&) = default;
};

struct AxisSpec {
    std::string name;
    std::vector<std::string> bins;

    friend bool operator==(const AxisSpec&, const AxisSpec&) = default;
};

struct RateRequest {
    std::string artifact_ref;
    std::vector<AxisSpec> axes;

    friend bool operator==(const RateRequest&, const RateRequest&) = default;
};

struct RateResponse {
    double quality = 0.0;
    int axis1_bin = 0;
    int axis2_bin = 0;

    friend bool operator==(const RateResponse&, const RateResponse&) = default;
};

struct PerceptualDistanceRequest {
    std::vector<std::string> artifact_refs;

    friend bool operator==(const PerceptualDistanceRequest&, const PerceptualDistanceRequest&) = default;
};

struct PerceptualDistanceResponse {
    double mean_distance = 0.0;

    friend bool operator==(const PerceptualDistanceResponse&, const PerceptualDistanceResponse&) = default;
};

std::string_view to_string(Modality m) noexcept;
Modality parse_modality(std::string_view name);

nlohmann::json to_json(const MutateRequest& v);
nlohmann::json to_json(const MutateResponse& v);
nlohmann::json to_json(const GenerateRequest& v);
nlohmann::json to_json(const GenerateResponse& v);
nlohmann::json to_json(const EmbedRequest& v);
nlohmann::json to_json(const EmbedResponse& v);
nlohmann::json to_json(const AxisSpec& v);
nlohmann::json to_json(const RateRequest& v);
nlohmann::json to_json(const RateResponse& v);
nlohmann::json to_json(const PerceptualDistanceRequest& v);
nlohmann::json to_json(const PerceptualDistanceResponse& v);

MutateRequest parse_mutate_request(const nlohmann::json& j);
MutateResponse parse_mutate_response(const nlohmann::json& j);
GenerateRequest parse_generate_request(const nlohmann::json& j);
GenerateResponse parse_generate_response(const nlohmann::json& j);
EmbedRequest parse_embed_request(const nlohmann::json& j);
EmbedResponse parse_embed_response(const nlohmann::json& j);
AxisSpec parse_axis_spec(const nlohmann::json& j);
RateRequest parse_rate_request(const nlohmann::json& j);
RateResponse parse_rate_response(const nlohmann::json& j);
PerceptualDistanceRequest parse_perceptual_distance_request(const nlohmann::json& j);
PerceptualDistanceResponse parse_perceptual_distance_response(const nlohmann::json& j);

}  // namespace wander::protocol
