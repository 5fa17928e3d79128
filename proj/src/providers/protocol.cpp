#include "wander/providers/protocol.hpp"

#include <cmath>

#include "../json_fields.hpp"
#include "wander/errors.hpp"

namespace wander::protocol {

using nlohmann::json;
using detail::optional_field;
using detail::required;

std::uint64_t estimate_tokens(std::string_view text) noexcept {
    return (text.size() + 3) / 4;
}

std::string_view to_string(Modality m) noexcept {
    return m == Modality::text ? "text" : "image";
}

Modality parse_modality(std::string_view name) {
    if (name == "text") return Modality::text;
    if (name == "image") return Modality::image;
    throw ProtocolError("unknown modality '" + std::string(name) + "'");
}

json to_json(const MutateRequest& v) {
    return {{"instruction", v.instruction},
            {"model_id", v.model_id},
            {"temperature", v.temperature},
            {"max_output_length", v.max_output_length}};
}

json to_json(const MutateResponse& v) {
    json j{{"output_text", v.output_text}};
    if (v.token_usage) {
        j["token_usage"] = {{"prompt_tokens", v.token_usage->prompt_tokens},
                            {"completion_tokens", v.token_usage->completion_tokens}};
    }
    return j;
}

json to_json(const GenerateRequest& v) {
    return {{"prompt", v.prompt},
            {"model_id", v.model_id},
            {"image_size", v.image_size},
            {"seed", v.seed}};
}

json to_json(const GenerateResponse& v) {
    return {{"artifact_ref", v.artifact_ref}, {"content_digest", v.content_digest}};
}

json to_json(const EmbedRequest& v) {
    return {{"modality", to_string(v.modality)}, {"payload", v.payload}};
}

json to_json(const EmbedResponse& v) {
    json values = json::array();
    for (float x : v.embedding.values()) values.push_back(x);
    return {{"embedding", std::move(values)}};
}

json to_json(const AxisSpec& v) {
    return {{"name", v.name}, {"bins", v.bins}};
}

json to_json(const RateRequest& v) {
    json axes = json::array();
    for (const AxisSpec& a : v.axes) axes.push_back(to_json(a));
    return {{"artifact_ref", v.artifact_ref}, {"axes", std::move(axes)}};
}

json to_json(const RateResponse& v) {
    return {{"quality", v.quality}, {"axis1_bin", v.axis1_bin}, {"axis2_bin", v.axis2_bin}};
}

json to_json(const PerceptualDistanceRequest& v) {
    return {{"artifact_refs", v.artifact_refs}};
}

json to_json(const PerceptualDistanceResponse& v) {
    return {{"mean_distance", v.mean_distance}};
}

MutateRequest parse_mutate_request(const json& j) {
    constexpr const char* ctx = "mutate request";
    MutateRequest r;
    r.instruction = required<ProtocolError, std::string>(j, "instruction", ctx);
    r.model_id = required<ProtocolError, std::string>(j, "model_id", ctx);
    r.temperature = required<ProtocolError, double>(j, "temperature", ctx);
    r.max_output_length = required<ProtocolError, std::uint32_t>(j, "max_output_length", ctx);
    return r;
}

MutateResponse parse_mutate_response(const json& j) {
    constexpr const char* ctx = "mutate response";
    MutateResponse r;
    r.output_text = required<ProtocolError, std::string>(j, "output_text", ctx);
    if (const auto usage = optional_field<ProtocolError, json>(j, "token_usage", ctx)) {
        TokenUsage u;
        const auto p = required<ProtocolError, std::int64_t>(*usage, "prompt_tokens", "token_usage");
        const auto c = required<ProtocolError, std::int64_t>(*usage, "completion_tokens", "token_usage");
        if (p < 0 || c < 0) throw ProtocolError("token_usage: negative token count");
        u.prompt_tokens = static_cast<std::uint64_t>(p);
        u.completion_tokens = static_cast<std::uint64_t>(c);
        r.token_usage = u;
    }
    return r;
}

GenerateRequest parse_generate_request(const json& j) {
    constexpr const char* ctx = "generate request";
    GenerateRequest r;
    r.prompt = required<ProtocolError, std::string>(j, "prompt", ctx);
    r.model_id = required<ProtocolError, std::string>(j, "model_id", ctx);
    r.image_size = required<ProtocolError, std::string>(j, "image_size", ctx);
    r.seed = required<ProtocolError, std::uint64_t>(j, "seed", ctx);
    return r;
}

GenerateResponse parse_generate_response(const json& j) {
    constexpr const char* ctx = "generate response";
    GenerateResponse r;
    r.artifact_ref = required<ProtocolError, std::string>(j, "artifact_ref", ctx);
    r.content_digest = required<ProtocolError, std::string>(j, "content_digest", ctx);
    if (r.artifact_ref.empty()) throw ProtocolError("generate response: empty artifact_ref");
    return r;
}

EmbedRequest parse_embed_request(const json& j) {
    constexpr const char* ctx = "embed request";
    EmbedRequest r;
    r.modality = parse_modality(required<ProtocolError, std::string>(j, "modality", ctx));
    r.payload = required<ProtocolError, std::string>(j, "payload", ctx);
    return r;
}

EmbedResponse parse_embed_response(const json& j) {
    const auto values = required<ProtocolError, std::vector<double>>(j, "embedding", "embed response");
    std::vector<float> out;
    out.reserve(values.size());
    for (double v : values) {
        if (!std::isfinite(v)) throw ProtocolError("embed response: non-finite entry");
        out.push_back(static_cast<float>(v));
    }
    if (out.empty()) throw ProtocolError("embed response: empty embedding");
    return {EmbeddingVector(std::move(out))};
}

AxisSpec parse_axis_spec(const json& j) {
    AxisSpec a;
    a.name = required<ProtocolError, std::string>(j, "name", "axis spec");
    a.bins = required<ProtocolError, std::vector<std::string>>(j, "bins", "axis spec");
    return a;
}

RateRequest parse_rate_request(const json& j) {
    constexpr const char* ctx = "rate request";
    RateRequest r;
    r.artifact_ref = required<ProtocolError, std::string>(j, "artifact_ref", ctx);
    for (const json& a : required<ProtocolError, json>(j, "axes", ctx)) {
        r.axes.push_back(parse_axis_spec(a));
    }
    return r;
}

RateResponse parse_rate_response(const json& j) {
    constexpr const char* ctx = "rate response";
    RateResponse r;
    r.quality = required<ProtocolError, double>(j, "quality", ctx);
    r.axis1_bin = required<ProtocolError, int>(j, "axis1_bin", ctx);
    r.axis2_bin = required<ProtocolError, int>(j, "axis2_bin", ctx);
    if (!(r.quality >= 0.0 && r.quality <= 1.0)) throw ProtocolError("rate response: quality outside [0, 1]");
    return r;
}

PerceptualDistanceRequest parse_perceptual_distance_request(const json& j) {
    return {required<ProtocolError, std::vector<std::string>>(j, "artifact_refs", "perceptual distance request")};
}

PerceptualDistanceResponse parse_perceptual_distance_response(const json& j) {
    return {required<ProtocolError, double>(j, "mean_distance", "perceptual distance response")};
}

}  // namespace wander::protocol
