#include <doctest.h>

#include <json.hpp>

#include "wander/errors.hpp"
#include "wander/providers/protocol.hpp"

using namespace wander;
using nlohmann::json;

TEST_CASE("token estimate is ceil(chars / 4)") {
    CHECK(protocol::estimate_tokens("") == 0);
    CHECK(protocol::estimate_tokens("abc") == 1);
    CHECK(protocol::estimate_tokens("abcd") == 1);
    CHECK(protocol::estimate_tokens("abcde") == 2);
    CHECK(protocol::TokenUsage{100, 50, false}.total() == 150);
}

TEST_CASE("parsers reject missing and mistyped fields") {
    CHECK_THROWS_AS(protocol::parse_mutate_request(json{{"model_id", "m"}}), ProtocolError);
    CHECK_THROWS_AS(protocol::parse_mutate_response(json{{"output_text", 3}}), ProtocolError);
    CHECK_THROWS_AS(protocol::parse_mutate_response(
                        json{{"output_text", "x"}, {"token_usage", {{"prompt_tokens", -1}, {"completion_tokens", 2}}}}),
                    ProtocolError);
    CHECK_THROWS_AS(protocol::parse_generate_response(json{{"artifact_ref", "a"}}), ProtocolError);
    CHECK_THROWS_AS(protocol::parse_embed_request(json{{"modality", "audio"}, {"payload", "x"}}), ProtocolError);
    CHECK_THROWS_AS(protocol::parse_embed_response(json{{"embedding", json::array()}}), ProtocolError);
    CHECK_THROWS_AS(protocol::parse_embed_response(json{{"embedding", {1.0, "two"}}}), ProtocolError);
    CHECK_THROWS_AS(protocol::parse_rate_response(json{{"quality", 0.5}, {"axis1_bin", 1}}), ProtocolError);
    CHECK_THROWS_AS(protocol::parse_mutate_request(json::array()), ProtocolError);
}

TEST_CASE("unknown fields are ignored") {
    const auto r = protocol::parse_generate_response(
        json{{"artifact_ref", "a"}, {"content_digest", "d"}, {"latency_ms", 12}});
    CHECK(r.artifact_ref == "a");
}

TEST_CASE("modality names") {
    CHECK(protocol::to_string(protocol::Modality::image) == "image");
    CHECK(protocol::parse_modality("text") == protocol::Modality::text);
    CHECK_THROWS_AS(protocol::parse_modality("video"), ProtocolError);
}
