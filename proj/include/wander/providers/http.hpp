#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "wander/providers/provider.hpp"

namespace wander {

/// Where each capability lives. Roots are "scheme://host[:port][/prefix]"; request paths
/// (/v1/mutate, ...) are appended to them.
struct HttpEndpoints {
    std::string mutate_root;
    std::string generate_root;
    std::string embed_root;
    std::string rate_root;
    /// Optional perceptual-distance service; empty disables it.
    std::string perceptual_root;
    std::chrono::seconds timeout{120};
    /// Name of the environment variable holding the bearer token.
    std::string token_env = "WANDER_PROVIDER_TOKEN";

    friend bool operator==(const HttpEndpoints&, const HttpEndpoints&) = default;
};

/// 408, 425, 429 and 5xx are worth retrying; every other non-2xx is fatal.
bool is_retryable_status(int status) noexcept;

/// One JSON-over-HTTP connection target. Stateless apart from configuration.
class HttpJsonClient {
public:
    HttpJsonClient(std::string root, std::chrono::seconds timeout, std::optional<std::string> bearer_token);

    /// POSTs `body` to root + path. Throws TransportError on connection failures and
    /// non-2xx replies, ProtocolError when the reply is not JSON.
    nlohmann::json post(const std::string& path, const nlohmann::json& body) const;

    /// GETs raw bytes from root + path.
    std::string get_bytes(const std::string& path) const;

private:
    std::string scheme_host_port_;
    std::string prefix_;
    std::chrono::seconds timeout_;
    std::optional<std::string> token_;
};

/// Reads the token from `env_name`; nullopt when unset or empty.
std::optional<std::string> bearer_token_from_env(const std::string& env_name);

class HttpMutator final : public Mutator {
public:
    explicit HttpMutator(std::shared_ptr<const HttpJsonClient> client) : client_(std::move(client)) {}

    /// Usage the backend did not report is estimated from characters and flagged.
    protocol::MutateResponse mutate(const protocol::MutateRequest& request,
                                    const MutationContext& context) const override;

private:
    std::shared_ptr<const HttpJsonClient> client_;
};

class HttpGenerator final : public Generator {
public:
    explicit HttpGenerator(std::shared_ptr<const HttpJsonClient> client) : client_(std::move(client)) {}
    protocol::GenerateResponse generate(const protocol::GenerateRequest& request) const override;

    /// GET /v1/artifacts/{ref}.
    std::string fetch_artifact(const std::string& artifact_ref) const;

private:
    std::shared_ptr<const HttpJsonClient> client_;
};

class HttpEmbedder final : public Embedder {
public:
    explicit HttpEmbedder(std::shared_ptr<const HttpJsonClient> client) : client_(std::move(client)) {}
    protocol::EmbedResponse embed(const protocol::EmbedRequest& request) const override;

private:
    std::shared_ptr<const HttpJsonClient> client_;
};

class HttpRater final : public Rater {
public:
    explicit HttpRater(std::shared_ptr<const HttpJsonClient> client) : client_(std::move(client)) {}
    protocol::RateResponse rate(const protocol::RateRequest& request) const override;

private:
    std::shared_ptr<const HttpJsonClient> client_;
};

class HttpPerceptualDistance final : public PerceptualDistance {
public:
    explicit HttpPerceptualDistance(std::shared_ptr<const HttpJsonClient> client) : client_(std::move(client)) {}
    protocol::PerceptualDistanceResponse measure(
        const protocol::PerceptualDistanceRequest& request) const override;

private:
    std::shared_ptr<const HttpJsonClient> client_;
};

/// Adapters for every configured root; the rater and perceptual slots stay empty when
/// their roots are.
Providers make_http_providers(const HttpEndpoints& endpoints);

}  // namespace wander
