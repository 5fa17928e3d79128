#include "wander/providers/http.hpp"

#include <cstdlib>

#include <httplib.h>

#include "wander/errors.hpp"

namespace wander {
namespace {

// Splits "http://host:port/prefix" into ("http://host:port", "/prefix").
std::pair<std::string, std::string> split_root(const std::string& root) {
    const auto scheme_end = root.find("://");
    if (scheme_end == std::string::npos) {
        throw ConfigError("endpoint root '" + root + "' has no scheme");
    }
    const auto path_start = root.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {root, ""};
    std::string prefix = root.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {root.substr(0, path_start), prefix};
}

httplib::Headers headers_for(const std::optional<std::string>& token) {
    httplib::Headers h{{"Accept", "application/json"}};
    if (token) h.emplace("Authorization", "Bearer " + *token);
    return h;
}

[[noreturn]] void throw_status(const std::string& what, int status, const std::string& body) {
    std::string msg = what + " returned HTTP " + std::to_string(status);
    if (!body.empty()) msg += ": " + body.substr(0, 200);
    throw TransportError(msg, status, is_retryable_status(status));
}

std::shared_ptr<const HttpJsonClient> client_for(const std::string& root, const HttpEndpoints& e,
                                                 const std::optional<std::string>& token) {
    return std::make_shared<const HttpJsonClient>(root, e.timeout, token);
}

}  // namespace

bool is_retryable_status(int status) noexcept {
    return status == 408 || status == 425 || status == 429 || (status >= 500 && status <= 599);
}

std::optional<std::string> bearer_token_from_env(const std::string& env_name) {
    const char* value = std::getenv(env_name.c_str());
    if (value == nullptr || *value == '\0') return std::nullopt;
    return std::string(value);
}

HttpJsonClient::HttpJsonClient(std::string root, std::chrono::seconds timeout,
                               std::optional<std::string> bearer_token)
    : timeout_(timeout), token_(std::move(bearer_token)) {
    auto [base, prefix] = split_root(root);
    scheme_host_port_ = std::move(base);
    prefix_ = std::move(prefix);
}

nlohmann::json HttpJsonClient::post(const std::string& path, const nlohmann::json& body) const {
    httplib::Client client(scheme_host_port_);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    client.set_write_timeout(timeout_);
    const std::string url = prefix_ + path;
    auto res = client.Post(url, headers_for(token_), body.dump(), "application/json");
    if (!res) {
        throw TransportError("POST " + url + " failed: " + httplib::to_string(res.error()), 0, true);
    }
    if (res->status < 200 || res->status >= 300) throw_status("POST " + url, res->status, res->body);
    try {
        return nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::parse_error& e) {
        throw ProtocolError("POST " + url + " returned invalid JSON: " + e.what());
    }
}

std::string HttpJsonClient::get_bytes(const std::string& path) const {
    httplib::Client client(scheme_host_port_);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    const std::string url = prefix_ + path;
    auto res = client.Get(url, headers_for(token_));
    if (!res) {
        throw TransportError("GET " + url + " failed: " + httplib::to_string(res.error()), 0, true);
    }
    if (res->status < 200 || res->status >= 300) throw_status("GET " + url, res->status, res->body);
    return res->body;
}

protocol::MutateResponse HttpMutator::mutate(const protocol::MutateRequest& request,
                                             const MutationContext& /*context*/) const {
    protocol::MutateResponse r = protocol::parse_mutate_response(client_->post("/v1/mutate", protocol::to_json(request)));
    if (!r.token_usage) {
        r.token_usage = protocol::TokenUsage{protocol::estimate_tokens(request.instruction),
                                             protocol::estimate_tokens(r.output_text), true};
    }
    return r;
}

protocol::GenerateResponse HttpGenerator::generate(const protocol::GenerateRequest& request) const {
    return protocol::parse_generate_response(client_->post("/v1/generate", protocol::to_json(request)));
}

std::string HttpGenerator::fetch_artifact(const std::string& artifact_ref) const {
    return client_->get_bytes("/v1/artifacts/" + httplib::detail::encode_url(artifact_ref));
}

protocol::EmbedResponse HttpEmbedder::embed(const protocol::EmbedRequest& request) const {
    return protocol::parse_embed_response(client_->post("/v1/embed", protocol::to_json(request)));
}

protocol::RateResponse HttpRater::rate(const protocol::RateRequest& request) const {
    return protocol::parse_rate_response(client_->post("/v1/rate", protocol::to_json(request)));
}

protocol::PerceptualDistanceResponse HttpPerceptualDistance::measure(
    const protocol::PerceptualDistanceRequest& request) const {
    return protocol::parse_perceptual_distance_response(
        client_->post("/v1/perceptual_distance", protocol::to_json(request)));
}

Providers make_http_providers(const HttpEndpoints& e) {
    if (e.mutate_root.empty() || e.generate_root.empty() || e.embed_root.empty()) {
        throw ConfigError("http provider needs mutate, generate and embed endpoint roots");
    }
    const auto token = bearer_token_from_env(e.token_env);
    Providers p;
    p.mutator = std::make_shared<HttpMutator>(client_for(e.mutate_root, e, token));
    p.generator = std::make_shared<HttpGenerator>(client_for(e.generate_root, e, token));
    p.embedder = std::make_shared<HttpEmbedder>(client_for(e.embed_root, e, token));
    if (!e.rate_root.empty()) p.rater = std::make_shared<HttpRater>(client_for(e.rate_root, e, token));
    if (!e.perceptual_root.empty()) {
        p.perceptual = std::make_shared<HttpPerceptualDistance>(client_for(e.perceptual_root, e, token));
    }
    return p;
}

}  // namespace wander
