#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <mutex>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "wander/encoding.hpp"
#include "wander/errors.hpp"
#include "wander/providers/http.hpp"

using namespace wander;
using nlohmann::json;

namespace {

const std::string kArtifactBytes = std::string("\x89PNG\r\n\x1a\n", 8) + "fake image payload";

std::string digest_of(const std::string& bytes) {
    return encoding::sha256_hex({reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()});
}

// A stand-in for the embed service, with a few deliberately misbehaving routes.
class FakeService {
public:
    FakeService() {
        server_.Post("/v1/mutate", [this](const httplib::Request& req, httplib::Response& res) {
            record(req);
            const json body = json::parse(req.body);
            json out{{"output_text", "  \"" + body.at("instruction").get<std::string>() + " (mutated)\"  "}};
            if (body.at("model_id") != "no-usage") out["token_usage"] = {{"prompt_tokens", 11}, {"completion_tokens", 5}};
            res.set_content(out.dump(), "application/json");
        });
        server_.Post("/v1/generate", [this](const httplib::Request& req, httplib::Response& res) {
            record(req);
            res.set_content(json{{"artifact_ref", "art/1 x.png"}, {"content_digest", digest_of(kArtifactBytes)}}.dump(),
                            "application/json");
        });
        server_.Get(R"(/v1/artifacts/(.+))", [this](const httplib::Request& req, httplib::Response& res) {
            record(req);
            last_artifact_ = req.matches[1];
            res.set_content(kArtifactBytes, "application/octet-stream");
        });
        server_.Post("/v1/embed", [this](const httplib::Request& req, httplib::Response& res) {
            record(req);
            const json body = json::parse(req.body);
            const auto n = static_cast<float>(body.at("payload").get<std::string>().size());
            const float m = body.at("modality") == "image" ? -1.0f : 1.0f;
            res.set_content(json{{"embedding", {n, m, 0.5f}}}.dump(), "application/json");
        });
        server_.Post("/v1/rate", [](const httplib::Request&, httplib::Response& res) {
            res.set_content(json{{"quality", 0.75}, {"axis1_bin", 2}, {"axis2_bin", 4}}.dump(), "application/json");
        });
        server_.Post("/v1/perceptual_distance", [](const httplib::Request& req, httplib::Response& res) {
            const json body = json::parse(req.body);
            res.set_content(json{{"mean_distance", 0.1 * static_cast<double>(body.at("artifact_refs").size())}}.dump(),
                            "application/json");
        });
        server_.Post("/flaky/v1/mutate", [this](const httplib::Request&, httplib::Response& res) {
            if (flaky_calls_++ < 2) {
                res.status = 429;
                res.set_content("slow down", "text/plain");
                return;
            }
            res.set_content(json{{"output_text", "finally"}}.dump(), "application/json");
        });
        server_.Post("/unavailable/v1/embed", [this](const httplib::Request&, httplib::Response& res) {
            ++unavailable_calls_;
            res.status = 503;
        });
        server_.Post("/bad/v1/mutate", [this](const httplib::Request&, httplib::Response& res) {
            ++bad_calls_;
            res.status = 400;
            res.set_content("{\"error\":\"bad instruction\"}", "application/json");
        });
        server_.Post("/garbage/v1/embed", [](const httplib::Request&, httplib::Response& res) {
            res.set_content("<html>not json</html>", "text/html");
        });
        server_.Post("/schema/v1/generate", [](const httplib::Request&, httplib::Response& res) {
            res.set_content(json{{"artifact_ref", 7}}.dump(), "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~FakeService() {
        server_.stop();
        thread_.join();
    }

    std::string root(const std::string& prefix = "") const {
        return "http://127.0.0.1:" + std::to_string(port_) + prefix;
    }

    std::string last_auth() {
        std::lock_guard<std::mutex> lock(mu_);
        return last_auth_;
    }

    std::atomic<int> flaky_calls_{0};
    std::atomic<int> unavailable_calls_{0};
    std::atomic<int> bad_calls_{0};
    std::string last_artifact_;

private:
    void record(const httplib::Request& req) {
        std::lock_guard<std::mutex> lock(mu_);
        last_auth_ = req.get_header_value("Authorization");
    }

    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    std::mutex mu_;
    std::string last_auth_;
};

HttpEndpoints endpoints_for(const FakeService& svc) {
    HttpEndpoints e;
    e.mutate_root = e.generate_root = e.embed_root = e.rate_root = e.perceptual_root = svc.root();
    e.timeout = std::chrono::seconds(5);
    e.token_env = "WANDER_TEST_PROVIDER_TOKEN";
    return e;
}

const RetryPolicy kFastRetry{3, std::chrono::milliseconds(0), 2.0};

}  // namespace

TEST_CASE("status classification") {
    CHECK(is_retryable_status(429));
    CHECK(is_retryable_status(408));
    CHECK(is_retryable_status(500));
    CHECK(is_retryable_status(503));
    CHECK_FALSE(is_retryable_status(400));
    CHECK_FALSE(is_retryable_status(401));
    CHECK_FALSE(is_retryable_status(404));
    CHECK_FALSE(is_retryable_status(422));
}

TEST_CASE("http adapters speak the wire protocol") {
    FakeService svc;
    ::setenv("WANDER_TEST_PROVIDER_TOKEN", "s3cret-token", 1);
    const Providers p = make_http_providers(endpoints_for(svc));
    REQUIRE(p.rater);
    REQUIRE(p.perceptual);

    const auto m = p.mutator->mutate({"Un chat à Zürich 🐈", "gpt-4o-mini", 1.0, 64}, {});
    CHECK(m.output_text == "  \"Un chat à Zürich 🐈 (mutated)\"  ");
    REQUIRE(m.token_usage);
    CHECK(m.token_usage->prompt_tokens == 11);
    CHECK(m.token_usage->completion_tokens == 5);
    CHECK_FALSE(m.token_usage->estimated);
    CHECK(svc.last_auth() == "Bearer s3cret-token");

    SUBCASE("missing usage is estimated and flagged") {
        const auto e = p.mutator->mutate({"abcdefgh", "no-usage", 1.0, 64}, {});
        REQUIRE(e.token_usage);
        CHECK(e.token_usage->estimated);
        CHECK(e.token_usage->prompt_tokens == 2);
        CHECK(e.token_usage->completion_tokens == protocol::estimate_tokens(e.output_text));
    }

    const auto g = p.generator->generate({"prompt", "flux-dev", "512x512", 9});
    CHECK(g.artifact_ref == "art/1 x.png");
    const auto* gen = dynamic_cast<const HttpGenerator*>(p.generator.get());
    REQUIRE(gen != nullptr);
    const std::string bytes = gen->fetch_artifact(g.artifact_ref);
    CHECK(bytes == kArtifactBytes);
    CHECK(digest_of(bytes) == g.content_digest);

    const auto e1 = p.embedder->embed({protocol::Modality::text, "same payload"});
    const auto e2 = p.embedder->embed({protocol::Modality::text, "same payload"});
    CHECK(e1 == e2);
    CHECK(e1.embedding.values()[0] == 12.0f);
    CHECK(p.embedder->embed({protocol::Modality::image, "same payload"}).embedding.values()[1] == -1.0f);

    const auto r = p.rater->rate({"art", {}});
    CHECK(r == protocol::RateResponse{0.75, 2, 4});
    CHECK(p.perceptual->measure({{"a", "b"}}).mean_distance == doctest::Approx(0.2));
    ::unsetenv("WANDER_TEST_PROVIDER_TOKEN");
}

TEST_CASE("no token means no authorization header") {
    FakeService svc;
    ::unsetenv("WANDER_TEST_PROVIDER_TOKEN");
    const Providers p = make_http_providers(endpoints_for(svc));
    p.generator->generate({"prompt", "flux-dev", "512x512", 1});
    CHECK(svc.last_auth().empty());
    CHECK_FALSE(bearer_token_from_env("WANDER_TEST_PROVIDER_TOKEN").has_value());
}

TEST_CASE("429 is retryable and the retry policy recovers") {
    FakeService svc;
    const HttpMutator mutator(std::make_shared<HttpJsonClient>(svc.root("/flaky"), std::chrono::seconds(5), std::nullopt));
    try {
        mutator.mutate({"x", "m", 1.0, 8}, {});
        FAIL("expected a transport error");
    } catch (const TransportError& e) {
        CHECK(e.status() == 429);
        CHECK(e.retryable());
    }
    const auto out = with_retries(kFastRetry, [&] { return mutator.mutate({"x", "m", 1.0, 8}, {}); });
    CHECK(out.output_text == "finally");
    CHECK(svc.flaky_calls_ == 3);
}

TEST_CASE("retries stop after the configured attempts") {
    FakeService svc;
    const HttpEmbedder embedder(
        std::make_shared<HttpJsonClient>(svc.root("/unavailable"), std::chrono::seconds(5), std::nullopt));
    CHECK_THROWS_AS(with_retries(kFastRetry, [&] { return embedder.embed({protocol::Modality::text, "x"}); }),
                    TransportError);
    CHECK(svc.unavailable_calls_ == 3);
}

TEST_CASE("fatal statuses are not retried") {
    FakeService svc;
    const HttpMutator mutator(std::make_shared<HttpJsonClient>(svc.root("/bad"), std::chrono::seconds(5), std::nullopt));
    try {
        with_retries(kFastRetry, [&] { return mutator.mutate({"x", "m", 1.0, 8}, {}); });
        FAIL("expected a transport error");
    } catch (const TransportError& e) {
        CHECK(e.status() == 400);
        CHECK_FALSE(e.retryable());
    }
    CHECK(svc.bad_calls_ == 1);
}

TEST_CASE("malformed replies are protocol errors") {
    FakeService svc;
    const HttpEmbedder embedder(
        std::make_shared<HttpJsonClient>(svc.root("/garbage"), std::chrono::seconds(5), std::nullopt));
    CHECK_THROWS_AS(embedder.embed({protocol::Modality::text, "x"}), ProtocolError);
    const HttpGenerator generator(
        std::make_shared<HttpJsonClient>(svc.root("/schema"), std::chrono::seconds(5), std::nullopt));
    CHECK_THROWS_AS(generator.generate({"p", "m", "1x1", 0}), ProtocolError);
}

TEST_CASE("connection failures are retryable transport errors") {
    const HttpEmbedder embedder(
        std::make_shared<HttpJsonClient>("http://127.0.0.1:1", std::chrono::seconds(2), std::nullopt));
    try {
        embedder.embed({protocol::Modality::text, "x"});
        FAIL("expected a transport error");
    } catch (const TransportError& e) {
        CHECK(e.status() == 0);
        CHECK(e.retryable());
    }
}
