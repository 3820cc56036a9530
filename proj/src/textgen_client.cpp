#include "fch/textgen_client.hpp"

#include <cstdlib>

#include "httplib.h"

#include "fch/errors.hpp"
#include "fch/toolcall.hpp"
#include "fch/util.hpp"

namespace fch::textgen {

FixtureTextGenClient::FixtureTextGenClient(const std::string& fixture_path) {
    json doc;
    try {
        doc = json::parse(util::read_file(fixture_path));
    } catch (const json::parse_error& e) {
        throw config_error("fixture file '" + fixture_path + "': " + e.what());
    }
    const json& entries = doc.is_array() ? doc : doc.at("entries");
    if (!entries.is_array())
        throw config_error("fixture file '" + fixture_path + "': expected an entry array");
    for (const json& entry : entries)
        add(entry.at("prompt").get<std::string>(), entry.at("reply").get<std::string>());
}

void FixtureTextGenClient::add(const std::string& prompt, const std::string& reply) {
    replies_[util::fnv1a_hex(prompt)] = reply;
}

std::string FixtureTextGenClient::complete(const std::string& prompt) {
    const std::string key = util::fnv1a_hex(prompt);
    const auto it = replies_.find(key);
    if (it == replies_.end())
        throw textgen_error("no fixture reply for prompt hash " + key +
                            " (prompt starts: " + prompt.substr(0, 80) + "...)");
    return it->second;
}

namespace {

class HttpTextGenClient : public TextGenClient {
public:
    explicit HttpTextGenClient(HttpClientConfig config) : config_(std::move(config)) {
        if (config_.base_url.empty()) throw config_error("text generation base_url is empty");
        if (config_.model.empty()) throw config_error("text generation model is empty");
    }

    std::string complete(const std::string& prompt) override {
        httplib::Client client(config_.base_url);
        if (!client.is_valid())
            throw config_error("invalid text generation base_url '" + config_.base_url + "'");
        client.set_read_timeout(config_.timeout_seconds, 0);
        client.set_connection_timeout(config_.timeout_seconds, 0);

        httplib::Headers headers;
        if (!config_.api_key_env.empty()) {
            const char* key = std::getenv(config_.api_key_env.c_str());
            if (key == nullptr || *key == '\0')
                throw config_error("environment variable '" + config_.api_key_env +
                                   "' is not set");
            headers.emplace("Authorization", std::string("Bearer ") + key);
        }

        json body = {
            {"model", config_.model},
            {"messages", json::array({json{{"role", "user"}, {"content", prompt}}})},
            {"temperature", config_.temperature},
            {"max_tokens", config_.max_tokens},
        };

        const auto res = client.Post(config_.path, headers, body.dump(), "application/json");
        if (!res)
            throw textgen_error("text generation request to " + config_.base_url +
                                " failed: " + httplib::to_string(res.error()));
        if (res->status != 200)
            throw textgen_error("text generation request returned HTTP " +
                                    std::to_string(res->status),
                                res->body);
        try {
            const json reply = json::parse(res->body);
            return reply.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const json::exception& e) {
            throw textgen_error(std::string("malformed text generation reply: ") + e.what(),
                                res->body);
        }
    }

private:
    HttpClientConfig config_;
};

}  // namespace

std::unique_ptr<TextGenClient> make_http_client(const HttpClientConfig& config) {
    return std::make_unique<HttpTextGenClient>(config);
}

}  // namespace fch::textgen
