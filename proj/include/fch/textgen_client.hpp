#pragma once

#include <map>
#include <memory>
#include <string>

namespace fch::textgen {

// A general-purpose instruction-following model used as a *writing assistant*
// (injected-function generation, query paraphrasing, payload rewriting) — not
// the attacked model. Implementations must be deterministic per prompt so runs
// are reproducible.
class TextGenClient {
public:
    virtual ~TextGenClient() = default;
    virtual std::string complete(const std::string& prompt) = 0;
};

// Deterministic offline client: replies are looked up by a hash of the exact
// prompt text. Used by tests and air-gapped runs. Missing prompts raise
// textgen_error naming the hash, so the fixture file can be extended.
class FixtureTextGenClient : public TextGenClient {
public:
    FixtureTextGenClient() = default;
    // File shape: {"entries": [{"prompt": "...", "reply": "..."}, ...]} or a
    // bare array of such objects. Prompts are hashed at load time.
    explicit FixtureTextGenClient(const std::string& fixture_path);

    void add(const std::string& prompt, const std::string& reply);
    size_t size() const { return replies_.size(); }

    std::string complete(const std::string& prompt) override;

private:
    std::map<std::string, std::string> replies_;  // fnv1a(prompt) -> reply
};

struct HttpClientConfig {
    std::string base_url;  // e.g. "http://127.0.0.1:8000"
    std::string path = "/v1/chat/completions";
    std::string model;
    std::string api_key_env;  // name of the env var holding the bearer token
    double temperature = 0.0;
    int max_tokens = 1024;
    int timeout_seconds = 120;
};

// OpenAI-compatible chat-completions client (vLLM, llama.cpp server, ...).
std::unique_ptr<TextGenClient> make_http_client(const HttpClientConfig& config);

}  // namespace fch::textgen
