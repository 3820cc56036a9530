#pragma once

#include <stdexcept>
#include <string>

namespace fch {

// Configuration / input-file problems the caller can fix.
struct config_error : std::runtime_error {
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

// A corpus record failed validation; carries the offending record id.
struct corpus_error : std::runtime_error {
    corpus_error(std::string record_id, const std::string& what)
        : std::runtime_error("record '" + record_id + "': " + what), record_id(std::move(record_id)) {}
    std::string record_id;
};

// Rendering or template expansion failed (missing placeholder, round-trip mismatch, ...).
struct render_error : std::runtime_error {
    explicit render_error(const std::string& what) : std::runtime_error(what) {}
};

// A backend was asked for an operation it does not support (e.g. gradients).
struct capability_error : std::runtime_error {
    explicit capability_error(const std::string& what) : std::runtime_error(what) {}
};

// Text-generation client exhausted its retries / has no fixture for a prompt.
struct textgen_error : std::runtime_error {
    textgen_error(const std::string& what, std::string raw_reply = "")
        : std::runtime_error(what), raw_reply(std::move(raw_reply)) {}
    std::string raw_reply;
};

}  // namespace fch
