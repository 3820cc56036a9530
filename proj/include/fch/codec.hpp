#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace fch::lmbridge {

using TokenId = std::int32_t;

// Half-open token span [begin, end).
struct SpanRange {
    size_t begin = 0;
    size_t end = 0;
    size_t size() const { return end - begin; }
    bool empty() const { return begin == end; }
    bool operator==(const SpanRange&) const = default;
};

class TokenCodec {
public:
    virtual ~TokenCodec() = default;
    virtual size_t vocab_size() const = 0;
    virtual std::vector<TokenId> encode(const std::string& text) const = 0;
    virtual std::string decode(const std::vector<TokenId>& ids) const = 0;
    virtual std::vector<TokenId> special_ids() const = 0;
    virtual TokenId end_of_turn_id() const = 0;

    bool is_special(TokenId id) const;
    // Token ids whose decoded form is printable ASCII and which are not special.
    std::vector<TokenId> printable_ascii_ids() const;
};

// Character-level codec: token id == byte value, one reserved end-of-turn id.
// Merge-free by construction, so decode(encode(t)) == t for representable text
// and any token sequence re-encodes to itself.
class ByteCodec : public TokenCodec {
public:
    // vocab_size >= 2; bytes below min(256, vocab_size-1) are representable and
    // the end-of-turn token sits at min(256, vocab_size-1).
    explicit ByteCodec(size_t vocab_size = 257);

    size_t vocab_size() const override { return vocab_size_; }
    std::vector<TokenId> encode(const std::string& text) const override;
    std::string decode(const std::vector<TokenId>& ids) const override;
    std::vector<TokenId> special_ids() const override { return {eot_}; }
    TokenId end_of_turn_id() const override { return eot_; }

private:
    size_t vocab_size_;
    TokenId eot_;
};

}  // namespace fch::lmbridge
