#include "fch/codec.hpp"

#include <algorithm>
#include <stdexcept>

#include "fch/util.hpp"

namespace fch::lmbridge {

bool TokenCodec::is_special(TokenId id) const {
    const auto ids = special_ids();
    return std::find(ids.begin(), ids.end(), id) != ids.end();
}

std::vector<TokenId> TokenCodec::printable_ascii_ids() const {
    std::vector<TokenId> out;
    for (size_t id = 0; id < vocab_size(); ++id) {
        const TokenId t = static_cast<TokenId>(id);
        if (is_special(t)) continue;
        const std::string text = decode({t});
        if (!text.empty() && util::is_printable_ascii(text)) out.push_back(t);
    }
    return out;
}

ByteCodec::ByteCodec(size_t vocab_size) : vocab_size_(vocab_size) {
    if (vocab_size < 2) throw std::invalid_argument("byte codec needs vocab_size >= 2");
    eot_ = static_cast<TokenId>(std::min<size_t>(256, vocab_size - 1));
}

std::vector<TokenId> ByteCodec::encode(const std::string& text) const {
    std::vector<TokenId> ids;
    ids.reserve(text.size());
    for (unsigned char c : text) {
        if (c >= static_cast<unsigned>(eot_))
            throw std::invalid_argument("byte 0x" + std::to_string(int(c)) +
                                        " not representable in vocab of " + std::to_string(vocab_size_));
        ids.push_back(static_cast<TokenId>(c));
    }
    return ids;
}

std::string ByteCodec::decode(const std::vector<TokenId>& ids) const {
    std::string out;
    out.reserve(ids.size());
    for (TokenId id : ids) {
        if (id >= 0 && id < eot_ && id < 256) out += static_cast<char>(id);
        // special / out-of-byte-range ids render as nothing
    }
    return out;
}

}  // namespace fch::lmbridge
