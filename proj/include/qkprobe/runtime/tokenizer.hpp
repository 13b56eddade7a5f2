#pragma once

//! Deterministic word/punctuation tokenizer with a dedicated end-of-line
//! token.
//!
//! Prompts are tokenized by simple rules: newlines become the <eol> token,
//! punctuation marks are single-character tokens, and everything between
//! delimiters is one word token.  The vocabulary ships inside the model
//! manifest; generation lexicons are closed, so an unknown word maps to
//! <unk> and signals a data or template bug rather than being silently
//! subworded.
//!
//! Anchor spans arrive as character offsets from the prompt renderer and
//! resolve to token indices here.  A span that does not land exactly on a
//! token boundary is a hard error: anchors are never recovered by string
//! search.

#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "qkprobe/common.hpp"

namespace qkprobe::runtime {

inline constexpr const char* kUnkToken = "<unk>";
inline constexpr const char* kEolToken = "<eol>";
// Statement-EOL variants for the planted verification model: the marker
// carries the gold answer into one embedding channel (see harness).
inline constexpr const char* kMarkerA0Token = "<eol+>";
inline constexpr const char* kMarkerA1Token = "<eol->";

/// Character offsets of the three anchors inside rendered prompt text.
struct PromptSpans {
    size_t a0_begin = 0;   // first character of option word a0
    size_t a1_begin = 0;   // first character of option word a1
    size_t eol_begin = 0;  // the newline immediately after the statement
};

/// Token-level prompt description consumed by the forward pass.
struct PromptLayout {
    std::vector<int> token_ids;
    int pos_a0 = 0;     // first token of option a0
    int pos_a1 = 0;     // first token of option a1
    int pos_s = 0;      // end-of-line token closing the statement
    int pos_final = 0;  // last token; output logits are read here
    std::string template_id;
};

namespace detail {

inline bool is_punct_char(char c) {
    return c == '.' || c == ',' || c == '?' || c == '!' || c == ':' || c == ';' || c == '\'' ||
           c == '"' || c == '(' || c == ')';
}

struct Piece {
    std::string token;
    size_t begin;
};

inline std::vector<Piece> split_text(const std::string& text) {
    std::vector<Piece> out;
    size_t i = 0;
    while (i < text.size()) {
        char c = text[i];
        if (c == '\n') {
            out.push_back({kEolToken, i});
            ++i;
        } else if (c == ' ' || c == '\t' || c == '\r') {
            ++i;
        } else if (is_punct_char(c)) {
            out.push_back({std::string(1, c), i});
            ++i;
        } else {
            size_t b = i;
            while (i < text.size() && text[i] != '\n' && text[i] != ' ' && text[i] != '\t' &&
                   text[i] != '\r' && !is_punct_char(text[i]))
                ++i;
            out.push_back({text.substr(b, i - b), b});
        }
    }
    return out;
}

}  // namespace detail

class Tokenizer {
public:
    explicit Tokenizer(std::vector<std::string> vocabulary) : vocab_(std::move(vocabulary)) {
        for (size_t i = 0; i < vocab_.size(); ++i) ids_[vocab_[i]] = static_cast<int>(i);
        if (!ids_.count(kUnkToken) || !ids_.count(kEolToken))
            throw FormatError("tokenizer vocabulary must contain <unk> and <eol>");
    }

    int id_of(const std::string& token) const {
        auto it = ids_.find(token);
        return it == ids_.end() ? ids_.at(kUnkToken) : it->second;
    }

    const std::vector<std::string>& vocabulary() const { return vocab_; }

    /// Tokenize rendered prompt text and resolve anchor spans to token
    /// indices.  A nonempty eol_marker replaces the statement's <eol>
    /// token (planted-model mode); all other end-of-line tokens keep the
    /// standard id.
    PromptLayout tokenize(const std::string& text, const PromptSpans& spans,
                          const std::string& template_id, const std::string& eol_marker = "") const {
        auto pieces = detail::split_text(text);
        if (pieces.empty()) throw SpanResolutionError("cannot tokenize empty prompt");

        int pos_a0 = -1, pos_a1 = -1, pos_s = -1;
        for (size_t i = 0; i < pieces.size(); ++i) {
            if (pieces[i].begin == spans.a0_begin) pos_a0 = static_cast<int>(i);
            if (pieces[i].begin == spans.a1_begin) pos_a1 = static_cast<int>(i);
            if (pieces[i].begin == spans.eol_begin) pos_s = static_cast<int>(i);
        }
        if (pos_a0 < 0 || pos_a1 < 0 || pos_s < 0)
            throw SpanResolutionError("anchor span does not start a token");
        if (pieces[pos_s].token != kEolToken)
            throw SpanResolutionError("statement anchor does not land on an end-of-line");
        if (!eol_marker.empty()) pieces[pos_s].token = eol_marker;

        PromptLayout layout;
        layout.template_id = template_id;
        for (const auto& p : pieces) layout.token_ids.push_back(id_of(p.token));
        layout.pos_a0 = pos_a0;
        layout.pos_a1 = pos_a1;
        layout.pos_s = pos_s;
        layout.pos_final = static_cast<int>(pieces.size()) - 1;
        return layout;
    }

private:
    std::vector<std::string> vocab_;
    std::unordered_map<std::string, int> ids_;
};

/// Closed vocabulary over a corpus of rendered prompts: the four special
/// tokens first, then every surface token in sorted order.
inline std::vector<std::string> build_vocabulary(const std::vector<std::string>& texts) {
    std::set<std::string> words;
    for (const auto& t : texts)
        for (const auto& p : detail::split_text(t)) words.insert(p.token);
    words.erase(kUnkToken);
    words.erase(kEolToken);
    words.erase(kMarkerA0Token);
    words.erase(kMarkerA1Token);
    std::vector<std::string> vocab = {kUnkToken, kEolToken, kMarkerA0Token, kMarkerA1Token};
    vocab.insert(vocab.end(), words.begin(), words.end());
    return vocab;
}

}  // namespace qkprobe::runtime
