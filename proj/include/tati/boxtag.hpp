#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tati/util.hpp"

namespace tati {

// The box-tag protocol. Ordered source lines are serialized as
//   <box0>content</box0><box1>content</box1>...
// and the translator is expected to answer in the same shape. Real model
// output violates the shape often enough that the parser has a repair mode
// covering the observed corruption classes: a dropped closing tag, swapped
// entry order, duplicated indices, out-of-range indices, and stray text
// between entries.
//
// The tag grammar is ASCII-exact: '<box' + decimal digits + '>'. Content is
// protected by doubling every '<' ("<<") at serialization time; the tokenizer
// resolves "<<" to a literal '<' before considering tag matches, so content
// can never be mistaken for a tag.

struct TaggedSequence {
    std::string canonical_text;
    int n_boxes = 0;
};

enum class ParseStatus { CLEAN, REPAIRED, FAILED };

enum class IssueKind {
    MISSING_CLOSE,
    MISSING_OPEN,
    DUPLICATE_INDEX,
    UNKNOWN_INDEX,
    MISSING_INDEX,
    STRAY_TEXT,
    MALFORMED_TAG,
};

inline const char* to_string(IssueKind k) {
    switch (k) {
        case IssueKind::MISSING_CLOSE: return "missing_close";
        case IssueKind::MISSING_OPEN: return "missing_open";
        case IssueKind::DUPLICATE_INDEX: return "duplicate_index";
        case IssueKind::UNKNOWN_INDEX: return "unknown_index";
        case IssueKind::MISSING_INDEX: return "missing_index";
        case IssueKind::STRAY_TEXT: return "stray_text";
        case IssueKind::MALFORMED_TAG: return "malformed_tag";
    }
    return "malformed_tag";
}

struct ParseIssue {
    IssueKind kind;
    std::string detail;
    std::optional<std::pair<std::size_t, std::size_t>> span;  // [begin, end)
};

struct ParseResult {
    std::map<int, std::string> texts;
    std::vector<ParseIssue> issues;
    ParseStatus status = ParseStatus::FAILED;

    bool ok() const { return status != ParseStatus::FAILED; }
};

inline std::string escape_tag_content(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        if (c == '<') out.push_back('<');
        out.push_back(c);
    }
    return out;
}

inline std::string unescape_tag_content(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        out.push_back(s[i]);
        if (s[i] == '<' && i + 1 < s.size() && s[i + 1] == '<') ++i;
    }
    return out;
}

inline std::string open_tag(int idx) {
    return "<box" + std::to_string(idx) + ">";
}

inline std::string close_tag(int idx) {
    return "</box" + std::to_string(idx) + ">";
}

inline TaggedSequence serialize_tagged(const std::vector<std::string>& lines) {
    TaggedSequence seq;
    seq.n_boxes = static_cast<int>(lines.size());
    for (std::size_t i = 0; i < lines.size(); ++i) {
        seq.canonical_text += open_tag(static_cast<int>(i));
        seq.canonical_text += escape_tag_content(lines[i]);
        seq.canonical_text += close_tag(static_cast<int>(i));
    }
    return seq;
}

namespace detail {

struct Token {
    enum Kind { OPEN, CLOSE, TEXT } kind;
    int index = -1;          // OPEN/CLOSE
    std::string text;        // TEXT (escapes already resolved)
    std::size_t begin = 0;
    std::size_t end = 0;
};

// Matches '<box' DIGITS '>' or '</box' DIGITS '>' at `pos`. Digit runs longer
// than 9 are not treated as tags (they cannot be plausible box indices).
inline bool match_tag(std::string_view s, std::size_t pos, bool& is_close,
                      int& index, std::size_t& end) {
    std::size_t p = pos;
    if (p >= s.size() || s[p] != '<') return false;
    ++p;
    is_close = p < s.size() && s[p] == '/';
    if (is_close) ++p;
    if (s.compare(p, 3, "box") != 0) return false;
    p += 3;
    std::size_t d = p;
    while (d < s.size() && s[d] >= '0' && s[d] <= '9') ++d;
    if (d == p || d - p > 9 || d >= s.size() || s[d] != '>') return false;
    index = 0;
    for (std::size_t i = p; i < d; ++i) index = index * 10 + (s[i] - '0');
    end = d + 1;
    return true;
}

// Leftmost scan. "<<" resolves to a literal '<' before tag matching, which is
// what keeps escaped content out of the tag grammar.
inline std::vector<Token> tokenize(std::string_view s) {
    std::vector<Token> out;
    std::string text;
    std::size_t text_begin = 0;
    auto flush_text = [&](std::size_t end) {
        if (!text.empty()) {
            out.push_back({Token::TEXT, -1, text, text_begin, end});
            text.clear();
        }
    };
    std::size_t pos = 0;
    while (pos < s.size()) {
        if (s[pos] == '<') {
            if (pos + 1 < s.size() && s[pos + 1] == '<') {
                if (text.empty()) text_begin = pos;
                text.push_back('<');
                pos += 2;
                continue;
            }
            bool is_close = false;
            int index = -1;
            std::size_t end = 0;
            if (match_tag(s, pos, is_close, index, end)) {
                flush_text(pos);
                out.push_back({is_close ? Token::CLOSE : Token::OPEN, index,
                               {}, pos, end});
                pos = end;
                continue;
            }
        }
        if (text.empty()) text_begin = pos;
        text.push_back(s[pos]);
        ++pos;
    }
    flush_text(s.size());
    return out;
}

}  // namespace detail

// Parses a tagged sequence against an expected box count `n`.
//
// strict=true accepts only the canonical form (entries in index order, every
// tag present and matched); whitespace between entries is tolerated in both
// modes. Any other deviation fails with the texts map cleared, which keeps
// strict mode usable as a validation gate.
//
// strict=false runs the repair pipeline. Content of repaired entries is
// whitespace-trimmed; missing indices downgrade the result to FAILED with
// one MISSING_INDEX issue each.
inline ParseResult parse_tagged(std::string_view s, int n, bool strict) {
    ParseResult res;
    const auto tokens = detail::tokenize(s);

    if (strict) {
        int expect = 0;
        std::size_t t = 0;
        std::string fail_detail;
        std::optional<std::pair<std::size_t, std::size_t>> fail_span;
        while (t < tokens.size() && expect < n) {
            // Whitespace between entries is fine even in strict mode.
            if (tokens[t].kind == detail::Token::TEXT &&
                trim_view(tokens[t].text).empty()) {
                ++t;
                continue;
            }
            if (tokens[t].kind != detail::Token::OPEN ||
                tokens[t].index != expect) {
                fail_detail = "expected " + open_tag(expect);
                fail_span = {{tokens[t].begin, tokens[t].end}};
                break;
            }
            const std::size_t open_t = t++;
            std::string content;
            if (t < tokens.size() && tokens[t].kind == detail::Token::TEXT) {
                content = tokens[t].text;
                ++t;
            }
            if (t >= tokens.size() || tokens[t].kind != detail::Token::CLOSE ||
                tokens[t].index != expect) {
                fail_detail = "expected " + close_tag(expect);
                fail_span = {{tokens[open_t].begin,
                              t < tokens.size() ? tokens[t].end : s.size()}};
                break;
            }
            ++t;
            res.texts[expect] = content;
            ++expect;
        }
        bool clean = expect == n && fail_detail.empty();
        if (clean) {
            for (; t < tokens.size(); ++t) {
                if (tokens[t].kind != detail::Token::TEXT ||
                    !trim_view(tokens[t].text).empty()) {
                    fail_detail = "trailing material after last entry";
                    fail_span = {{tokens[t].begin, tokens[t].end}};
                    clean = false;
                    break;
                }
            }
        }
        if (!clean) {
            res.texts.clear();
            res.issues.push_back({IssueKind::MALFORMED_TAG,
                                  fail_detail.empty() ? "input truncated"
                                                      : fail_detail,
                                  fail_span});
            for (int i = 0; i < n; ++i)
                res.issues.push_back({IssueKind::MISSING_INDEX,
                                      "no entry for index " + std::to_string(i),
                                      std::nullopt});
            res.status = ParseStatus::FAILED;
            return res;
        }
        res.status = ParseStatus::CLEAN;
        return res;
    }

    // Repair mode. Entries are collected keyed by index; the state machine
    // below implements the corruption-class repairs.
    struct Entry {
        int index;
        std::string content;
    };
    std::vector<Entry> arrival;
    std::optional<int> open_index;
    std::size_t open_begin = 0;
    std::string content;
    std::string outside;  // text seen while no entry is open
    std::size_t outside_begin = 0;

    auto note = [&res](IssueKind k, std::string detail,
                       std::optional<std::pair<std::size_t, std::size_t>> span =
                           std::nullopt) {
        res.issues.push_back({k, std::move(detail), span});
    };
    auto drop_outside = [&](std::size_t end) {
        if (!trim_view(outside).empty())
            note(IssueKind::STRAY_TEXT,
                 "dropped stray text between entries: '" + trim(outside) + "'",
                 {{outside_begin, end}});
        outside.clear();
    };

    for (const auto& tok : tokens) {
        switch (tok.kind) {
            case detail::Token::TEXT:
                if (open_index) {
                    content += tok.text;
                } else {
                    if (outside.empty()) outside_begin = tok.begin;
                    outside += tok.text;
                }
                break;
            case detail::Token::OPEN:
                if (open_index) {
                    // R1: a dropped closing tag — close the running entry at
                    // the next open.
                    note(IssueKind::MISSING_CLOSE,
                         "entry " + std::to_string(*open_index) +
                             " closed at next open tag",
                         {{open_begin, tok.begin}});
                    arrival.push_back({*open_index, content});
                }
                drop_outside(tok.begin);
                open_index = tok.index;
                open_begin = tok.begin;
                content.clear();
                break;
            case detail::Token::CLOSE:
                if (open_index) {
                    if (tok.index != *open_index)
                        note(IssueKind::MALFORMED_TAG,
                             "entry " + std::to_string(*open_index) +
                                 " closed by " + close_tag(tok.index),
                             {{tok.begin, tok.end}});
                    arrival.push_back({*open_index, content});
                    open_index.reset();
                    content.clear();
                } else {
                    // A close with no matching open claims the text before it.
                    note(IssueKind::MISSING_OPEN,
                         "entry " + std::to_string(tok.index) +
                             " had no opening tag",
                         {{tok.begin, tok.end}});
                    arrival.push_back({tok.index, outside});
                    outside.clear();
                }
                break;
        }
    }
    if (open_index) {
        // R1 at end of input.
        note(IssueKind::MISSING_CLOSE,
             "entry " + std::to_string(*open_index) + " closed at end of input",
             {{open_begin, s.size()}});
        arrival.push_back({*open_index, content});
    }
    drop_outside(s.size());

    // R2/R3/R4: index-keyed collection; first occurrence wins; out-of-range
    // indices are dropped.
    bool out_of_order = false;
    int last_index = -1;
    for (const auto& e : arrival) {
        if (e.index < 0 || e.index >= n) {
            note(IssueKind::UNKNOWN_INDEX,
                 "dropped entry with out-of-range index " +
                     std::to_string(e.index));
            continue;
        }
        if (res.texts.count(e.index)) {
            note(IssueKind::DUPLICATE_INDEX,
                 "kept first entry for duplicated index " +
                     std::to_string(e.index));
            continue;
        }
        if (e.index < last_index) out_of_order = true;
        last_index = std::max(last_index, e.index);
        // Escapes were already resolved by the tokenizer.
        res.texts[e.index] = trim(e.content);
    }
    if (out_of_order)
        note(IssueKind::MALFORMED_TAG, "entries out of canonical index order");

    bool complete = true;
    for (int i = 0; i < n; ++i) {
        if (!res.texts.count(i)) {
            complete = false;
            note(IssueKind::MISSING_INDEX,
                 "no entry for index " + std::to_string(i));
        }
    }
    res.status = !complete          ? ParseStatus::FAILED
                 : res.issues.empty() ? ParseStatus::CLEAN
                                      : ParseStatus::REPAIRED;
    return res;
}

// Convenience overload used by round-trip checks.
inline ParseResult parse_tagged(const TaggedSequence& seq, bool strict = true) {
    return parse_tagged(seq.canonical_text, seq.n_boxes, strict);
}

}  // namespace tati
