#include "clonegraph/lexis.hpp"

#include <algorithm>
#include <span>

#include <nlohmann/json.hpp>

#include "clonegraph/error.hpp"

namespace clonegraph::lexis {
namespace {

constexpr std::array<std::string_view, 50> kReservedWords = {
    "abstract",  "assert",       "boolean",   "break",      "byte",      "case",
    "catch",     "char",         "class",     "const",      "continue",  "default",
    "do",        "double",       "else",      "enum",       "extends",   "final",
    "finally",   "float",        "for",       "goto",       "if",        "implements",
    "import",    "instanceof",   "int",       "interface",  "long",      "native",
    "new",       "package",      "private",   "protected",  "public",    "return",
    "short",     "static",       "strictfp",  "super",      "switch",    "synchronized",
    "this",      "throw",        "throws",    "transient",  "try",       "void",
    "volatile",  "while",
};

static_assert(std::is_sorted(kReservedWords.begin(), kReservedWords.end()));

// Table order is irrelevant: longest_match keeps the longest hit.
constexpr std::string_view kOperators[] = {
    ">>>=", "<<=", ">>=", ">>>", "->", "++", "--", "&&", "||", "==", "!=", "<=", ">=", "+=",
    "-=",   "*=",  "/=",  "&=",  "|=", "^=", "%=", "<<", ">>", "=",  ">",  "<",  "!",  "~",
    "?",    ":",   "+",   "-",   "*",  "/",  "&",  "|",  "^",  "%",  "@",  "#",
};

constexpr std::string_view kSeparators[] = {
    "...", "::", "(", ")", "{", "}", "[", "]", ";", ",", ".",
};

bool is_ident_start(unsigned char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || c == '$' || c >= 0x80;
}

bool is_ident_char(unsigned char c) { return is_ident_start(c) || (c >= '0' && c <= '9'); }

bool is_digit(unsigned char c) { return c >= '0' && c <= '9'; }

bool is_space(unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::size_t longest_match(std::string_view rest, std::span<const std::string_view> table) {
    std::size_t best = 0;
    for (auto candidate : table) {
        if (candidate.size() > best && rest.starts_with(candidate)) best = candidate.size();
    }
    return best;
}

// Returns the offset just past the closing quote of a "..." or '...' literal.
std::size_t skip_quoted(std::string_view text, std::size_t start, char quote) {
    std::size_t i = start + 1;
    while (i < text.size()) {
        const char c = text[i];
        if (c == '\\') {
            i += 2;
            continue;
        }
        if (c == quote) return i + 1;
        if (c == '\n') break;
        ++i;
    }
    throw OffsetError(quote == '"' ? "unterminated string literal" : "unterminated char literal", start);
}

std::size_t skip_text_block(std::string_view text, std::size_t start) {
    std::size_t i = start + 3;
    while (i < text.size()) {
        if (text[i] == '\\') {
            i += 2;
            continue;
        }
        if (text.compare(i, 3, "\"\"\"") == 0) return i + 3;
        ++i;
    }
    throw OffsetError("unterminated text block", start);
}

std::size_t skip_number(std::string_view text, std::size_t start) {
    const bool hex = text.size() > start + 1 && text[start] == '0' && (text[start + 1] == 'x' || text[start + 1] == 'X');
    std::size_t i = start;
    while (i < text.size()) {
        const unsigned char c = text[i];
        if (is_ident_char(c) || c == '.') {
            ++i;
            continue;
        }
        if ((c == '+' || c == '-') && i > start) {
            const char prev = text[i - 1];
            const bool exponent = hex ? (prev == 'p' || prev == 'P') : (prev == 'e' || prev == 'E');
            if (exponent) {
                ++i;
                continue;
            }
        }
        break;
    }
    return i;
}

}  // namespace

std::string_view to_string(TokenKind kind) {
    switch (kind) {
        case TokenKind::keyword: return "keyword";
        case TokenKind::identifier: return "identifier";
        case TokenKind::literal: return "literal";
        case TokenKind::op: return "operator";
        case TokenKind::separator: return "separator";
    }
    return "unknown";
}

const std::array<std::string_view, 50>& reserved_words() { return kReservedWords; }

bool is_reserved_word(std::string_view word) {
    return std::binary_search(kReservedWords.begin(), kReservedWords.end(), word);
}

TokenStream tokenize(std::string_view text) {
    TokenStream out;
    out.tokens.reserve(text.size() / 4);
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        const unsigned char c = text[i];
        if (is_space(c)) {
            ++i;
            continue;
        }
        if (c == '/' && i + 1 < n && text[i + 1] == '/') {
            const auto eol = text.find('\n', i);
            i = eol == std::string_view::npos ? n : eol + 1;
            continue;
        }
        if (c == '/' && i + 1 < n && text[i + 1] == '*') {
            const auto close = text.find("*/", i + 2);
            if (close == std::string_view::npos) throw OffsetError("unterminated block comment", i);
            i = close + 2;
            continue;
        }
        if (c == '"') {
            const bool block = text.compare(i, 3, "\"\"\"") == 0;
            const std::size_t end = block ? skip_text_block(text, i) : skip_quoted(text, i, '"');
            out.tokens.push_back({TokenKind::literal, "\"\"", i});
            i = end;
            continue;
        }
        if (c == '\'') {
            const std::size_t end = skip_quoted(text, i, '\'');
            out.tokens.push_back({TokenKind::literal, "''", i});
            i = end;
            continue;
        }
        if (is_digit(c) || (c == '.' && i + 1 < n && is_digit(text[i + 1]))) {
            const std::size_t end = skip_number(text, i);
            out.tokens.push_back({TokenKind::literal, std::string(text.substr(i, end - i)), i});
            i = end;
            continue;
        }
        if (is_ident_start(c)) {
            std::size_t end = i + 1;
            while (end < n && is_ident_char(text[end])) ++end;
            std::string word(text.substr(i, end - i));
            TokenKind kind = TokenKind::identifier;
            if (is_reserved_word(word)) {
                kind = TokenKind::keyword;
            } else if (word == "true" || word == "false" || word == "null") {
                kind = TokenKind::literal;
            }
            out.tokens.push_back({kind, std::move(word), i});
            i = end;
            continue;
        }
        const std::string_view rest = text.substr(i);
        if (std::size_t len = longest_match(rest, kSeparators); len > 0) {
            out.tokens.push_back({TokenKind::separator, std::string(rest.substr(0, len)), i});
            i += len;
            continue;
        }
        std::size_t len = longest_match(rest, kOperators);
        if (len == 0) len = 1;  // stray character (e.g. a backslash); keep it visible to the baseline
        out.tokens.push_back({TokenKind::op, std::string(rest.substr(0, len)), i});
        i += len;
    }
    return out;
}

IndividualInfo extract_individual_info(const TokenStream& stream) {
    IndividualInfo info;
    int depth = 0;
    int children_at_depth2 = 0;  // depth-2 groups under the currently open depth-1 group
    for (const auto& tok : stream.tokens) {
        if (tok.kind == TokenKind::separator) {
            if (tok.lexeme == "{") {
                ++depth;
                info.mndcb = std::max(info.mndcb, depth);
                if (depth == 1) children_at_depth2 = 0;
                if (depth == 2) info.mnpcb = std::max(info.mnpcb, ++children_at_depth2);
            } else if (tok.lexeme == "}") {
                if (depth == 0) throw OffsetError("unbalanced closing brace", tok.offset);
                --depth;
            }
            continue;
        }
        if (tok.kind != TokenKind::keyword) continue;
        ++info.keyword_counts[tok.lexeme];
        const std::string& w = tok.lexeme;
        if (w == "for" || w == "while") {
            ++info.lri;
        } else if (w == "if" || w == "switch") {
            ++info.fci;
        } else if (w == "int" || w == "double" || w == "float" || w == "byte" || w == "short" || w == "long") {
            ++info.ndi;
        }
    }
    return info;
}

IndividualInfo individual_info(std::string_view text) { return extract_individual_info(tokenize(text)); }

std::string to_json(const IndividualInfo& info) {
    nlohmann::ordered_json j;
    j["keywords"] = nlohmann::ordered_json::object();
    for (const auto& [word, count] : info.keyword_counts) j["keywords"][word] = count;
    j["mndcb"] = info.mndcb;
    j["mnpcb"] = info.mnpcb;
    j["lri"] = info.lri;
    j["fci"] = info.fci;
    j["ndi"] = info.ndi;
    return j.dump();
}

}  // namespace clonegraph::lexis
