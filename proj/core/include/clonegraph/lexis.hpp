#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace clonegraph::lexis {

enum class TokenKind : std::uint8_t { keyword, identifier, literal, op, separator };

std::string_view to_string(TokenKind kind);

struct Token {
    TokenKind kind;
    std::string lexeme;
    std::size_t offset;  // byte offset of the first character in the source text

    bool operator==(const Token&) const = default;
};

struct TokenStream {
    std::vector<Token> tokens;

    std::size_t count() const noexcept { return tokens.size(); }
};

/// The 50 reserved words of Java (JLS 3.9), sorted. `true`, `false` and `null`
/// are literals and deliberately absent.
const std::array<std::string_view, 50>& reserved_words();
bool is_reserved_word(std::string_view word);

/// Splits Java source into tokens.
///
/// Comments are dropped. String, text-block and char literals become a single
/// `literal` token whose lexeme is the empty literal (`""` or `''`), so nothing
/// inside a literal ever reaches keyword classification. Numeric literals are one
/// token each; multi-character operators are matched longest-first.
///
/// Throws OffsetError on an unterminated block comment, string or char literal.
TokenStream tokenize(std::string_view text);

/// Reserved-word frequencies plus the five structural side-information counters.
struct IndividualInfo {
    std::map<std::string, int> keyword_counts;  // only words with count >= 1
    int mndcb = 0;  // maximum curly-bracket nesting depth, method braces = 1
    int mnpcb = 0;  // most sibling brace groups at depth 2 under one depth-1 group
    int lri = 0;    // `for` + `while` tokens
    int fci = 0;    // `if` + `switch` tokens
    int ndi = 0;    // int/double/float/byte/short/long tokens

    bool empty() const noexcept {
        return keyword_counts.empty() && mndcb == 0 && mnpcb == 0 && lri == 0 && fci == 0 && ndi == 0;
    }

    bool operator==(const IndividualInfo&) const = default;
};

/// Computes IndividualInfo from a token stream. Brace structure comes from the
/// `{`/`}` separator tokens; a closing brace without an opener throws OffsetError.
IndividualInfo extract_individual_info(const TokenStream& stream);

/// tokenize + extract_individual_info.
IndividualInfo individual_info(std::string_view text);

/// JSON object with keys keywords, mndcb, mnpcb, lri, fci, ndi.
std::string to_json(const IndividualInfo& info);

}  // namespace clonegraph::lexis
