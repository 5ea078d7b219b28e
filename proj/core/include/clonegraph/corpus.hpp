#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace clonegraph::corpus {

struct LineSpan {
    int start = 1;  // 1-based, inclusive
    int end = 1;

    bool operator==(const LineSpan&) const = default;
};

/// Everything the manifest records about a sample, i.e. a CodeSample minus its text.
struct SampleRecord {
    std::string id;  // "<relpath>#<ordinal>"
    std::filesystem::path source_path;
    std::string function_name;
    LineSpan lines;
    int loc = 0;

    bool operator==(const SampleRecord&) const = default;
};

struct CodeSample {
    SampleRecord meta;
    std::string text;
};

struct CorpusManifest {
    std::vector<SampleRecord> samples;  // sorted by id
    std::filesystem::path corpus_root;
    std::string created_at;  // ISO-8601 UTC
    std::int64_t total_loc = 0;
};

struct SkippedFile {
    std::filesystem::path path;
    std::string reason;
};

struct Corpus {
    CorpusManifest manifest;
    std::vector<CodeSample> samples;  // same order as manifest.samples
    std::vector<SkippedFile> skipped;
};

enum class IngestMode { one_per_file, split_methods };

IngestMode parse_ingest_mode(std::string_view name);
std::string_view to_string(IngestMode mode);

struct IngestOptions {
    IngestMode mode = IngestMode::split_methods;
    std::string extension = ".java";
};

/// A method found by split_methods. `text` is exactly what read_line_span returns
/// for `lines` unless the method shares a line with other code, in which case it is
/// the byte range from the first header token through the closing brace.
struct MethodSpan {
    std::string function_name;
    LineSpan lines;
    std::string text;
};

/// Brace-depth method splitter. Scans the token stream of `file_text`; whenever a `{`
/// is opened outside any method and the tokens since the previous `;`, `{` or `}`
/// look like `<modifiers/type tokens> name ( ... ) [throws ...]`, a method starts and
/// runs to the matching `}`. Everything nested inside stays part of that method.
///
/// Throws OffsetError for lexical errors and for unbalanced braces (offset of the
/// stray `}` or of the outermost unclosed `{`).
std::vector<MethodSpan> split_methods(std::string_view file_text);

/// Offset of the first brace imbalance outside comments and literals, if any.
/// Lexical errors are reported through OffsetError.
std::optional<std::size_t> first_brace_imbalance(std::string_view text);

/// Number of lines that contain at least one non-whitespace character.
int count_loc(std::string_view text);

/// Lines [span.start, span.end] joined with '\n', without the final newline.
std::string read_line_span(const std::filesystem::path& path, LineSpan span);
std::string_view line_span_of(std::string_view file_text, LineSpan span);

/// Walks `root` for files with the configured extension and turns every accepted
/// function into a CodeSample. Files that fail lexing or brace balancing are skipped
/// and logged. Throws Error if root is missing or nothing was accepted.
Corpus ingest_directory(const std::filesystem::path& root, const IngestOptions& options);

/// JSON Lines, one SampleRecord per line, sorted by id. corpus_root, created_at and
/// total_loc go to a sidecar `<out>.meta.json`.
void write_manifest(const CorpusManifest& manifest, const std::filesystem::path& out);
std::string manifest_jsonl(const CorpusManifest& manifest);
CorpusManifest read_manifest(const std::filesystem::path& path);

/// Re-reads each sample's text from its source file.
std::vector<CodeSample> load_samples(const CorpusManifest& manifest);

}  // namespace clonegraph::corpus
