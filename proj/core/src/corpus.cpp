#include "clonegraph/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "clonegraph/error.hpp"
#include "clonegraph/lexis.hpp"
#include "clonegraph/log.hpp"
#include "clonegraph/parallel.hpp"

namespace clonegraph::corpus {

namespace fs = std::filesystem;
using lexis::Token;
using lexis::TokenKind;

namespace {

bool is_sep(const Token& t, std::string_view lexeme) {
    return t.kind == TokenKind::separator && t.lexeme == lexeme;
}

bool is_op(const Token& t, std::string_view lexeme) { return t.kind == TokenKind::op && t.lexeme == lexeme; }

// Decides whether tokens [begin, end) form a method or constructor header, i.e.
// `... name ( params ) [throws A, B]`. Returns the index of the name token.
std::optional<std::size_t> method_name_index(const std::vector<Token>& toks, std::size_t begin, std::size_t end) {
    if (end <= begin + 2) return std::nullopt;

    std::size_t close = end - 1;
    for (std::size_t k = end - 1; k > begin; --k) {
        if (is_sep(toks[k], ")")) break;
        if (toks[k].kind == TokenKind::keyword && toks[k].lexeme == "throws") {
            close = k - 1;
            break;
        }
    }
    if (!is_sep(toks[close], ")")) return std::nullopt;

    int parens = 0;
    std::size_t open = close;
    for (;; --open) {
        if (is_sep(toks[open], ")")) ++parens;
        if (is_sep(toks[open], "(")) --parens;
        if (parens == 0) break;
        if (open == begin) return std::nullopt;
    }
    if (open < begin + 2) return std::nullopt;

    const std::size_t name = open - 1;
    if (toks[name].kind != TokenKind::identifier || toks[name].lexeme == "record") return std::nullopt;

    const Token& before = toks[name - 1];
    const bool type_like = (before.kind == TokenKind::identifier && before.lexeme != "record") ||
                           (before.kind == TokenKind::keyword && before.lexeme != "new") ||
                           is_op(before, ">") || is_op(before, ">>") || is_op(before, ">>>") ||
                           is_sep(before, "]");
    if (!type_like) return std::nullopt;

    int depth = 0;
    for (std::size_t k = begin; k < name; ++k) {
        if (is_sep(toks[k], "(")) ++depth;
        if (is_sep(toks[k], ")")) --depth;
        if (depth != 0) continue;
        if (is_op(toks[k], "=") || is_op(toks[k], "->")) return std::nullopt;
        if (toks[k].kind == TokenKind::keyword &&
            (toks[k].lexeme == "class" || toks[k].lexeme == "interface" || toks[k].lexeme == "enum")) {
            return std::nullopt;
        }
    }
    return name;
}

class LineIndex {
public:
    explicit LineIndex(std::string_view text) {
        starts_.push_back(0);
        for (std::size_t i = 0; i < text.size(); ++i) {
            if (text[i] == '\n') starts_.push_back(i + 1);
        }
    }

    int line_of(std::size_t offset) const {
        auto it = std::upper_bound(starts_.begin(), starts_.end(), offset);
        return static_cast<int>(it - starts_.begin());
    }

private:
    std::vector<std::size_t> starts_;
};

bool blank(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return c == ' ' || c == '\t' || c == '\r'; });
}

std::string_view trim_left(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    return s;
}

int line_count(std::string_view text) {
    if (text.empty()) return 0;
    int n = static_cast<int>(std::count(text.begin(), text.end(), '\n'));
    if (text.back() != '\n') ++n;
    return n;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string utc_now_iso() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

struct FileResult {
    std::vector<CodeSample> samples;
    std::optional<std::string> skip_reason;
};

FileResult ingest_file(const fs::path& path, const std::string& rel, IngestMode mode) {
    FileResult result;
    std::string content;
    try {
        content = read_file(path);
    } catch (const Error& e) {
        result.skip_reason = e.what();
        return result;
    }
    try {
        if (mode == IngestMode::one_per_file) {
            if (auto bad = first_brace_imbalance(content)) {
                result.skip_reason = "unbalanced braces at offset " + std::to_string(*bad);
                return result;
            }
            const int lines = line_count(content);
            std::string text(line_span_of(content, {1, std::max(lines, 1)}));
            const int loc = count_loc(text);
            if (loc == 0) {
                result.skip_reason = "empty file";
                return result;
            }
            auto methods = split_methods(content);
            CodeSample s;
            s.meta.id = rel + "#0";
            s.meta.source_path = path;
            s.meta.function_name = methods.size() == 1 ? methods.front().function_name : std::string();
            s.meta.lines = {1, lines};
            s.meta.loc = loc;
            s.text = std::move(text);
            result.samples.push_back(std::move(s));
            return result;
        }

        auto methods = split_methods(content);
        if (methods.empty()) {
            result.skip_reason = "no method found";
            return result;
        }
        for (std::size_t i = 0; i < methods.size(); ++i) {
            CodeSample s;
            s.meta.id = rel + "#" + std::to_string(i);
            s.meta.source_path = path;
            s.meta.function_name = std::move(methods[i].function_name);
            s.meta.lines = methods[i].lines;
            s.meta.loc = count_loc(methods[i].text);
            s.text = std::move(methods[i].text);
            result.samples.push_back(std::move(s));
        }
    } catch (const OffsetError& e) {
        result.samples.clear();
        result.skip_reason = e.what();
    }
    return result;
}

nlohmann::ordered_json record_to_json(const SampleRecord& r) {
    nlohmann::ordered_json j;
    j["id"] = r.id;
    j["source_path"] = r.source_path.generic_string();
    j["function_name"] = r.function_name;
    j["start_line"] = r.lines.start;
    j["end_line"] = r.lines.end;
    j["loc"] = r.loc;
    return j;
}

}  // namespace

IngestMode parse_ingest_mode(std::string_view name) {
    if (name == "one-per-file" || name == "one-function-per-file") return IngestMode::one_per_file;
    if (name == "split" || name == "split-methods") return IngestMode::split_methods;
    throw Error("unknown ingest mode '" + std::string(name) + "' (expected one-per-file or split)");
}

std::string_view to_string(IngestMode mode) {
    return mode == IngestMode::one_per_file ? "one-per-file" : "split";
}

std::optional<std::size_t> first_brace_imbalance(std::string_view text) {
    const auto stream = lexis::tokenize(text);
    std::vector<std::size_t> open;
    for (const auto& t : stream.tokens) {
        if (is_sep(t, "{")) {
            open.push_back(t.offset);
        } else if (is_sep(t, "}")) {
            if (open.empty()) return t.offset;
            open.pop_back();
        }
    }
    if (!open.empty()) return open.front();
    return std::nullopt;
}

std::vector<MethodSpan> split_methods(std::string_view file_text) {
    const auto stream = lexis::tokenize(file_text);
    const auto& toks = stream.tokens;
    const LineIndex lines(file_text);

    std::vector<MethodSpan> out;
    std::vector<std::size_t> open_offsets;
    std::size_t header_begin = 0;
    int method_depth = -1;  // brace depth outside the method currently being captured
    std::size_t method_begin = 0;
    std::string method_name;

    for (std::size_t i = 0; i < toks.size(); ++i) {
        const Token& t = toks[i];
        if (t.kind != TokenKind::separator) continue;
        const int depth = static_cast<int>(open_offsets.size());
        if (t.lexeme == "{") {
            if (method_depth < 0) {
                if (auto name = method_name_index(toks, header_begin, i)) {
                    method_depth = depth;
                    method_begin = toks[header_begin].offset;
                    method_name = toks[*name].lexeme;
                } else {
                    header_begin = i + 1;
                }
            }
            open_offsets.push_back(t.offset);
        } else if (t.lexeme == "}") {
            if (open_offsets.empty()) throw OffsetError("unbalanced closing brace", t.offset);
            open_offsets.pop_back();
            if (method_depth >= 0 && depth - 1 == method_depth) {
                const std::size_t end = t.offset + 1;
                MethodSpan m;
                m.function_name = std::move(method_name);
                m.lines = {lines.line_of(method_begin), lines.line_of(t.offset)};

                const auto line_start = file_text.rfind('\n', method_begin == 0 ? 0 : method_begin - 1);
                const std::size_t prefix_from =
                    (line_start == std::string_view::npos || method_begin == 0) ? 0 : line_start + 1;
                const auto eol = file_text.find('\n', end);
                const auto suffix = trim_left(file_text.substr(end, (eol == std::string_view::npos ? file_text.size() : eol) - end));
                const bool whole_lines = blank(file_text.substr(prefix_from, method_begin - prefix_from)) &&
                                         (blank(suffix) || suffix.starts_with("//"));
                m.text = whole_lines ? std::string(line_span_of(file_text, m.lines))
                                     : std::string(file_text.substr(method_begin, end - method_begin));
                out.push_back(std::move(m));
                method_depth = -1;
            }
            if (method_depth < 0) header_begin = i + 1;
        } else if (t.lexeme == ";" && method_depth < 0) {
            header_begin = i + 1;
        }
    }
    if (!open_offsets.empty()) throw OffsetError("unclosed opening brace", open_offsets.front());
    return out;
}

int count_loc(std::string_view text) {
    int loc = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        const auto line = text.substr(pos, eol - pos);
        if (!std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) ++loc;
        pos = eol + 1;
    }
    return loc;
}

std::string_view line_span_of(std::string_view file_text, LineSpan span) {
    if (span.start < 1 || span.end < span.start) throw Error("invalid line span");
    std::size_t begin = 0;
    for (int line = 1; line < span.start; ++line) {
        begin = file_text.find('\n', begin);
        if (begin == std::string_view::npos) throw Error("line span starts past end of file");
        ++begin;
    }
    std::size_t end = begin;
    for (int line = span.start; line <= span.end; ++line) {
        end = file_text.find('\n', end);
        if (end == std::string_view::npos) {
            if (line != span.end) throw Error("line span ends past end of file");
            end = file_text.size();
            break;
        }
        if (line != span.end) ++end;
    }
    return file_text.substr(begin, end - begin);
}

std::string read_line_span(const fs::path& path, LineSpan span) {
    const std::string content = read_file(path);
    return std::string(line_span_of(content, span));
}

Corpus ingest_directory(const fs::path& root, const IngestOptions& options) {
    if (!fs::is_directory(root)) throw Error("corpus root does not exist: " + root.string());
    const fs::path abs_root = fs::absolute(root).lexically_normal();

    std::vector<std::pair<std::string, fs::path>> files;
    for (const auto& entry : fs::recursive_directory_iterator(abs_root)) {
        if (!entry.is_regular_file() || entry.path().extension() != options.extension) continue;
        files.emplace_back(entry.path().lexically_relative(abs_root).generic_string(), entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) {
        throw Error("no samples: no files with extension " + options.extension + " under " + abs_root.string());
    }

    std::vector<FileResult> results(files.size());
    parallel_for(0, files.size(), 16, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) results[i] = ingest_file(files[i].second, files[i].first, options.mode);
    });

    Corpus corpus;
    corpus.manifest.corpus_root = abs_root;
    corpus.manifest.created_at = utc_now_iso();
    for (std::size_t i = 0; i < files.size(); ++i) {
        if (results[i].skip_reason) {
            log::warn("ingest.skip").kv("file", files[i].first).kv("reason", *results[i].skip_reason);
            corpus.skipped.push_back({files[i].second, *results[i].skip_reason});
            continue;
        }
        for (auto& s : results[i].samples) corpus.samples.push_back(std::move(s));
    }
    if (corpus.samples.empty()) {
        std::string reasons;
        for (const auto& s : corpus.skipped) reasons += "\n  " + s.path.string() + ": " + s.reason;
        throw Error("no samples accepted under " + abs_root.string() + reasons);
    }

    std::sort(corpus.samples.begin(), corpus.samples.end(),
              [](const CodeSample& a, const CodeSample& b) { return a.meta.id < b.meta.id; });
    corpus.manifest.samples.reserve(corpus.samples.size());
    for (const auto& s : corpus.samples) {
        corpus.manifest.samples.push_back(s.meta);
        corpus.manifest.total_loc += s.meta.loc;
    }
    log::info("ingest.done")
        .kv("files", files.size())
        .kv("samples", corpus.samples.size())
        .kv("skipped", corpus.skipped.size())
        .kv("loc", corpus.manifest.total_loc);
    return corpus;
}

std::string manifest_jsonl(const CorpusManifest& manifest) {
    std::string out;
    for (const auto& r : manifest.samples) {
        out += record_to_json(r).dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
        out += '\n';
    }
    return out;
}

void write_manifest(const CorpusManifest& manifest, const fs::path& out) {
    {
        std::ofstream f(out, std::ios::binary);
        if (!f) throw Error("cannot write " + out.string());
        f << manifest_jsonl(manifest);
    }
    nlohmann::ordered_json meta;
    meta["corpus_root"] = manifest.corpus_root.generic_string();
    meta["created_at"] = manifest.created_at;
    meta["total_loc"] = manifest.total_loc;
    meta["samples"] = manifest.samples.size();
    std::ofstream f(fs::path(out.string() + ".meta.json"), std::ios::binary);
    if (!f) throw Error("cannot write manifest sidecar for " + out.string());
    f << meta.dump(2) << '\n';
}

CorpusManifest read_manifest(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open manifest " + path.string());
    CorpusManifest m;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            SampleRecord r;
            r.id = j.at("id").get<std::string>();
            r.source_path = j.at("source_path").get<std::string>();
            r.function_name = j.at("function_name").get<std::string>();
            r.lines = {j.at("start_line").get<int>(), j.at("end_line").get<int>()};
            r.loc = j.at("loc").get<int>();
            m.total_loc += r.loc;
            m.samples.push_back(std::move(r));
        } catch (const nlohmann::json::exception& e) {
            throw Error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    for (std::size_t i = 1; i < m.samples.size(); ++i) {
        if (!(m.samples[i - 1].id < m.samples[i].id)) {
            throw Error("manifest ids are not strictly sorted near '" + m.samples[i].id + "'");
        }
    }
    const fs::path sidecar(path.string() + ".meta.json");
    if (fs::exists(sidecar)) {
        std::ifstream f(sidecar);
        const auto meta = nlohmann::json::parse(f, nullptr, false);
        if (!meta.is_discarded()) {
            m.corpus_root = meta.value("corpus_root", std::string());
            m.created_at = meta.value("created_at", std::string());
        }
    }
    return m;
}

std::vector<CodeSample> load_samples(const CorpusManifest& manifest) {
    std::vector<CodeSample> out(manifest.samples.size());
    std::map<fs::path, std::vector<std::size_t>> by_file;
    for (std::size_t i = 0; i < manifest.samples.size(); ++i) by_file[manifest.samples[i].source_path].push_back(i);

    std::vector<const std::pair<const fs::path, std::vector<std::size_t>>*> groups;
    for (const auto& g : by_file) groups.push_back(&g);
    parallel_for(0, groups.size(), 16, [&](std::size_t b, std::size_t e) {
        for (std::size_t g = b; g < e; ++g) {
            const std::string content = read_file(groups[g]->first);
            for (std::size_t i : groups[g]->second) {
                out[i].meta = manifest.samples[i];
                out[i].text = std::string(line_span_of(content, manifest.samples[i].lines));
            }
        }
    });
    return out;
}

}  // namespace clonegraph::corpus
