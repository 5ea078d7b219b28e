#include "clonegraph/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

#include "clonegraph/error.hpp"

namespace clonegraph::log {
namespace {

std::atomic<Level> g_level{Level::info};
std::mutex g_sink_mutex;

const char* level_name(Level level) {
    switch (level) {
        case Level::debug: return "debug";
        case Level::info: return "info";
        case Level::warn: return "warn";
        case Level::error: return "error";
        case Level::off: return "off";
    }
    return "info";
}

bool needs_quotes(std::string_view value) {
    if (value.empty()) return true;
    for (char c : value) {
        if (c == ' ' || c == '"' || c == '=' || c == '\t' || c == '\n') return true;
    }
    return false;
}

}  // namespace

void set_level(Level level) { g_level.store(level); }
Level level() { return g_level.load(); }

Level parse_level(std::string_view name) {
    if (name == "debug") return Level::debug;
    if (name == "info") return Level::info;
    if (name == "warn") return Level::warn;
    if (name == "error") return Level::error;
    if (name == "off") return Level::off;
    throw Error("unknown log level '" + std::string(name) + "'");
}

Record::Record(Level level, std::string_view event) : enabled_(level >= g_level.load()) {
    if (!enabled_) return;
    line_ = "level=";
    line_ += level_name(level);
    line_ += " event=";
    line_ += event;
}

Record::~Record() {
    if (!enabled_) return;
    std::lock_guard lock(g_sink_mutex);
    std::cerr << line_ << '\n';
}

Record& Record::kv(std::string_view key, std::string_view value) {
    if (!enabled_) return *this;
    line_ += ' ';
    line_ += key;
    line_ += '=';
    if (!needs_quotes(value)) {
        line_ += value;
        return *this;
    }
    line_ += '"';
    for (char c : value) {
        if (c == '"' || c == '\\') line_ += '\\';
        if (c == '\n') {
            line_ += "\\n";
            continue;
        }
        line_ += c;
    }
    line_ += '"';
    return *this;
}

}  // namespace clonegraph::log
