#pragma once

#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>

namespace clonegraph::log {

enum class Level { debug = 0, info = 1, warn = 2, error = 3, off = 4 };

void set_level(Level level);
Level level();
Level parse_level(std::string_view name);

/// One line-oriented `key=value` record written to stderr when it goes out of scope.
///
///     log::Record(log::Level::info, "ingest.done").kv("samples", n).kv("loc", loc);
class Record {
public:
    Record(Level level, std::string_view event);
    Record(const Record&) = delete;
    Record& operator=(const Record&) = delete;
    ~Record();

    Record& kv(std::string_view key, std::string_view value);
    Record& kv(std::string_view key, const std::string& value) { return kv(key, std::string_view(value)); }
    Record& kv(std::string_view key, const char* value) { return kv(key, std::string_view(value)); }

    template <typename T>
        requires std::is_arithmetic_v<T>
    Record& kv(std::string_view key, T value) {
        if (!enabled_) return *this;
        std::ostringstream os;
        os << value;
        return kv(key, os.str());
    }

private:
    bool enabled_;
    std::string line_;
};

inline Record debug(std::string_view event) { return Record(Level::debug, event); }
inline Record info(std::string_view event) { return Record(Level::info, event); }
inline Record warn(std::string_view event) { return Record(Level::warn, event); }
inline Record error(std::string_view event) { return Record(Level::error, event); }

}  // namespace clonegraph::log
