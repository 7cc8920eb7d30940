#pragma once

#include "hri/common.hpp"

#include <json.hpp>

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace hri {

using Json = nlohmann::ordered_json;

struct LogContext {
    std::string session_id;
    std::string condition;
    std::uint64_t seed = 0;
};

struct LogRecord {
    Millis ts = 0;
    std::uint64_t seq = 0;
    std::string tag;
    /// Full record including the common header fields.
    Json data;
};

/// Ordered newline-delimited JSON log. Field order per line: ts, seq, tag,
/// session_id, condition, seed, then the record body in insertion order.
class SessionLog {
public:
    using Observer = std::function<void(const LogRecord&)>;

    SessionLog() = default;
    explicit SessionLog(LogContext context);

    /// Throws OrderingError when ts precedes the previous record.
    const LogRecord& append(Millis ts, const std::string& tag, const Json& body = Json::object());

    const LogContext& context() const { return context_; }
    const std::vector<LogRecord>& records() const { return records_; }
    std::size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }
    Millis last_ts() const { return records_.empty() ? 0 : records_.back().ts; }

    std::vector<const LogRecord*> with_tag(const std::string& tag) const;
    std::size_t count(const std::string& tag) const;

    std::string to_ndjson() const;
    void write(const std::filesystem::path& path) const;

    void set_observer(Observer observer) { observer_ = std::move(observer); }

    /// Rebuilds a log from its NDJSON text. Throws LoadError.
    static SessionLog parse(const std::string& text);
    static SessionLog load(const std::filesystem::path& path);

private:
    LogContext context_;
    std::vector<LogRecord> records_;
    Observer observer_;
};

/// Line rendering used by to_ndjson.
std::string render_line(const LogRecord& record);

} // namespace hri
