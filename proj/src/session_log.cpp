#include "hri/session_log.hpp"

#include <fstream>
#include <sstream>

namespace hri {

SessionLog::SessionLog(LogContext context) : context_(std::move(context)) {}

const LogRecord& SessionLog::append(Millis ts, const std::string& tag, const Json& body)
{
    if (!records_.empty() && ts < records_.back().ts)
        throw OrderingError("log record '" + tag + "' at " + std::to_string(ts) + " precedes " +
                            std::to_string(records_.back().ts));
    LogRecord r;
    r.ts = ts;
    r.seq = records_.size();
    r.tag = tag;
    r.data["ts"] = ts;
    r.data["seq"] = r.seq;
    r.data["tag"] = tag;
    r.data["session_id"] = context_.session_id;
    r.data["condition"] = context_.condition;
    r.data["seed"] = context_.seed;
    if (!body.is_object())
        throw InvalidArgument("log body must be an object");
    for (const auto& [k, v] : body.items())
        r.data[k] = v;
    records_.push_back(std::move(r));
    if (observer_)
        observer_(records_.back());
    return records_.back();
}

std::vector<const LogRecord*> SessionLog::with_tag(const std::string& tag) const
{
    std::vector<const LogRecord*> out;
    for (const auto& r : records_)
        if (r.tag == tag)
            out.push_back(&r);
    return out;
}

std::size_t SessionLog::count(const std::string& tag) const
{
    std::size_t n = 0;
    for (const auto& r : records_)
        n += r.tag == tag;
    return n;
}

std::string render_line(const LogRecord& record)
{
    return record.data.dump();
}

std::string SessionLog::to_ndjson() const
{
    std::string out;
    for (const auto& r : records_) {
        out += render_line(r);
        out += '\n';
    }
    return out;
}

void SessionLog::write(const std::filesystem::path& path) const
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error("cannot write session log '" + path.string() + "'");
    out << to_ndjson();
}

SessionLog SessionLog::parse(const std::string& text)
{
    SessionLog log;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty())
            continue;
        try {
            LogRecord r;
            r.data = Json::parse(line);
            r.ts = r.data.at("ts").get<Millis>();
            r.seq = r.data.at("seq").get<std::uint64_t>();
            r.tag = r.data.at("tag").get<std::string>();
            if (log.records_.empty())
                log.context_ = {r.data.at("session_id").get<std::string>(), r.data.at("condition").get<std::string>(),
                                r.data.at("seed").get<std::uint64_t>()};
            if (!log.records_.empty() && r.ts < log.records_.back().ts)
                throw LoadError("timestamps decrease");
            log.records_.push_back(std::move(r));
        }
        catch (const nlohmann::json::exception& e) {
            throw LoadError("session log line " + std::to_string(lineno) + ": " + e.what());
        }
        catch (const LoadError& e) {
            throw LoadError("session log line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return log;
}

SessionLog SessionLog::load(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw LoadError("cannot open session log '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

} // namespace hri
