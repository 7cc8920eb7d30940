#include "hri/speech.hpp"

#include "hri/text.hpp"

namespace hri {

std::string to_string(SpeechSource source)
{
    return source == SpeechSource::user ? "user" : "operator";
}

SpeechSource speech_source_from_string(const std::string& s)
{
    if (s == "user")
        return SpeechSource::user;
    if (s == "operator")
        return SpeechSource::operator_;
    throw InvalidArgument("unknown speech source '" + s + "'");
}

PhraseSegmenter::PhraseSegmenter(SegmenterConfig config) : config_(config)
{
    if (config_.silence_gap_ms <= 0)
        throw InvalidArgument("silence_gap_ms must be positive");
    if (config_.min_word_confidence < 0.0 || config_.min_word_confidence > 1.0)
        throw InvalidArgument("min_word_confidence must be in [0, 1]");
}

bool PhraseSegmenter::push_word(const TranscriptEvent& ev)
{
    const auto word = trim(ev.word);
    if (word.empty())
        throw InvalidArgument("transcript word is empty");
    if (seen_any_ && ev.timestamp < last_seen_ts_)
        throw OrderingError("transcript event at " + std::to_string(ev.timestamp) + " ms precedes " +
                            std::to_string(last_seen_ts_) + " ms");
    seen_any_ = true;
    last_seen_ts_ = ev.timestamp;

    if (ev.confidence < config_.min_word_confidence)
        return false;
    if (words_.empty())
        start_ts_ = ev.timestamp;
    words_.push_back(word);
    last_accepted_ts_ = ev.timestamp;
    return true;
}

std::optional<Phrase> PhraseSegmenter::tick(Millis now)
{
    if (now < last_tick_)
        throw OrderingError("tick at " + std::to_string(now) + " ms precedes previous tick at " +
                            std::to_string(last_tick_) + " ms");
    last_tick_ = now;
    if (words_.empty() || now - last_accepted_ts_ < config_.silence_gap_ms)
        return std::nullopt;
    return emit(now);
}

Phrase PhraseSegmenter::inject_operator_phrase(const std::string& text, Millis now)
{
    auto t = trim(text);
    if (t.empty())
        throw InvalidArgument("operator phrase is empty");
    Phrase p;
    p.text = std::move(t);
    p.start_ts = now;
    p.end_ts = now;
    p.last_word_ts = now;
    p.source = SpeechSource::operator_;
    return p;
}

std::optional<Phrase> PhraseSegmenter::flush(Millis now)
{
    if (words_.empty())
        return std::nullopt;
    return emit(now);
}

std::optional<Millis> PhraseSegmenter::deadline() const
{
    if (words_.empty())
        return std::nullopt;
    return last_accepted_ts_ + config_.silence_gap_ms;
}

Phrase PhraseSegmenter::emit(Millis now)
{
    Phrase p;
    p.text = join(words_, " ");
    p.start_ts = start_ts_;
    p.end_ts = now;
    p.last_word_ts = last_accepted_ts_;
    p.source = SpeechSource::user;
    words_.clear();
    return p;
}

} // namespace hri
