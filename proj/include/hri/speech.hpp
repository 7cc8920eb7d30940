#pragma once

#include "hri/common.hpp"

#include <optional>
#include <string>
#include <vector>

namespace hri {

enum class SpeechSource { user, operator_ };

std::string to_string(SpeechSource source);
SpeechSource speech_source_from_string(const std::string& s);

struct TranscriptEvent {
    Millis timestamp = 0;
    std::string word;
    double confidence = 1.0;
    SpeechSource source = SpeechSource::user;
};

struct Phrase {
    std::string text;
    Millis start_ts = 0;
    /// Finalization time; the fused snapshot is taken at this instant.
    Millis end_ts = 0;
    /// Timestamp of the last accepted word.
    Millis last_word_ts = 0;
    SpeechSource source = SpeechSource::user;
    bool finalized = true;
};

struct SegmenterConfig {
    Millis silence_gap_ms = 3000;
    double min_word_confidence = 0.5;
};

/// Word-by-word transcript to phrases. A phrase is finalized once the silence
/// since the last accepted word reaches `silence_gap_ms` (inclusive) and is
/// emitted exactly once.
class PhraseSegmenter {
public:
    explicit PhraseSegmenter(SegmenterConfig config = {});

    /// Returns true when the word was accepted into the open phrase, false
    /// when it was dropped by the confidence gate. Never emits.
    /// Throws OrderingError on out-of-order timestamps and InvalidArgument on
    /// blank words.
    bool push_word(const TranscriptEvent& ev);

    std::optional<Phrase> tick(Millis now);

    /// Operator override: bypasses the gate and the silence wait. The open
    /// user buffer is left untouched.
    Phrase inject_operator_phrase(const std::string& text, Millis now);

    /// Finalizes the open buffer immediately (explicit submit).
    std::optional<Phrase> flush(Millis now);

    /// Time at which the open buffer will finalize, if any.
    std::optional<Millis> deadline() const;
    bool has_open_phrase() const { return !words_.empty(); }
    const SegmenterConfig& config() const { return config_; }

private:
    Phrase emit(Millis now);

    SegmenterConfig config_;
    std::vector<std::string> words_;
    Millis start_ts_ = 0;
    Millis last_accepted_ts_ = 0;
    Millis last_seen_ts_ = 0;
    Millis last_tick_ = 0;
    bool seen_any_ = false;
};

} // namespace hri
