#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace hri {

std::string trim(std::string_view s);

/// Whitespace-delimited tokens.
std::vector<std::string> split_words(std::string_view s);

inline std::size_t count_words(std::string_view s)
{
    return split_words(s).size();
}

/// Splits on '.', '?' or '!' followed by whitespace or end of text. Each
/// sentence keeps its terminal punctuation; surrounding whitespace is trimmed.
std::vector<std::string> split_sentences(std::string_view text);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

} // namespace hri
