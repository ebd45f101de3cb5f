#include "forge/text.hpp"

#include <cctype>

namespace forge {

std::size_t utf8_scalar_count(std::string_view text) {
    std::size_t n = 0;
    for (unsigned char c : text) {
        if ((c & 0xC0) != 0x80) {
            ++n;
        }
    }
    return n;
}

std::string_view trim_view(std::string_view text) {
    std::size_t begin = 0;
    std::size_t end = text.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) {
        ++begin;
    }
    while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) {
        --end;
    }
    return text.substr(begin, end - begin);
}

std::string trim(std::string_view text) { return std::string(trim_view(text)); }

std::string strip_trailing_markers(std::string_view text, const std::vector<std::string>& markers) {
    std::string_view view = trim_view(text);
    bool stripped = true;
    while (stripped) {
        stripped = false;
        for (const auto& marker : markers) {
            if (!marker.empty() && view.ends_with(marker)) {
                view.remove_suffix(marker.size());
                view = trim_view(view);
                stripped = true;
            }
        }
    }
    return std::string(view);
}

std::size_t find_first_of_any(std::string_view haystack, const std::vector<std::string>& needles) {
    std::size_t best = std::string_view::npos;
    for (const auto& needle : needles) {
        if (needle.empty()) {
            continue;
        }
        std::size_t pos = haystack.find(needle);
        if (pos != std::string_view::npos && pos < best) {
            best = pos;
        }
    }
    return best;
}

std::string join(const std::vector<std::string>& parts, std::string_view separator) {
    std::string out;
    std::size_t total = 0;
    for (const auto& p : parts) {
        total += p.size() + separator.size();
    }
    out.reserve(total);
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i > 0) {
            out += separator;
        }
        out += parts[i];
    }
    return out;
}

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
    if (needle.empty()) {
        return 0;
    }
    std::size_t n = 0;
    std::size_t pos = haystack.find(needle);
    while (pos != std::string_view::npos) {
        ++n;
        pos = haystack.find(needle, pos + needle.size());
    }
    return n;
}

} // namespace forge
