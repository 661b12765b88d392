#pragma once

#include <unicode/uchar.h>
#include <unicode/utf8.h>

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace margin_mine::unicode {

/// Decodes UTF-8 into code points; malformed sequences are skipped.
inline std::vector<UChar32>
decode(std::string_view text) {
    std::vector<UChar32> out;
    out.reserve(text.size());
    const auto* s = reinterpret_cast<const std::uint8_t*>(text.data());
    const auto length = static_cast<std::int32_t>(text.size());
    std::int32_t i = 0;
    while (i < length) {
        UChar32 c;
        U8_NEXT(s, i, length, c);
        if (c >= 0) {
            out.push_back(c);
        }
    }
    return out;
}

inline void
append(std::string& out, UChar32 c) {
    char buf[U8_MAX_LENGTH];
    std::int32_t n = 0;
    U8_APPEND_UNSAFE(buf, n, c);
    out.append(buf, static_cast<std::size_t>(n));
}

inline std::string
encode(const std::vector<UChar32>& cps) {
    std::string out;
    out.reserve(cps.size());
    for (auto c : cps) {
        append(out, c);
    }
    return out;
}

inline bool
is_space(UChar32 c) {
    return u_isUWhiteSpace(c);
}

inline bool
is_punct(UChar32 c) {
    return u_ispunct(c);
}

/// Letters, marks, numbers, punctuation, symbols and whitespace. Controls,
/// format characters, private use, surrogates and unassigned code points
/// are "non-standard".
inline bool
is_standard(UChar32 c) {
    if (is_space(c)) {
        return true;
    }
    const auto mask = U_GET_GC_MASK(c);
    constexpr auto keep = U_GC_L_MASK | U_GC_M_MASK | U_GC_N_MASK | U_GC_P_MASK | U_GC_S_MASK;
    return (mask & keep) != 0;
}

inline std::string
to_lower(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (auto c : decode(text)) {
        append(out, u_tolower(c));
    }
    return out;
}

}  // namespace margin_mine::unicode
