#pragma once

#include <string>
#include <string_view>

namespace propdetect {

// Strict UTF-8 decode: rejects overlong forms, surrogates, values past
// U+10FFFF and truncated sequences. Throws FormatError naming the byte
// position of the first offending byte.
std::u32string utf8_decode(std::string_view bytes);

std::string utf8_encode(std::u32string_view text);
std::string utf8_encode(char32_t c);

}  // namespace propdetect
