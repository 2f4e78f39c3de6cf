#pragma once

#include <string>
#include <string_view>

namespace okg {

// Decodes UTF-8 into codepoints; malformed sequences become U+FFFD.
std::u32string utf8_decode(std::string_view text);

void utf8_append(std::string& out, char32_t cp);
std::string utf8_encode(const std::u32string& cps);

// Han/kana/hangul and related blocks whose scripts are written without
// spaces; the tokenizer splits runs of these per character.
bool is_cjk(char32_t cp);

bool is_unicode_whitespace(char32_t cp);

// NFKC + root-locale lowercase + NFKC, then trim and collapse internal
// whitespace to single U+0020. Returns empty string for all-whitespace input.
std::string fold_text(std::string_view text);

}  // namespace okg
