// include/pocr/unicode.hpp

// Copyright 2026  The pocr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef POCR_UNICODE_HPP_
#define POCR_UNICODE_HPP_

#include <string>
#include <string_view>
#include <vector>

#include "pocr/common.hpp"

namespace pocr {

// Strict UTF-8 decoding: rejects overlong forms, surrogates and truncated
// sequences with a DecodeError carrying the byte offset.
std::u32string utf8_decode(std::string_view bytes);
std::string utf8_encode(std::u32string_view codepoints);
std::string utf8_encode(char32_t cp);

// Canonical combining class for the marks this toolkit composes; 0 otherwise.
int combining_class(char32_t cp);

// Canonical NFC over the Latin-script repertoire the toolkit processes
// (IAST letters plus the accented letters of the bundled Western alphabets).
// Codepoints outside the table pass through untouched, so the function is
// idempotent on arbitrary input.
std::u32string nfc(std::u32string_view codepoints);
std::string nfc(std::string_view utf8);

// Lowercase fold over the same repertoire (ASCII plus precomposed letters).
char32_t fold_lower(char32_t cp);
std::string fold_lower(std::string_view utf8);

// Line-ending normalization (CRLF and lone CR become LF) followed by NFC.
std::string normalize_text(std::string_view utf8);

inline bool is_space_cp(char32_t cp) {
  return cp == U' ' || cp == U'\t' || cp == U'\n' || cp == U'\r' ||
         cp == 0x00A0;
}

// True when the surface is exactly one whitespace codepoint.
bool is_whitespace_surface(std::string_view utf8);

}  // namespace pocr

#endif  // POCR_UNICODE_HPP_
