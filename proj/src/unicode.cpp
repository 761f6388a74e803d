// src/unicode.cpp

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

#include "pocr/unicode.hpp"

#include <algorithm>
#include <unordered_map>

namespace pocr {

std::u32string utf8_decode(std::string_view bytes) {
  std::u32string out;
  out.reserve(bytes.size());
  size_t i = 0;
  const size_t n = bytes.size();
  while (i < n) {
    const unsigned char b0 = bytes[i];
    if (b0 < 0x80) {
      out.push_back(b0);
      ++i;
      continue;
    }
    int len;
    char32_t cp;
    if ((b0 & 0xE0) == 0xC0) {
      len = 2;
      cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
      len = 3;
      cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
      len = 4;
      cp = b0 & 0x07;
    } else {
      throw DecodeError("invalid UTF-8 lead byte", i);
    }
    if (i + len > n) throw DecodeError("truncated UTF-8 sequence", i);
    for (int k = 1; k < len; ++k) {
      const unsigned char bk = bytes[i + k];
      if ((bk & 0xC0) != 0x80)
        throw DecodeError("invalid UTF-8 continuation byte", i + k);
      cp = (cp << 6) | (bk & 0x3F);
    }
    static const char32_t kMin[5] = {0, 0, 0x80, 0x800, 0x10000};
    if (cp < kMin[len]) throw DecodeError("overlong UTF-8 sequence", i);
    if (cp >= 0xD800 && cp <= 0xDFFF)
      throw DecodeError("UTF-8 encoded surrogate", i);
    if (cp > 0x10FFFF) throw DecodeError("codepoint out of range", i);
    out.push_back(cp);
    i += len;
  }
  return out;
}

std::string utf8_encode(char32_t cp) {
  std::string out;
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
  return out;
}

std::string utf8_encode(std::u32string_view codepoints) {
  std::string out;
  out.reserve(codepoints.size() * 2);
  for (char32_t cp : codepoints) out += utf8_encode(cp);
  return out;
}

namespace {

// One canonical composition pair: base + mark -> precomposed.
struct CompRow {
  char32_t base;
  char32_t mark;
  char32_t composed;
};

// Combining marks used by the repertoire. Values from UnicodeData.
constexpr char32_t kGrave = 0x0300;
constexpr char32_t kAcute = 0x0301;
constexpr char32_t kCirc = 0x0302;
constexpr char32_t kTilde = 0x0303;
constexpr char32_t kMacron = 0x0304;
constexpr char32_t kDotAbove = 0x0307;
constexpr char32_t kDiaeresis = 0x0308;
constexpr char32_t kRing = 0x030A;
constexpr char32_t kDotBelow = 0x0323;
constexpr char32_t kCedilla = 0x0327;

const CompRow kCompositions[] = {
    // IAST letters (lowercase, then uppercase).
    {U'a', kMacron, 0x0101}, {U'A', kMacron, 0x0100},
    {U'i', kMacron, 0x012B}, {U'I', kMacron, 0x012A},
    {U'u', kMacron, 0x016B}, {U'U', kMacron, 0x016A},
    {U'e', kMacron, 0x0113}, {U'E', kMacron, 0x0112},
    {U'o', kMacron, 0x014D}, {U'O', kMacron, 0x014C},
    {U'r', kDotBelow, 0x1E5B}, {U'R', kDotBelow, 0x1E5A},
    {0x1E5B, kMacron, 0x1E5D}, {0x1E5A, kMacron, 0x1E5C},
    {U'l', kDotBelow, 0x1E37}, {U'L', kDotBelow, 0x1E36},
    {0x1E37, kMacron, 0x1E39}, {0x1E36, kMacron, 0x1E38},
    {U'm', kDotBelow, 0x1E43}, {U'M', kDotBelow, 0x1E42},
    {U'm', kDotAbove, 0x1E41}, {U'M', kDotAbove, 0x1E40},
    {U'h', kDotBelow, 0x1E25}, {U'H', kDotBelow, 0x1E24},
    {U'n', kDotAbove, 0x1E45}, {U'N', kDotAbove, 0x1E44},
    {U'n', kTilde, 0x00F1},  {U'N', kTilde, 0x00D1},
    {U'n', kDotBelow, 0x1E47}, {U'N', kDotBelow, 0x1E46},
    {U't', kDotBelow, 0x1E6D}, {U'T', kDotBelow, 0x1E6C},
    {U'd', kDotBelow, 0x1E0D}, {U'D', kDotBelow, 0x1E0C},
    {U's', kAcute, 0x015B},  {U'S', kAcute, 0x015A},
    {U's', kDotBelow, 0x1E63}, {U'S', kDotBelow, 0x1E62},
    // Western European letters used by the bundled comparison alphabets.
    {U'a', kGrave, 0x00E0},  {U'A', kGrave, 0x00C0},
    {U'a', kAcute, 0x00E1},  {U'A', kAcute, 0x00C1},
    {U'a', kCirc, 0x00E2},   {U'A', kCirc, 0x00C2},
    {U'a', kTilde, 0x00E3},  {U'A', kTilde, 0x00C3},
    {U'a', kDiaeresis, 0x00E4}, {U'A', kDiaeresis, 0x00C4},
    {U'a', kRing, 0x00E5},   {U'A', kRing, 0x00C5},
    {U'c', kCedilla, 0x00E7}, {U'C', kCedilla, 0x00C7},
    {U'e', kGrave, 0x00E8},  {U'E', kGrave, 0x00C8},
    {U'e', kAcute, 0x00E9},  {U'E', kAcute, 0x00C9},
    {U'e', kCirc, 0x00EA},   {U'E', kCirc, 0x00CA},
    {U'e', kDiaeresis, 0x00EB}, {U'E', kDiaeresis, 0x00CB},
    {U'i', kGrave, 0x00EC},  {U'I', kGrave, 0x00CC},
    {U'i', kAcute, 0x00ED},  {U'I', kAcute, 0x00CD},
    {U'i', kCirc, 0x00EE},   {U'I', kCirc, 0x00CE},
    {U'i', kDiaeresis, 0x00EF}, {U'I', kDiaeresis, 0x00CF},
    {U'o', kGrave, 0x00F2},  {U'O', kGrave, 0x00D2},
    {U'o', kAcute, 0x00F3},  {U'O', kAcute, 0x00D3},
    {U'o', kCirc, 0x00F4},   {U'O', kCirc, 0x00D4},
    {U'o', kTilde, 0x00F5},  {U'O', kTilde, 0x00D5},
    {U'o', kDiaeresis, 0x00F6}, {U'O', kDiaeresis, 0x00D6},
    {U'u', kGrave, 0x00F9},  {U'U', kGrave, 0x00D9},
    {U'u', kAcute, 0x00FA},  {U'U', kAcute, 0x00DA},
    {U'u', kCirc, 0x00FB},   {U'U', kCirc, 0x00DB},
    {U'u', kDiaeresis, 0x00FC}, {U'U', kDiaeresis, 0x00DC},
    {U'y', kAcute, 0x00FD},  {U'Y', kAcute, 0x00DD},
    {U'y', kDiaeresis, 0x00FF}, {U'Y', kDiaeresis, 0x0178},
};

struct Tables {
  std::unordered_map<uint64_t, char32_t> compose;
  std::unordered_map<char32_t, std::pair<char32_t, char32_t>> decompose;
  std::unordered_map<char32_t, char32_t> lower;
};

uint64_t pair_key(char32_t a, char32_t b) {
  return (static_cast<uint64_t>(a) << 32) | b;
}

const Tables& tables() {
  static const Tables t = [] {
    Tables t;
    for (const CompRow& row : kCompositions) {
      t.compose[pair_key(row.base, row.mark)] = row.composed;
      t.decompose[row.composed] = {row.base, row.mark};
    }
    for (char32_t c = U'A'; c <= U'Z'; ++c) t.lower[c] = c + 32;
    // kCompositions lists each lowercase row immediately followed by its
    // uppercase twin; derive the case-fold table from that pairing.
    constexpr size_t n = sizeof(kCompositions) / sizeof(kCompositions[0]);
    static_assert(sizeof(kCompositions) / sizeof(kCompositions[0]) % 2 == 0);
    for (size_t i = 0; i + 1 < n; i += 2)
      t.lower[kCompositions[i + 1].composed] = kCompositions[i].composed;
    return t;
  }();
  return t;
}

void decompose_into(char32_t cp, std::u32string& out) {
  auto it = tables().decompose.find(cp);
  if (it == tables().decompose.end()) {
    out.push_back(cp);
    return;
  }
  decompose_into(it->second.first, out);
  out.push_back(it->second.second);
}

}  // namespace

int combining_class(char32_t cp) {
  switch (cp) {
    case kGrave:
    case kAcute:
    case kCirc:
    case kTilde:
    case kMacron:
    case 0x0306:  // breve
    case kDotAbove:
    case kDiaeresis:
    case kRing:
    case 0x030C:  // caron
      return 230;
    case kDotBelow:
    case 0x0331:  // macron below
      return 220;
    case kCedilla:
      return 202;
    default:
      return 0;
  }
}

std::u32string nfc(std::u32string_view codepoints) {
  // Canonical decomposition.
  std::u32string d;
  d.reserve(codepoints.size() + 8);
  for (char32_t cp : codepoints) decompose_into(cp, d);

  // Canonical ordering: stable-sort maximal runs of nonzero-ccc marks.
  size_t i = 0;
  while (i < d.size()) {
    if (combining_class(d[i]) == 0) {
      ++i;
      continue;
    }
    size_t j = i;
    while (j < d.size() && combining_class(d[j]) != 0) ++j;
    std::stable_sort(d.begin() + i, d.begin() + j,
                     [](char32_t a, char32_t b) {
                       return combining_class(a) < combining_class(b);
                     });
    i = j;
  }

  // Canonical composition. A char composes with the last starter unless a
  // char of equal or higher combining class sits between them.
  std::u32string out;
  out.reserve(d.size());
  ptrdiff_t starter = -1;
  for (char32_t cp : d) {
    const int cc = combining_class(cp);
    if (starter >= 0) {
      const bool blocked =
          static_cast<ptrdiff_t>(out.size()) - 1 > starter &&
          combining_class(out.back()) >= cc;
      if (!blocked) {
        auto it = tables().compose.find(pair_key(out[starter], cp));
        if (it != tables().compose.end()) {
          out[starter] = it->second;
          continue;
        }
      }
    }
    if (cc == 0) starter = static_cast<ptrdiff_t>(out.size());
    out.push_back(cp);
  }
  return out;
}

std::string nfc(std::string_view utf8) { return utf8_encode(nfc(utf8_decode(utf8))); }

char32_t fold_lower(char32_t cp) {
  auto it = tables().lower.find(cp);
  return it == tables().lower.end() ? cp : it->second;
}

std::string fold_lower(std::string_view utf8) {
  std::u32string cps = utf8_decode(utf8);
  for (char32_t& cp : cps) cp = fold_lower(cp);
  return utf8_encode(cps);
}

bool is_whitespace_surface(std::string_view utf8) {
  const std::u32string cps = utf8_decode(utf8);
  return cps.size() == 1 && is_space_cp(cps[0]);
}

std::string normalize_text(std::string_view utf8) {
  std::string lf;
  lf.reserve(utf8.size());
  for (size_t i = 0; i < utf8.size(); ++i) {
    if (utf8[i] == '\r') {
      lf.push_back('\n');
      if (i + 1 < utf8.size() && utf8[i + 1] == '\n') ++i;
    } else {
      lf.push_back(utf8[i]);
    }
  }
  return nfc(lf);
}

}  // namespace pocr
