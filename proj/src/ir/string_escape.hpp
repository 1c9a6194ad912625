#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace cryptaudit::ast {

inline void append_utf8(std::string& out, std::uint32_t cp) {
    if (cp < 0x80) {
        out += static_cast<char>(cp);
    } else if (cp < 0x800) {
        out += static_cast<char>(0xC0 | (cp >> 6));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
        out += static_cast<char>(0xE0 | (cp >> 12));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
        out += static_cast<char>(0xF0 | (cp >> 18));
        out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    }
}

inline int hex_value(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

// Reads exactly `n` hex digits at `s[i]`; returns -1 if they are not all hex.
inline long read_hex(std::string_view s, size_t i, size_t n) {
    if (i + n > s.size()) return -1;
    long v = 0;
    for (size_t k = 0; k < n; ++k) {
        const int h = hex_value(s[i + k]);
        if (h < 0) return -1;
        v = v * 16 + h;
    }
    return v;
}

// Shared escape decoder. Unknown escapes keep the backslash in Python and
// drop it in JavaScript.
inline std::string decode_escapes(std::string_view s, bool js) {
    std::string out;
    out.reserve(s.size());
    for (size_t i = 0; i < s.size(); ++i) {
        const char c = s[i];
        if (c != '\\' || i + 1 >= s.size()) {
            out += c;
            continue;
        }
        const char e = s[++i];
        switch (e) {
            case 'n': out += '\n'; break;
            case 't': out += '\t'; break;
            case 'r': out += '\r'; break;
            case 'b': out += '\b'; break;
            case 'f': out += '\f'; break;
            case 'v': out += '\v'; break;
            case 'a':
                if (js) {
                    out += 'a';
                } else {
                    out += '\a';
                }
                break;
            case '\\': out += '\\'; break;
            case '\'': out += '\''; break;
            case '"': out += '"'; break;
            case '`': out += js ? "`" : "\\`"; break;
            case '\n': break;
            case '\r':
                if (i + 1 < s.size() && s[i + 1] == '\n') ++i;
                break;
            case 'x': {
                const long v = read_hex(s, i + 1, 2);
                if (v < 0) {
                    out += js ? "x" : "\\x";
                } else {
                    append_utf8(out, static_cast<std::uint32_t>(v));
                    i += 2;
                }
                break;
            }
            case 'u': {
                if (js && i + 1 < s.size() && s[i + 1] == '{') {
                    const size_t close = s.find('}', i + 2);
                    if (close != std::string_view::npos) {
                        const long v = read_hex(s, i + 2, close - i - 2);
                        if (v >= 0 && v <= 0x10FFFF) {
                            append_utf8(out, static_cast<std::uint32_t>(v));
                            i = close;
                            break;
                        }
                    }
                    out += 'u';
                    break;
                }
                const long v = read_hex(s, i + 1, 4);
                if (v < 0) {
                    out += js ? "u" : "\\u";
                } else {
                    append_utf8(out, static_cast<std::uint32_t>(v));
                    i += 4;
                }
                break;
            }
            case 'U': {
                const long v = js ? -1 : read_hex(s, i + 1, 8);
                if (v < 0 || v > 0x10FFFF) {
                    out += js ? "U" : "\\U";
                } else {
                    append_utf8(out, static_cast<std::uint32_t>(v));
                    i += 8;
                }
                break;
            }
            default:
                if (e >= '0' && e <= '7') {
                    int v = e - '0';
                    size_t k = 1;
                    while (k < 3 && i + 1 < s.size() && s[i + 1] >= '0' && s[i + 1] <= '7') {
                        v = v * 8 + (s[++i] - '0');
                        ++k;
                    }
                    append_utf8(out, static_cast<std::uint32_t>(v));
                } else {
                    if (!js) out += '\\';
                    out += e;
                }
        }
    }
    return out;
}

inline std::string decode_python_escapes(std::string_view s) { return decode_escapes(s, false); }
inline std::string decode_js_escapes(std::string_view s) { return decode_escapes(s, true); }

}  // namespace cryptaudit::ast
