/* Escapes control bytes for the line protocol; delimiters stay literal. */
#include <stddef.h>

static const char *BRACKETS = "{}()[]";
static const char OPEN_BRACE = '{';
static const char CLOSE_PAREN = ')';

size_t escape_line(const char *src, size_t n, char *out, size_t cap) {
    size_t w = 0;
    for (size_t i = 0; i < n; i++) {
        char c = src[i];
        if (c == '\n') {
            if (w + 2 > cap) return 0;
            out[w] = '\\';
            out[w + 1] = 'n';
            w += 2;
        } else if (c == '\\') {
            if (w + 2 > cap) return 0;
            out[w] = '\\';
            out[w + 1] = '\\';
            w += 2;
        } else {
            if (w + 1 > cap) return 0;
            out[w] = c;
            w += 1;
        }
    }
    return w;
}

int is_bracket(char c) {
    const char *set = "{}()";
    for (const char *p = set; *p; p++) {
        if (*p == c) {
            return 1;
        }
    }
    return 0;
}
