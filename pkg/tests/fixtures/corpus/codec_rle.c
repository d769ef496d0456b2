/* Run-length codec for sparse bitmap pages; worst case doubles the input. */
#include <stddef.h>
#include <stdint.h>

/*@expect:func_body*/
size_t rle_encode(const uint8_t *src, size_t n, uint8_t *out) {
    size_t w = 0;
    size_t i = 0;
    while (i < n) {
        uint8_t value = src[i];
        size_t run = 1;
        while (i + run < n && src[i + run] == value && run < 255) {
            run += 1;
        }
        out[w] = (uint8_t)run;
        out[w + 1] = value;
        w += 2;
        i += run;
    }
    return w;
}

size_t rle_decode(const uint8_t *src, size_t n, uint8_t *out, size_t cap) {
    size_t w = 0;
    for (size_t i = 0; i + 1 < n; i += 2) {
        size_t run = src[i];
        uint8_t value = src[i + 1];
        if (w + run > cap) {
            return 0;
        }
        for (size_t j = 0; j < run; j++) {
            out[w + j] = value;
        }
        w += run;
    }
    return w;
}
