/* Bump allocator over a caller-provided block; no per-allocation free. */
#include <stddef.h>
#include <stdint.h>

struct arena {
    unsigned char *base;
    size_t capacity;
    size_t used;
};

static size_t align_up(size_t value, size_t align) {
    return (value + align - 1) & ~(align - 1);
}

/*@expect:func_body*/
static void *arena_alloc(struct arena *a, size_t size, size_t align) {
    size_t at = align_up(a->used, align);
    if (at + size > a->capacity) {
        return NULL;
    }
    a->used = at + size;
    return a->base + at;
}

void arena_reset(struct arena *a) {
    a->used = 0;
}

size_t arena_remaining(const struct arena *a) {
    if (a->used > a->capacity) {
        return 0;
    }
    return a->capacity - a->used;
}
