/* Scoped tracing macros; bodies pair push/pop across statement brackets. */
#ifndef PD_TRACE_H
#define PD_TRACE_H

void pd_trace_push(const char *name);
void pd_trace_pop(void);
void pd_trace_mark(const char *name, long value);

/* The BEGIN/END pair intentionally splits a do-while across two macros. */
#define PD_TRACE_BEGIN(name) do { \
    pd_trace_push(name)

#define PD_TRACE_END() \
    pd_trace_pop(); } while (0)

#define PD_TRACE_SCOPE(name, stmt) do { \
    pd_trace_push(name); \
    stmt; \
    pd_trace_pop(); \
} while (0)

static inline void pd_trace_counter(const char *name, long value) {
    pd_trace_mark(name, value);
}

#endif
