/* Dense row-major matrix helpers shared by the solver stages. */
#include <stddef.h>

void mat_scale(double *m, size_t rows, size_t cols, double factor) {
    for (size_t r = 0; r < rows; r++) {
        for (size_t c = 0; c < cols; c++) {
            m[r * cols + c] *= factor;
        }
    }
}

void mat_add(double *out, const double *a, const double *b, size_t n) {
    /*@expect:for_body*/
    for (size_t i = 0; i < n; i++) {
        out[i] = a[i] + b[i];
    }
}

double mat_trace_sum(const double *m, size_t n) {
    double acc = 0.0;
    for (size_t i = 0; i < n; i++) {
        acc += m[i * n + i];
    }
    return acc;
}
