#include <math.h>
#include <stdio.h>
#include <string.h>

#include "wiener_chaos.h"

#define CHECK(cond)                                                   \
    do {                                                              \
        if (!(cond)) {                                                \
            fprintf(stderr, "check failed at line %d: %s\n", __LINE__, #cond); \
            return 1;                                                 \
        }                                                             \
    } while (0)

int main(void) {
    double coeffs[4] = {0.0, 1.0, 0.0, 0.0};
    WcTensor *t = NULL;
    CHECK(wc_tensor_new(2, 2, coeffs, 4, &t) == WC_STATUS_OK);
    double m2 = 0.0, m4 = 0.0;
    CHECK(wc_tensor_moments(t, &m2, &m4) == WC_STATUS_OK);
    CHECK(fabs(m2 - 1.0) < 1e-15 && fabs(m4 - 9.0) < 1e-12);
    double xi[3] = {0.0, 0.0, 0.0}, v = 0.0;
    CHECK(wc_eval_integral(t, xi, 3, &v) == WC_STATUS_DIMENSION_MISMATCH);
    char msg[128];
    CHECK(wc_last_error_message(msg, sizeof msg) > 0 && strstr(msg, "dimension") != NULL);
    wc_tensor_free(t);

    WcFunctional f = {WC_FAMILY_A_BETA, 0.0, -0.5, 0.0, 1};
    WcPlan *p = NULL;
    CHECK(wc_plan_new(&f, WC_GRID_KIND_GEOMETRIC, 64, &p) == WC_STATUS_OK);
    WcPlanMoments m;
    CHECK(wc_plan_moments(p, &m) == WC_STATUS_OK);
    CHECK(m.generator_count == 64 && m.variance > 0.9 && m.variance < 1.0);
    double draws[16];
    CHECK(wc_plan_sample(p, 42, "c", 16, draws) == WC_STATUS_OK);
    wc_plan_free(p);

    double closed = 0.0;
    CHECK(wc_sheet_variance_b_eps(1, 0.5, &closed) == WC_STATUS_OK && closed > 0.0);
    printf("ok %s\n", wc_version());
    return 0;
}
