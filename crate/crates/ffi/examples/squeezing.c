/* Steady squeezing of the dissipative one-axis-twisting model.
 *
 *   cargo build --release -p nhkrein-ffi
 *   cc -std=c99 -Icrates/ffi/include crates/ffi/examples/squeezing.c \
 *      -Ltarget/release -lnhkrein_ffi -lm -o squeezing
 *   LD_LIBRARY_PATH=target/release ./squeezing
 */
#include <stdio.h>
#include <stdlib.h>

#include "nhkrein.h"

static int check(NhkStatus st) {
    if (st != NHK_OK) {
        const char *msg = nhk_last_error_message();
        fprintf(stderr, "nhkrein error %d: %s\n", (int)st, msg ? msg : "?");
        exit(1);
    }
    return 0;
}

int main(void) {
    NhkModelParams p = {NHK_DISSIPATIVE_OAT, 10, -5.0, 1.0, 1.5, 0.0};
    NhkModel *model = NULL;
    check(nhk_model_new(&p, NULL, NHK_EP_AUTO, NHK_METRIC_AUTO, &model));

    NhkMetricCase mc;
    check(nhk_model_metric_case(model, &mc));
    printf("nhkrein %s, dim %zu, metric case %d\n", nhk_version(), nhk_model_dim(model), (int)mc);

    enum { N = 41 };
    double times[N];
    for (int k = 0; k < N; k++) times[k] = k;
    NhkEvolution *evo = NULL;
    check(nhk_evolve(model, 0.785398163397448, 0.0, times, N, &evo));

    NhkSqueezing sq[N];
    check(nhk_evolution_squeezing(evo, sq, N));
    for (int k = 0; k < N; k += 10)
        printf("t=%5.1f  zeta2_x=%.6f  product=%.6f  intelligent=%d\n", times[k], sq[k].zeta2_x,
               sq[k].uncertainty_product, sq[k].is_intelligent);

    nhk_evolution_free(evo);
    nhk_model_free(model);
    return 0;
}
