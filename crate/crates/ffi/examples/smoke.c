/* Loads a CSV, prints SMA/WMA/EMA(3) of Close at row 3, then streams EMA. */
#include <math.h>
#include <stdio.h>
#include <stdlib.h>

#include "mova.h"

static int check(MovaStatus s) {
    if (s != MOVA_STATUS_OK) {
        fprintf(stderr, "error %d: %s\n", (int)s, mova_last_error_message());
        return 1;
    }
    return 0;
}

int main(int argc, char **argv) {
    if (argc != 2) {
        fprintf(stderr, "usage: %s FILE.csv\n", argv[0]);
        return 2;
    }
    MovaFrame *frame = NULL;
    if (check(mova_frame_from_path(argv[1], &frame))) return 1;
    size_t rows = mova_frame_row_count(frame);
    double *out = malloc(rows * sizeof(double));
    const MovaKind kinds[] = {MOVA_KIND_SMA, MOVA_KIND_WMA, MOVA_KIND_EMA};
    const char *names[] = {"SMA", "WMA", "EMA"};
    for (int k = 0; k < 3; k++) {
        if (check(mova_frame_indicator(frame, kinds[k], 3, NULL, out, rows))) return 1;
        printf("%s(3) %.6f warmup=%d\n", names[k], out[2], isnan(out[1]) && isnan(out[0]));
    }
    if (mova_frame_indicator(frame, MOVA_KIND_SMA, 3, "Nope", out, rows) == MOVA_STATUS_UNKNOWN_COLUMN)
        printf("unknown column reported\n");

    MovaStream *ema = NULL;
    if (check(mova_stream_new(MOVA_KIND_EMA, 3, &ema))) return 1;
    const double prices[] = {22.65, 22.1, 22.9, 22.0};
    double v = 0;
    for (int i = 0; i < 4; i++) mova_stream_push(ema, prices[i], &v);
    printf("stream EMA(3) %.9f\n", v);

    mova_stream_free(ema);
    free(out);
    mova_frame_free(frame);
    return 0;
}
