#include <stdio.h>
#include <string.h>

#include "uavtrack.h"

#define CHECK(expr)                                                        \
    do {                                                                   \
        UtStatus s_ = (expr);                                              \
        if (s_ != UT_STATUS_OK) {                                          \
            fprintf(stderr, "%s failed: %d %s\n", #expr, (int)s_,          \
                    ut_last_error_message());                              \
            return 1;                                                      \
        }                                                                  \
    } while (0)

int main(void) {
    UtTrackerConfig cfg;
    CHECK(ut_tracker_config_default(&cfg));
    UtTracker *t = NULL;
    CHECK(ut_tracker_new(&cfg, &t));
    UtSotSelector *sel = NULL;
    UtBox fallback = {319.5, 255.5, 1.0, 1.0};
    CHECK(ut_sot_new(cfg.track_buffer, fallback, 0, &sel));

    UtTrack buf[8];
    size_t n = 0;
    for (uint32_t f = 1; f <= 20; ++f) {
        UtDetection d = {{100.0 + 2.0 * f, 80.0, 20.0, 16.0}, 0.9};
        CHECK(ut_tracker_step(t, f, &d, f <= 10 ? 1 : 0, NULL, 0, NULL));
        UtSotReport r;
        CHECK(ut_sot_select(sel, t, &r));
        if (f <= 10 && r.source != UT_SOT_SOURCE_ONLINE) return 2;
        if (f > 10 && r.source != UT_SOT_SOURCE_LOST_PREDICTION) return 3;
        if (r.track_id != 1) return 4;
    }
    CHECK(ut_tracker_lost(t, buf, 8, &n));
    if (n != 1 || buf[0].id != 1) return 5;

    if (ut_tracker_step(t, 5, NULL, 0, NULL, 0, NULL) != UT_STATUS_NON_MONOTONIC_FRAME) return 6;
    if (strlen(ut_last_error_message()) == 0) return 7;

    double m = 0.0;
    CHECK(ut_mota(10, 20, 5, 100, &m));
    if (m < 0.6499999 || m > 0.6500001) return 8;
    if (ut_mota(0, 0, 0, 0, &m) != UT_STATUS_UNDEFINED) return 9;

    ut_sot_free(sel);
    ut_tracker_free(t);
    printf("ok %s\n", ut_version());
    return 0;
}
