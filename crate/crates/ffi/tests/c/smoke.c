#include <math.h>
#include <stdio.h>
#include <string.h>

#include "eventloc.h"

int main(void) {
    double x, y, z, lat, lon;
    if (eventloc_geodetic_to_ecef(0.0, 0.0, &x, &y, &z) != EVENTLOC_STATUS_OK) return 1;
    if (x != 6378137.0 || y != 0.0 || z != 0.0) return 2;
    if (eventloc_ecef_to_geodetic(x, y, z, &lat, &lon) != EVENTLOC_STATUS_OK) return 3;
    if (fabs(lat) > 1e-12 || fabs(lon) > 1e-12) return 4;

    double yield, improvement;
    uint64_t baseline = 17;
    if (eventloc_compute_metrics(84, 1000, &baseline, &yield, &improvement) != EVENTLOC_STATUS_OK)
        return 5;
    if (fabs(yield - 8.4) > 1e-12 || fabs(improvement - 84.0 / 17.0) > 1e-12) return 6;

    if (eventloc_geodetic_to_ecef(91.0, 0.0, &x, &y, &z) != EVENTLOC_STATUS_INVALID_ARGUMENT)
        return 7;
    const char *msg = eventloc_last_error();
    if (msg == NULL || strstr(msg, "91") == NULL) return 8;
    puts("ok");
    return 0;
}
