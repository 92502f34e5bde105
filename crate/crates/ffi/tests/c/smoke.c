#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "dgeo.h"

#define CHECK(call)                                                            \
  do {                                                                         \
    DgeoStatus s_ = (call);                                                    \
    if (s_ != DGEO_STATUS_OK) {                                                \
      fprintf(stderr, "%s -> %d: %s\n", #call, (int)s_,                        \
              dgeo_last_error_message());                                      \
      return 1;                                                                \
    }                                                                          \
  } while (0)

int main(int argc, char **argv) {
  if (argc != 2) {
    fprintf(stderr, "usage: smoke <scenario.toml>\n");
    return 2;
  }
  DgeoScenario *sc = NULL;
  DgeoSnapshots *snaps = NULL;
  DgeoBackend *backend = NULL;
  DgeoGrid *grid = NULL;
  DgeoDetections *det = NULL;

  CHECK(dgeo_scenario_load(argv[1], &sc));
  CHECK(dgeo_scenario_simulate(sc, &snaps));
  CHECK(dgeo_backend_new("serial", 0, &backend));
  CHECK(dgeo_geolocate(sc, snaps, backend, 0, &grid));

  size_t rows = 0, cols = 0;
  dgeo_grid_shape(grid, &rows, &cols);
  double *values = malloc(rows * cols * sizeof(double));
  CHECK(dgeo_grid_values(grid, values, rows * cols));
  free(values);

  CHECK(dgeo_detect(grid, 5.0, 5, &det));
  size_t n = dgeo_detections_count(det);
  if (n == 0) {
    fprintf(stderr, "no detections\n");
    return 1;
  }
  DgeoDetection best;
  CHECK(dgeo_detections_get(det, 0, &best));
  printf("%zu %zu %zu %.6f %.6f\n", rows, cols, n, best.lat_deg, best.lon_deg);

  /* errors come back as codes with a message, never a crash */
  DgeoBackend *bogus = NULL;
  if (dgeo_backend_new("nope", 0, &bogus) != DGEO_STATUS_INVALID_ARGUMENT ||
      bogus != NULL || strstr(dgeo_last_error_message(), "nope") == NULL) {
    fprintf(stderr, "bad-backend error not reported\n");
    return 1;
  }

  dgeo_detections_free(det);
  dgeo_grid_free(grid);
  dgeo_backend_free(backend);
  dgeo_snapshots_free(snaps);
  dgeo_scenario_free(sc);
  return 0;
}
