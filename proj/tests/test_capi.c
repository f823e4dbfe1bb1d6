/* C API exercised from C. */

#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "fpl/fpl.h"

static int failures = 0;

#define EXPECT(cond)                                                  \
  do {                                                                \
    if (!(cond)) {                                                    \
      fprintf(stderr, "%s:%d: expected %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                     \
    }                                                                 \
  } while (0)

static const char* kConfig =
    "{\"network\": {\"sites\": [{\"freq_hz\": 4.0e6}, {\"freq_hz\": 4.1e6}],"
    " \"couplings\": [{\"sites\": [0, 1], \"coupling_hz\": 2156}]},"
    " \"schedule\": {\"segments\": [{\"duration_us\": 400, \"modulations\":"
    " [{\"site\": 1, \"freq_hz\": 1.0e5, \"eta\": 1.8, \"phase_rad\": 0.0}]}]},"
    " \"initial\": {\"nbar\": [100, 0]},"
    " \"protocol\": {\"exchange\": {\"observe\": 1, \"t_max_us\": 400, \"samples\": 41}},"
    " \"engine\": \"effective\"}";

static void test_basics(void) {
  EXPECT(strcmp(fpl_version(), "0.3.0") == 0);
  EXPECT(strcmp(fpl_status_name(FPL_OK), "ok") == 0);
  EXPECT(fabs(fpl_bessel_j(0, 2.404825557695773)) < 1e-12);
  EXPECT(fabs(fpl_bessel_j(1, 1.8) - 0.5815169517311653) < 1e-12);
}

static void test_errors(void) {
  fpl_config* cfg = NULL;
  EXPECT(fpl_config_parse(NULL, &cfg) == FPL_ERR_INVALID_ARGUMENT);
  EXPECT(fpl_config_parse("{", &cfg) == FPL_ERR_CONFIG);
  EXPECT(cfg == NULL);
  EXPECT(strlen(fpl_last_error()) > 0);
  EXPECT(fpl_config_load("/nonexistent/config.json", &cfg) == FPL_ERR_IO);

  /* Zero duration: parses, but runs are rejected. */
  const char* bad =
      "{\"network\": {\"sites\": [{\"freq_hz\": 4.0e6}]},"
      " \"schedule\": {\"segments\": [{\"duration_us\": 0}]},"
      " \"protocol\": {\"exchange\": {\"observe\": 0, \"t_max_us\": 0}}}";
  EXPECT(fpl_config_parse(bad, &cfg) == FPL_OK);
  fpl_diagnostics* diag = NULL;
  EXPECT(fpl_validate(cfg, &diag) == FPL_OK);
  EXPECT(fpl_diagnostics_count(diag) == 1);
  EXPECT(fpl_diagnostics_segment(diag, 0) == 0);
  EXPECT(strstr(fpl_diagnostics_message(diag, 0), "duration") != NULL);
  EXPECT(strcmp(fpl_diagnostics_message(diag, 5), "") == 0);
  EXPECT(fpl_diagnostics_segment(diag, 5) == -1);
  fpl_diagnostics_free(diag);
  fpl_result* res = NULL;
  EXPECT(fpl_run_protocol(cfg, FPL_PROTOCOL_EXCHANGE, FPL_ENGINE_FROM_CONFIG, 0, 0, &res) ==
         FPL_ERR_VALIDATION);
  EXPECT(res == NULL);
  fpl_config_free(cfg);
  fpl_config_free(NULL);
  fpl_result_free(NULL);
}

static void test_run_and_fit(const char* dir) {
  fpl_config* cfg = NULL;
  EXPECT(fpl_config_parse(kConfig, &cfg) == FPL_OK);
  uint64_t hash = 0, again = 0;
  EXPECT(fpl_config_hash(cfg, &hash) == FPL_OK);
  fpl_config* twin = NULL;
  EXPECT(fpl_config_parse(kConfig, &twin) == FPL_OK);
  EXPECT(fpl_config_hash(twin, &again) == FPL_OK);
  EXPECT(hash == again && hash != 0);
  fpl_config_free(twin);

  fpl_result* res = NULL;
  EXPECT(fpl_run_protocol(cfg, FPL_PROTOCOL_EXCHANGE, FPL_ENGINE_FROM_CONFIG, 0, 0, &res) == FPL_OK);
  EXPECT(fpl_result_value_count(res) == 41);
  const double* v = fpl_result_values(res);
  double peak = 0.0;
  for (size_t i = 0; i < fpl_result_value_count(res); ++i) peak = v[i] > peak ? v[i] : peak;
  EXPECT(peak > 99.0 && peak <= 100.0 + 1e-9);
  EXPECT(strncmp(fpl_result_csv(res), "time_us,nbar\n", 13) == 0);
  EXPECT(strstr(fpl_result_json(res), "\"config_hash\"") != NULL);
  EXPECT(fpl_result_write(res, dir, "exchange") == FPL_OK);
  fpl_result_free(res);

  /* The protocol block has no spectroscopy entry. */
  EXPECT(fpl_run_protocol(cfg, FPL_PROTOCOL_SPECTRUM, FPL_ENGINE_FROM_CONFIG, 0, 0, &res) ==
         FPL_ERR_CONFIG);

  EXPECT(fpl_run_floquet(cfg, FPL_ENGINE_EFFECTIVE, &res) == FPL_OK);
  EXPECT(strstr(fpl_result_json(res), "hoppings") != NULL);
  fpl_result_free(res);
  fpl_config_free(cfg);

  char path[1024];
  snprintf(path, sizeof path, "%s/exchange.csv", dir);
  EXPECT(fpl_fit_csv(FPL_FIT_EXCHANGE, path, NULL, &res) == FPL_OK);
  EXPECT(strstr(fpl_result_json(res), "Omega_AC_hz") != NULL);
  fpl_result_free(res);
  EXPECT(fpl_fit_csv(FPL_FIT_SINUSOID, path, NULL, &res) == FPL_ERR_CONFIG);
  EXPECT(fpl_fit_csv(FPL_FIT_EXCHANGE, path, "{not json", &res) != FPL_OK);
}

int main(int argc, char** argv) {
  if (argc < 2) {
    fprintf(stderr, "usage: test_capi <scratch dir>\n");
    return 2;
  }
  test_basics();
  test_errors();
  test_run_and_fit(argv[1]);
  if (failures) {
    fprintf(stderr, "%d failures\n", failures);
    return 1;
  }
  printf("C API: all checks passed\n");
  return 0;
}
