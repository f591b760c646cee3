#include <stdio.h>
#include <string.h>

#include "stt_ffi.h"

#define CHECK(cond)                                                       \
  do {                                                                    \
    if (!(cond)) {                                                        \
      const char *msg = stt_last_error_message();                         \
      fprintf(stderr, "line %d: %s (%s)\n", __LINE__, #cond,              \
              msg ? msg : "no message");                                  \
      return 1;                                                           \
    }                                                                     \
  } while (0)

int main(int argc, char **argv) {
  if (argc < 2) {
    fprintf(stderr, "usage: smoke SCENARIO\n");
    return 2;
  }
  SttScenario *sc = NULL;
  SttSynthesis *syn = NULL;
  SttTrace *tr = NULL;

  CHECK(stt_scenario_load(NULL, &sc) == STT_STATUS_NULL_ARGUMENT);
  CHECK(strstr(stt_last_error_message(), "path") != NULL);

  CHECK(stt_scenario_load(argv[1], &sc) == STT_STATUS_OK);
  CHECK(stt_scenario_state_dim(sc) == 3);
  CHECK(stt_scenario_set_stay_horizon(sc, 2.0) == STT_STATUS_OK);
  CHECK(stt_synthesize(sc, &syn) == STT_STATUS_OK);

  bool passed = false;
  CHECK(stt_synthesis_passed(syn, &passed) == STT_STATUS_OK && passed);

  double lo[3], hi[3], u[3];
  CHECK(stt_synthesis_tube_at(syn, 0.0, lo, hi, 3) == STT_STATUS_OK);
  CHECK(lo[0] < 0.25 && 0.25 < hi[0]);
  CHECK(stt_synthesis_tube_at(syn, 0.0, lo, hi, 2) == STT_STATUS_INVALID_ARGUMENT);

  double x[3] = {0.25, 0.25, 0.0};
  CHECK(stt_control_input(sc, syn, 0.0, x, u, 3) == STT_STATUS_OK);

  CHECK(stt_simulate(sc, syn, &tr) == STT_STATUS_OK);
  SttFlags flags;
  CHECK(stt_trace_flags(tr, &flags) == STT_STATUS_OK);
  CHECK(flags.reached && flags.safe && flags.contained && flags.stayed);
  SttEffort effort;
  CHECK(stt_trace_effort(tr, &effort) == STT_STATUS_OK && effort.energy > 0.0);

  printf("stt %s: %zu rows, energy %.6f\n", stt_version(), stt_trace_rows(tr), effort.energy);
  stt_trace_free(tr);
  stt_synthesis_free(syn);
  stt_scenario_free(sc);
  return 0;
}
