#include <math.h>
#include <stdio.h>
#include <string.h>

#include "qpartition.h"

#define CHECK(call)                                                        \
  do {                                                                     \
    QpStatus s_ = (call);                                                  \
    if (s_ != QP_STATUS_OK) {                                              \
      const char *m_ = qp_last_error();                                    \
      fprintf(stderr, "%s -> %d (%s)\n", #call, (int)s_, m_ ? m_ : "");    \
      return 1;                                                            \
    }                                                                      \
  } while (0)

int main(void) {
  QpModel *model = NULL;
  CHECK(qp_model_parse("spins 2\nedge 0 1 1.0\n", &model));
  if (qp_model_states(model) != 4) return 2;

  double z = 0.0;
  CHECK(qp_exact_partition(model, 1.0, &z));
  double expected = 2.0 * exp(1.0) + 2.0 * exp(-1.0);
  if (fabs(z - expected) > 1e-12 * expected) return 3;

  QpSchedule *schedule = NULL;
  CHECK(qp_schedule_build(model, 1.0, 0.5, 0.75, &schedule));

  QpQuantumPlan *plan = NULL;
  CHECK(qp_quantum_plan(model, schedule, 0.2, QP_MODE_PERFECT, 0, &plan));
  double estimate = 0.0;
  CHECK(qp_quantum_run(plan, 7, &estimate));
  if (!(estimate > 0.0)) return 4;
  QpLedger ledger;
  CHECK(qp_quantum_ledger(plan, &ledger));
  if (ledger.controlled_reflections == 0) return 5;

  QpModel *bad = NULL;
  if (qp_model_parse("edge 0 1 1.0\n", &bad) != QP_STATUS_PARSE) return 6;
  if (strstr(qp_last_error(), "line 1") == NULL) return 7;

  qp_quantum_plan_free(plan);
  qp_schedule_free(schedule);
  qp_model_free(model);
  printf("ok %.6f\n", estimate);
  return 0;
}
