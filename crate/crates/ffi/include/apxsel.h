#ifndef APXSEL_H
#define APXSEL_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible call.
 */
typedef enum ApxStatus {
  ApxStatusOk = 0,
  /**
   * Internal error (I/O, panic, unexpected state).
   */
  ApxStatusInternal = 1,
  /**
   * Invalid configuration or argument value.
   */
  ApxStatusConfig = 2,
  /**
   * A pipeline stage audit or the final certificate failed.
   */
  ApxStatusAudit = 3,
  /**
   * A required pointer argument was null.
   */
  ApxStatusNullArgument = 4,
} ApxStatus;

typedef struct ApxScenario ApxScenario;

typedef struct ApxSelection ApxSelection;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent error on this thread; borrowed, valid
 * until the next failing call on the same thread.
 */
const char *apx_last_error_message(void);

/**
 * Builds one of the built-in scenarios by name; null on unknown names.
 */
struct ApxScenario *apx_scenario_builtin(const char *name);

/**
 * Parses flat key=value configuration text; null on schema errors.
 */
struct ApxScenario *apx_scenario_from_config(const char *text);

/**
 * Selects the construction variant: 0 = glued, 1 = skeleton filtration.
 */
enum ApxStatus apx_scenario_set_variant(struct ApxScenario *scenario, int32_t variant);

enum ApxStatus apx_scenario_set_samples(struct ApxScenario *scenario, uintptr_t samples);

enum ApxStatus apx_scenario_set_seed(struct ApxScenario *scenario, uint64_t seed);

void apx_scenario_free(struct ApxScenario *scenario);

/**
 * Runs the full pipeline; null on any stage failure (see
 * `apx_last_error_message`).  The scenario handle stays owned by the
 * caller.
 */
struct ApxSelection *apx_run(const struct ApxScenario *scenario);

/**
 * Domain dimension of a built selection.
 */
uintptr_t apx_selection_domain_dim(const struct ApxSelection *selection);

/**
 * Dimension of the value space the selection maps into.
 */
uintptr_t apx_selection_value_dim(const struct ApxSelection *selection);

/**
 * Evaluates f at the point `x` (length `x_len`), writing the image into
 * `out` (length `out_len`).
 */
enum ApxStatus apx_selection_eval(const struct ApxSelection *selection,
                                  const double *x,
                                  uintptr_t x_len,
                                  double *out,
                                  uintptr_t out_len);

/**
 * Smallest certificate margin `ε(x) − dist(f(x), φ(x))` over the
 * verification samples; positive for every returned selection.
 */
double apx_selection_min_margin(const struct ApxSelection *selection);

/**
 * The deterministic JSON run report; free with `apx_string_free`.
 */
char *apx_selection_report_json(const struct ApxSelection *selection);

void apx_string_free(char *text);

void apx_selection_free(struct ApxSelection *selection);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* APXSEL_H */
