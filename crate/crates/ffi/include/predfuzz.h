#ifndef PREDFUZZ_H
#define PREDFUZZ_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PfStatus {
  PF_STATUS_OK = 0,
  PF_STATUS_NULL_POINTER = 1,
  PF_STATUS_INVALID_UTF8 = 2,
  PF_STATUS_PARSE_ERROR = 3,
  PF_STATUS_DEPLOY_ERROR = 4,
  PF_STATUS_INVALID_ARGUMENT = 5,
  PF_STATUS_NOT_REPRODUCED = 6,
  PF_STATUS_VERSION_MISMATCH = 7,
  PF_STATUS_INVALID_WITNESS = 8,
  PF_STATUS_PANIC = 9,
} PfStatus;

/**
 * The outcome of one campaign.
 */
typedef struct PfCampaignResult PfCampaignResult;

/**
 * A parsed contract together with its source text.
 */
typedef struct PfContract PfContract;

/**
 * Campaign settings. `configuration` is 0..=3 for A..D.
 */
typedef struct PfConfig {
  uint32_t configuration;
  uint64_t seed;
  uint64_t max_execs;
  uint32_t max_seq_len;
  double aggressive_prob;
  uint64_t attack_slot;
  bool literal_harvest;
  uint32_t secant_iters;
  bool logical_clock;
} PfConfig;

/**
 * One reported bug. `swc` is 110 or 124.
 */
typedef struct PfBug {
  uint32_t swc;
  uint32_t line;
  uint32_t col;
  uint32_t witness_len;
  uint64_t exec_index;
} PfBug;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. The pointer
 * stays valid until the next call into this library on the same thread.
 */
const char *pf_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *pf_version(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void pf_string_free(char *s);

/**
 * Parses contract source text into a new handle.
 *
 * # Safety
 * `source` must be a NUL-terminated string; `out` must be writable.
 */
enum PfStatus pf_contract_parse(const char *source, struct PfContract **out);

/**
 * # Safety
 * `c` must be null or a handle from [`pf_contract_parse`] not yet freed.
 */
void pf_contract_free(struct PfContract *c);

/**
 * Number of functions in the contract, or 0 for a null handle.
 *
 * # Safety
 * `c` must be null or a live handle.
 */
size_t pf_contract_function_count(const struct PfContract *c);

/**
 * Fills `out` with the default settings.
 *
 * # Safety
 * `out` must be writable.
 */
enum PfStatus pf_config_default(struct PfConfig *out);

/**
 * Runs a campaign to completion.
 *
 * # Safety
 * `contract` must be a live handle, `config` readable and `out` writable.
 */
enum PfStatus pf_campaign_run(const struct PfContract *contract,
                              const struct PfConfig *config,
                              struct PfCampaignResult **out);

/**
 * # Safety
 * `r` must be null or a handle from [`pf_campaign_run`] not yet freed.
 */
void pf_result_free(struct PfCampaignResult *r);

/**
 * # Safety
 * `r` must be null or a live handle.
 */
uint64_t pf_result_executions(const struct PfCampaignResult *r);

/**
 * Number of distinct path ids in the corpus.
 *
 * # Safety
 * `r` must be null or a live handle.
 */
size_t pf_result_paths(const struct PfCampaignResult *r);

/**
 * # Safety
 * `r` must be null or a live handle.
 */
size_t pf_result_bug_count(const struct PfCampaignResult *r);

/**
 * First-step prediction successes and attempts.
 *
 * # Safety
 * `r` must be a live handle; both out pointers must be writable.
 */
enum PfStatus pf_result_one_shot(const struct PfCampaignResult *r,
                                 uint64_t *successes,
                                 uint64_t *attempts);

/**
 * # Safety
 * `r` must be a live handle and `out` writable.
 */
enum PfStatus pf_result_bug(const struct PfCampaignResult *r, size_t index, struct PfBug *out);

/**
 * The statistics stream as JSON lines.
 *
 * # Safety
 * `r` must be a live handle and `out` writable.
 */
enum PfStatus pf_result_stats_jsonl(const struct PfCampaignResult *r, char **out);

/**
 * A self-contained witness file for bug `index`, as JSON.
 *
 * # Safety
 * `r` must be a live handle and `out` writable.
 */
enum PfStatus pf_result_witness_json(const struct PfCampaignResult *r, size_t index, char **out);

/**
 * Replays a witness. Returns `Ok` when the bug reproduces and
 * `NotReproduced` when the sequence runs but raises no matching finding.
 *
 * # Safety
 * `witness_json` must be a NUL-terminated string.
 */
enum PfStatus pf_replay_witness(const char *witness_json);

/**
 * Branch-flip costs of `l OP r`. `op` is 0..=5 for `==`, `!=`, `<`, `<=`,
 * `>`, `>=`.
 *
 * # Safety
 * Both out pointers must be writable.
 */
enum PfStatus pf_branch_costs(uint32_t op,
                              bool is_unsigned,
                              int64_t l,
                              int64_t r,
                              uint64_t *to_false,
                              uint64_t *to_true);

/**
 * Ring distance between a store target and the attack slot.
 */
uint64_t pf_store_cost(uint64_t target, uint64_t attack);

/**
 * Secant root through two (input, cost) points. Returns false when no
 * prediction exists (flat line, or the root is one of the inputs).
 *
 * # Safety
 * `out` must be writable.
 */
bool pf_secant_root(int64_t i0, uint64_t c0, int64_t i1, uint64_t c1, int64_t *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PREDFUZZ_H */
