// Copyright 2026 The acsum Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// C interface to the acsum summarization library. Every function returns an
// acsum_status; on failure acsum_last_error() describes the problem. Strings
// returned through char** out-parameters are owned by the caller and must be
// released with acsum_string_free().

#ifndef ACSUM_ACSUM_H_
#define ACSUM_ACSUM_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define ACSUM_API __declspec(dllexport)
#else
#define ACSUM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum acsum_status {
  ACSUM_OK = 0,
  ACSUM_ERR_INVALID_ARGUMENT = 1,
  ACSUM_ERR_IO = 2,
  ACSUM_ERR_FORMAT = 3,
  ACSUM_ERR_NUMERICAL = 4,
  ACSUM_ERR_INTERNAL = 5
} acsum_status;

typedef enum acsum_rouge_mode { ACSUM_ROUGE_F1 = 0, ACSUM_ROUGE_RECALL = 1 } acsum_rouge_mode;

typedef struct acsum_trainer acsum_trainer;
typedef struct acsum_model acsum_model;

// Message for the most recent failure on the calling thread; empty after a
// successful call.
ACSUM_API const char* acsum_last_error(void);
ACSUM_API const char* acsum_status_name(acsum_status status);
ACSUM_API const char* acsum_version(void);
ACSUM_API void acsum_string_free(char* s);

// Training. data_dir holds train.src/train.tgt and optionally
// valid.src/valid.tgt, one example per line.
ACSUM_API acsum_status acsum_trainer_create(const char* config_json, const char* data_dir,
                                            acsum_trainer** out);
// Resumes from a checkpoint directory written by acsum_trainer_save or
// acsum_trainer_run. The checkpoint's config and vocabulary are used; a
// non-NULL config_json must describe the same configuration.
ACSUM_API acsum_status acsum_trainer_resume(const char* checkpoint_dir, const char* config_json,
                                            const char* data_dir, acsum_trainer** out);
ACSUM_API void acsum_trainer_free(acsum_trainer* trainer);

// Trains to completion. Writes events.jsonl and metrics.jsonl under out_dir
// and a checkpoint per epoch under out_dir/checkpoints/, with the newest
// mirrored to out_dir/checkpoints/last.
ACSUM_API acsum_status acsum_trainer_run(acsum_trainer* trainer, const char* out_dir);
// Runs up to n iterations; *done receives the number actually run.
ACSUM_API acsum_status acsum_trainer_step(acsum_trainer* trainer, size_t n, size_t* done);
ACSUM_API acsum_status acsum_trainer_save(const acsum_trainer* trainer, const char* dir);
ACSUM_API int acsum_trainer_finished(const acsum_trainer* trainer);
// Schedule events and validation records so far, one JSON object per line.
ACSUM_API acsum_status acsum_trainer_events(const acsum_trainer* trainer, char** out_jsonl);
ACSUM_API acsum_status acsum_trainer_metrics(const acsum_trainer* trainer, char** out_jsonl);

// Generation from a saved checkpoint.
ACSUM_API acsum_status acsum_model_load(const char* checkpoint_dir, acsum_model** out);
ACSUM_API void acsum_model_free(acsum_model* model);
// Beam-decodes each line of input (newline separated) and returns one
// space-joined summary per line. beam_size 1 is greedy decoding; max_len 0
// uses the checkpoint's max_target_len.
ACSUM_API acsum_status acsum_model_generate(const acsum_model* model, const char* input,
                                            size_t beam_size, size_t max_len, char** out);

// ROUGE-1/2/L over line-aligned files. byte_limit 0 disables truncation.
ACSUM_API acsum_status acsum_evaluate_files(const char* hyp_path, const char* const* ref_paths,
                                            size_t ref_count, acsum_rouge_mode mode,
                                            size_t byte_limit, char** out_json);

// Finite-difference gradient checks of the actor NLL, the discriminator
// cross-entropy and the policy-gradient surrogate on a shrunken copy of the
// configuration (config_json may be NULL for defaults): k_h <= 5, k_w <= 4,
// k_y <= 12, uniform init in [-1, 1]. *passed is 1 iff every parameter's
// relative error is below tolerance.
ACSUM_API acsum_status acsum_gradcheck(const char* config_json, uint64_t seed, double tolerance,
                                       char** out_json, int* passed);

// Writes out_dir/train.{src,tgt} and out_dir/valid.{src,tgt} for a synthetic
// task: "copy", "reverse" or "noisy-headline". target_noise is the chance
// that a noisy-headline "#" run leaves one "#" in a training target.
ACSUM_API acsum_status acsum_synth(const char* task, size_t count, uint64_t seed,
                                   double target_noise, const char* out_dir);

// Test fixture: scales the backward rule of the named operation so gradient
// checks fail. NULL or "" restores correct gradients.
ACSUM_API acsum_status acsum_debug_corrupt_backward(const char* op_name);

#ifdef __cplusplus
}
#endif

#endif  // ACSUM_ACSUM_H_
