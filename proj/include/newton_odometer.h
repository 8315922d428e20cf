/* C API for the newton-odometer library.
 *
 * All functions return a no_status code; 0 is success. Objects are opaque
 * handles freed with their matching *_free function. Strings returned through
 * char** out-parameters are heap-allocated and must be released with
 * no_string_free. Rationals cross the boundary as canonical "p/q" strings.
 *
 * The library keeps a thread-local message for the last failure, readable via
 * no_last_error().
 */
#ifndef NEWTON_ODOMETER_H
#define NEWTON_ODOMETER_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define NO_API __declspec(dllexport)
#else
#define NO_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum no_status {
    NO_OK = 0,
    NO_ERR_INPUT = 2,        /* unreadable/ill-formed input */
    NO_ERR_VALIDATION = 3,   /* invariant violation in otherwise readable data */
    NO_ERR_CONSTRUCTION = 4, /* a constructive procedure could not complete */
    NO_ERR_VERIFICATION = 5, /* a verification pass reported failures */
    NO_ERR_NULL_ARGUMENT = 6,
    NO_ERR_INTERNAL = 7
} no_status;

typedef struct no_model no_model;
typedef struct no_family no_family;

NO_API const char* no_version(void);
NO_API const char* no_status_name(int status);
NO_API const char* no_last_error(void);
NO_API void no_string_free(char* s);

/* --- models ------------------------------------------------------------ */

NO_API int no_model_parse(const char* json, no_model** out);
NO_API void no_model_free(no_model* model);
NO_API int no_model_to_json(const no_model* model, char** out_json);
NO_API int no_model_eval(const no_model* model, const char* x, char** out_value);
NO_API int no_model_eval_derivative(const no_model* model, const char* x, char** out_value);
/* {"kind":"next"|"diverged"|"undefined", ...} */
NO_API int no_model_newton_step(const no_model* model, const char* x, char** out_json);
NO_API int no_model_d1_upper_bound(const no_model* a, const no_model* b, char** out_bound);

/* --- nice families ------------------------------------------------------ */

/* member_ids_json: JSON array of piece indices, or NULL for all pieces. The
 * family handle retains the model it was certified against. */
NO_API int no_certify_nice(const no_model* model, const char* member_ids_json, no_family** out);
NO_API int no_family_parse(const no_model* model, const char* json, no_family** out);
NO_API void no_family_free(no_family* family);
NO_API int no_family_to_json(const no_family* family, char** out_json);
NO_API int no_family_measure(const no_family* family, char** out_measure);
/* max_steps = 0 derives the budget from the model. */
NO_API int no_classify(const no_family* family, const char* x, uint32_t max_steps,
                       char** out_outcome_json);

/* --- adding machines ----------------------------------------------------- */

/* alpha_json: array of integers >= 2, e.g. "[2,3,2]". digits_json likewise. */
NO_API int no_odometer_add_one(const char* alpha_json, const char* digits_json, char** out_json);
NO_API int no_odometer_add(const char* alpha_json, const char* x_json, const char* y_json,
                           char** out_json);
NO_API int no_odometer_encode(const char* alpha_json, const char* digits_json, uint32_t prefix,
                              uint64_t* out_code);
NO_API int no_odometer_profile(const char* alpha_json, uint64_t primes_up_to, char** out_json);
NO_API int no_odometer_conjugate(const char* alpha_json, const char* beta_json,
                                 uint64_t primes_up_to, char** out_json);
NO_API int no_odometer_orbit_check(const char* alpha_json, uint32_t prefix, uint64_t budget,
                                   char** out_json);

/* --- commands ------------------------------------------------------------ */
/* Path-based command layer; reads input files, writes artifacts into out_dir
 * and returns the report JSON. A report whose verification failed yields
 * NO_ERR_VERIFICATION with the report still written to *out_report. */

NO_API int no_cmd_approximate(const char* config_path, const char* input_path,
                              const char* out_dir, char** out_report);
NO_API int no_cmd_classify_grid(const char* config_path, const char* model_path,
                                const char* family_path, const char* out_dir, char** out_report);
NO_API int no_cmd_tower(const char* config_path, const char* input_path, const char* out_dir,
                        char** out_report);
/* beta_path may be NULL; depth_limit 0 keeps each file's declared depth. */
NO_API int no_cmd_verify_odometer(const char* alpha_path, const char* beta_path,
                                  uint64_t primes_up_to, uint64_t depth_limit,
                                  const char* out_dir, char** out_report);
/* scale_override may be NULL (use the certified delta). */
NO_API int no_cmd_contraction(const char* config_path, const char* piece_path, uint32_t trials,
                              uint32_t samples, const char* scale_override, const char* out_dir,
                              char** out_report);

#ifdef __cplusplus
}
#endif

#endif /* NEWTON_ODOMETER_H */
