/* C interface to the expansion/verification library. All functions return
 * spx_status; on failure spx_last_error() describes the problem (thread
 * local). Strings returned through char** are heap-allocated and must be
 * released with spx_string_free. */
#ifndef SPX_H
#define SPX_H

#ifdef __cplusplus
extern "C" {
#endif

typedef enum {
    SPX_OK = 0,
    SPX_ERR_PARSE = 1,    /* malformed expression or JSON */
    SPX_ERR_INVALID = 2,  /* validation failure (positivity, ordering, flags) */
    SPX_ERR_NUMERIC = 3,  /* solver breakdown */
    SPX_ERR_IO = 4        /* missing or unreadable file */
} spx_status;

const char* spx_last_error(void);
void spx_string_free(char* s);

/* ------------------------------------------------------------------ */
/* Problems                                                           */

typedef struct spx_problem spx_problem;

spx_status spx_problem_load(const char* path, spx_problem** out);
spx_status spx_problem_from_json(const char* json_text, spx_problem** out);
/* Clone with new parameters (revalidated). */
spx_status spx_problem_with_params(const spx_problem* p, double epsilon, double mu,
                                   spx_problem** out);
void spx_problem_free(spx_problem* p);

double spx_problem_epsilon(const spx_problem* p);
double spx_problem_mu(const spx_problem* p);
double spx_problem_alpha(const spx_problem* p);
/* Content hash of the defining JSON, stable across runs. */
spx_status spx_problem_hash(const spx_problem* p, char** out);

/* ------------------------------------------------------------------ */
/* Regimes and expansions                                             */

/* Writes 1..4 for cases I..IV. */
spx_status spx_classify(double epsilon, double mu, double threshold, int* out_case);

typedef struct spx_expansion spx_expansion;

/* case_id 2, 3 or 4; m2 is ignored except for case 4. */
spx_status spx_expand(const spx_problem* p, int case_id, int m1, int m2,
                      spx_expansion** out);
void spx_expansion_free(spx_expansion* e);

/* Term dump including orders, case label, and the structural-check summary. */
spx_status spx_expansion_terms_json(const spx_expansion* e, char** out);
/* JSON list of structural checks; *all_pass set to 0/1. */
spx_status spx_expansion_checks_json(const spx_expansion* e, char** out, int* all_pass);

/* ------------------------------------------------------------------ */
/* Reference solver and verification                                  */

/* Reference solve on a layer-adapted mesh, rendered as "x,u,v" CSV.
 * n_per_region <= 0 selects the default. */
spx_status spx_reference_csv(const spx_problem* p, int n_per_region, char** out_csv,
                             double* out_error_estimate);

typedef struct {
    double rem_energy;    /* energy norm of (reference - expansion) */
    double resid_sup;     /* sup of the PDE residual of the expansion */
    double bc_mismatch;   /* max boundary value of the expansion */
    double ref_err;       /* reference solver's own error estimate */
    double ref_energy;    /* energy norm of the reference solution */
    double apriori_bound; /* stability ceiling alpha^-1 sqrt(|f|^2+|g|^2) */
    int checks_pass;      /* structural checks of the build */
} spx_verify_result;

/* Build (case_id as above; 0 = auto-classify), verify against the reference
 * at n_per_region (<= 0 default), fill *out. */
spx_status spx_verify(const spx_problem* p, int case_id, int m1, int m2,
                      int n_per_region, spx_verify_result* out);

/* ------------------------------------------------------------------ */
/* Reports                                                            */

/* model: 0 = y = C exp(-b x), 1 = y = C x^p. Needs n >= 3, ys > 0. */
spx_status spx_decay_fit(const double* xs, const double* ys, int n, int model,
                         double* out_rate, double* out_prefactor, double* out_r2);

/* Renders a sweep study. Arrays are parallel, length n; fit_b/fit_r2 may be
 * NaN when no fit was performed. Either output pointer may be NULL. */
spx_status spx_report_render(const spx_verify_result* results, const double* epsilons,
                             const double* mus, const int* m1s, const int* m2s, int n,
                             double fit_b, double fit_r2, const char* problem_hash,
                             double tol, char** out_csv, char** out_json);

#ifdef __cplusplus
}
#endif

#endif /* SPX_H */
