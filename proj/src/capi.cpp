#include "newton_odometer.h"

#include <cstring>
#include <memory>
#include <string>

#include "nwo/harness.hpp"
#include "nwo/json_io.hpp"

namespace {

constexpr std::uint32_t kModelMagic = 0x4e4f4d31;  // "NOM1"
constexpr std::uint32_t kFamilyMagic = 0x4e4f4631; // "NOF1"

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out) std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

int set_error(int status, const std::string& message) {
    g_last_error = message;
    return status;
}

template <typename Fn>
int run(const char* what, Fn&& fn) {
    try {
        return fn();
    } catch (const nwo::Error& e) {
        return set_error(static_cast<int>(e.error_class()),
                         std::string(what) + ": [" + e.code() + "] " + e.what());
    } catch (const std::exception& e) {
        return set_error(NO_ERR_INTERNAL, std::string(what) + ": " + e.what());
    } catch (...) {
        return set_error(NO_ERR_INTERNAL, std::string(what) + ": unknown exception");
    }
}

int require(const void* p) { return p ? NO_OK : NO_ERR_NULL_ARGUMENT; }

nwo::Rational parse_rational_arg(const char* s, const char* what) {
    auto r = nwo::Rational::parse(s);
    if (!r)
        throw nwo::input_error("ERR_RATIONAL_FORMAT",
                               std::string(what) + ": not a canonical rational");
    return *r;
}

std::vector<std::uint32_t> parse_digits(const nwo::Json& j, const char* what) {
    if (!j.is_array()) throw nwo::input_error("ERR_ODOMETER_DIGIT", std::string(what) + ": array expected");
    std::vector<std::uint32_t> out;
    for (const auto& d : j) {
        if (!d.is_number_unsigned())
            throw nwo::input_error("ERR_ODOMETER_DIGIT", std::string(what) + ": digits must be nonnegative");
        out.push_back(d.get<std::uint32_t>());
    }
    return out;
}

} // namespace

struct no_model {
    std::uint32_t magic = kModelMagic;
    std::shared_ptr<const nwo::PiecewiseModel> model;
};

struct no_family {
    std::uint32_t magic = kFamilyMagic;
    std::shared_ptr<const nwo::PiecewiseModel> model;
    nwo::NiceFamily family;
};

namespace {

const nwo::PiecewiseModel& deref(const no_model* m) {
    if (!m || m->magic != kModelMagic)
        throw nwo::input_error("ERR_HANDLE", "invalid model handle");
    return *m->model;
}

const no_family& deref(const no_family* f) {
    if (!f || f->magic != kFamilyMagic)
        throw nwo::input_error("ERR_HANDLE", "invalid family handle");
    return *f;
}

int emit(char** out, const std::string& s) {
    *out = dup_string(s);
    return *out ? NO_OK : NO_ERR_INTERNAL;
}

template <typename Fn>
int run_command(const char* what, char** out_report, Fn&& fn) {
    return run(what, [&]() -> int {
        nwo::CommandResult result = fn();
        const int status = emit(out_report, result.report.dump(2));
        if (status != NO_OK) return status;
        if (!result.pass) {
            g_last_error = std::string(what) + ": verification reported failures";
            return NO_ERR_VERIFICATION;
        }
        return NO_OK;
    });
}

} // namespace

extern "C" {

const char* no_version(void) { return "0.1.0"; }

const char* no_status_name(int status) {
    switch (status) {
        case NO_OK: return "ok";
        case NO_ERR_INPUT: return "input_error";
        case NO_ERR_VALIDATION: return "validation_error";
        case NO_ERR_CONSTRUCTION: return "construction_error";
        case NO_ERR_VERIFICATION: return "verification_failure";
        case NO_ERR_NULL_ARGUMENT: return "null_argument";
        default: return "internal_error";
    }
}

const char* no_last_error(void) { return g_last_error.c_str(); }

void no_string_free(char* s) { std::free(s); }

int no_model_parse(const char* json, no_model** out) {
    if (require(json) || require(out)) return NO_ERR_NULL_ARGUMENT;
    return run("no_model_parse", [&] {
        nwo::Json j = nwo::Json::parse(json, nullptr, false);
        if (j.is_discarded()) throw nwo::input_error("ERR_JSON_PARSE", "malformed JSON");
        auto handle = std::make_unique<no_model>();
        handle->model = std::make_shared<const nwo::PiecewiseModel>(nwo::model_from_json(j));
        *out = handle.release();
        return NO_OK;
    });
}

void no_model_free(no_model* model) {
    if (model && model->magic == kModelMagic) {
        model->magic = 0;
        delete model;
    }
}

int no_model_to_json(const no_model* model, char** out_json) {
    if (require(out_json)) return NO_ERR_NULL_ARGUMENT;
    return run("no_model_to_json",
               [&] { return emit(out_json, nwo::model_to_json(deref(model)).dump()); });
}

int no_model_eval(const no_model* model, const char* x, char** out_value) {
    if (require(x) || require(out_value)) return NO_ERR_NULL_ARGUMENT;
    return run("no_model_eval", [&] {
        return emit(out_value, deref(model).eval(parse_rational_arg(x, "x")).str());
    });
}

int no_model_eval_derivative(const no_model* model, const char* x, char** out_value) {
    if (require(x) || require(out_value)) return NO_ERR_NULL_ARGUMENT;
    return run("no_model_eval_derivative", [&] {
        return emit(out_value, deref(model).eval_derivative(parse_rational_arg(x, "x")).str());
    });
}

int no_model_newton_step(const no_model* model, const char* x, char** out_json) {
    if (require(x) || require(out_json)) return NO_ERR_NULL_ARGUMENT;
    return run("no_model_newton_step", [&] {
        const nwo::StepResult r = nwo::newton_step(deref(model), parse_rational_arg(x, "x"));
        nwo::Json j;
        switch (r.kind) {
            case nwo::StepResult::Kind::Next:
                j = {{"kind", "next"}, {"value", r.value.str()}};
                break;
            case nwo::StepResult::Kind::Diverged:
                j = {{"kind", "diverged"}, {"value", r.value.str()}};
                break;
            case nwo::StepResult::Kind::Undefined:
                j = {{"kind", "undefined"},
                     {"reason", r.reason == nwo::UndefinedReason::ZeroDerivative
                                    ? "zero_derivative"
                                    : "in_gap"}};
                break;
        }
        return emit(out_json, j.dump());
    });
}

int no_model_d1_upper_bound(const no_model* a, const no_model* b, char** out_bound) {
    if (require(out_bound)) return NO_ERR_NULL_ARGUMENT;
    return run("no_model_d1_upper_bound", [&] {
        return emit(out_bound, nwo::d1_upper_bound(deref(a), deref(b)).str());
    });
}

int no_certify_nice(const no_model* model, const char* member_ids_json, no_family** out) {
    if (require(out)) return NO_ERR_NULL_ARGUMENT;
    return run("no_certify_nice", [&] {
        std::vector<std::size_t> ids;
        if (member_ids_json) {
            nwo::Json j = nwo::Json::parse(member_ids_json, nullptr, false);
            if (j.is_discarded() || !j.is_array())
                throw nwo::input_error("ERR_JSON_PARSE", "member ids must be a JSON array");
            for (const auto& id : j) ids.push_back(id.get<std::size_t>());
        }
        deref(model);
        auto handle = std::make_unique<no_family>();
        handle->model = model->model;
        handle->family = nwo::certify_nice(*handle->model, std::move(ids));
        *out = handle.release();
        return NO_OK;
    });
}

int no_family_parse(const no_model* model, const char* json, no_family** out) {
    if (require(json) || require(out)) return NO_ERR_NULL_ARGUMENT;
    return run("no_family_parse", [&] {
        nwo::Json j = nwo::Json::parse(json, nullptr, false);
        if (j.is_discarded()) throw nwo::input_error("ERR_JSON_PARSE", "malformed JSON");
        deref(model);
        auto handle = std::make_unique<no_family>();
        handle->model = model->model;
        handle->family = nwo::family_from_json(*handle->model, j);
        *out = handle.release();
        return NO_OK;
    });
}

void no_family_free(no_family* family) {
    if (family && family->magic == kFamilyMagic) {
        family->magic = 0;
        delete family;
    }
}

int no_family_to_json(const no_family* family, char** out_json) {
    if (require(out_json)) return NO_ERR_NULL_ARGUMENT;
    return run("no_family_to_json",
               [&] { return emit(out_json, nwo::family_to_json(deref(family).family).dump()); });
}

int no_family_measure(const no_family* family, char** out_measure) {
    if (require(out_measure)) return NO_ERR_NULL_ARGUMENT;
    return run("no_family_measure", [&] {
        const no_family& f = deref(family);
        return emit(out_measure, nwo::measure_union(*f.model, f.family).str());
    });
}

int no_classify(const no_family* family, const char* x, uint32_t max_steps,
                char** out_outcome_json) {
    if (require(x) || require(out_outcome_json)) return NO_ERR_NULL_ARGUMENT;
    return run("no_classify", [&] {
        const no_family& f = deref(family);
        const nwo::Rational point = parse_rational_arg(x, "x");
        const std::uint32_t budget = max_steps ? max_steps : nwo::default_max_steps(*f.model);
        const nwo::TrajectoryOutcome outcome = nwo::classify(*f.model, f.family, point, budget);
        return emit(out_outcome_json, nwo::outcome_to_json(point, outcome).dump());
    });
}

int no_odometer_add_one(const char* alpha_json, const char* digits_json, char** out_json) {
    if (require(alpha_json) || require(digits_json) || require(out_json))
        return NO_ERR_NULL_ARGUMENT;
    return run("no_odometer_add_one", [&] {
        const nwo::AlphaSequence alpha =
            nwo::alpha_from_json(nwo::Json::parse(alpha_json));
        nwo::OdometerElement x{parse_digits(nwo::Json::parse(digits_json), "x")};
        const nwo::OdometerElement z = nwo::add_one(alpha, x);
        return emit(out_json, nwo::Json(z.digits).dump());
    });
}

int no_odometer_add(const char* alpha_json, const char* x_json, const char* y_json,
                    char** out_json) {
    if (require(alpha_json) || require(x_json) || require(y_json) || require(out_json))
        return NO_ERR_NULL_ARGUMENT;
    return run("no_odometer_add", [&] {
        const nwo::AlphaSequence alpha =
            nwo::alpha_from_json(nwo::Json::parse(alpha_json));
        nwo::OdometerElement x{parse_digits(nwo::Json::parse(x_json), "x")};
        nwo::OdometerElement y{parse_digits(nwo::Json::parse(y_json), "y")};
        const nwo::OdometerElement z = nwo::add(alpha, x, y);
        return emit(out_json, nwo::Json(z.digits).dump());
    });
}

int no_odometer_encode(const char* alpha_json, const char* digits_json, uint32_t prefix,
                       uint64_t* out_code) {
    if (require(alpha_json) || require(digits_json) || require(out_code))
        return NO_ERR_NULL_ARGUMENT;
    return run("no_odometer_encode", [&] {
        const nwo::AlphaSequence alpha =
            nwo::alpha_from_json(nwo::Json::parse(alpha_json));
        const std::vector<std::uint32_t> digits =
            parse_digits(nwo::Json::parse(digits_json), "x");
        if (prefix > alpha.depth() || digits.size() != alpha.depth())
            throw nwo::input_error("ERR_ODOMETER_DEPTH", "prefix exceeds the declared depth");
        nwo::cylinder_count(alpha.entries, prefix, UINT64_MAX / 2);
        *out_code = nwo::encode_mixed_radix(alpha.entries, digits, prefix);
        return NO_OK;
    });
}

int no_odometer_profile(const char* alpha_json, uint64_t primes_up_to, char** out_json) {
    if (require(alpha_json) || require(out_json)) return NO_ERR_NULL_ARGUMENT;
    return run("no_odometer_profile", [&] {
        const nwo::AlphaSequence alpha =
            nwo::alpha_from_json(nwo::Json::parse(alpha_json));
        return emit(out_json,
                    nwo::profile_to_json(nwo::m_alpha_profile(alpha, primes_up_to)).dump());
    });
}

int no_odometer_conjugate(const char* alpha_json, const char* beta_json, uint64_t primes_up_to,
                          char** out_json) {
    if (require(alpha_json) || require(beta_json) || require(out_json))
        return NO_ERR_NULL_ARGUMENT;
    return run("no_odometer_conjugate", [&] {
        const nwo::AlphaSequence alpha =
            nwo::alpha_from_json(nwo::Json::parse(alpha_json));
        const nwo::AlphaSequence beta = nwo::alpha_from_json(nwo::Json::parse(beta_json));
        const nwo::ConjugacyResult r = nwo::conjugate_up_to_depth(alpha, beta, primes_up_to);
        nwo::Json j;
        switch (r.verdict) {
            case nwo::ConjugacyVerdict::EqualProfile: j["verdict"] = "equal_profile"; break;
            case nwo::ConjugacyVerdict::Differ:
                j["verdict"] = "differ";
                j["witness_prime"] = r.witness_prime;
                j["valuations"] = {r.valuation_alpha, r.valuation_beta};
                break;
            case nwo::ConjugacyVerdict::Inconclusive: j["verdict"] = "inconclusive"; break;
        }
        return emit(out_json, j.dump());
    });
}

int no_odometer_orbit_check(const char* alpha_json, uint32_t prefix, uint64_t budget,
                            char** out_json) {
    if (require(alpha_json) || require(out_json)) return NO_ERR_NULL_ARGUMENT;
    return run("no_odometer_orbit_check", [&] {
        const nwo::AlphaSequence alpha =
            nwo::alpha_from_json(nwo::Json::parse(alpha_json));
        const nwo::OrbitCheckResult r = nwo::orbit_cylinder_check(alpha, prefix, budget);
        nwo::Json j{{"pass", r.pass}, {"steps", r.steps}};
        if (r.duplicate_code) j["duplicate_code"] = *r.duplicate_code;
        if (r.at_step) j["at_step"] = *r.at_step;
        return emit(out_json, j.dump());
    });
}

int no_cmd_approximate(const char* config_path, const char* input_path, const char* out_dir,
                       char** out_report) {
    if (require(config_path) || require(input_path) || require(out_dir) || require(out_report))
        return NO_ERR_NULL_ARGUMENT;
    return run_command("no_cmd_approximate", out_report,
                       [&] { return nwo::cmd_approximate(config_path, input_path, out_dir); });
}

int no_cmd_classify_grid(const char* config_path, const char* model_path, const char* family_path,
                         const char* out_dir, char** out_report) {
    if (require(config_path) || require(model_path) || require(family_path) ||
        require(out_dir) || require(out_report))
        return NO_ERR_NULL_ARGUMENT;
    return run_command("no_cmd_classify_grid", out_report, [&] {
        return nwo::cmd_classify_grid(config_path, model_path, family_path, out_dir);
    });
}

int no_cmd_tower(const char* config_path, const char* input_path, const char* out_dir,
                 char** out_report) {
    if (require(config_path) || require(input_path) || require(out_dir) || require(out_report))
        return NO_ERR_NULL_ARGUMENT;
    return run_command("no_cmd_tower", out_report,
                       [&] { return nwo::cmd_tower(config_path, input_path, out_dir); });
}

int no_cmd_verify_odometer(const char* alpha_path, const char* beta_path, uint64_t primes_up_to,
                           uint64_t depth_limit, const char* out_dir, char** out_report) {
    if (require(alpha_path) || require(out_report)) return NO_ERR_NULL_ARGUMENT;
    return run_command("no_cmd_verify_odometer", out_report, [&] {
        std::optional<std::string> beta;
        if (beta_path) beta = beta_path;
        return nwo::cmd_verify_odometer(alpha_path, beta, primes_up_to, depth_limit,
                                        out_dir ? out_dir : "");
    });
}

int no_cmd_contraction(const char* config_path, const char* piece_path, uint32_t trials,
                       uint32_t samples, const char* scale_override, const char* out_dir,
                       char** out_report) {
    if (require(config_path) || require(piece_path) || require(out_report))
        return NO_ERR_NULL_ARGUMENT;
    return run_command("no_cmd_contraction", out_report, [&] {
        std::optional<std::string> scale;
        if (scale_override) scale = scale_override;
        return nwo::cmd_contraction(config_path, piece_path, trials, samples, scale,
                                    out_dir ? out_dir : "");
    });
}

} // extern "C"
