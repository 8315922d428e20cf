#include "nwo/harness.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <thread>

#include "nwo/tower_verify.hpp"

namespace nwo {

namespace {

Rational positive_rational(const Json& j, const std::string& ctx) {
    Rational r = rational_from_json(j, ctx);
    if (r.sign() <= 0) throw input_error("ERR_CONFIG", ctx + " must be positive");
    return r;
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw input_error("ERR_FILE", "cannot create output directory " + dir);
}

std::string join(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

} // namespace

ExperimentConfig ExperimentConfig::from_json(const Json& j) {
    ExperimentConfig c;
    if (!j.is_object()) throw input_error("ERR_CONFIG", "config must be a JSON object");
    if (j.contains("M")) c.M = positive_rational(j.at("M"), "M");
    if (j.contains("epsilon")) c.epsilon = positive_rational(j.at("epsilon"), "epsilon");
    if (j.contains("delta")) c.delta = positive_rational(j.at("delta"), "delta");
    if (j.contains("Delta")) c.Delta = positive_rational(j.at("Delta"), "Delta");
    if (j.contains("t")) c.t = rational_from_json(j.at("t"), "t");
    if (!( -c.M < c.t && c.t < c.M))
        throw input_error("ERR_CONFIG", "t must lie strictly inside (-M, M)");
    if (j.contains("K")) c.depth = j.at("K").get<std::uint32_t>();
    if (c.depth < 1) throw input_error("ERR_CONFIG", "K must be positive");
    if (j.contains("multipliers")) {
        c.multipliers.clear();
        for (const auto& m : j.at("multipliers")) c.multipliers.push_back(m.get<std::uint32_t>());
    }
    if (j.contains("grid_points")) c.grid_points = j.at("grid_points").get<std::uint32_t>();
    if (c.grid_points < 1) throw input_error("ERR_CONFIG", "grid_points must be positive");
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("budgets")) {
        const Json& b = j.at("budgets");
        if (b.contains("max_steps")) c.budgets.max_steps = b.at("max_steps").get<std::uint32_t>();
        if (b.contains("rejection_retries"))
            c.budgets.rejection_retries = b.at("rejection_retries").get<std::uint32_t>();
        if (b.contains("exhaustion_limit"))
            c.budgets.exhaustion_limit = b.at("exhaustion_limit").get<std::uint64_t>();
    }
    return c;
}

Json ExperimentConfig::to_json() const {
    return Json{{"M", rational_to_json(M)},
                {"epsilon", rational_to_json(epsilon)},
                {"delta", rational_to_json(delta)},
                {"Delta", rational_to_json(Delta)},
                {"t", rational_to_json(t)},
                {"K", depth},
                {"multipliers", multipliers},
                {"grid_points", grid_points},
                {"seed", seed},
                {"budgets",
                 {{"max_steps", budgets.max_steps},
                  {"rejection_retries", budgets.rejection_retries},
                  {"exhaustion_limit", budgets.exhaustion_limit}}}};
}

unsigned worker_count() {
    if (const char* env = std::getenv("NEWTON_ODOMETER_THREADS")) {
        const long n = std::atol(env);
        if (n >= 1) return static_cast<unsigned>(std::min(n, 64L));
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : std::min(hw, 8u);
}

namespace {

// Index-sharded parallel map; results land in preassigned slots so the
// output never depends on scheduling.
template <typename Fn>
void parallel_for(std::size_t count, Fn&& fn) {
    const unsigned workers = std::min<std::size_t>(worker_count(), count == 0 ? 1 : count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w]() {
            for (std::size_t i = w; i < count; i += workers) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

} // namespace

CommandResult cmd_approximate(const std::string& config_path, const std::string& input_path,
                              const std::string& out_dir) {
    const ExperimentConfig config = ExperimentConfig::from_json(load_json_file(config_path));
    const InputFunction f = input_function_from_json(load_json_file(input_path));
    if (f.half_width() != config.M)
        throw input_error("ERR_CONFIG", "config M and input function M disagree");

    ConstructionLog log;
    ApproxResult res = build_nice_approximation(f, config.epsilon, config.delta, config.t,
                                                config.seed, config.budgets.rejection_retries,
                                                &log);

    ensure_dir(out_dir);
    write_text_file(join(out_dir, "model.json"), model_to_json(res.model).dump(2) + "\n");
    write_text_file(join(out_dir, "family.json"), family_to_json(res.family).dump(2) + "\n");
    write_text_file(join(out_dir, "construction_log.jsonl"),
                    json_lines(construction_log_to_json_lines(log)));

    Json report;
    report["config"] = config.to_json();
    report["d1_bound"] = rational_to_json(res.d1_bound);
    report["epsilon"] = rational_to_json(config.epsilon);
    report["d1_ok"] = res.d1_bound < config.epsilon;
    report["measure"] = rational_to_json(res.measure);
    report["measure_required"] = rational_to_json(Rational(2) * config.M - config.delta);
    report["measure_ok"] = res.measure > Rational(2) * config.M - config.delta;
    report["t_interior"] = true; // validated inside build_nice_approximation
    report["nice"] = true;       // certify_nice succeeded
    report["pieces"] = res.model.pieces().size();
    report["gaps"] = res.model.gaps().size();
    write_text_file(join(out_dir, "approx_report.json"), report.dump(2) + "\n");
    return {std::move(report), true};
}

CommandResult cmd_classify_grid(const std::string& config_path, const std::string& model_path,
                                const std::string& family_path, const std::string& out_dir) {
    const ExperimentConfig config = ExperimentConfig::from_json(load_json_file(config_path));
    const PiecewiseModel model = model_from_json(load_json_file(model_path));
    const NiceFamily family = family_from_json(model, load_json_file(family_path));
    const Rational M = model.half_width();

    const std::uint32_t n = config.grid_points;
    std::vector<Rational> xs;
    xs.reserve(n);
    if (n == 1) {
        xs.push_back(config.t);
    } else {
        // Exact lattice i * 2M/(n-1) - M; no floating placement near borders.
        for (std::uint32_t i = 0; i < n; ++i)
            xs.push_back(Rational(static_cast<long>(i)) * (Rational(2) * M) /
                             Rational(static_cast<long>(n - 1)) -
                         M);
    }

    const std::uint32_t max_steps =
        config.budgets.max_steps ? config.budgets.max_steps : default_max_steps(model);

    std::vector<TrajectoryOutcome> outcomes(xs.size());
    parallel_for(xs.size(), [&](std::size_t i) {
        outcomes[i] = classify(model, family, xs[i], max_steps);
    });

    std::uint64_t diverge = 0, converge = 0, periodic = 0, in_gap = 0;
    Json points = Json::array();
    std::ostringstream csv;
    csv << "x,tag,period_or_steps\n";
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const TrajectoryOutcome& o = outcomes[i];
        std::string tag;
        std::uint64_t aux = 0;
        switch (o.kind) {
            case TrajectoryOutcome::Kind::Diverges:
                tag = "diverge";
                aux = o.steps;
                ++diverge;
                break;
            case TrajectoryOutcome::Kind::ConvergesToRoot:
                tag = "converge";
                aux = o.steps_to_land;
                ++converge;
                break;
            case TrajectoryOutcome::Kind::EventuallyPeriodic:
                tag = "periodic";
                aux = o.period;
                ++periodic;
                break;
            case TrajectoryOutcome::Kind::Undefined:
                if (o.reason != UndefinedReason::InGap)
                    throw verification_error("ERR_BUDGET",
                                             "classification exceeded the step budget");
                tag = "in_gap";
                ++in_gap;
                break;
        }
        Json rec = outcome_to_json(xs[i], o);
        rec["tag"] = tag;
        points.push_back(std::move(rec));
        csv << xs[i].str() << "," << tag << "," << aux << "\n";
    }

    const Rational total(static_cast<long>(xs.size()));
    Json report;
    report["config"] = config.to_json();
    report["measure_covered"] = rational_to_json(measure_union(model, family));
    report["fractions"] = {
        {"diverge", rational_to_json(Rational(static_cast<long>(diverge)) / total)},
        {"converge", rational_to_json(Rational(static_cast<long>(converge)) / total)},
        {"periodic", rational_to_json(Rational(static_cast<long>(periodic)) / total)},
        {"in_gap", rational_to_json(Rational(static_cast<long>(in_gap)) / total)}};
    report["counts"] = {{"diverge", diverge},
                        {"converge", converge},
                        {"periodic", periodic},
                        {"in_gap", in_gap}};
    report["max_steps"] = max_steps;
    report["points"] = std::move(points);

    ensure_dir(out_dir);
    write_text_file(join(out_dir, "grid_report.json"), report.dump(2) + "\n");
    write_text_file(join(out_dir, "grid.csv"), csv.str());
    return {std::move(report), true};
}

CommandResult cmd_tower(const std::string& config_path, const std::string& input_path,
                        const std::string& out_dir) {
    const ExperimentConfig config = ExperimentConfig::from_json(load_json_file(config_path));
    const InputFunction f = input_function_from_json(load_json_file(input_path));
    if (f.half_width() != config.M)
        throw input_error("ERR_CONFIG", "config M and input function M disagree");
    if (config.multipliers.size() != config.depth)
        throw input_error("ERR_CONFIG", "multipliers length must equal K");

    ConstructionLog log;
    TowerBudgets budgets{config.budgets.rejection_retries};
    RefinementTower tower = build_tower(f, config.depth, config.multipliers, config.epsilon, {},
                                        config.t, config.seed, budgets, &log);
    TowerVerifyReport verify = verify_tower(tower, 13);

    ensure_dir(out_dir);
    write_text_file(join(out_dir, "tower.json"), tower_to_json(tower).dump(2) + "\n");
    write_text_file(join(out_dir, "construction_log.jsonl"),
                    json_lines(construction_log_to_json_lines(log)));

    Json report;
    report["config"] = config.to_json();
    report["pass"] = verify.pass;
    Json failures = Json::array();
    for (const auto& fl : verify.failures)
        failures.push_back({{"level", fl.level}, {"check", fl.check}, {"detail", fl.detail}});
    report["failures"] = std::move(failures);
    Json valuations = Json::object();
    for (const auto& [p, v] : verify.prime_valuations) valuations[std::to_string(p)] = v;
    report["prime_valuations"] = std::move(valuations);
    report["covered_primes"] = verify.covered_primes;
    report["alpha"] = tower.alpha;
    Json periods = Json::array();
    for (const auto& level : tower.levels) periods.push_back(level.period);
    report["periods"] = std::move(periods);
    write_text_file(join(out_dir, "tower_report.json"), report.dump(2) + "\n");
    return {std::move(report), verify.pass};
}

CommandResult cmd_verify_odometer(const std::string& alpha_path,
                                  const std::optional<std::string>& beta_path,
                                  std::uint64_t primes_up_to, std::uint64_t depth_limit,
                                  const std::string& out_dir) {
    AlphaSequence alpha = alpha_from_json(load_json_file(alpha_path));
    if (depth_limit > 0 && depth_limit < alpha.depth())
        alpha.entries.resize(depth_limit);

    Json report;
    report["alpha_depth"] = alpha.depth();
    report["profile"] = profile_to_json(m_alpha_profile(alpha, primes_up_to));

    // Exhaustive orbit check over the deepest prefix that fits the budget.
    const std::uint64_t budget = 10'000'000;
    std::size_t k = 0;
    std::uint64_t m = 1;
    while (k < alpha.depth() && m <= budget / alpha.entries[k]) {
        m *= alpha.entries[k];
        ++k;
    }
    bool pass = true;
    if (k > 0) {
        OrbitCheckResult orbit = orbit_cylinder_check(alpha, k, budget);
        report["orbit_check"] = {{"prefix_depth", k},
                                 {"cylinders", m},
                                 {"pass", orbit.pass}};
        pass = orbit.pass;
    }

    if (beta_path) {
        AlphaSequence beta = alpha_from_json(load_json_file(*beta_path));
        if (depth_limit > 0 && depth_limit < beta.depth()) beta.entries.resize(depth_limit);
        report["beta_depth"] = beta.depth();
        report["beta_profile"] = profile_to_json(m_alpha_profile(beta, primes_up_to));
        const ConjugacyResult conj = conjugate_up_to_depth(alpha, beta, primes_up_to);
        Json cj;
        switch (conj.verdict) {
            case ConjugacyVerdict::EqualProfile: cj["verdict"] = "equal_profile"; break;
            case ConjugacyVerdict::Differ:
                cj["verdict"] = "differ";
                cj["witness_prime"] = conj.witness_prime;
                cj["valuations"] = {conj.valuation_alpha, conj.valuation_beta};
                break;
            case ConjugacyVerdict::Inconclusive: cj["verdict"] = "inconclusive"; break;
        }
        report["conjugacy"] = std::move(cj);
    }

    if (!out_dir.empty()) {
        ensure_dir(out_dir);
        write_text_file(join(out_dir, "odometer_report.json"), report.dump(2) + "\n");
    }
    return {std::move(report), pass};
}

namespace {

// Seeded C1 perturbation of the base model: jittered node values rejoined by
// corner bridges. Jitter amplitude keeps the true d1 distance near `scale`.
PiecewiseModel perturb_model(const PiecewiseModel& base, const Rational& scale,
                             SplitMix64& rng) {
    const Rational M = base.half_width();
    const int segments = 16;
    const Rational seg = Rational(2) * M / Rational(segments);
    // d1 <= amp * (1 + 2/seg) + corner slack; keep amp a touch below that,
    // and keep slope changes below the base slope scale so monotonicity on
    // the certified piece survives realistic scales.
    const Rational amp = scale * Rational(9, 10) / (Rational(1) + Rational(2) / seg);

    std::vector<Rational> xs, ys;
    for (int i = 0; i <= segments; ++i) {
        const Rational x = -M + seg * Rational(i);
        Rational y = base.eval(x);
        if (i > 0 && i < segments) y += jitter(rng, amp);
        xs.push_back(x);
        ys.push_back(y);
    }
    std::vector<std::pair<Rational, Rational>> gaps;
    for (int i = 1; i < segments; ++i) {
        const Rational u = seg / Rational(64);
        gaps.emplace_back(xs[static_cast<std::size_t>(i)] - u,
                          xs[static_cast<std::size_t>(i)] + u);
    }
    return smooth_gaps({xs, ys}, gaps, M);
}

} // namespace

CommandResult cmd_contraction(const std::string& config_path, const std::string& piece_path,
                              std::uint32_t trials, std::uint32_t samples,
                              const std::optional<std::string>& scale_override,
                              const std::string& out_dir) {
    const ExperimentConfig config = ExperimentConfig::from_json(load_json_file(config_path));
    const Json spec = load_json_file(piece_path);
    if (!spec.is_object() || !spec.contains("piece"))
        throw input_error("ERR_PIECE_SPEC", "piece spec needs a piece object");
    const Json& pj = spec.at("piece");
    AffinePiece piece{rational_from_json(pj.at("lo"), "piece.lo"),
                      rational_from_json(pj.at("hi"), "piece.hi"),
                      rational_from_json(pj.at("a"), "piece.a"),
                      rational_from_json(pj.at("b"), "piece.b")};

    const Rational M = config.M;
    std::vector<AffinePiece> pieces;
    if (-M < piece.lo) pieces.push_back({-M, piece.lo, piece.slope, piece.intercept});
    pieces.push_back(piece);
    if (piece.hi < M) pieces.push_back({piece.hi, M, piece.slope, piece.intercept});
    const std::size_t piece_id = (-M < piece.lo) ? 1 : 0;
    PiecewiseModel base = PiecewiseModel::assemble(M, std::move(pieces), {});

    const ContractionCertificate cert = contraction_certificate(base, piece_id, config.epsilon);

    Rational scale = cert.delta;
    bool overridden = false;
    if (scale_override) {
        auto parsed = Rational::parse(*scale_override);
        if (!parsed || parsed->sign() <= 0)
            throw input_error("ERR_CONFIG", "scale override must be a positive rational");
        scale = *parsed;
        overridden = true;
    }

    const AffinePiece& J = base.pieces()[piece_id];
    std::vector<Rational> xs;
    for (std::uint32_t s = 0; s < samples; ++s)
        xs.push_back(J.lo + (J.hi - J.lo) * Rational(static_cast<long>(s + 1)) /
                                Rational(static_cast<long>(samples + 1)));

    // Trials are generated sequentially from one stream (so trial i is the
    // same regardless of thread count), then verified in parallel.
    SplitMix64 rng(config.seed);
    std::vector<PiecewiseModel> models;
    models.reserve(trials);
    Json trial_log = Json::array();
    for (std::uint32_t i = 0; i < trials; ++i) {
        Rational amp = scale;
        PiecewiseModel g = perturb_model(base, amp, rng);
        if (!overridden) {
            // The gate is the certified bound, not the construction estimate.
            for (int shrink = 0; shrink < 24; ++shrink) {
                if (d1_upper_bound(base, g) < cert.delta) break;
                amp = amp / Rational(2);
                g = perturb_model(base, amp, rng);
            }
            if (!(d1_upper_bound(base, g) < cert.delta))
                throw construction_error("ERR_PERTURBATION",
                                         "could not certify a perturbation inside delta");
        }
        models.push_back(std::move(g));
    }

    std::vector<HalvingReport> reports(trials);
    std::vector<std::string> errors(trials);
    parallel_for(trials, [&](std::size_t i) {
        try {
            reports[i] = verify_halving(models[i], cert, xs);
        } catch (const Error& e) {
            errors[i] = e.code();
        }
    });

    std::uint64_t passes = 0, checks = 0, passed_checks = 0;
    Json counterexamples = Json::array();
    for (std::uint32_t i = 0; i < trials; ++i) {
        if (!errors[i].empty()) {
            counterexamples.push_back({{"trial", i}, {"error", errors[i]}});
            continue;
        }
        const HalvingReport& rep = reports[i];
        checks += samples;
        passed_checks += rep.pass ? samples : rep.checked - 1;
        if (rep.pass) {
            ++passes;
        } else if (rep.counterexample) {
            counterexamples.push_back(
                {{"trial", i},
                 {"x", rational_to_json(rep.counterexample->x)},
                 {"step", rational_to_json(rep.counterexample->step)},
                 {"root_lo", rational_to_json(rep.counterexample->root_lo)},
                 {"root_hi", rational_to_json(rep.counterexample->root_hi)}});
        }
    }

    Json report;
    report["config"] = config.to_json();
    report["certificate"] = {{"root", rational_to_json(cert.root)},
                             {"epsilon", rational_to_json(cert.epsilon)},
                             {"eta", rational_to_json(cert.eta)},
                             {"delta", rational_to_json(cert.delta)}};
    report["scale"] = rational_to_json(scale);
    report["scale_overridden"] = overridden;
    report["trials"] = trials;
    report["passes"] = passes;
    report["checks"] = checks;
    report["passed_checks"] = passed_checks;
    report["counterexamples"] = std::move(counterexamples);
    const bool pass = passes == trials;
    report["pass"] = pass;

    if (!out_dir.empty()) {
        ensure_dir(out_dir);
        write_text_file(join(out_dir, "contraction_report.json"), report.dump(2) + "\n");
    }
    return {std::move(report), pass};
}

} // namespace nwo
