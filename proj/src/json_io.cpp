#include "nwo/json_io.hpp"

#include <fstream>
#include <sstream>

namespace nwo {

Json rational_to_json(const Rational& r) { return r.str(); }

Rational rational_from_json(const Json& j, const std::string& context) {
    if (!j.is_string())
        throw input_error("ERR_RATIONAL_FORMAT", context + ": rational must be a \"p/q\" string");
    auto parsed = Rational::parse(j.get<std::string>());
    if (!parsed)
        throw input_error("ERR_RATIONAL_FORMAT",
                          context + ": \"" + j.get<std::string>() + "\" is not a canonical rational");
    return *parsed;
}

Json model_to_json(const PiecewiseModel& model) {
    Json j;
    j["M"] = rational_to_json(model.half_width());
    Json pieces = Json::array();
    for (const auto& p : model.pieces()) {
        pieces.push_back({{"lo", rational_to_json(p.lo)},
                          {"hi", rational_to_json(p.hi)},
                          {"a", rational_to_json(p.slope)},
                          {"b", rational_to_json(p.intercept)}});
    }
    j["pieces"] = std::move(pieces);
    Json gaps = Json::array();
    for (const auto& g : model.gaps()) {
        gaps.push_back({{"lo", rational_to_json(g.lo)},
                        {"hi", rational_to_json(g.hi)},
                        {"left", {{"a", rational_to_json(g.left.slope)},
                                  {"b", rational_to_json(g.left.intercept)}}},
                        {"right", {{"a", rational_to_json(g.right.slope)},
                                   {"b", rational_to_json(g.right.intercept)}}}});
    }
    j["gaps"] = std::move(gaps);
    return j;
}

PiecewiseModel model_from_json(const Json& j) {
    if (!j.is_object() || !j.contains("M") || !j.contains("pieces"))
        throw input_error("ERR_MODEL_SCHEMA", "model file needs M and pieces");
    const Rational M = rational_from_json(j.at("M"), "M");
    std::vector<AffinePiece> pieces;
    for (const auto& p : j.at("pieces")) {
        pieces.push_back({rational_from_json(p.at("lo"), "piece.lo"),
                          rational_from_json(p.at("hi"), "piece.hi"),
                          rational_from_json(p.at("a"), "piece.a"),
                          rational_from_json(p.at("b"), "piece.b")});
    }
    std::vector<GapBlend> gaps;
    if (j.contains("gaps")) {
        for (const auto& g : j.at("gaps")) {
            LinearFunc left{rational_from_json(g.at("left").at("a"), "gap.left.a"),
                            rational_from_json(g.at("left").at("b"), "gap.left.b")};
            LinearFunc right{rational_from_json(g.at("right").at("a"), "gap.right.a"),
                             rational_from_json(g.at("right").at("b"), "gap.right.b")};
            gaps.push_back(GapBlend::make(rational_from_json(g.at("lo"), "gap.lo"),
                                          rational_from_json(g.at("hi"), "gap.hi"), left, right));
        }
    }
    return PiecewiseModel::assemble(M, std::move(pieces), std::move(gaps));
}

Json family_to_json(const NiceFamily& family) {
    Json members = Json::array();
    for (std::size_t k = 0; k < family.members.size(); ++k) {
        Json entry;
        entry["piece"] = family.members[k];
        const PieceFate& fate = family.fates[k];
        if (fate.kind == FateKind::Escapes) {
            entry["fate"] = {{"kind", "escapes"}, {"image", rational_to_json(fate.image)}};
        } else {
            entry["fate"] = {{"kind", "lands_in"},
                             {"target", fate.target},
                             {"landing", rational_to_json(fate.image)}};
        }
        members.push_back(std::move(entry));
    }
    return Json{{"members", std::move(members)}};
}

NiceFamily family_from_json(const PiecewiseModel& model, const Json& j) {
    if (!j.is_object() || !j.contains("members"))
        throw input_error("ERR_FAMILY_SCHEMA", "family file needs members");
    std::vector<std::size_t> ids;
    for (const auto& entry : j.at("members")) ids.push_back(entry.at("piece").get<std::size_t>());
    NiceFamily fam = certify_nice(model, ids);
    // Cross-check the stored fates against the recertification.
    std::size_t k = 0;
    for (const auto& entry : j.at("members")) {
        const std::size_t piece = entry.at("piece").get<std::size_t>();
        auto pos = std::find(fam.members.begin(), fam.members.end(), piece);
        const PieceFate& fate = fam.fates[static_cast<std::size_t>(pos - fam.members.begin())];
        const Json& stored = entry.at("fate");
        const std::string kind = stored.at("kind").get<std::string>();
        if (fate.kind == FateKind::Escapes) {
            if (kind != "escapes" ||
                rational_from_json(stored.at("image"), "fate.image") != fate.image)
                throw validation_error("ERR_FAMILY_FATE", "stored fate disagrees with recertification");
        } else {
            if (kind != "lands_in" || stored.at("target").get<std::size_t>() != fate.target ||
                rational_from_json(stored.at("landing"), "fate.landing") != fate.image)
                throw validation_error("ERR_FAMILY_FATE", "stored fate disagrees with recertification");
        }
        ++k;
    }
    return fam;
}

Json outcome_to_json(const Rational& x, const TrajectoryOutcome& outcome) {
    Json j;
    j["x"] = rational_to_json(x);
    switch (outcome.kind) {
        case TrajectoryOutcome::Kind::Diverges:
            j["outcome"] = "diverge";
            j["steps"] = outcome.steps;
            j["exit_value"] = rational_to_json(outcome.exit_value);
            break;
        case TrajectoryOutcome::Kind::ConvergesToRoot:
            j["outcome"] = "converge";
            j["root"] = rational_to_json(outcome.root);
            j["steps_to_land"] = outcome.steps_to_land;
            break;
        case TrajectoryOutcome::Kind::EventuallyPeriodic: {
            j["outcome"] = "periodic";
            j["preperiod"] = outcome.preperiod;
            j["period"] = outcome.period;
            Json cyc = Json::array();
            for (const auto& p : outcome.cycle) cyc.push_back(rational_to_json(p));
            j["cycle"] = std::move(cyc);
            break;
        }
        case TrajectoryOutcome::Kind::Undefined:
            j["outcome"] = "undefined";
            j["reason"] = outcome.reason == UndefinedReason::ZeroDerivative ? "zero_derivative"
                          : outcome.reason == UndefinedReason::InGap        ? "in_gap"
                                                                            : "budget_exceeded";
            break;
    }
    return j;
}

Json input_function_to_json(const InputFunction& f) {
    Json j;
    j["M"] = rational_to_json(f.half_width());
    Json breaks = Json::array();
    for (const auto& z : f.breakpoints()) breaks.push_back(rational_to_json(z));
    j["breakpoints"] = std::move(breaks);
    Json pieces = Json::array();
    for (const auto& p : f.polys()) {
        Json coeffs = Json::array();
        for (const auto& c : p.coeffs) coeffs.push_back(rational_to_json(c));
        pieces.push_back({{"coeffs", std::move(coeffs)}});
    }
    j["pieces"] = std::move(pieces);
    return j;
}

InputFunction input_function_from_json(const Json& j) {
    if (!j.is_object() || !j.contains("M") || !j.contains("breakpoints") || !j.contains("pieces"))
        throw input_error("ERR_INPUT_SCHEMA", "input function needs M, breakpoints, pieces");
    const Rational M = rational_from_json(j.at("M"), "M");
    std::vector<Rational> breaks;
    for (const auto& z : j.at("breakpoints")) breaks.push_back(rational_from_json(z, "breakpoint"));
    std::vector<Polynomial> polys;
    for (const auto& p : j.at("pieces")) {
        Polynomial poly;
        for (const auto& c : p.at("coeffs")) poly.coeffs.push_back(rational_from_json(c, "coeff"));
        polys.push_back(std::move(poly));
    }
    return InputFunction::make(M, std::move(breaks), std::move(polys));
}

Json cycle_to_json(const CyclicFamilyRef& cycle) {
    Json j;
    j["members"] = cycle.member_pieces;
    Json pts = Json::array();
    for (const auto& p : cycle.points) pts.push_back(rational_to_json(p));
    j["points"] = std::move(pts);
    return j;
}

CyclicFamilyRef cycle_from_json(const Json& j) {
    CyclicFamilyRef cycle;
    for (const auto& m : j.at("members")) cycle.member_pieces.push_back(m.get<std::size_t>());
    for (const auto& p : j.at("points")) cycle.points.push_back(rational_from_json(p, "cycle.point"));
    return cycle;
}

Json tower_to_json(const RefinementTower& tower) {
    Json j;
    j["M"] = rational_to_json(tower.half_width);
    j["alpha"] = tower.alpha;
    Json levels = Json::array();
    for (const auto& level : tower.levels) {
        Json lj;
        lj["model"] = model_to_json(level.model);
        lj["family"] = family_to_json(level.family);
        lj["cycle"] = cycle_to_json(level.cycle);
        lj["period"] = level.period;
        lj["multiplier"] = level.multiplier;
        lj["max_diameter"] = rational_to_json(level.max_diameter);
        levels.push_back(std::move(lj));
    }
    j["levels"] = std::move(levels);
    return j;
}

RefinementTower tower_from_json(const Json& j) {
    RefinementTower tower;
    tower.half_width = rational_from_json(j.at("M"), "M");
    for (const auto& a : j.at("alpha")) tower.alpha.push_back(a.get<std::uint64_t>());
    for (const auto& lj : j.at("levels")) {
        TowerLevel level;
        level.model = model_from_json(lj.at("model"));
        level.family = family_from_json(level.model, lj.at("family"));
        level.cycle = cycle_from_json(lj.at("cycle"));
        level.period = lj.at("period").get<std::uint64_t>();
        level.multiplier = lj.at("multiplier").get<std::uint32_t>();
        level.max_diameter = rational_from_json(lj.at("max_diameter"), "max_diameter");
        tower.levels.push_back(std::move(level));
    }
    return tower;
}

AlphaSequence alpha_from_json(const Json& j) {
    const Json& arr = j.is_object() && j.contains("alpha") ? j.at("alpha") : j;
    if (!arr.is_array()) throw input_error("ERR_ALPHA", "alpha must be an array of integers >= 2");
    std::vector<std::uint32_t> entries;
    for (const auto& e : arr) {
        if (!e.is_number_unsigned() || e.get<std::uint64_t>() < 2 ||
            e.get<std::uint64_t>() > UINT32_MAX)
            throw input_error("ERR_ALPHA", "alpha entries must be integers >= 2");
        entries.push_back(e.get<std::uint32_t>());
    }
    return AlphaSequence::make(std::move(entries));
}

Json profile_to_json(const PrimeProfile& profile) {
    Json vals = Json::object();
    for (const auto& [p, v] : profile.valuations) vals[std::to_string(p)] = v;
    Json j;
    j["valuations"] = std::move(vals);
    j["capped_primes"] = profile.capped;
    return j;
}

Json construction_log_to_json_lines(const ConstructionLog& log) {
    Json arr = Json::array();
    for (const auto& e : log.entries) arr.push_back({{"event", e.event}, {"detail", e.detail}});
    return arr;
}

std::string json_lines(const Json& array_of_entries) {
    std::ostringstream out;
    for (const auto& e : array_of_entries) out << e.dump() << "\n";
    return out.str();
}

Json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw input_error("ERR_FILE", "cannot open " + path);
    Json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw input_error("ERR_JSON_PARSE", path + ": " + e.what());
    }
    return j;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw input_error("ERR_FILE", "cannot write " + path);
    out << content;
}

} // namespace nwo
