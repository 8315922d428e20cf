#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "nwo/errors.hpp"
#include "nwo/rational.hpp"

namespace nwo {

struct LinearFunc {
    Rational slope;
    Rational intercept;

    Rational at(const Rational& x) const { return slope * x + intercept; }
    bool operator==(const LinearFunc&) const = default;
};

// c0 + c1 x + c2 x^2 + c3 x^3, evaluated exactly.
struct CubicPoly {
    Rational c0, c1, c2, c3;

    Rational at(const Rational& x) const { return ((c3 * x + c2) * x + c1) * x + c0; }
    Rational derivative_at(const Rational& x) const {
        return (Rational(3) * c3 * x + Rational(2) * c2) * x + c1;
    }
};

// Maximal closed interval on which the model is the nonconstant line
// slope*x + intercept. The Newton image of every point of the piece is the
// line's root -intercept/slope.
struct AffinePiece {
    Rational lo, hi;
    Rational slope, intercept;

    Rational value(const Rational& x) const { return slope * x + intercept; }
    Rational newton_image() const { return -intercept / slope; }
    Rational length() const { return hi - lo; }
    bool contains(const Rational& x) const { return lo <= x && x <= hi; }
    bool strictly_contains(const Rational& x) const { return lo < x && x < hi; }
};

// C1 bridge between two boundary lines over [lo, hi].
//
// The bridge is a cubic Hermite arc on the window [mid_lo, mid_hi]; on
// [lo, mid_lo] the gap follows left, on [mid_hi, hi] it follows right. When
// the two lines cross strictly inside the gap the window is the largest
// interval symmetric about the crossing, which keeps the bridge derivative
// inside the closed hull of the two slopes; otherwise the window is the whole
// gap and derivative_range carries the certified (possibly wider) hull.
struct GapBlend {
    Rational lo, hi;
    LinearFunc left, right;

    Rational mid_lo, mid_hi;
    CubicPoly bridge;
    Rational deriv_min, deriv_max;

    static GapBlend make(Rational lo, Rational hi, LinearFunc left, LinearFunc right);

    Rational value(const Rational& x) const;
    Rational derivative(const Rational& x) const;
    bool contains(const Rational& x) const { return lo <= x && x <= hi; }
};

// Where a point of the domain lives.
struct Segment {
    enum class Kind { Piece, Gap };
    Kind kind;
    std::size_t index;
};

// A C1 function on [-M, M]: affine on the pieces, cubic-bridged on the gaps.
// Pieces and gaps tile the domain exactly, overlapping only at shared
// endpoints where values and one-sided derivatives agree. Immutable after
// assembly.
class PiecewiseModel {
public:
    // An empty model; only assemble() produces a usable one.
    PiecewiseModel() = default;

    static PiecewiseModel assemble(Rational half_width,
                                   std::vector<AffinePiece> pieces,
                                   std::vector<GapBlend> gaps);

    const Rational& half_width() const { return half_width_; }
    const std::vector<AffinePiece>& pieces() const { return pieces_; }
    const std::vector<GapBlend>& gaps() const { return gaps_; }

    // Pieces win over gaps at shared endpoints.
    Segment locate(const Rational& x) const;
    std::optional<std::size_t> piece_containing(const Rational& x) const;

    Rational eval(const Rational& x) const;
    Rational eval_derivative(const Rational& x) const;

private:
    Rational half_width_;
    std::vector<AffinePiece> pieces_;
    std::vector<GapBlend> gaps_;
    std::vector<Segment> order_; // segments sorted by lo
    std::vector<Rational> order_lo_;
};

enum class FateKind { Escapes, LandsIn };

struct PieceFate {
    FateKind kind;
    Rational image;         // the piece's Newton image, -b/a
    std::size_t target = 0; // member index in the family order (LandsIn only)
};

// A certified family: disjoint member pieces whose Newton images each either
// leave [-M, M] or land strictly inside some member.
struct NiceFamily {
    std::vector<std::size_t> members; // piece indices, sorted by interval
    std::vector<PieceFate> fates;     // parallel to members
};

struct NotNiceError : Error {
    enum class Reason { OnBoundary, InGap, InNoMember };

    NotNiceError(std::size_t piece, Rational image_, Reason r, const std::string& msg)
        : Error(ErrorClass::Validation, "ERR_NOT_NICE", msg),
          piece_id(piece), image(std::move(image_)), reason(r) {}

    std::size_t piece_id;
    Rational image;
    Reason reason;
};

Rational newton_image_of_piece(const AffinePiece& piece);

// Throws NotNiceError when some member's image hits a member boundary, a gap,
// or [-M, M] outside every member interior. member_ids empty => all pieces.
NiceFamily certify_nice(const PiecewiseModel& model, std::vector<std::size_t> member_ids);

Rational measure_union(const PiecewiseModel& model, const NiceFamily& family);

// Certified upper bound on sup|m1-m2| + sup|m1'-m2'|. Exact wherever both
// models are affine; on gap overlaps the value term is bounded through
// endpoint values and the exact derivative-difference extrema.
Rational d1_upper_bound(const PiecewiseModel& m1, const PiecewiseModel& m2);

} // namespace nwo
