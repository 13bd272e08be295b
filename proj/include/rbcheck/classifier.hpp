#pragma once

// Edge colours of the unwinding, decided by two linear relaxations:
//   T1  the edge lies on a pseudo-cycle without broadcasts,
//   T2  the edge lies on a pseudo-cycle with exactly r broadcasts that starts
//       and ends in the first loop component.
// Green = T1 and T2, Blue = T1 only, Orange = T2 only, Red = neither.

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rbcheck/ratvas.hpp"
#include "rbcheck/unwinding.hpp"

namespace rbcheck {

enum class EdgeColor { Red, Blue, Green, Orange };

std::string_view color_name(EdgeColor c);

struct WitnessSegment {
    std::size_t comp = 0;
    /// Start counts per base state (T2 only).
    std::vector<std::pair<StateId, Rational>> v;
    /// Multiplicity per base action.
    std::vector<std::pair<ActionId, Rational>> y;
    /// Flow per broadcast edge of the unwinding (T2 only).
    std::vector<std::pair<std::size_t, Rational>> z;
};

struct CycleWitness {
    enum class Kind { T1, T2 };

    Kind kind = Kind::T1;
    /// Unwinding edge the witness was asked for.
    std::size_t target = 0;
    /// One segment for T1; r segments, one per loop component, for T2.
    std::vector<WitnessSegment> segments;
};

/// Re-checks every constraint of the witness from scratch; `why` gets the first violation.
bool witness_valid(const Unwinding& u, const CycleWitness& w, std::string* why = nullptr);

/// Variables of the relaxation over the loop components, one segment each.
struct SegmentedSystem {
    struct Segment {
        std::size_t comp = 0;
        std::vector<std::pair<StateId, VarId>> v;
        std::vector<std::pair<ActionId, VarId>> y;
        std::vector<std::pair<std::size_t, VarId>> z;
        /// Base letter edges per action, parallel to `y`.
        std::vector<std::vector<EdgeId>> letters;
        /// Source and destination states of those letter edges.
        std::vector<std::vector<StateId>> letter_src;
        std::vector<std::vector<StateId>> letter_dst;
        /// Source state of each broadcast edge in `z`.
        std::vector<StateId> z_src;
    };

    LinearSystem lp;
    std::vector<Segment> segments;

    /// Variable carrying unwinding edge `e`: y of its action, or z of the broadcast edge.
    std::optional<VarId> var_for_edge(const Unwinding& u, std::size_t e) const;
};

/// Zero-sum system over the actions of one component.
SegmentedSystem build_t1_system(const Unwinding& u, std::size_t comp);
SegmentedSystem build_t2_system(const Unwinding& u);

/// Repeatedly takes a maximum-support solution and pins to zero every action
/// of a segment that cannot be fired forward from the segment's start support
/// or backward from its end support. Returns the surviving solution, or nothing.
std::optional<SupportSolution> prune_support(SegmentedSystem& sys);

std::optional<CycleWitness> t1_witness(const Unwinding& u, std::size_t e);
std::optional<CycleWitness> t2_witness(const Unwinding& u, std::size_t e);

struct EdgeClass {
    EdgeColor color = EdgeColor::Red;
    bool t1 = false;
    bool t2 = false;
    std::optional<CycleWitness> w1;
    std::optional<CycleWitness> w2;
};

struct ClassifyOptions {
    unsigned jobs = 1;
    /// Solve one system per edge instead of sharing a maximum-support solution.
    bool per_edge = false;
    /// Restrict to these unwinding edges; all when empty.
    std::vector<std::size_t> only;
};

/// Keyed by unwinding edge index. Requires one edge per letter.
using Classification = std::map<std::size_t, EdgeClass>;

Classification classify(const Unwinding& u, const ClassifyOptions& options = {});

nlohmann::json witness_json(const Unwinding& u, const CycleWitness& w);
nlohmann::json classification_json(const Unwinding& u, const Classification& c);
std::string classification_dot(const Unwinding& u, const Classification& c);

struct RealizeOptions {
    /// Largest extra scale factor tried after the witness is made integral.
    std::size_t max_scale = 64;
    std::size_t max_processes = 4096;
    std::size_t max_steps = 50000;
};

struct Realization {
    std::optional<Path> path;
    std::size_t scale = 1;
    std::string diagnostics;
};

/// Explicit pseudo-cycle over u.as_template() following the witness.
Realization realize_witness(const Unwinding& u, const CycleWitness& w, const RealizeOptions& options = {});

}  // namespace rbcheck
