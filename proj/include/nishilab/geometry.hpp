#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace nishilab {

enum class LatticeKind { short_range, mean_field };

// Finite cubic lattice [0,L-1]^d (short range) or the index set [0,L-1]
// (mean field). Sites carry a fixed row-major index with coordinate 0
// varying fastest.
struct LatticeSpec {
    int dimension = 1;
    int side = 1;
    LatticeKind kind = LatticeKind::short_range;

    std::uint64_t site_count() const;
    std::vector<int> coordinates(std::uint64_t site) const;
    std::uint64_t site_index(const std::vector<int>& coords) const;
};

LatticeSpec build_lattice(int dimension, int side, LatticeKind kind);

enum class FamilyKind { random_field, nearest_neighbor, plaquette, mean_field_complete, custom };

// One interaction-range family B_p: the ordered list of p-site subsets that
// carry independent couplings. Ranges are sorted internally and the list is
// sorted lexicographically, so construction is deterministic.
struct CouplingFamily {
    int p = 1;
    FamilyKind kind = FamilyKind::custom;
    std::vector<std::vector<std::uint32_t>> ranges;

    std::size_t size() const { return ranges.size(); }
    // Bitmask per range; valid only while the lattice has <= 64 sites.
    std::vector<std::uint64_t> masks() const;
};

CouplingFamily build_family(const LatticeSpec& lattice, FamilyKind kind, int p);

std::size_t family_size(const CouplingFamily& family);

std::string family_kind_name(FamilyKind kind);
FamilyKind family_kind_from_name(const std::string& name);

nlohmann::json family_to_json(const CouplingFamily& family);
CouplingFamily family_from_json(const nlohmann::json& j);

}  // namespace nishilab
