#include "nishilab/geometry.hpp"

#include <algorithm>
#include <stdexcept>

namespace nishilab {

std::uint64_t LatticeSpec::site_count() const {
    if (kind == LatticeKind::mean_field) return static_cast<std::uint64_t>(side);
    std::uint64_t n = 1;
    for (int k = 0; k < dimension; ++k) n *= static_cast<std::uint64_t>(side);
    return n;
}

std::vector<int> LatticeSpec::coordinates(std::uint64_t site) const {
    if (kind == LatticeKind::mean_field) return {static_cast<int>(site)};
    std::vector<int> c(dimension);
    for (int k = 0; k < dimension; ++k) {
        c[k] = static_cast<int>(site % side);
        site /= side;
    }
    return c;
}

std::uint64_t LatticeSpec::site_index(const std::vector<int>& coords) const {
    if (kind == LatticeKind::mean_field) return static_cast<std::uint64_t>(coords.at(0));
    if (static_cast<int>(coords.size()) != dimension)
        throw std::invalid_argument("site_index: coordinate rank mismatch");
    std::uint64_t idx = 0;
    for (int k = dimension - 1; k >= 0; --k) {
        if (coords[k] < 0 || coords[k] >= side)
            throw std::invalid_argument("site_index: coordinate out of range");
        idx = idx * side + static_cast<std::uint64_t>(coords[k]);
    }
    return idx;
}

LatticeSpec build_lattice(int dimension, int side, LatticeKind kind) {
    if (dimension < 1) throw std::invalid_argument("build_lattice: dimension must be >= 1");
    if (side < 1) throw std::invalid_argument("build_lattice: side must be >= 1");
    LatticeSpec spec;
    spec.dimension = kind == LatticeKind::mean_field ? 1 : dimension;
    spec.side = side;
    spec.kind = kind;
    return spec;
}

namespace {

void canonicalize(CouplingFamily& family) {
    for (auto& r : family.ranges) std::sort(r.begin(), r.end());
    std::sort(family.ranges.begin(), family.ranges.end());
}

// All C(n, p) subsets in lexicographic order.
void enumerate_subsets(std::uint32_t n, int p, std::vector<std::vector<std::uint32_t>>& out) {
    std::vector<std::uint32_t> pick(p);
    for (int k = 0; k < p; ++k) pick[k] = static_cast<std::uint32_t>(k);
    while (true) {
        out.push_back(pick);
        int k = p - 1;
        while (k >= 0 && pick[k] == n - static_cast<std::uint32_t>(p - k)) --k;
        if (k < 0) break;
        ++pick[k];
        for (int j = k + 1; j < p; ++j) pick[j] = pick[j - 1] + 1;
    }
}

}  // namespace

CouplingFamily build_family(const LatticeSpec& lattice, FamilyKind kind, int p) {
    std::uint64_t n = lattice.site_count();
    if (p < 1) throw std::invalid_argument("build_family: p must be >= 1");
    if (static_cast<std::uint64_t>(p) > n)
        throw std::invalid_argument("build_family: p exceeds the site count");

    CouplingFamily family;
    family.p = p;
    family.kind = kind;

    switch (kind) {
        case FamilyKind::random_field: {
            if (p != 1) throw std::invalid_argument("build_family: random_field requires p = 1");
            for (std::uint64_t i = 0; i < n; ++i)
                family.ranges.push_back({static_cast<std::uint32_t>(i)});
            break;
        }
        case FamilyKind::nearest_neighbor: {
            if (p != 2) throw std::invalid_argument("build_family: nearest_neighbor requires p = 2");
            if (lattice.kind != LatticeKind::short_range)
                throw std::invalid_argument("build_family: nearest_neighbor needs a short_range lattice");
            // Unordered pairs at l1 distance 1, free boundaries: both ends in the box.
            for (std::uint64_t i = 0; i < n; ++i) {
                auto c = lattice.coordinates(i);
                for (int axis = 0; axis < lattice.dimension; ++axis) {
                    if (c[axis] + 1 >= lattice.side) continue;
                    auto d = c;
                    ++d[axis];
                    family.ranges.push_back({static_cast<std::uint32_t>(i),
                                             static_cast<std::uint32_t>(lattice.site_index(d))});
                }
            }
            break;
        }
        case FamilyKind::plaquette: {
            if (p != 4) throw std::invalid_argument("build_family: plaquette requires p = 4");
            if (lattice.kind != LatticeKind::short_range || lattice.dimension < 2)
                throw std::invalid_argument("build_family: plaquette requires d >= 2 short_range");
            // Unit squares {i, i+e_a, i+e_b, i+e_a+e_b}, fully inside the box.
            for (std::uint64_t i = 0; i < n; ++i) {
                auto c = lattice.coordinates(i);
                for (int a = 0; a < lattice.dimension; ++a) {
                    if (c[a] + 1 >= lattice.side) continue;
                    for (int b = a + 1; b < lattice.dimension; ++b) {
                        if (c[b] + 1 >= lattice.side) continue;
                        auto ca = c, cb = c, cab = c;
                        ++ca[a];
                        ++cb[b];
                        ++cab[a];
                        ++cab[b];
                        family.ranges.push_back({static_cast<std::uint32_t>(i),
                                                 static_cast<std::uint32_t>(lattice.site_index(ca)),
                                                 static_cast<std::uint32_t>(lattice.site_index(cb)),
                                                 static_cast<std::uint32_t>(lattice.site_index(cab))});
                    }
                }
            }
            break;
        }
        case FamilyKind::mean_field_complete: {
            enumerate_subsets(static_cast<std::uint32_t>(n), p, family.ranges);
            break;
        }
        case FamilyKind::custom:
            throw std::invalid_argument("build_family: custom families come from serialized data");
    }

    canonicalize(family);
    return family;
}

std::size_t family_size(const CouplingFamily& family) { return family.ranges.size(); }

std::vector<std::uint64_t> CouplingFamily::masks() const {
    std::vector<std::uint64_t> m;
    m.reserve(ranges.size());
    for (const auto& r : ranges) {
        std::uint64_t bits = 0;
        for (std::uint32_t s : r) {
            if (s >= 64) throw std::out_of_range("CouplingFamily::masks: site index >= 64");
            bits |= std::uint64_t{1} << s;
        }
        m.push_back(bits);
    }
    return m;
}

std::string family_kind_name(FamilyKind kind) {
    switch (kind) {
        case FamilyKind::random_field: return "random_field";
        case FamilyKind::nearest_neighbor: return "nearest_neighbor";
        case FamilyKind::plaquette: return "plaquette";
        case FamilyKind::mean_field_complete: return "mean_field_complete";
        case FamilyKind::custom: return "custom";
    }
    return "custom";
}

FamilyKind family_kind_from_name(const std::string& name) {
    if (name == "random_field") return FamilyKind::random_field;
    if (name == "nearest_neighbor") return FamilyKind::nearest_neighbor;
    if (name == "plaquette") return FamilyKind::plaquette;
    if (name == "mean_field_complete") return FamilyKind::mean_field_complete;
    if (name == "custom") return FamilyKind::custom;
    throw std::invalid_argument("unknown family kind: " + name);
}

nlohmann::json family_to_json(const CouplingFamily& family) {
    nlohmann::json j;
    j["p"] = family.p;
    j["kind"] = family_kind_name(family.kind);
    j["ranges"] = family.ranges;
    return j;
}

CouplingFamily family_from_json(const nlohmann::json& j) {
    CouplingFamily family;
    family.p = j.at("p").get<int>();
    family.kind = family_kind_from_name(j.at("kind").get<std::string>());
    family.ranges = j.at("ranges").get<std::vector<std::vector<std::uint32_t>>>();
    for (const auto& r : family.ranges)
        if (static_cast<int>(r.size()) != family.p)
            throw std::invalid_argument("family_from_json: range cardinality does not match p");
    return family;
}

}  // namespace nishilab
