#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "nishilab/geometry.hpp"

using namespace nishilab;

namespace {

// Independent oracle: count unordered site pairs at l1 distance 1 by brute
// force over all pairs.
std::size_t nn_pair_scan(const LatticeSpec& lattice) {
    std::size_t n = lattice.site_count();
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        auto ci = lattice.coordinates(i);
        for (std::size_t j = i + 1; j < n; ++j) {
            auto cj = lattice.coordinates(j);
            int dist = 0;
            for (int k = 0; k < lattice.dimension; ++k) dist += std::abs(ci[k] - cj[k]);
            if (dist == 1) ++count;
        }
    }
    return count;
}

std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
    if (k > n) return 0;
    std::uint64_t r = 1;
    for (std::uint64_t i = 0; i < k; ++i) r = r * (n - i) / (i + 1);
    return r;
}

}  // namespace

TEST_CASE("lattice site counts") {
    CHECK(build_lattice(2, 3, LatticeKind::short_range).site_count() == 9);
    CHECK(build_lattice(1, 16, LatticeKind::mean_field).site_count() == 16);
    CHECK(build_lattice(3, 2, LatticeKind::short_range).site_count() == 8);
    CHECK_THROWS_AS(build_lattice(0, 3, LatticeKind::short_range), std::invalid_argument);
    CHECK_THROWS_AS(build_lattice(2, 0, LatticeKind::short_range), std::invalid_argument);
}

TEST_CASE("site index round trip is a bijection") {
    for (int d : {1, 2, 3}) {
        for (int L : {1, 2, 4}) {
            auto lattice = build_lattice(d, L, LatticeKind::short_range);
            std::set<std::uint64_t> seen;
            for (std::uint64_t i = 0; i < lattice.site_count(); ++i) {
                auto c = lattice.coordinates(i);
                CHECK(lattice.site_index(c) == i);
                seen.insert(i);
            }
            CHECK(seen.size() == lattice.site_count());
        }
    }
}

TEST_CASE("nearest neighbor family matches exhaustive pair scan") {
    auto l33 = build_lattice(2, 3, LatticeKind::short_range);
    auto b2 = build_family(l33, FamilyKind::nearest_neighbor, 2);
    CHECK(family_size(b2) == 12);
    CHECK(family_size(b2) == nn_pair_scan(l33));

    auto l44 = build_lattice(2, 4, LatticeKind::short_range);
    CHECK(family_size(build_family(l44, FamilyKind::nearest_neighbor, 2)) == 24);

    // Counting formula d * L^(d-1) * (L-1) under free boundaries.
    for (int d : {1, 2, 3}) {
        for (int L : {2, 3, 4, 5}) {
            auto lattice = build_lattice(d, L, LatticeKind::short_range);
            auto family = build_family(lattice, FamilyKind::nearest_neighbor, 2);
            std::size_t formula = static_cast<std::size_t>(
                d * std::pow(L, d - 1) * (L - 1) + 0.5);
            CHECK(family_size(family) == formula);
            CHECK(family_size(family) == nn_pair_scan(lattice));
        }
    }
}

TEST_CASE("random field and complete families") {
    auto chain = build_lattice(1, 5, LatticeKind::short_range);
    CHECK(family_size(build_family(chain, FamilyKind::random_field, 1)) == 5);

    auto mf4 = build_lattice(1, 4, LatticeKind::mean_field);
    CHECK(family_size(build_family(mf4, FamilyKind::mean_field_complete, 2)) == 6);

    auto mf8 = build_lattice(1, 8, LatticeKind::mean_field);
    CHECK(family_size(build_family(mf8, FamilyKind::mean_field_complete, 3)) == binomial(8, 3));
    CHECK_THROWS_AS(build_family(mf4, FamilyKind::mean_field_complete, 5), std::invalid_argument);
}

TEST_CASE("plaquette family") {
    auto l33 = build_lattice(2, 3, LatticeKind::short_range);
    auto b4 = build_family(l33, FamilyKind::plaquette, 4);
    CHECK(family_size(b4) == 4);  // (L-1)^2 unit squares in 2D
    for (const auto& r : b4.ranges) CHECK(r.size() == 4);

    auto chain = build_lattice(1, 8, LatticeKind::short_range);
    CHECK_THROWS_AS(build_family(chain, FamilyKind::plaquette, 4), std::invalid_argument);

    // Every pair inside a plaquette is at l1 distance 1 or 2.
    for (const auto& range : b4.ranges) {
        for (std::size_t a = 0; a < range.size(); ++a) {
            for (std::size_t b = a + 1; b < range.size(); ++b) {
                auto ca = l33.coordinates(range[a]);
                auto cb = l33.coordinates(range[b]);
                int dist = std::abs(ca[0] - cb[0]) + std::abs(ca[1] - cb[1]);
                CHECK(dist >= 1);
                CHECK(dist <= 2);
            }
        }
    }
}

TEST_CASE("ranges are distinct, sorted and within bounds") {
    for (auto kind : {FamilyKind::nearest_neighbor, FamilyKind::plaquette}) {
        auto lattice = build_lattice(2, 4, LatticeKind::short_range);
        auto family = build_family(lattice, kind, kind == FamilyKind::plaquette ? 4 : 2);
        std::set<std::vector<std::uint32_t>> unique(family.ranges.begin(), family.ranges.end());
        CHECK(unique.size() == family.ranges.size());
        auto sorted = family.ranges;
        std::sort(sorted.begin(), sorted.end());
        CHECK(sorted == family.ranges);
        for (const auto& r : family.ranges)
            for (auto s : r) CHECK(s < lattice.site_count());
    }
}

TEST_CASE("translation closure: every range is a shifted base range inside the box") {
    auto lattice = build_lattice(2, 4, LatticeKind::short_range);
    for (auto [kind, p] : {std::pair{FamilyKind::nearest_neighbor, 2},
                           std::pair{FamilyKind::plaquette, 4}}) {
        auto family = build_family(lattice, kind, p);
        std::set<std::vector<std::vector<int>>> shapes;
        for (const auto& range : family.ranges) {
            // Shift by the minimal corner; collect the resulting shape.
            std::vector<std::vector<int>> coords;
            for (auto s : range) coords.push_back(lattice.coordinates(s));
            std::vector<int> corner = coords[0];
            for (const auto& c : coords)
                for (int k = 0; k < lattice.dimension; ++k) corner[k] = std::min(corner[k], c[k]);
            for (auto& c : coords)
                for (int k = 0; k < lattice.dimension; ++k) c[k] -= corner[k];
            std::sort(coords.begin(), coords.end());
            shapes.insert(coords);
        }
        // Nearest neighbor has two base shapes (one per axis); plaquettes one.
        CHECK(shapes.size() == (kind == FamilyKind::nearest_neighbor ? 2u : 1u));
    }
}

TEST_CASE("family construction is deterministic (byte-equal serialization)") {
    auto lattice = build_lattice(2, 4, LatticeKind::short_range);
    auto a = build_family(lattice, FamilyKind::nearest_neighbor, 2);
    auto b = build_family(lattice, FamilyKind::nearest_neighbor, 2);
    CHECK(family_to_json(a).dump() == family_to_json(b).dump());
}

TEST_CASE("family JSON round trip") {
    auto lattice = build_lattice(2, 3, LatticeKind::short_range);
    auto family = build_family(lattice, FamilyKind::nearest_neighbor, 2);
    auto j = family_to_json(family);
    CHECK(j.at("p") == 2);
    CHECK(j.at("kind") == "nearest_neighbor");
    auto back = family_from_json(j);
    CHECK(back.ranges == family.ranges);
    CHECK(family_to_json(back).dump() == j.dump());
}

TEST_CASE("masks match ranges") {
    auto lattice = build_lattice(2, 3, LatticeKind::short_range);
    auto family = build_family(lattice, FamilyKind::nearest_neighbor, 2);
    auto masks = family.masks();
    for (std::size_t i = 0; i < family.ranges.size(); ++i) {
        std::uint64_t expect = 0;
        for (auto s : family.ranges[i]) expect |= std::uint64_t{1} << s;
        CHECK(masks[i] == expect);
    }
}
