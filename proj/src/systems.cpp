#include "nishilab/systems.hpp"

#include <stdexcept>

namespace nishilab {

ModelSystem make_ea_system(int d, int L, double beta, const Species& bond, const Species& field) {
    if (bond.p != 2 || field.p != 1)
        throw std::invalid_argument("make_ea_system: expects a p=2 bond and a p=1 field species");
    ModelSystem system;
    system.lattice = build_lattice(d, L, LatticeKind::short_range);
    system.families = {build_family(system.lattice, FamilyKind::random_field, 1),
                       build_family(system.lattice, FamilyKind::nearest_neighbor, 2)};
    system.params.beta = beta;
    system.params.species = {field, bond};
    system.params.lattice_kind = LatticeKind::short_range;
    return system;
}

ModelSystem make_sk_system(int n, double beta, const Species& bond, const Species& field) {
    if (bond.p != 2 || field.p != 1)
        throw std::invalid_argument("make_sk_system: expects a p=2 bond and a p=1 field species");
    ModelSystem system;
    system.lattice = build_lattice(1, n, LatticeKind::mean_field);
    system.families = {build_family(system.lattice, FamilyKind::random_field, 1),
                       build_family(system.lattice, FamilyKind::mean_field_complete, 2)};
    system.params.beta = beta;
    system.params.species = {field, bond};
    system.params.lattice_kind = LatticeKind::mean_field;
    return system;
}

}  // namespace nishilab
