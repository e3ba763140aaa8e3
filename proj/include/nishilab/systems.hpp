#pragma once

#include "nishilab/disorder_avg.hpp"

namespace nishilab {

// Standard study systems. Species order is fixed: the p=1 site species
// first (inert when delta = mu = 0, still usable for m^1 and site-overlap
// measurements), then the p=2 bond species.

// Edwards-Anderson model on a d-dimensional open cube of side L.
ModelSystem make_ea_system(int d, int L, double beta, const Species& bond,
                           const Species& field = Species{1, 0.0, 0.0});

// Sherrington-Kirkpatrick model on n sites (complete p=2 hypergraph,
// couplings rescaled by the system size).
ModelSystem make_sk_system(int n, double beta, const Species& bond,
                           const Species& field = Species{1, 0.0, 0.0});

}  // namespace nishilab
