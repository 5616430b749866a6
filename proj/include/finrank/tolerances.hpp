#pragma once

#include <stdexcept>

namespace finrank {

/// Numerical tolerances shared across the library.
///
/// atom_merge is an absolute width on the spectral axis; model generators
/// normalize ||A|| to O(1) so that a single width is meaningful everywhere.
struct Tolerances {
    double eig_residual = 1e-10;  ///< eigensolver residual scale
    double rank_rel = 1e-9;       ///< relative singular-value cutoff for rank decisions
    double atom_merge = 1e-8;     ///< eigenvalue clustering width / "same atom" width

    void validate() const {
        if (!(eig_residual > 0.0) || !(rank_rel > 0.0) || !(atom_merge > 0.0))
            throw std::invalid_argument("Tolerances: all fields must be strictly positive");
        if (!(atom_merge > eig_residual))
            throw std::invalid_argument("Tolerances: atom_merge must exceed eig_residual");
    }
};

}  // namespace finrank
