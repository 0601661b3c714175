#pragma once

#include "pixcue/types.hpp"

namespace pixcue {

// Unitary 2D DFT with a centered spectrum: the DC bin lands at (N/2, N/2),
// so low spatial frequencies cluster around the middle rows of the grid the
// way sampling masks expect. Energy is preserved exactly and idft2_unitary
// is both the inverse and the adjoint. Requires a square grid with even N.
KSpaceGrid dft2_unitary(const ComplexImage& img);
ComplexImage idft2_unitary(const KSpaceGrid& k);

}  // namespace pixcue
