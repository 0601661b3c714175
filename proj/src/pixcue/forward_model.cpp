#include "pixcue/forward_model.hpp"

#include "pixcue/rng.hpp"

namespace pixcue {

KSpaceGrid add_complex_noise(const KSpaceGrid& k, const NoiseSpec& spec) {
  require(spec.sigma >= 0.0, "noise: sigma must be >= 0");
  KSpaceGrid out = k;
  if (spec.sigma == 0.0) return out;
  Rng rng(spec.seed);
  for (cdouble& z : out.v)
    z += cdouble{spec.sigma * rng.gaussian(), spec.sigma * rng.gaussian()};
  return out;
}

ComplexImage zero_filled(const KSpaceGrid& y_u) { return idft2_unitary(y_u); }

}  // namespace pixcue
