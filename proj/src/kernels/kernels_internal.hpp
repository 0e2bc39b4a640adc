#pragma once

#include "mudikit/kernels.hpp"

namespace mudikit::kernels {

#if defined(MUDIKIT_HAVE_AVX2)
const KernelTable& avx2_table();
#endif
#if defined(MUDIKIT_HAVE_NEON)
const KernelTable& neon_table();
#endif

}  // namespace mudikit::kernels
