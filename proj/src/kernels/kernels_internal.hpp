#pragma once

#include "besi/kernels.hpp"

namespace besi::kernels::detail {

#if defined(BESI_HAVE_AVX2)
const KernelTable& avx2_table_impl();
#endif

}  // namespace besi::kernels::detail
