#include "echomem/parallel.hpp"

#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace echomem {

void set_thread_count(int n)
{
    if (n < 1) {
        throw std::invalid_argument("thread count must be at least 1");
    }
#ifdef _OPENMP
    omp_set_num_threads(n);
#endif
}

int thread_count()
{
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

}  // namespace echomem
