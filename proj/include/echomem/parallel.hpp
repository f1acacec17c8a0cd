#ifndef ECHOMEM_PARALLEL_HPP
#define ECHOMEM_PARALLEL_HPP

namespace echomem {

// Worker thread count used by the ensemble integrator and Monte-Carlo
// scans. Work is split into fixed blocks and reduced in a fixed order, so
// the thread count changes speed only, never results.
void set_thread_count(int n);
int thread_count();

}  // namespace echomem

#endif
